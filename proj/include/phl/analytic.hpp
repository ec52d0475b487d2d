#ifndef PHL_ANALYTIC_HPP
#define PHL_ANALYTIC_HPP

#include <cmath>
#include <functional>
#include <string>

#include "phl/lattice.hpp"
#include "phl/target.hpp"

namespace phl {

/// Closed-form map used as a test oracle. `grad2` (|grad f|^2 as a function of
/// x) is optional; ops that need it fall back to finite differences of `eval`.
struct AnalyticMap {
  int m = 3;
  Target target;
  std::function<Vec(const Vec&)> eval;
  std::function<double(const Vec&)> grad2;
  std::string name;
};

/// Uniform access to a map for blow-up analysis: lattice maps evaluate by
/// interpolation and carry a resolution floor, analytic maps evaluate anywhere.
struct MapSource {
  int m = 3;
  Target target;
  std::function<Vec(const Vec&)> eval;
  double min_scale = 0.0;      // blow-up scales below this are refused
  double eval_radius = 1e300;  // |point| beyond this is out of domain
  std::string name;
};

inline MapSource source_of(const DiscreteMap& map, std::string name = "field") {
  const Field* f = &map.f;
  MapSource s;
  s.m = map.lattice().m;
  s.target = map.target;
  s.eval = [f](const Vec& x) { return f->interp(x); };
  s.min_scale = 8.0 * map.lattice().h;
  s.eval_radius = map.lattice().box_radius();
  s.name = std::move(name);
  return s;
}

inline MapSource source_of(const AnalyticMap& map) {
  MapSource s;
  s.m = map.m;
  s.target = map.target;
  s.eval = map.eval;
  s.min_scale = 0.0;
  s.name = map.name;
  return s;
}

inline DiscreteMap sample(const AnalyticMap& map, const Lattice& lat) {
  DiscreteMap out(lat, map.target);
  const int64_t n = lat.node_count();
  for (int64_t i = 0; i < n; ++i) out.f.set(i, map.eval(lat.coord(i)));
  return out;
}

// ---------------------------------------------------------------------------
// Analytic presets. These are the oracles all acceptance tolerances are pinned
// against; they are evaluated from closed forms, never from files.
// ---------------------------------------------------------------------------

/// x -> x/|x| into S^{m-1}. |grad|^2 = (m-1)/|x|^2. The known minimizer for
/// its own trace when m=3, p=2, with one interior singularity.
inline AnalyticMap radial_singular(int m) {
  AnalyticMap a;
  a.m = m;
  a.target = Target::sphere(m);
  a.eval = [m](const Vec& x) {
    double r = x.norm();
    if (r < 1e-14) return Vec::axis(m, 0);
    return x * (1.0 / r);
  };
  a.grad2 = [m](const Vec& x) {
    double r2 = std::max(x.norm2(), 1e-28);
    return (m - 1) / r2;
  };
  a.name = "radial-singular";
  return a;
}

inline AnalyticMap constant_map(int m, const Target& t) {
  AnalyticMap a;
  a.m = m;
  a.target = t;
  Vec c = Vec::axis(t.ambient, t.ambient - 1);
  a.eval = [c](const Vec&) { return c; };
  a.grad2 = [](const Vec&) { return 0.0; };
  a.name = "constant";
  return a;
}

/// Inverse stereographic projection R^2 -> S^2 (north pole at infinity).
inline Vec stereographic_bubble_point(const Vec& y) {
  double r2 = y.norm2();
  double d = 1.0 + r2;
  Vec v = Vec::zero(3);
  v[0] = 2.0 * y[0] / d;
  v[1] = 2.0 * y[1] / d;
  v[2] = (r2 - 1.0) / d;
  return v;
}

/// Concentrating bubble u(x) = Phi(lambda (x - center)) on R^2 into S^2.
/// |grad u|^2 = 8 lambda^2 / (1 + lambda^2 |x-c|^2)^2; full-plane energy 8*pi.
inline AnalyticMap bubble(double lambda, const Vec& center = Vec(0.0, 0.0)) {
  AnalyticMap a;
  a.m = 2;
  a.target = Target::sphere(3);
  a.eval = [lambda, center](const Vec& x) {
    return stereographic_bubble_point((x - center) * lambda);
  };
  a.grad2 = [lambda, center](const Vec& x) {
    double d = 1.0 + lambda * lambda * (x - center).norm2();
    return 8.0 * lambda * lambda / (d * d);
  };
  a.name = "bubble";
  return a;
}

/// Closed-form bubble energy over B_r(center): 8*pi*lambda^2 r^2/(1+lambda^2 r^2).
inline double bubble_energy_in_ball(double lambda, double r) {
  double lr2 = lambda * lambda * r * r;
  return 8.0 * M_PI * lr2 / (1.0 + lr2);
}

/// Two bubbles at +/- 0.4 e1 glued through the north pole; two gradient spikes.
inline AnalyticMap two_bubble(double lambda, double sep = 0.4) {
  AnalyticMap a;
  a.m = 2;
  a.target = Target::sphere(3);
  Vec c1(sep, 0.0), c2(-sep, 0.0);
  a.eval = [lambda, c1, c2](const Vec& x) {
    Vec v = stereographic_bubble_point((x - c1) * lambda) +
            stereographic_bubble_point((x - c2) * lambda);
    v[2] -= 1.0;  // subtract one copy of the pole they share at infinity
    return Target::sphere(3).project(v);
  };
  a.name = "two-bubble";
  return a;
}

/// 1-symmetric synthetic on B_1 in R^3: equator map of the transverse azimuth,
/// invariant along e1 and homogeneous about every point of the e1 axis.
inline AnalyticMap axis_equator_map() {
  AnalyticMap a;
  a.m = 3;
  a.target = Target::sphere(3);
  a.eval = [](const Vec& x) {
    double rho = std::hypot(x[1], x[2]);
    Vec v = Vec::zero(3);
    if (rho < 1e-14) {
      v[0] = 1.0;
      return v;
    }
    v[0] = x[1] / rho;
    v[1] = x[2] / rho;
    return v;
  };
  a.grad2 = [](const Vec& x) {
    double rho2 = std::max(x[1] * x[1] + x[2] * x[2], 1e-28);
    return 1.0 / rho2;
  };
  a.name = "axis-equator";
  return a;
}

/// Blend family for the cone-splitting sweep: homogeneous about 0 for every t,
/// homogeneous about points of the e1 axis only as t -> 1.
inline AnalyticMap cone_blend(double t) {
  AnalyticMap a;
  a.m = 3;
  a.target = Target::sphere(3);
  AnalyticMap rad = radial_singular(3);
  AnalyticMap axi = axis_equator_map();
  a.eval = [t, rad, axi](const Vec& x) {
    Vec v = rad.eval(x) * (1.0 - t) + axi.eval(x) * t;
    return Target::sphere(3).project(v);
  };
  a.name = "cone-blend";
  return a;
}

// ---------------------------------------------------------------------------
// Boundary traces g: S^{m-1} -> N, named presets for the solver CLI.
// ---------------------------------------------------------------------------

struct BoundaryData {
  std::function<Vec(const Vec&)> g;  // argument is a unit vector in R^m
  std::string name;
};

/// Presets: "radial", "constant", "equator-winding:k", "blend:t", "bump:s".
inline BoundaryData boundary_preset(const std::string& spec, int m, const Target& target) {
  BoundaryData b;
  b.name = spec;
  const int N = target.ambient;
  auto north = Vec::axis(N, N - 1);
  if (spec == "radial") {
    if (target.kind != Target::Kind::Sphere || N != m)
      throw Error("radial boundary preset needs target sphere:" + std::to_string(m));
    b.g = [](const Vec& w) { return w; };
    return b;
  }
  if (spec == "constant") {
    b.g = [north](const Vec&) { return north; };
    return b;
  }
  auto colon = spec.find(':');
  const std::string head = spec.substr(0, colon == std::string::npos ? spec.size() : colon);
  const double arg = colon == std::string::npos ? 0.0 : std::stod(spec.substr(colon + 1));
  if (head == "equator-winding") {
    if (N < 3) throw Error("equator-winding needs an S^2 (or larger) target");
    const double k = arg;
    const double polar = M_PI / 3.0;  // fixed latitude keeps the trace extendable
    b.g = [k, polar, N](const Vec& w) {
      double phi = std::atan2(w[1], w[0]);
      Vec v = Vec::zero(N);
      v[0] = std::sin(polar) * std::cos(k * phi);
      v[1] = std::sin(polar) * std::sin(k * phi);
      v[2] = std::cos(polar);
      return v;
    };
    return b;
  }
  if (head == "blend") {
    const double t = arg;
    b.g = [t, north, target](const Vec& w) {
      Vec v = north * (1.0 - t);
      for (int i = 0; i < std::min(w.n, north.n); ++i) v[i] += t * w[i];
      return target.project(v);
    };
    return b;
  }
  if (head == "bump") {
    const double s = arg;
    b.g = [s, north, target](const Vec& w) {
      Vec axis0 = Vec::axis(w.n, 0);
      double c = std::clamp(w.dot(axis0), -1.0, 1.0);
      double ang = std::acos(c);
      double amp = ang < 1.2 ? s * std::exp(1.0 - 1.0 / (1.0 - (ang / 1.2) * (ang / 1.2))) : 0.0;
      Vec v = north;
      v[0] += amp;
      return target.project(v);
    };
    return b;
  }
  throw Error("unknown boundary preset: " + spec);
}

}  // namespace phl

#endif  // PHL_ANALYTIC_HPP
