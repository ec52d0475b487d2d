#ifndef PHL_ENERGY_HPP
#define PHL_ENERGY_HPP

#include <cmath>
#include <random>
#include <vector>

#include "phl/analytic.hpp"
#include "phl/lattice.hpp"

namespace phl {

/// Node-sampled energy density |grad f|^p on a lattice, ready for repeated
/// ball quadrature. This is the single representation theta and all covering
/// ops consume, whether the map came from a solver or a closed form.
struct DensityField {
  Lattice lat;
  double p = 2.0;
  std::vector<double> d;

  DensityField() = default;
  DensityField(const Lattice& l, double p_) : lat(l), p(p_), d(size_t(l.node_count()), 0.0) {}
};

inline DensityField density_field(const DiscreteMap& map, double p) {
  DensityField df(map.lattice(), p);
  const int64_t n = map.lattice().node_count();
  for (int64_t i = 0; i < n; ++i) df.d[size_t(i)] = std::pow(gradient(map.f, i).frob2(), p / 2.0);
  return df;
}

inline DensityField density_field(const AnalyticMap& map, const Lattice& lat, double p) {
  if (!map.grad2) throw Error("density_field: analytic map has no closed-form gradient");
  DensityField df(lat, p);
  const int64_t n = lat.node_count();
  const double h = lat.h;
  const int m = lat.m;
  for (int64_t i = 0; i < n; ++i) {
    Vec x = lat.coord(i);
    double g = map.grad2(x);
    if (g * h * h <= 1.0) {
      df.d[size_t(i)] = std::pow(g, p / 2.0);
      continue;
    }
    // The midpoint value is not representative where the density varies on
    // sub-cell scales (integrable singularities): cell-average on a subgrid,
    // clamping at the finest scale the subgrid itself resolves.
    const int S = 8;
    const double hs = h / S;
    const double cap = double(m) / (hs * hs);
    KahanSum acc;
    int sub[3] = {0, 0, 0};
    const int total = m == 2 ? S * S : S * S * S;
    for (int k = 0; k < total; ++k) {
      int t = k;
      Vec xs = x;
      for (int d = 0; d < m; ++d) {
        sub[d] = t % S;
        t /= S;
        xs[d] += ((sub[d] + 0.5) / S - 0.5) * h;
      }
      acc.add(std::pow(std::min(map.grad2(xs), cap), p / 2.0));
    }
    df.d[size_t(i)] = acc.value() / total;
  }
  return df;
}

/// Energy over the annulus B_r1(c) \ B_r0(c) (r0 = 0 gives the full ball),
/// cell-clipped quadrature, compensated summation.
inline double annulus_energy(const DensityField& df, const Vec& c, double r0, double r1) {
  KahanSum s;
  df.lat.for_each_in_ball(c, r1, [&](int64_t idx, const Vec& x) {
    double w = df.lat.clip_fraction(x, c, r1) - (r0 > 0 ? df.lat.clip_fraction(x, c, r0) : 0.0);
    if (w > 0) s.add(w * df.lat.cell_volume() * df.d[size_t(idx)]);
  });
  return s.value();
}

inline double ball_energy(const DensityField& df, const Vec& c, double r) {
  return annulus_energy(df, c, 0.0, r);
}

inline double p_energy(const DiscreteMap& map, double p, const Vec& c, double r) {
  return ball_energy(density_field(map, p), c, r);
}

/// Smallest radius at which theta is trusted on this lattice.
inline double theta_floor(const Lattice& lat) { return 3.0 * lat.h; }

/// Normalized scale-invariant energy theta(x, r) = r^{p-m} E_p(x, r).
/// Requires B_r(x) within the unit ball and r at least the resolution floor.
inline double theta(const DensityField& df, const Vec& x, double r) {
  if (r < theta_floor(df.lat) - 1e-12)
    throw ScaleUnderresolved("theta: radius below resolved scale 3h");
  if (x.norm() + r > 1.0 + 1e-9) throw OutOfDomain("theta: ball exits domain");
  return std::pow(r, df.p - df.lat.m) * ball_energy(df, x, r);
}

/// theta sampled on a geometric ladder of radii r_max * gamma^i, descending,
/// truncated at the lattice floor. Pinching W(s, r) = theta(r) - theta(s).
struct ScaleProfile {
  Vec x;
  std::vector<double> radii;   // descending
  std::vector<double> thetas;  // same indexing

  double pinch(size_t i_small, size_t i_large) const {
    return thetas[i_large] - thetas[i_small];
  }
  double total_drop() const {
    return thetas.empty() ? 0.0 : thetas.front() - thetas.back();
  }
};

inline ScaleProfile scale_profile(const DensityField& df, const Vec& x, double r_max,
                                  double gamma = 0.5, double r_min = 0.0) {
  if (!(gamma > 0 && gamma < 1)) throw Error("scale_profile: gamma must be in (0,1)");
  ScaleProfile sp;
  sp.x = x;
  const double floor = std::max(r_min, theta_floor(df.lat));
  for (double r = r_max; r >= floor - 1e-12; r *= gamma) {
    sp.radii.push_back(r);
    sp.thetas.push_back(theta(df, x, r));
  }
  if (sp.radii.empty()) throw ScaleUnderresolved("scale_profile: no resolved radii in range");
  return sp;
}

// ---------------------------------------------------------------------------
// Inner-variation (stationarity) residual.
// ---------------------------------------------------------------------------

/// Smooth compactly supported vector field xi(x) = dir * b(|x-c|^2/rho^2),
/// b(t) = exp(1 - 1/(1-t)) inside the unit level, 0 outside.
struct BumpField {
  Vec center;
  double rho = 0.25;
  Vec dir;  // in R^m

  static double profile(double t) { return t < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - t)) : 0.0; }
  static double profile_deriv(double t) {
    if (t >= 1.0) return 0.0;
    double u = 1.0 - t;
    return -profile(t) / (u * u);
  }

  Vec eval(const Vec& x) const {
    double t = (x - center).norm2() / (rho * rho);
    return dir * profile(t);
  }
  /// d_i xi_j = dir_j * b'(t) * 2 (x-c)_i / rho^2.
  GradMat grad(const Vec& x) const {
    Vec dx = x - center;
    double t = dx.norm2() / (rho * rho);
    double db = profile_deriv(t) * 2.0 / (rho * rho);
    GradMat g;
    g.m = dir.n;
    g.ncomp = dir.n;
    for (int i = 0; i < g.m; ++i)
      for (int j = 0; j < g.ncomp; ++j) g.g[size_t(i)][size_t(j)] = dir[j] * db * dx[i];
    return g;
  }
};

/// Deterministic family of test fields supported well inside the unit ball.
inline std::vector<BumpField> random_bumps(int m, int count, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<BumpField> out;
  out.reserve(size_t(count));
  while (int(out.size()) < count) {
    Vec c = Vec::zero(m);
    for (int i = 0; i < m; ++i) c[i] = 2.0 * uni(rng) - 1.0;
    if (c.norm() > 0.5) continue;
    BumpField b;
    b.center = c;
    b.rho = 0.15 + 0.15 * uni(rng);
    Vec d = Vec::zero(m);
    for (int i = 0; i < m; ++i) d[i] = gauss(rng);
    if (d.norm() < 1e-6) continue;
    b.dir = d.normalized();
    out.push_back(b);
  }
  return out;
}

/// Raw inner-variation integral
///   I(xi) = sum_x w(x) |grad f|^{p-2} [ |grad f|^2 d_i xi_i - p <d_i f, d_j f> d_i xi_j ]
/// over the support of xi, plus the sup of |grad xi| over the same nodes.
/// `grad_at(idx, x)` supplies the map gradient at quadrature nodes.
template <typename GradFn>
double stationarity_integral(const Lattice& lat, double p, const BumpField& xi, GradFn&& grad_at,
                             double* grad_xi_sup = nullptr) {
  if (xi.center.norm() + xi.rho > 1.0 - lat.h + 1e-12)
    throw Error("stationarity: test field not compactly supported in the unit ball");
  KahanSum s;
  double sup = 0.0;
  const double w = lat.cell_volume();
  lat.for_each_in_ball(xi.center, xi.rho, [&](int64_t idx, const Vec& x) {
    if (dist(x, xi.center) >= xi.rho) return;
    GradMat gxi = xi.grad(x);
    double gn2 = gxi.frob2();
    if (gn2 > sup) sup = gn2;
    GradMat gf = grad_at(idx, x);
    double f2 = gf.frob2();
    if (f2 <= 0) return;
    double scale = std::pow(f2, (p - 2.0) / 2.0);
    double acc = 0.0;
    for (int i = 0; i < lat.m; ++i) {
      acc += f2 * gxi.g[size_t(i)][size_t(i)];
      for (int j = 0; j < lat.m; ++j) acc -= p * gf.gram(i, j) * gxi.g[size_t(i)][size_t(j)];
    }
    s.add(w * scale * acc);
  });
  if (grad_xi_sup) *grad_xi_sup = std::sqrt(sup);
  return s.value();
}

/// Dimensionless residual |I(xi)| / (E_p(B_1) * sup|grad xi|). Pass the
/// precomputed unit-ball energy to amortize it across many test fields.
inline double stationarity_residual(const DiscreteMap& map, double p, const BumpField& xi,
                                    double energy_b1) {
  const Field* f = &map.f;
  double sup = 0.0;
  double I = stationarity_integral(map.lattice(), p, xi,
                                   [f](int64_t idx, const Vec&) { return gradient(*f, idx); }, &sup);
  return std::abs(I) / (std::max(energy_b1, 1e-300) * std::max(sup, 1e-300));
}

/// Analytic variant: map gradient by central differences at the quadrature
/// spacing, so the residual exhibits the expected decay under h -> h/2.
inline double stationarity_residual(const AnalyticMap& map, const Lattice& quad, double p,
                                    const BumpField& xi, double energy_b1) {
  auto grad_at = [&map, &quad](int64_t, const Vec& x) {
    GradMat g;
    g.m = map.m;
    g.ncomp = map.target.ambient;
    for (int i = 0; i < g.m; ++i) {
      Vec e = Vec::axis(map.m, i, quad.h);
      Vec up = map.eval(x + e), dn = map.eval(x - e);
      for (int c = 0; c < g.ncomp; ++c) g.g[size_t(i)][size_t(c)] = (up[c] - dn[c]) / (2.0 * quad.h);
    }
    return g;
  };
  double sup = 0.0;
  double I = stationarity_integral(quad, p, xi, grad_at, &sup);
  return std::abs(I) / (std::max(energy_b1, 1e-300) * std::max(sup, 1e-300));
}

}  // namespace phl

#endif  // PHL_ENERGY_HPP
