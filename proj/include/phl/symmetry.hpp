#ifndef PHL_SYMMETRY_HPP
#define PHL_SYMMETRY_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "phl/analytic.hpp"
#include "phl/energy.hpp"

namespace phl {

inline Vec cross(const Vec& a, const Vec& b) {
  Vec c = Vec::zero(3);
  c[0] = a[1] * b[2] - a[2] * b[1];
  c[1] = a[2] * b[0] - a[0] * b[2];
  c[2] = a[0] * b[1] - a[1] * b[0];
  return c;
}

struct SymmetryOptions {
  double h_a = 1.0 / 16.0;  // analysis lattice spacing for blow-up quadrature
  int sphere_bins = 12;     // cube-sphere face resolution (6 * G * G bins)
  int circle_bins = 128;
  int dirs = 200;           // Grassmannian direction candidates
  int refine_rounds = 4;
  double exclusion = 0.75;  // skip samples within exclusion * h_a of the axis

  /// Full-accuracy settings for direct defect queries.
  static SymmetryOptions direct() { return SymmetryOptions{}; }
  /// Cheaper settings for bulk stratum classification.
  static SymmetryOptions classify() {
    SymmetryOptions o;
    o.h_a = 1.0 / 8.0;
    o.sphere_bins = 8;
    o.circle_bins = 64;
    o.dirs = 96;
    o.refine_rounds = 3;
    return o;
  }
};

struct SymmetryReport {
  Vec x;
  double r = 1.0;
  int k = 0;
  double defect = 0.0;
  std::vector<Vec> V;  // orthonormal basis of the best invariant k-plane
};

/// Cached blow-up quadrature: T_{x,r}(y) at analysis-lattice nodes of B_1,
/// sampled once and reused across all candidate subspaces.
struct BlowupSample {
  int m = 3;
  double p = 2.0;
  Target target;
  std::vector<Vec> y;
  std::vector<Vec> val;
  std::vector<double> w;
};

inline BlowupSample sample_blowup(const MapSource& src, const Vec& x, double r, double p,
                                  const SymmetryOptions& opts) {
  if (r < src.min_scale - 1e-12)
    throw ScaleUnderresolved("symmetry: scale below the source resolution floor");
  if (x.norm() + r > src.eval_radius + 1e-9)
    throw OutOfDomain("symmetry: blow-up ball exits the source domain");
  BlowupSample bs;
  bs.m = src.m;
  bs.p = p;
  bs.target = src.target;
  Lattice alat(src.m, opts.h_a);
  Vec origin = Vec::zero(src.m);
  alat.for_each_in_ball(origin, 1.0, [&](int64_t, const Vec& yy) {
    double w = alat.clip_weight(yy, origin, 1.0);
    if (w <= 0.0) return;
    bs.y.push_back(yy);
    bs.val.push_back(src.eval(x + yy * r));
    bs.w.push_back(w);
  });
  return bs;
}

namespace detail {

/// Accumulating bins over the unit sphere of the transverse space V-perp.
/// dim 1: two half-line constants; dim 2: circle bins; dim 3: cube-sphere.
struct DirectionBins {
  int dim = 3;
  int G = 12, B = 128;
  std::vector<Vec> sum;
  std::vector<double> wt;
  Vec global_sum;
  double global_wt = 0.0;

  DirectionBins(int dim_, const SymmetryOptions& o, int ncomp) : dim(dim_), G(o.sphere_bins), B(o.circle_bins) {
    size_t n = dim == 3 ? size_t(6 * G * G) : dim == 2 ? size_t(B) : dim == 1 ? 2 : 1;
    sum.assign(n, Vec::zero(ncomp));
    wt.assign(n, 0.0);
    global_sum = Vec::zero(ncomp);
  }

  // cube-sphere addressing: face in [0,6), square coords (u,v) in [-1,1]
  static void face_coords(const Vec& d, int& face, double& u, double& v) {
    double ax = std::abs(d[0]), ay = std::abs(d[1]), az = std::abs(d[2]);
    if (ax >= ay && ax >= az) {
      face = d[0] > 0 ? 0 : 1;
      u = d[1] / ax;
      v = d[2] / ax;
    } else if (ay >= az) {
      face = d[1] > 0 ? 2 : 3;
      u = d[0] / ay;
      v = d[2] / ay;
    } else {
      face = d[2] > 0 ? 4 : 5;
      u = d[0] / az;
      v = d[1] / az;
    }
  }

  template <typename Fn>
  void spread(const Vec& d, Fn&& emit) const {
    // emit(bin_index, weight_fraction) with fractions summing to 1
    if (dim <= 0) {
      emit(0, 1.0);
      return;
    }
    if (dim == 1) {
      emit(d[0] > 0 ? 0 : 1, 1.0);
      return;
    }
    if (dim == 2) {
      double a = std::atan2(d[1], d[0]);
      double t = (a + M_PI) / (2.0 * M_PI) * B - 0.5;
      double fl = std::floor(t);
      int i0 = ((int(fl) % B) + B) % B;
      int i1 = (i0 + 1) % B;
      double f = t - fl;
      emit(i0, 1.0 - f);
      emit(i1, f);
      return;
    }
    int face;
    double u, v;
    face_coords(d, face, u, v);
    double pu = std::clamp((u + 1.0) * 0.5 * G - 0.5, 0.0, double(G - 1));
    double pv = std::clamp((v + 1.0) * 0.5 * G - 0.5, 0.0, double(G - 1));
    int iu = std::min(int(pu), G - 2 >= 0 ? G - 2 : 0);
    int iv = std::min(int(pv), G - 2 >= 0 ? G - 2 : 0);
    double fu = pu - iu, fv = pv - iv;
    int base = face * G * G;
    emit(base + iv * G + iu, (1 - fu) * (1 - fv));
    emit(base + iv * G + iu + 1, fu * (1 - fv));
    emit(base + (iv + 1) * G + iu, (1 - fu) * fv);
    emit(base + (iv + 1) * G + iu + 1, fu * fv);
  }

  void splat(const Vec& d, const Vec& value, double weight) {
    spread(d, [&](int b, double f) {
      sum[size_t(b)] += value * (f * weight);
      wt[size_t(b)] += f * weight;
    });
    global_sum += value * weight;
    global_wt += weight;
  }

  /// Per-bin representative values; empty bins filled by neighbor diffusion.
  std::vector<Vec> finalize(const Target& target) const {
    size_t n = sum.size();
    std::vector<Vec> c(n);
    std::vector<char> has(n, 0);
    Vec fallback = global_wt > 0 ? global_sum * (1.0 / global_wt) : Vec::axis(global_sum.n, 0);
    if (target.kind == Target::Kind::Sphere && fallback.norm() < 1e-12) fallback = Vec::axis(global_sum.n, 0);
    auto proj = [&](const Vec& v) {
      if (target.kind != Target::Kind::Sphere) return v;
      return v.norm() < 1e-12 ? target.project(fallback) : target.project(v);
    };
    for (size_t i = 0; i < n; ++i) {
      if (wt[i] > 0) {
        c[i] = proj(sum[i] * (1.0 / wt[i]));
        has[i] = 1;
      }
    }
    // diffuse into empty bins (flat index adjacency is enough here)
    for (int round = 0; round < 64; ++round) {
      bool missing = false;
      std::vector<char> now = has;
      for (size_t i = 0; i < n; ++i) {
        if (has[i]) continue;
        Vec acc = Vec::zero(global_sum.n);
        int cnt = 0;
        if (i > 0 && has[i - 1]) { acc += c[i - 1]; ++cnt; }
        if (i + 1 < n && has[i + 1]) { acc += c[i + 1]; ++cnt; }
        if (dim == 3) {
          if (i >= size_t(G) && has[i - size_t(G)]) { acc += c[i - size_t(G)]; ++cnt; }
          if (i + size_t(G) < n && has[i + size_t(G)]) { acc += c[i + size_t(G)]; ++cnt; }
        }
        if (cnt > 0) {
          c[i] = proj(acc * (1.0 / cnt));
          now[i] = 1;
        } else {
          missing = true;
        }
      }
      has = now;
      if (!missing) break;
    }
    for (size_t i = 0; i < n; ++i)
      if (!has[i]) c[i] = proj(fallback);
    return c;
  }

  /// Interpolated approximant value in direction d.
  Vec eval(const std::vector<Vec>& c, const Vec& d, const Target& target) const {
    Vec acc = Vec::zero(c.empty() ? 0 : c[0].n);
    spread(d, [&](int b, double f) { acc += c[size_t(b)] * f; });
    if (target.kind == Target::Kind::Sphere) {
      if (acc.norm() < 1e-12) {
        // degenerate mix: fall back to the dominant bin
        int best = 0;
        double bw = -1;
        spread(d, [&](int b, double f) {
          if (f > bw) { bw = f; best = b; }
        });
        return c[size_t(best)];
      }
      return target.project(acc);
    }
    return acc;
  }
};

/// Orthonormal basis of the complement of span(V) in R^m.
inline std::vector<Vec> complement_basis(const std::vector<Vec>& V, int m) {
  std::vector<Vec> basis = V;
  std::vector<Vec> out;
  for (int e = 0; e < m && int(basis.size()) < m; ++e) {
    Vec v = Vec::axis(m, e);
    for (const Vec& b : basis) v -= b * v.dot(b);
    if (v.norm() > 1e-8) {
      v = v.normalized();
      basis.push_back(v);
      out.push_back(v);
    }
  }
  if (int(basis.size()) != m) throw Error("complement_basis: degenerate subspace");
  return out;
}

/// Defect of the best binned (>= k)-symmetric approximant invariant along V.
/// `stride` subsamples the quadrature set (used during direction search; the
/// reported defect of a chosen V is always evaluated at stride 1).
inline double subspace_defect(const BlowupSample& bs, const std::vector<Vec>& V,
                              const SymmetryOptions& opts, size_t stride = 1) {
  const int m = bs.m;
  const int k = int(V.size());
  const int dim = m - k;
  const int nc = bs.target.ambient;
  std::vector<Vec> W = k == 0 ? std::vector<Vec>() : complement_basis(V, m);
  if (k == 0)
    for (int i = 0; i < m; ++i) W.push_back(Vec::axis(m, i));

  auto transverse = [&](const Vec& y) {
    Vec s = Vec::zero(std::max(dim, 1));
    for (int i = 0; i < dim; ++i) s[i] = y.dot(W[size_t(i)]);
    return s;
  };

  if (stride < 1) stride = 1;
  DirectionBins bins(dim, opts, nc);
  const double cut = opts.exclusion * opts.h_a;
  if (dim == 0) {
    // k = m: the only approximants are constants
    for (size_t j = 0; j < bs.y.size(); j += stride) bins.splat(Vec::zero(1), bs.val[j], bs.w[j]);
  } else {
    for (size_t j = 0; j < bs.y.size(); j += stride) {
      Vec s = transverse(bs.y[j]);
      if (s.norm() < cut) continue;
      bins.splat(s, bs.val[j], bs.w[j]);
    }
  }
  std::vector<Vec> c = bins.finalize(bs.target);

  KahanSum num;
  double wtot = 0.0;
  for (size_t j = 0; j < bs.y.size(); j += stride) {
    Vec h;
    if (dim == 0) {
      h = c[0];
    } else {
      Vec s = transverse(bs.y[j]);
      if (s.norm() < cut) continue;
      h = bins.eval(c, s, bs.target);
    }
    double d = bs.target.distance(bs.val[j], h);
    num.add(bs.w[j] * std::pow(d, bs.p));
    wtot += bs.w[j];
  }
  return wtot > 0 ? num.value() / wtot : 0.0;
}

/// Deterministic quasi-uniform directions on the upper hemisphere (m = 3)
/// or the half-circle (m = 2).
inline std::vector<Vec> direction_candidates(int m, int count) {
  std::vector<Vec> out;
  out.reserve(size_t(count));
  if (m == 2) {
    for (int i = 0; i < count; ++i) {
      double a = M_PI * i / count;
      out.emplace_back(std::cos(a), std::sin(a));
    }
    return out;
  }
  const double ga = M_PI * (3.0 - std::sqrt(5.0));
  int total = 2 * count;
  for (int i = 0; i < total && int(out.size()) < count; ++i) {
    double z = 1.0 - (2.0 * i + 1.0) / total;
    if (z < 0) break;
    double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    double a = ga * i;
    out.emplace_back(rho * std::cos(a), rho * std::sin(a), z);
  }
  return out;
}

inline std::vector<Vec> basis_from_direction(const Vec& u, int m, int k) {
  // k = 1: V = span(u). k = m-1 (m = 3): V = the plane orthogonal to u.
  if (k == 1) return {u};
  std::vector<Vec> comp = complement_basis({u}, m);
  return comp;
}

}  // namespace detail

inline SymmetryReport homogeneous_defect(const MapSource& src, const Vec& x, double r, double p,
                                         const SymmetryOptions& opts = SymmetryOptions::direct()) {
  BlowupSample bs = sample_blowup(src, x, r, p, opts);
  SymmetryReport rep;
  rep.x = x;
  rep.r = r;
  rep.k = 0;
  rep.defect = detail::subspace_defect(bs, {}, opts);
  return rep;
}

inline SymmetryReport k_symmetric_defect_cached(const BlowupSample& bs, const Vec& x, double r,
                                                int k, const SymmetryOptions& opts) {
  SymmetryReport rep;
  rep.x = x;
  rep.r = r;
  rep.k = k;
  const int m = bs.m;
  if (k < 0 || k > m) throw Error("k_symmetric_defect: k out of range");
  if (k == 0) {
    rep.defect = detail::subspace_defect(bs, {}, opts);
    return rep;
  }
  if (k == m) {
    for (int i = 0; i < m; ++i) rep.V.push_back(Vec::axis(m, i));
    rep.defect = detail::subspace_defect(bs, rep.V, opts);
    return rep;
  }

  // all remaining cases reduce to a search over a single unit direction;
  // scan on a quadrature subsample, score the winner on the full set
  const size_t stride = std::max<size_t>(1, bs.y.size() / 600);
  Vec best_u;
  double best = std::numeric_limits<double>::infinity();
  for (const Vec& u : detail::direction_candidates(m, opts.dirs)) {
    double d = detail::subspace_defect(bs, detail::basis_from_direction(u, m, k), opts, stride);
    if (d < best) {
      best = d;
      best_u = u;
    }
  }
  // local refinement around the winner with a shrinking perturbation ring
  double ring = m == 2 ? 0.5 * M_PI / opts.dirs : 2.4 / std::sqrt(double(opts.dirs));
  for (int round = 0; round < opts.refine_rounds; ++round) {
    std::vector<Vec> perturbed;
    if (m == 2) {
      double a0 = std::atan2(best_u[1], best_u[0]);
      for (int s : {-1, 1}) {
        double a = a0 + s * ring;
        perturbed.emplace_back(std::cos(a), std::sin(a));
      }
    } else {
      std::vector<Vec> t = detail::complement_basis({best_u}, 3);
      for (int j = 0; j < 8; ++j) {
        double a = 2.0 * M_PI * j / 8.0;
        perturbed.push_back((best_u + (t[0] * std::cos(a) + t[1] * std::sin(a)) * ring).normalized());
      }
    }
    for (const Vec& u : perturbed) {
      double d = detail::subspace_defect(bs, detail::basis_from_direction(u, m, k), opts, stride);
      if (d < best) {
        best = d;
        best_u = u;
      }
    }
    ring *= 0.35;
  }
  rep.V = detail::basis_from_direction(best_u, m, k);
  rep.defect = stride == 1 ? best : detail::subspace_defect(bs, rep.V, opts);
  return rep;
}

inline SymmetryReport k_symmetric_defect(const MapSource& src, const Vec& x, double r, int k,
                                         double p,
                                         const SymmetryOptions& opts = SymmetryOptions::direct()) {
  BlowupSample bs = sample_blowup(src, x, r, p, opts);
  return k_symmetric_defect_cached(bs, x, r, k, opts);
}

inline bool is_symmetric(const MapSource& src, const Vec& x, double r, int k, double eps, double p,
                         const SymmetryOptions& opts = SymmetryOptions::direct()) {
  return k_symmetric_defect(src, x, r, k, p, opts).defect < eps;
}

}  // namespace phl

#endif  // PHL_SYMMETRY_HPP
