#ifndef PHL_MINIMIZER_HPP
#define PHL_MINIMIZER_HPP

#include <cmath>
#include <string>
#include <vector>

#include "phl/analytic.hpp"
#include "phl/energy.hpp"
#include "phl/lattice.hpp"

namespace phl {

struct SolveConfig {
  double p = 2.0;
  int max_iters = 2000;
  double tol_energy = 1e-8;    // relative energy decrease per iteration
  double tol_grad = 1e-4;      // L2 norm of the projected gradient
  double eps_reg = 1e-6;       // (|grad|^2 + eps^2)^{(p-2)/2} for p < 2
  double armijo_c = 1e-4;
  double step0 = 0.25;         // initial trial step, self-tuning afterwards
  enum class Init { Radial, Blend, Supplied } init = Init::Radial;
  uint64_t seed = 0;

  void validate() const {
    if (!(p > 1.0)) throw Error("solve: p must exceed 1");
    if (!(tol_energy > 0) || !(tol_grad > 0)) throw Error("solve: thresholds must be positive");
  }
};

struct SolveReport {
  double energy = 0.0;             // E_p over B_1 of the final iterate
  int iterations = 0;
  double grad_norm = 0.0;          // final projected-gradient L2 norm
  double stationarity = 0.0;       // worst residual over a fixed bump family
  double lambda_bound = 0.0;       // Lambda = theta(0, 1)
  bool converged = false;
  std::vector<double> energy_trace;
};

namespace detail {

/// Regularized discrete p-energy over B_1 with cell-clipped weights.
inline double discrete_energy(const Field& f, double p, double eps_reg,
                              const std::vector<double>& w1) {
  KahanSum s;
  const int64_t n = f.lat.node_count();
  for (int64_t i = 0; i < n; ++i) {
    if (w1[size_t(i)] == 0.0) continue;
    double g2 = gradient(f, i).frob2();
    s.add(w1[size_t(i)] * std::pow(g2 + eps_reg * eps_reg, p / 2.0));
  }
  return s.value();
}

/// Exact gradient of discrete_energy wrt node values, scattered through the
/// same finite-difference stencils the energy uses.
inline void energy_gradient(const Field& f, double p, double eps_reg,
                            const std::vector<double>& w1, std::vector<double>& out) {
  const Lattice& L = f.lat;
  const int64_t n = L.node_count();
  const int nc = f.ncomp;
  out.assign(size_t(n) * size_t(nc), 0.0);
  for (int64_t x = 0; x < n; ++x) {
    if (w1[size_t(x)] == 0.0) continue;
    GradMat g = gradient(f, x);
    double scale = w1[size_t(x)] * p * std::pow(g.frob2() + eps_reg * eps_reg, p / 2.0 - 1.0);
    Lattice::IVec iv = L.multi_index(x);
    for (int i = 0; i < L.m; ++i) {
      Lattice::IVec up = iv, dn = iv;
      up[size_t(i)] += 1;
      dn[size_t(i)] -= 1;
      const bool has_up = up[size_t(i)] <= L.half;
      const bool has_dn = dn[size_t(i)] >= -L.half;
      double cu, cd, c0;  // stencil coefficients matching gradient()
      if (has_up && has_dn) {
        cu = 0.5 / L.h; cd = -0.5 / L.h; c0 = 0.0;
      } else if (has_up) {
        cu = 1.0 / L.h; cd = 0.0; c0 = -1.0 / L.h;
      } else {
        cu = 0.0; cd = -1.0 / L.h; c0 = 1.0 / L.h;
      }
      for (int c = 0; c < nc; ++c) {
        double s = scale * g.g[size_t(i)][size_t(c)];
        if (cu != 0.0) out[size_t(L.index(up)) * size_t(nc) + size_t(c)] += s * cu;
        if (cd != 0.0) out[size_t(L.index(dn)) * size_t(nc) + size_t(c)] += s * cd;
        if (c0 != 0.0) out[size_t(x) * size_t(nc) + size_t(c)] += s * c0;
      }
    }
  }
}

}  // namespace detail

/// Projected gradient descent with Armijo backtracking for
///   E(f) = sum_x w_1(x) (|grad f(x)|^2 + eps^2)^{p/2}
/// over sphere-valued node fields with the radial extension of `boundary`
/// pinned on the band |x| >= 1 - h (and on the box exterior of B_1).
inline std::pair<DiscreteMap, SolveReport> solve(const Lattice& lat, const Target& target,
                                                 const BoundaryData& boundary, SolveConfig cfg,
                                                 const DiscreteMap* supplied = nullptr) {
  cfg.validate();
  const int64_t n = lat.node_count();
  const int nc = target.ambient;
  DiscreteMap map(lat, target);

  std::vector<double> w1(size_t(n), 0.0);
  std::vector<char> fixed(size_t(n), 0);
  Vec origin = Vec::zero(lat.m);
  for (int64_t i = 0; i < n; ++i) {
    Vec x = lat.coord(i);
    w1[size_t(i)] = lat.clip_weight(x, origin, 1.0);
    fixed[size_t(i)] = x.norm() >= 1.0 - lat.h - 1e-12 ? 1 : 0;
  }

  // initialize: pinned band always carries the radial extension of the trace
  Vec mean = Vec::zero(nc);
  {
    KahanSum comp[4];
    int cnt = 0;
    for (int64_t i = 0; i < n; ++i) {
      Vec x = lat.coord(i);
      if (!fixed[size_t(i)]) continue;
      Vec g = boundary.g(x.normalized());
      ++cnt;
      for (int c = 0; c < nc; ++c) comp[c].add(g[c]);
    }
    for (int c = 0; c < nc; ++c) mean[c] = comp[c].value() / std::max(cnt, 1);
    if (target.kind == Target::Kind::Sphere && mean.norm() < 1e-8) mean = Vec::axis(nc, nc - 1);
    mean = target.project(mean);
  }
  for (int64_t i = 0; i < n; ++i) {
    Vec x = lat.coord(i);
    if (fixed[size_t(i)]) {
      map.f.set(i, boundary.g(x.normalized()));
    } else if (cfg.init == SolveConfig::Init::Supplied) {
      if (!supplied) throw Error("solve: supplied initialization without a field");
      map.f.set(i, target.project(supplied->f.value(i)));
    } else if (cfg.init == SolveConfig::Init::Blend) {
      double t = x.norm();
      Vec g = t < 1e-12 ? mean : boundary.g(x.normalized());
      Vec v = g * t + mean * (1.0 - t);
      map.f.set(i, v.norm() < 1e-8 ? mean : target.project(v));
    } else {
      map.f.set(i, x.norm() < 1e-12 ? mean : boundary.g(x.normalized()));
    }
  }

  SolveReport rep;
  double E = detail::discrete_energy(map.f, cfg.p, cfg.eps_reg, w1);
  if (!std::isfinite(E)) throw Divergence("solve: non-finite initial energy");
  rep.energy_trace.push_back(E);

  std::vector<double> grad;
  std::vector<double> trial(map.f.v.size());
  double step = cfg.step0;
  for (int it = 0; it < cfg.max_iters; ++it) {
    detail::energy_gradient(map.f, cfg.p, cfg.eps_reg, w1, grad);
    // tangent-project at free nodes, zero at pinned ones
    KahanSum gnorm2;
    for (int64_t i = 0; i < n; ++i) {
      double* g = grad.data() + size_t(i) * size_t(nc);
      if (fixed[size_t(i)]) {
        for (int c = 0; c < nc; ++c) g[c] = 0.0;
        continue;
      }
      if (target.kind == Target::Kind::Sphere) {
        const double* v = map.f.at(i);
        double d = 0;
        for (int c = 0; c < nc; ++c) d += g[c] * v[c];
        for (int c = 0; c < nc; ++c) g[c] -= d * v[c];
      }
      double s = 0;
      for (int c = 0; c < nc; ++c) s += g[c] * g[c];
      gnorm2.add(s * lat.cell_volume());
    }
    rep.grad_norm = std::sqrt(gnorm2.value());
    rep.iterations = it;
    if (rep.grad_norm < cfg.tol_grad) {
      rep.converged = true;
      break;
    }

    // Armijo backtracking on the projected step
    double Enew = E;
    bool accepted = false;
    for (int bt = 0; bt < 40; ++bt) {
      for (int64_t i = 0; i < n; ++i) {
        const double* v = map.f.at(i);
        const double* g = grad.data() + size_t(i) * size_t(nc);
        double* t = trial.data() + size_t(i) * size_t(nc);
        if (fixed[size_t(i)]) {
          for (int c = 0; c < nc; ++c) t[c] = v[c];
          continue;
        }
        double nrm2 = 0;
        for (int c = 0; c < nc; ++c) {
          t[c] = v[c] - step * g[c];
          nrm2 += t[c] * t[c];
        }
        if (target.kind == Target::Kind::Sphere) {
          double inv = 1.0 / std::sqrt(nrm2);
          for (int c = 0; c < nc; ++c) t[c] *= inv;
        }
      }
      std::swap(map.f.v, trial);
      Enew = detail::discrete_energy(map.f, cfg.p, cfg.eps_reg, w1);
      std::swap(map.f.v, trial);
      if (!std::isfinite(Enew)) throw Divergence("solve: non-finite energy during line search");
      if (Enew <= E - cfg.armijo_c * step * gnorm2.value() / lat.cell_volume()) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      rep.converged = rep.grad_norm < 10.0 * cfg.tol_grad;
      break;
    }
    std::swap(map.f.v, trial);
    double drop = (E - Enew) / std::max(E, 1e-300);
    E = Enew;
    rep.energy_trace.push_back(E);
    step = std::min(step * 2.0, 4.0);
    if (drop < cfg.tol_energy && it > 10) {
      rep.converged = true;
      rep.iterations = it + 1;
      break;
    }
  }

  DensityField df = density_field(map, cfg.p);
  rep.energy = ball_energy(df, origin, 1.0);
  rep.lambda_bound = theta(df, origin, 1.0);
  double worst = 0.0;
  for (const BumpField& xi : random_bumps(lat.m, 3, 77 + cfg.seed)) {
    const Field* fp = &map.f;
    double sup = 0.0;
    double I = stationarity_integral(lat, cfg.p, xi,
                                     [fp](int64_t idx, const Vec&) { return gradient(*fp, idx); },
                                     &sup);
    worst = std::max(worst, std::abs(I) / (std::max(rep.energy, 1e-300) * std::max(sup, 1e-300)));
  }
  rep.stationarity = worst;
  return {std::move(map), rep};
}

/// Synthetic concentrating sequence: the bubble at scale lambda sampled on a
/// lattice. `resolved` is false when the concentration scale 1/lambda falls
/// below 3h and the lattice can no longer see the bubble core.
struct BubbleSample {
  DiscreteMap map;
  double lambda = 1.0;
  bool resolved = true;
};

inline BubbleSample make_bubble_sequence(int i, const Lattice& lat, double lambda0 = 1.0) {
  if (lat.m != 2) throw Error("make_bubble_sequence: domain dimension must be 2");
  double lambda = lambda0 * std::pow(2.0, i);
  if (lambda < 1.0) throw Error("make_bubble_sequence: lambda must be >= 1");
  BubbleSample out{sample(bubble(lambda), lat), lambda, 1.0 / lambda >= 3.0 * lat.h};
  return out;
}

}  // namespace phl

#endif  // PHL_MINIMIZER_HPP
