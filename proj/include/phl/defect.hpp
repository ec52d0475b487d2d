#ifndef PHL_DEFECT_HPP
#define PHL_DEFECT_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "phl/energy.hpp"
#include "phl/minimizer.hpp"
#include "phl/stratification.hpp"

namespace phl {

// ---------------------------------------------------------------------------
// Energy measures of map sequences: cell masses of |grad u|^p dV, the
// concentration set of the sequence tail, and defect-mass accounting against
// a supplied weak-limit candidate.
// ---------------------------------------------------------------------------

/// |grad u|^p dV aggregated per lattice cell, clipped to the unit ball.
/// mass[i] already carries the cell volume, so ball quantities only apply the
/// clip fraction of the query ball.
struct EnergyMeasure {
  Lattice lat;
  double p = 2.0;
  std::vector<double> mass;
  double total = 0.0;

  EnergyMeasure() = default;
  EnergyMeasure(const Lattice& l, double p_) : lat(l), p(p_), mass(size_t(l.node_count()), 0.0) {}

  double ball_mass(const Vec& x, double r) const {
    KahanSum s;
    lat.for_each_in_ball(x, r, [&](int64_t idx, const Vec& y) {
      double w = lat.clip_fraction(y, x, r);
      if (w > 0) s.add(w * mass[size_t(idx)]);
    });
    return s.value();
  }

  /// Scale density theta_mu(x, r) = r^{p-m} mu(B_r(x)); same resolution and
  /// domain guards as theta on a density field.
  double theta(const Vec& x, double r) const {
    if (r < theta_floor(lat) - 1e-12)
      throw ScaleUnderresolved("EnergyMeasure::theta: radius below resolved scale 3h");
    if (x.norm() + r > 1.0 + 1e-9) throw OutOfDomain("EnergyMeasure::theta: ball exits domain");
    return std::pow(r, p - lat.m) * ball_mass(x, r);
  }
};

inline EnergyMeasure energy_measure(const DensityField& df) {
  EnergyMeasure mu(df.lat, df.p);
  Vec origin = Vec::zero(df.lat.m);
  KahanSum tot;
  const int64_t n = df.lat.node_count();
  for (int64_t i = 0; i < n; ++i) {
    double w = df.lat.clip_weight(df.lat.coord(i), origin, 1.0);
    mu.mass[size_t(i)] = w * df.d[size_t(i)];
    tot.add(mu.mass[size_t(i)]);
  }
  mu.total = tot.value();
  return mu;
}

inline EnergyMeasure energy_measure(const DiscreteMap& u, double p) {
  return energy_measure(density_field(u, p));
}

/// A map sequence reduced to its energy measures plus the weak-limit
/// candidate. The limit is supplied by the experiment (it is known in closed
/// form for every desk construction); when omitted it defaults to the final
/// map of the sequence.
struct MeasureSequence {
  std::vector<EnergyMeasure> measures;
  DiscreteMap limit;
  DensityField limit_density;
  EnergyMeasure limit_measure;  // same B_1 clipping as the sequence measures
};

inline MeasureSequence accumulate(const std::vector<DiscreteMap>& seq, double p,
                                  const DiscreteMap* limit = nullptr) {
  if (seq.empty()) throw Error("accumulate: empty map sequence");
  const Lattice& L = seq.front().lattice();
  MeasureSequence out;
  for (const DiscreteMap& u : seq) {
    const Lattice& l = u.lattice();
    if (l.m != L.m || l.half != L.half || std::abs(l.h - L.h) > 1e-15)
      throw Error("accumulate: maps live on mismatched lattices");
    out.measures.push_back(energy_measure(u, p));
  }
  out.limit = limit ? *limit : seq.back();
  const Lattice& ll = out.limit.lattice();
  if (ll.m != L.m || ll.half != L.half || std::abs(ll.h - L.h) > 1e-15)
    throw Error("accumulate: limit map lives on a mismatched lattice");
  out.limit_density = density_field(out.limit, p);
  out.limit_measure = energy_measure(out.limit_density);
  return out;
}

/// nu(B_r(x)) = mu_tail(B_r(x)) - int_{B_r(x)} |grad u_limit|^p: the local
/// defect mass against the limit candidate. Both sides use identical cell
/// clipping, so a sequence converging to its own limit scores exactly zero.
inline double defect_ball(const MeasureSequence& ms, const Vec& x, double r) {
  if (ms.measures.empty()) throw Error("defect_ball: empty sequence");
  return ms.measures.back().ball_mass(x, r) - ms.limit_measure.ball_mass(x, r);
}

struct SigmaCell {
  Vec center;
  double density = 0.0;  // tail-min theta at the smallest ladder radius
  int component = -1;
};

struct ConcentrationReport {
  double eps = 0.05;
  double cell_size = 0.0;       // spacing of the detection grid
  std::vector<double> radii;    // descending ladder used for the tail-min
  std::vector<SigmaCell> sigma;
  int component_count = 0;
  std::vector<Vec> component_centers;   // density-weighted centroids
  std::vector<double> component_masses; // nu of a ball localizing each component
  double defect_mass = 0.0;             // nu(B_1) against the limit candidate
  double density_ratio = 0.0;           // defect mass per unit of the support proxy
  std::vector<double> tube_radii;       // Vol(B_r(Sigma)) table for the
  std::vector<double> tube_volumes;     // Minkowski-content check

  bool contains(const Vec& x) const {
    for (const SigmaCell& c : sigma)
      if (dist(x, c.center) <= cell_size + 1e-12) return true;
    return false;
  }
};

/// Concentration-set detection: a coarse cell belongs to Sigma when the
/// minimum of theta_mu over the last `tail` measures and over every ladder
/// radius exceeds eps. The liminf over the sequence index is realized as the
/// min over the recorded tail; Sigma is closed by construction (threshold on
/// data continuous in x and r).
inline ConcentrationReport detect_sigma(const MeasureSequence& ms, double eps,
                                        std::vector<double> radii, double cell_size = 0.0,
                                        int tail = 3) {
  if (tail < 3) throw Error("detect_sigma: tail must cover at least 3 measures");
  if (int(ms.measures.size()) < tail)
    throw Error("detect_sigma: need at least `tail` measures in the sequence");
  if (radii.empty()) throw Error("detect_sigma: empty radii ladder");
  const Lattice& L = ms.measures.back().lat;
  std::sort(radii.begin(), radii.end(), std::greater<double>());
  const double r_min = radii.back(), r_max = radii.front();
  if (r_min < theta_floor(L) - 1e-12)
    throw ScaleUnderresolved("detect_sigma: ladder under-resolved");
  if (cell_size <= 0.0) cell_size = std::max(r_min, 4.0 * L.h);

  ConcentrationReport rep;
  rep.eps = eps;
  rep.cell_size = cell_size;
  rep.radii = radii;

  const size_t first = ms.measures.size() - size_t(tail);
  const int m = L.m;
  const int span = int((1.0 - r_max) / cell_size);
  std::vector<std::array<int, 3>> grid_of;  // detection-grid index per sigma cell
  std::array<int, 3> iv{0, 0, 0};
  for (iv[0] = -span; iv[0] <= span; ++iv[0])
    for (iv[1] = -span; iv[1] <= span; ++iv[1])
      for (iv[2] = (m == 3 ? -span : 0); iv[2] <= (m == 3 ? span : 0); ++iv[2]) {
        Vec c = Vec::zero(m);
        for (int d = 0; d < m; ++d) c[d] = iv[size_t(d)] * cell_size;
        if (c.norm() + r_max > 1.0 - 1e-9) continue;
        double lim = std::numeric_limits<double>::infinity();
        double density = std::numeric_limits<double>::infinity();
        for (size_t i = first; i < ms.measures.size() && lim > eps; ++i) {
          for (double r : radii) {
            double th = ms.measures[i].theta(c, r);
            lim = std::min(lim, th);
            if (r == r_min) density = std::min(density, th);
            if (lim <= eps) break;
          }
        }
        if (lim > eps) {
          rep.sigma.push_back({c, density, -1});
          grid_of.push_back(iv);
        }
      }

  // connected components over detection-grid face adjacency
  for (size_t s = 0; s < rep.sigma.size(); ++s) {
    if (rep.sigma[s].component >= 0) continue;
    int comp = rep.component_count++;
    std::vector<size_t> stack{s};
    rep.sigma[s].component = comp;
    while (!stack.empty()) {
      size_t cur = stack.back();
      stack.pop_back();
      for (size_t t = 0; t < rep.sigma.size(); ++t) {
        if (rep.sigma[t].component >= 0) continue;
        int manhattan = 0;
        for (int d = 0; d < 3; ++d)
          manhattan += std::abs(grid_of[cur][size_t(d)] - grid_of[t][size_t(d)]);
        if (manhattan == 1) {
          rep.sigma[t].component = comp;
          stack.push_back(t);
        }
      }
    }
  }
  for (int c = 0; c < rep.component_count; ++c) {
    Vec acc = Vec::zero(m);
    double wsum = 0.0;
    for (const SigmaCell& sc : rep.sigma)
      if (sc.component == c) {
        acc += sc.center * sc.density;
        wsum += sc.density;
      }
    rep.component_centers.push_back(acc * (1.0 / wsum));
  }

  // defect mass: global, and localized per component with a radius that keeps
  // the components disjoint and inside the domain
  rep.defect_mass = defect_ball(ms, Vec::zero(m), 1.0 - 1e-9);
  for (int c = 0; c < rep.component_count; ++c) {
    double r_loc = std::min(0.2, 1.0 - rep.component_centers[size_t(c)].norm() - 1e-9);
    for (int o = 0; o < rep.component_count; ++o)
      if (o != c)
        r_loc = std::min(r_loc,
                         0.5 * dist(rep.component_centers[size_t(c)],
                                    rep.component_centers[size_t(o)]));
    rep.component_masses.push_back(defect_ball(ms, rep.component_centers[size_t(c)], r_loc));
  }

  // support proxy for the density ratio: component count when m = p (atoms),
  // cell count scaled by cell_size^{m-p} otherwise
  if (!rep.sigma.empty()) {
    double proxy = std::abs(double(m) - ms.measures.back().p) < 1e-9
                       ? double(rep.component_count)
                       : double(rep.sigma.size()) *
                             std::pow(cell_size, double(m) - ms.measures.back().p);
    rep.density_ratio = rep.defect_mass / std::max(proxy, 1e-12);
  }

  // Vol(B_r(Sigma)) table on a geometric ladder for the Minkowski check
  if (!rep.sigma.empty()) {
    std::vector<Vec> support;
    for (const SigmaCell& sc : rep.sigma) support.push_back(sc.center);
    for (double r = r_max; r >= std::max(r_min, 2.0 * L.h) - 1e-12; r *= 0.5) {
      rep.tube_radii.push_back(r);
      rep.tube_volumes.push_back(neighborhood_volume(support, r, L));
    }
  }
  return rep;
}

/// Approximate-homogeneity deviation of a measure about x: the largest
/// theta_mu gap over ladder pairs plus the largest normalized radial-energy
/// term r^{p-m} int_annulus |grad u|^{p-2} |d_r u|^2 of the generating map.
/// Exactly homogeneous measures with radially independent maps score 0.
inline double homogeneity_check(const DiscreteMap& u, const EnergyMeasure& mu, const Vec& x,
                                std::vector<double> scales,
                                const ConcentrationReport* sigma = nullptr) {
  if (scales.size() < 2) throw Error("homogeneity_check: need at least two scales");
  if (sigma && !sigma->contains(x))
    throw Error("homogeneity_check: point not in the detected concentration set");
  std::sort(scales.begin(), scales.end(), std::greater<double>());

  double dev_theta = 0.0;
  std::vector<double> th;
  for (double r : scales) th.push_back(mu.theta(x, r));
  for (size_t a = 0; a < th.size(); ++a)
    for (size_t b = a + 1; b < th.size(); ++b)
      dev_theta = std::max(dev_theta, std::abs(th[a] - th[b]));

  const Lattice& L = u.lattice();
  double dev_radial = 0.0;
  for (size_t a = 0; a + 1 < scales.size(); ++a) {
    double r_out = scales[a], r_in = scales[a + 1];
    KahanSum s;
    L.for_each_in_ball(x, r_out, [&](int64_t idx, const Vec& y) {
      double w = L.clip_fraction(y, x, r_out) - L.clip_fraction(y, x, r_in);
      if (w <= 0) return;
      Vec e = y - x;
      double n = e.norm();
      if (n < 1e-12) return;
      e = e * (1.0 / n);
      GradMat g = gradient(u.f, idx);
      double radial2 = 0.0;
      for (int i = 0; i < L.m; ++i)
        for (int j = 0; j < L.m; ++j) radial2 += e[i] * e[j] * g.gram(i, j);
      double frob2 = g.frob2();
      double fac = mu.p == 2.0 ? 1.0 : std::pow(std::max(frob2, 0.0), mu.p / 2.0 - 1.0);
      s.add(w * L.cell_volume() * fac * std::max(radial2, 0.0));
    });
    dev_radial = std::max(dev_radial, std::pow(r_out, mu.p - L.m) * s.value());
  }
  return dev_theta + dev_radial;
}

}  // namespace phl

#endif  // PHL_DEFECT_HPP
