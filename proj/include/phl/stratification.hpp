#ifndef PHL_STRATIFICATION_HPP
#define PHL_STRATIFICATION_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "phl/energy.hpp"
#include "phl/symmetry.hpp"

namespace phl {

// ---------------------------------------------------------------------------
// Quantitative strata
// ---------------------------------------------------------------------------

struct StrataConfig {
  double gamma = 0.5;  // scale ladder ratio
  double eps = 0.02;   // almost-homogeneity threshold (tuple bits)
  double eta = 0.05;   // stratum symmetry threshold
  int j_max = 4;       // ladder depth: scales gamma^1 .. gamma^j
  double p = 2.0;
  SymmetryOptions sym = SymmetryOptions::classify();

  void validate() const {
    if (!(gamma > 0 && gamma <= 0.5)) throw Error("strata: gamma must lie in (0, 1/2]");
    if (j_max < 1) throw Error("strata: ladder depth must be positive");
  }
};

struct StrataLabel {
  Vec x;
  // tuple[i-1] corresponds to scale gamma^i: 1 = not almost homogeneous there
  std::vector<int> tuple;
  // in_stratum[k][j-1]: x in S^k_{eta, gamma^j} (fails (k+1)-symmetry at every
  // ladder scale >= gamma^j)
  std::vector<std::vector<char>> in_stratum;
  bool truncated = false;  // ladder cut short by the source resolution floor

  int bad_scales() const {
    int c = 0;
    for (int b : tuple) c += b;
    return c;
  }
};

/// Per-point tuple and strata membership from symmetry defects. Each blow-up
/// is sampled once per scale and reused across all k. Defect monotonicity in
/// k short-circuits most Grassmannian searches.
inline StrataLabel classify_point(const MapSource& src, const Vec& x, const StrataConfig& cfg) {
  cfg.validate();
  const int m = src.m;
  StrataLabel lab;
  lab.x = x;
  lab.in_stratum.assign(size_t(m), {});

  // fails[k][i]: defect(k+1) >= eta at scale gamma^{i+1}
  std::vector<std::vector<char>> fails;
  fails.resize(size_t(m));
  std::vector<char> alive(size_t(m), 1);  // stratum k still possible at this depth
  for (int i = 1; i <= cfg.j_max; ++i) {
    double s = std::pow(cfg.gamma, i);
    if (s < src.min_scale - 1e-12 || x.norm() + s > src.eval_radius + 1e-9) {
      lab.truncated = true;
      break;
    }
    BlowupSample bs = sample_blowup(src, x, s, cfg.p, cfg.sym);
    double d0 = detail::subspace_defect(bs, {}, cfg.sym);
    lab.tuple.push_back(d0 >= cfg.eps ? 1 : 0);

    // constant (k = m) defect bounds every defect from above
    std::vector<Vec> full;
    for (int e = 0; e < m; ++e) full.push_back(Vec::axis(m, e));
    double dm = detail::subspace_defect(bs, full, cfg.sym);

    // defects are nondecreasing in k, so d0 seeds the over-threshold chain
    double prev = d0;
    for (int k = 0; k < m; ++k) {
      bool fail;
      if (!alive[size_t(k)]) {
        fail = false;  // membership already lost at a coarser scale
      } else if (dm < cfg.eta) {
        fail = false;  // even the best constant fits: (k+1)-symmetric for all k
      } else if (prev >= cfg.eta) {
        fail = true;  // once over threshold, higher k stays over
      } else {
        double d = k + 1 == m ? dm
                              : k_symmetric_defect_cached(bs, x, s, k + 1, cfg.sym).defect;
        prev = d;
        fail = d >= cfg.eta;
      }
      fails[size_t(k)].push_back(fail ? 1 : 0);
      if (!fail) alive[size_t(k)] = 0;
    }
  }

  const int j_eff = int(lab.tuple.size());
  for (int k = 0; k < m; ++k) {
    lab.in_stratum[size_t(k)].assign(size_t(j_eff), 0);
    char all = 1;
    for (int j = 0; j < j_eff; ++j) {
      all = char(all && fails[size_t(k)][size_t(j)]);
      lab.in_stratum[size_t(k)][size_t(j)] = all;
    }
  }
  return lab;
}

inline std::vector<StrataLabel> classify_strata(const MapSource& src, const std::vector<Vec>& pts,
                                                const StrataConfig& cfg) {
  std::vector<StrataLabel> out;
  out.reserve(pts.size());
  for (const Vec& x : pts) out.push_back(classify_point(src, x, cfg));
  return out;
}

/// Number of ladder indices whose A-shifted energy window pinches by more
/// than delta: #{ i : theta(r_i) - theta(r_{i+A}) > delta }.
inline int count_bad_scales(const ScaleProfile& prof, double delta, int A) {
  if (A < 1) throw Error("count_bad_scales: window shift must be positive");
  int count = 0;
  for (size_t i = 0; i + size_t(A) < prof.radii.size(); ++i) {
    if (prof.thetas[i] - prof.thetas[i + size_t(A)] > delta) ++count;
  }
  return count;
}

// ---------------------------------------------------------------------------
// Decomposition-lemma covering
// ---------------------------------------------------------------------------

struct CoveringNode {
  Vec center;
  double radius = 1.0;
  int level = 0;
  int parent = -1;
  std::string tuple_prefix;  // the T-bar label of the family this ball covers
};

struct CoveringTree {
  std::vector<CoveringNode> nodes;
  double gamma = 0.5;
  int j = 0;
  int D = 0;          // max bad-scale count over classified points
  double c0 = 0.0;    // measured geometric constant, good-scale refinements
  double c1 = 0.0;    // measured geometric constant, bad-scale refinements
  int leaf_count = 0;
  int max_family_count = 0;  // families per level, maximum over levels

  double leaf_bound(int k, int m) const {
    double good = c0 * std::pow(gamma, -double(k));
    double bad = c1 * std::pow(gamma, -double(m));
    return std::pow(double(std::max(j, 1)), D) * std::pow(bad, D) * std::pow(good, j - D);
  }

  bool covers(const Vec& x) const {
    double rl = std::pow(gamma, j);
    for (const CoveringNode& n : nodes)
      if (n.level == j && dist(n.center, x) <= rl + 1e-12) return true;
    return false;
  }
};

namespace detail {

/// Greedy farthest-point cover of `pts` by balls of the given radius.
/// Deterministic: starts from the lexicographically smallest point, then
/// repeatedly takes the point farthest from the chosen centers.
inline std::vector<Vec> greedy_cover(const std::vector<Vec>& pts, double radius) {
  std::vector<Vec> centers;
  if (pts.empty()) return centers;
  size_t first = 0;
  for (size_t i = 1; i < pts.size(); ++i) {
    for (int c = 0; c < pts[i].n; ++c) {
      if (pts[i][c] < pts[first][c] - 1e-15) { first = i; break; }
      if (pts[i][c] > pts[first][c] + 1e-15) break;
    }
  }
  std::vector<double> d(pts.size(), std::numeric_limits<double>::infinity());
  size_t next = first;
  while (true) {
    centers.push_back(pts[next]);
    double worst = 0.0;
    size_t arg = 0;
    for (size_t i = 0; i < pts.size(); ++i) {
      d[i] = std::min(d[i], dist(pts[i], pts[next]));
      if (d[i] > worst) { worst = d[i]; arg = i; }
    }
    if (worst <= radius) break;
    next = arg;
  }
  return centers;
}

}  // namespace detail

/// Inductive refinement of the classified stratum: level-a balls of radius
/// gamma^a per (parent ball, tuple prefix) family, greedy minimal covers.
inline CoveringTree build_covering(const std::vector<StrataLabel>& labels, int k, int j,
                                   double gamma) {
  CoveringTree tree;
  tree.gamma = gamma;
  tree.j = j;

  // stratum points with their tuples
  std::vector<const StrataLabel*> pts;
  for (const StrataLabel& l : labels) {
    if (int(l.tuple.size()) < j) continue;
    if (size_t(k) < l.in_stratum.size() && l.in_stratum[size_t(k)][size_t(j - 1)]) {
      pts.push_back(&l);
      tree.D = std::max(tree.D, l.bad_scales());
    }
  }

  tree.nodes.push_back(CoveringNode{Vec::zero(labels.empty() ? 3 : labels[0].x.n), 1.0, 0, -1, ""});
  if (pts.empty()) {
    tree.leaf_count = 0;
    return tree;
  }

  std::vector<int> assignment(pts.size(), 0);  // current covering ball per point
  double max_good = 0.0, max_bad = 0.0;
  for (int a = 1; a <= j; ++a) {
    double ra = std::pow(gamma, a);
    // group points by (parent ball, tuple prefix of length a)
    std::map<std::pair<int, std::string>, std::vector<size_t>> fam;
    for (size_t i = 0; i < pts.size(); ++i) {
      std::string prefix;
      for (int t = 0; t < a; ++t) prefix.push_back(char('0' + pts[i]->tuple[size_t(t)]));
      fam[{assignment[i], prefix}].push_back(i);
    }
    int families = 0;
    for (const auto& [key, members] : fam) {
      ++families;
      std::vector<Vec> coords;
      coords.reserve(members.size());
      for (size_t i : members) coords.push_back(pts[i]->x);
      std::vector<Vec> centers = detail::greedy_cover(coords, ra);
      const bool bad_scale = key.second.back() == '1';
      double& slot = bad_scale ? max_bad : max_good;
      slot = std::max(slot, double(centers.size()));
      std::vector<int> ids;
      for (const Vec& c : centers) {
        ids.push_back(int(tree.nodes.size()));
        tree.nodes.push_back(CoveringNode{c, ra, a, key.first, key.second});
      }
      for (size_t i : members) {
        // nearest chosen center (all within ra by construction)
        int best = ids[0];
        double bd = dist(pts[i]->x, tree.nodes[size_t(ids[0])].center);
        for (int id : ids) {
          double dd = dist(pts[i]->x, tree.nodes[size_t(id)].center);
          if (dd < bd) { bd = dd; best = id; }
        }
        assignment[i] = best;
      }
    }
    tree.max_family_count = std::max(tree.max_family_count, families);
  }
  for (const CoveringNode& n : tree.nodes)
    if (n.level == j) ++tree.leaf_count;
  // measured constants, normalized by the lemma's geometric factors
  const int m = labels[0].x.n;
  tree.c1 = max_bad * std::pow(gamma, double(m));
  tree.c0 = max_good * std::pow(gamma, double(k));
  if (tree.D == 0) tree.c1 = std::max(tree.c1, 1.0);
  if (tree.D >= j) tree.c0 = std::max(tree.c0, 1.0);
  return tree;
}

// ---------------------------------------------------------------------------
// Regularity scale
// ---------------------------------------------------------------------------

struct RegOptions {
  double alpha = 0.25;
  int max_pairs = 10000;
  double norm_cap = 1.0;  // threshold defining r_f
};

/// The scale-weighted C^{1,alpha} quantity
///   ||f||_{x,r} = r sup_{B_r(x)} |grad f| + r^{1+alpha} [grad f]_{alpha, B_r(x)}
/// with the Holder seminorm estimated over a deterministic pair subsample.
inline double map_norm(const DiscreteMap& f, const Vec& x, double r, const RegOptions& opt) {
  const Lattice& L = f.lattice();
  std::vector<Vec> pos;
  std::vector<GradMat> grads;
  double sup = 0.0;
  L.for_each_in_ball(x, r, [&](int64_t i, const Vec& y) {
    if (dist(y, x) > r) return;
    GradMat g = gradient(f.f, i);
    sup = std::max(sup, g.frob2());
    pos.push_back(y);
    grads.push_back(g);
  });
  if (pos.empty()) return 0.0;
  double norm = r * std::sqrt(sup);
  if (norm > opt.norm_cap) return norm;  // sup term alone already decides

  double holder = 0.0;
  const size_t n = pos.size();
  auto consider = [&](size_t a, size_t b) {
    const GradMat& ga = grads[a];
    const GradMat& gb = grads[b];
    double diff2 = 0.0;
    for (int i = 0; i < ga.m; ++i)
      for (int c = 0; c < ga.ncomp; ++c) {
        double d = ga.g[size_t(i)][size_t(c)] - gb.g[size_t(i)][size_t(c)];
        diff2 += d * d;
      }
    double sep = dist(pos[a], pos[b]);
    if (sep < 1e-15) return;
    holder = std::max(holder, std::sqrt(diff2) / std::pow(sep, opt.alpha));
  };
  const size_t total_pairs = n * (n - 1) / 2;
  if (total_pairs <= size_t(opt.max_pairs)) {
    for (size_t a = 0; a < n; ++a)
      for (size_t b = a + 1; b < n; ++b) consider(a, b);
  } else {
    uint64_t state = 0x9e3779b97f4a7c15ull ^ (uint64_t(n) << 32);  // fixed seed: deterministic
    auto next = [&state]() {
      state ^= state << 13;
      state ^= state >> 7;
      state ^= state << 17;
      return state;
    };
    for (int s = 0; s < opt.max_pairs; ++s) {
      size_t a = size_t(next() % n), b = size_t(next() % n);
      if (a != b) consider(a, b);
    }
  }
  return norm + std::pow(r, 1.0 + opt.alpha) * holder;
}

/// r_f(x) = sup { r : ||f||_{x,r} <= 1 }, by bisection on the monotone norm,
/// capped at the distance to the domain boundary.
inline double regularity_scale_at(const DiscreteMap& f, const Vec& x, const RegOptions& opt) {
  const Lattice& L = f.lattice();
  double r_max = std::max(1.0 - x.norm(), L.h);
  double lo = L.h, hi = r_max;
  if (map_norm(f, x, hi, opt) <= opt.norm_cap) return r_max;
  if (map_norm(f, x, lo, opt) > opt.norm_cap) return 0.0;
  for (int it = 0; it < 40 && hi - lo > 1e-3; ++it) {
    double mid = 0.5 * (lo + hi);
    (map_norm(f, x, mid, opt) <= opt.norm_cap ? lo : hi) = mid;
  }
  return lo;
}

// ---------------------------------------------------------------------------
// Minkowski-content fit
// ---------------------------------------------------------------------------

struct MinkowskiFit {
  double exponent = 0.0;   // least-squares slope of log Vol(B_r(S)) vs log r
  double intercept = 0.0;
  bool ok = false;
  std::vector<double> radii;
  std::vector<double> volumes;
};

/// Volume of the r-neighborhood of S inside B_1, by lattice cell counting.
inline double neighborhood_volume(const std::vector<Vec>& S, double r, const Lattice& lat) {
  KahanSum vol;
  Vec origin = Vec::zero(lat.m);
  const int64_t n = lat.node_count();
  for (int64_t i = 0; i < n; ++i) {
    Vec x = lat.coord(i);
    double w = lat.clip_weight(x, origin, 1.0);
    if (w <= 0) continue;
    for (const Vec& s : S) {
      if (dist(x, s) <= r) {
        vol.add(w);
        break;
      }
    }
  }
  return vol.value();
}

inline MinkowskiFit minkowski_fit(const std::vector<Vec>& S, const std::vector<double>& radii,
                                  const Lattice& lat) {
  MinkowskiFit fit;
  fit.radii = radii;
  if (S.empty()) return fit;  // exponent undefined, ok stays false
  if (radii.size() < 4) throw Error("minkowski_fit: need at least 4 radii");
  double rmin = *std::min_element(radii.begin(), radii.end());
  double rmax = *std::max_element(radii.begin(), radii.end());
  if (rmax / rmin < 10.0 - 1e-9) throw Error("minkowski_fit: radii must span a decade");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (double r : radii) {
    double v = neighborhood_volume(S, r, lat);
    fit.volumes.push_back(v);
    if (v <= 0) return fit;
    double lx = std::log(r), ly = std::log(v);
    sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
  }
  double n = double(radii.size());
  fit.exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.intercept = (sy - fit.exponent * sx) / n;
  fit.ok = true;
  return fit;
}

// ---------------------------------------------------------------------------
// Isolated-singularity census
// ---------------------------------------------------------------------------

struct CensusCluster {
  Vec center;         // gradient-weighted centroid of the cluster
  int size = 0;       // flagged nodes
  bool pinched = false;
  bool unresolved_pair = false;
};

struct CensusReport {
  std::vector<CensusCluster> clusters;
  double r_cut = 0.08;
  bool borderline = true;  // m == floor(p) + 1
  int count() const { return int(clusters.size()); }
};

/// Clusters of nodes in B_{0.55} where the regularity scale drops below r_cut
/// (i.e. ||f||_{x, r_cut} > 1), connected by face adjacency.
inline CensusReport singularity_census(const DiscreteMap& f, double p, double r_cut,
                                       const RegOptions& opt = RegOptions{}) {
  const Lattice& L = f.lattice();
  CensusReport rep;
  rep.r_cut = r_cut;
  rep.borderline = (L.m == int(std::floor(p)) + 1);

  std::vector<int64_t> flagged;
  std::vector<char> flag(size_t(L.node_count()), 0);
  const int64_t n = L.node_count();
  for (int64_t i = 0; i < n; ++i) {
    Vec x = L.coord(i);
    if (x.norm() > 0.55) continue;
    if (map_norm(f, x, r_cut, opt) > opt.norm_cap) {
      flag[size_t(i)] = 1;
      flagged.push_back(i);
    }
  }

  // connected components over face adjacency
  std::vector<char> seen(size_t(L.node_count()), 0);
  DensityField df = density_field(f, p);
  for (int64_t seed : flagged) {
    if (seen[size_t(seed)]) continue;
    std::vector<int64_t> stack{seed}, comp;
    seen[size_t(seed)] = 1;
    while (!stack.empty()) {
      int64_t cur = stack.back();
      stack.pop_back();
      comp.push_back(cur);
      Lattice::IVec iv = L.multi_index(cur);
      for (int ax = 0; ax < L.m; ++ax) {
        for (int s : {-1, 1}) {
          Lattice::IVec nb = iv;
          nb[size_t(ax)] += s;
          if (!L.in_box(nb)) continue;
          int64_t ni = L.index(nb);
          if (flag[size_t(ni)] && !seen[size_t(ni)]) {
            seen[size_t(ni)] = 1;
            stack.push_back(ni);
          }
        }
      }
    }
    CensusCluster cl;
    cl.size = int(comp.size());
    Vec acc = Vec::zero(L.m);
    double wsum = 0.0;
    for (int64_t i : comp) {
      double w = std::max(df.d[size_t(i)], 1e-12);
      acc += L.coord(i) * w;
      wsum += w;
    }
    cl.center = acc * (1.0 / wsum);
    rep.clusters.push_back(cl);
  }

  // annulus pinching and resolution flags
  for (size_t a = 0; a < rep.clusters.size(); ++a) {
    CensusCluster& cl = rep.clusters[a];
    double r_in = std::max(theta_floor(L), 0.5 * r_cut);
    double r_out = std::min(0.25, 1.0 - cl.center.norm() - 1e-9);
    if (r_out > r_in) {
      double drop = theta(df, cl.center, r_out) - theta(df, cl.center, r_in);
      bool other_inside = false;
      for (size_t b = 0; b < rep.clusters.size(); ++b) {
        if (b == a) continue;
        double d = dist(rep.clusters[b].center, cl.center);
        if (d > r_in && d < r_out) other_inside = true;
      }
      cl.pinched = drop < 0.1 * std::max(theta(df, cl.center, r_out), 1.0) && !other_inside;
    }
    for (size_t b = 0; b < rep.clusters.size(); ++b) {
      if (b != a && dist(rep.clusters[b].center, cl.center) < 4.0 * L.h)
        cl.unresolved_pair = true;
    }
  }
  return rep;
}

}  // namespace phl

#endif  // PHL_STRATIFICATION_HPP
