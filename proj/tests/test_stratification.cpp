#include <catch2/catch_amalgamated.hpp>

#include "phl/stratification.hpp"

using namespace phl;

namespace {

std::vector<Vec> half_ball_grid(int m, double spacing) {
  std::vector<Vec> pts;
  int n = int(0.5 / spacing);
  if (m == 2) {
    for (int a = -n; a <= n; ++a)
      for (int b = -n; b <= n; ++b) {
        Vec x(a * spacing, b * spacing);
        if (x.norm() <= 0.5) pts.push_back(x);
      }
  } else {
    for (int a = -n; a <= n; ++a)
      for (int b = -n; b <= n; ++b)
        for (int c = -n; c <= n; ++c) {
          Vec x(a * spacing, b * spacing, c * spacing);
          if (x.norm() <= 0.5) pts.push_back(x);
        }
  }
  return pts;
}

}  // namespace

TEST_CASE("count_bad_scales on explicit profiles") {
  ScaleProfile flat;
  flat.radii = {0.5, 0.25, 0.125, 0.0625, 0.03125};
  flat.thetas = {8.0, 8.0, 8.0, 8.0, 8.0};
  CHECK(count_bad_scales(flat, 0.1, 2) == 0);

  // total drop 0.5 spread over one step: the A = 2 window sees it twice
  ScaleProfile step;
  step.radii = flat.radii;
  step.thetas = {1.0, 1.0, 0.5, 0.5, 0.5};
  CHECK(count_bad_scales(step, 0.1, 2) == 2);
  CHECK(count_bad_scales(step, 0.1, 2) <= int(2 * 0.5 / 0.1) + 1);
  CHECK(count_bad_scales(step, 0.6, 2) == 0);
  CHECK_THROWS_AS(count_bad_scales(step, 0.1, 0), Error);
}

TEST_CASE("x/|x| theta ladder has zero bad scales at the origin") {
  Lattice lat(3, 1.0 / 32.0);
  DensityField df = density_field(radial_singular(3), lat, 2.0);
  ScaleProfile sp = scale_profile(df, Vec::zero(3), 0.5, 0.5);
  CHECK(count_bad_scales(sp, 0.05 * std::max(sp.thetas[0], 1.0), 2) == 0);
}

TEST_CASE("strata of x/|x|: origin is 0-symmetric but in S^0 at all depths") {
  MapSource rad = source_of(radial_singular(3));
  StrataConfig cfg;
  StrataLabel lab = classify_point(rad, Vec::zero(3), cfg);
  REQUIRE(int(lab.tuple.size()) == cfg.j_max);
  for (int b : lab.tuple) CHECK(b == 0);  // homogeneous at every scale
  for (int j = 0; j < cfg.j_max; ++j) CHECK(lab.in_stratum[0][size_t(j)] == 1);
  CHECK(lab.bad_scales() == 0);
}

TEST_CASE("constant maps belong to no stratum") {
  MapSource cst = source_of(constant_map(3, Target::sphere(3)));
  StrataConfig cfg;
  StrataLabel lab = classify_point(cst, Vec(0.2, 0.0, 0.1), cfg);
  for (int k = 0; k < 3; ++k)
    for (char b : lab.in_stratum[size_t(k)]) CHECK(b == 0);
}

TEST_CASE("1-symmetric synthetic: axis points in S^1 but not S^0") {
  MapSource ax = source_of(axis_equator_map());
  StrataConfig cfg;
  StrataLabel on_axis = classify_point(ax, Vec(0.25, 0.0, 0.0), cfg);
  CHECK(on_axis.in_stratum[0].back() == 0);  // blow-ups are 1-symmetric
  CHECK(on_axis.in_stratum[1].back() == 1);  // but never 2-symmetric
  StrataLabel off_axis = classify_point(ax, Vec(0.0, 0.3, 0.1), cfg);
  CHECK(off_axis.in_stratum[1].back() == 0);  // becomes constant at depth
}

TEST_CASE("membership is monotone toward coarser scales") {
  MapSource rad = source_of(radial_singular(3));
  StrataConfig cfg;
  for (const Vec& x : {Vec::zero(3), Vec(0.1, 0.05, 0.0), Vec(0.3, -0.2, 0.1)}) {
    StrataLabel lab = classify_point(rad, x, cfg);
    for (int k = 0; k < 3; ++k)
      for (size_t j = 1; j < lab.in_stratum[size_t(k)].size(); ++j)
        if (lab.in_stratum[size_t(k)][j]) CHECK(lab.in_stratum[size_t(k)][j - 1]);
  }
}

TEST_CASE("covering of the point stratum of x/|x|") {
  MapSource rad = source_of(radial_singular(3));
  StrataConfig cfg;
  auto labels = classify_strata(rad, half_ball_grid(3, 1.0 / 8.0), cfg);
  CoveringTree tree = build_covering(labels, 0, cfg.j_max, cfg.gamma);
  double r_leaf = std::pow(cfg.gamma, cfg.j_max);
  // soundness: every classified stratum point lies in a leaf ball
  int members = 0;
  for (const StrataLabel& l : labels) {
    if (!l.in_stratum[0].empty() && l.in_stratum[0].back()) {
      ++members;
      CHECK(tree.covers(l.x));
    }
  }
  CHECK(members >= 1);
  // the singular stratum is one point: leaves cluster at the origin
  for (const CoveringNode& n : tree.nodes)
    if (n.level == tree.j) CHECK(n.center.norm() <= 2.0 * r_leaf);
  CHECK(tree.leaf_count >= 1);
  CHECK(double(tree.leaf_count) <= tree.leaf_bound(0, 3) + 1e-9);
  // bad-scale bound shape: D stays small for an exact cone environment
  CHECK(tree.D <= cfg.j_max);
}

TEST_CASE("empty stratum gives a root-only tree") {
  MapSource cst = source_of(constant_map(3, Target::sphere(3)));
  StrataConfig cfg;
  cfg.j_max = 2;
  auto labels = classify_strata(cst, {Vec::zero(3), Vec(0.2, 0.1, 0.0)}, cfg);
  CoveringTree tree = build_covering(labels, 0, cfg.j_max, cfg.gamma);
  CHECK(tree.leaf_count == 0);
  CHECK(tree.nodes.size() == 1);
}

TEST_CASE("1-symmetric stratum covering grows one-dimensionally") {
  MapSource ax = source_of(axis_equator_map());
  StrataConfig cfg;
  // axis points plus some off-axis noise points
  std::vector<Vec> pts;
  for (int a = -8; a <= 8; ++a) pts.emplace_back(a / 16.0, 0.0, 0.0);
  for (int a = -2; a <= 2; ++a) pts.emplace_back(a / 8.0, 0.25, -0.125);
  auto labels = classify_strata(ax, pts, cfg);
  CoveringTree t2 = build_covering(labels, 1, 2, cfg.gamma);
  CoveringTree t4 = build_covering(labels, 1, 4, cfg.gamma);
  CHECK(t2.leaf_count >= 1);
  // one-dimensional centers: covering the axis segment with gamma^4-balls
  // takes O(gamma^{-4}) leaves, far below the gamma^{-8} area scaling
  CHECK(t4.leaf_count >= t2.leaf_count);
  CHECK(t4.leaf_count >= 4);
  CHECK(t4.leaf_count <= 24);
  for (const CoveringNode& n : t4.nodes)
    if (n.level == t4.j) CHECK(std::hypot(n.center[1], n.center[2]) <= 2.0 * std::pow(cfg.gamma, 4));
}

TEST_CASE("map norm is monotone in the radius") {
  Lattice lat(2, 1.0 / 64.0);
  DiscreteMap f = sample(bubble(3.0, Vec(0.1, 0.0)), lat);
  RegOptions opt;
  for (const Vec& x : {Vec(0.0, 0.0), Vec(0.25, -0.2), Vec(0.4, 0.3)}) {
    double prev = 0.0;
    for (double r : {0.05, 0.1, 0.2, 0.4}) {
      double v = map_norm(f, x, r, opt);
      CHECK(v >= prev - 1e-12);
      prev = v;
    }
  }
}

TEST_CASE("regularity scale of a linear flat-target map is 1/|grad|") {
  Lattice lat(2, 1.0 / 32.0);
  DiscreteMap f(lat, Target::flat(1));
  for (int64_t i = 0; i < lat.node_count(); ++i) f.f.at(i)[0] = 4.0 * lat.coord(i)[0];
  RegOptions opt;
  CHECK(regularity_scale_at(f, Vec::zero(2), opt) == Catch::Approx(0.25).epsilon(0.02));
  // constant map: capped at the distance to the boundary
  DiscreteMap c = sample(constant_map(2, Target::sphere(3)), lat);
  CHECK(regularity_scale_at(c, Vec::zero(2), opt) == Catch::Approx(1.0));
  CHECK(regularity_scale_at(c, Vec(0.3, 0.0), opt) == Catch::Approx(0.7));
}

TEST_CASE("regularity scale of x/|x| grows with the distance to the singularity") {
  Lattice lat(3, 1.0 / 32.0);
  DiscreteMap f = sample(radial_singular(3), lat);
  RegOptions opt;
  double r0 = regularity_scale_at(f, Vec::zero(3), opt);
  double r1 = regularity_scale_at(f, Vec(0.25, 0.0, 0.0), opt);
  double r2 = regularity_scale_at(f, Vec(0.5, 0.0, 0.0), opt);
  CHECK(r0 <= lat.h);
  CHECK(r1 > r0);
  CHECK(r2 > r1);
}

TEST_CASE("minkowski exponents of model sets") {
  Lattice lat(3, 1.0 / 64.0);
  std::vector<double> radii = {0.03, 0.06, 0.12, 0.2, 0.3};
  MinkowskiFit point_fit = minkowski_fit({Vec::zero(3)}, radii, lat);
  REQUIRE(point_fit.ok);
  CHECK(point_fit.exponent == Catch::Approx(3.0).margin(0.2));

  std::vector<Vec> segment;
  for (int a = -16; a <= 16; ++a) segment.emplace_back(a / 32.0, 0.0, 0.0);
  // the spherical end caps of the tube bias the slope upward at the larger
  // radii, hence the wider margin
  MinkowskiFit seg_fit = minkowski_fit(segment, radii, lat);
  REQUIRE(seg_fit.ok);
  CHECK(seg_fit.exponent == Catch::Approx(2.0).margin(0.3));
  CHECK(point_fit.exponent > seg_fit.exponent + 0.5);

  MinkowskiFit empty = minkowski_fit({}, radii, lat);
  CHECK_FALSE(empty.ok);
  CHECK_THROWS_AS(minkowski_fit({Vec::zero(3)}, {0.1, 0.2, 0.3}, lat), Error);
  CHECK_THROWS_AS(minkowski_fit({Vec::zero(3)}, {0.1, 0.15, 0.2, 0.3}, lat), Error);
}

TEST_CASE("census finds the lone singularity of x/|x|") {
  Lattice lat(3, 1.0 / 32.0);
  DiscreteMap f = sample(radial_singular(3), lat);
  CensusReport rep = singularity_census(f, 2.0, 0.08);
  CHECK(rep.borderline);
  REQUIRE(rep.count() == 1);
  CHECK(rep.clusters[0].center.norm() < 0.05);
  CHECK_FALSE(rep.clusters[0].unresolved_pair);
  // stable under r_cut perturbation of +/- 20%
  CHECK(singularity_census(f, 2.0, 0.08 * 1.2).count() == 1);
  CHECK(singularity_census(f, 2.0, 0.08 * 0.8).count() == 1);
}

TEST_CASE("census of the two-bubble map finds both spikes") {
  Lattice lat(2, 1.0 / 128.0);
  DiscreteMap f = sample(two_bubble(8.0), lat);
  CensusReport rep = singularity_census(f, 2.0, 0.08);
  CHECK_FALSE(rep.borderline);  // m = 2, p = 2 is not the borderline setup
  REQUIRE(rep.count() == 2);
  // centroids sit slightly inside the true spikes: the census window B_0.55
  // clips the outer flank of each flagged region
  std::vector<double> xs = {rep.clusters[0].center[0], rep.clusters[1].center[0]};
  std::sort(xs.begin(), xs.end());
  CHECK(xs[0] == Catch::Approx(-0.4).margin(0.08));
  CHECK(xs[1] == Catch::Approx(0.4).margin(0.08));
  CHECK(xs[0] + xs[1] == Catch::Approx(0.0).margin(0.02));
}

TEST_CASE("census of a constant map is empty") {
  Lattice lat(3, 1.0 / 32.0);
  DiscreteMap f = sample(constant_map(3, Target::sphere(3)), lat);
  CHECK(singularity_census(f, 2.0, 0.08).count() == 0);
}

TEST_CASE("inclusion chain: detected singular cells sit inside B_r(f)") {
  Lattice lat(3, 1.0 / 32.0);
  DiscreteMap f = sample(radial_singular(3), lat);
  RegOptions opt;
  CensusReport rep = singularity_census(f, 2.0, 0.08, opt);
  REQUIRE(rep.count() == 1);
  // cluster center has regularity scale below r_cut...
  CHECK(regularity_scale_at(f, rep.clusters[0].center, opt) < 0.08);
  // ...and fails 1-symmetry at some resolved scale >= r_cut
  MapSource src = source_of(f);
  double worst = 0.0;
  for (double s : {0.25, 0.5}) {
    worst = std::max(worst, k_symmetric_defect(src, rep.clusters[0].center, s, 1, 2.0,
                                               SymmetryOptions::classify())
                                .defect);
  }
  CHECK(worst >= 0.02);
}
