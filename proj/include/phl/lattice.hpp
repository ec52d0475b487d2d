#ifndef PHL_LATTICE_HPP
#define PHL_LATTICE_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "phl/core.hpp"
#include "phl/target.hpp"

namespace phl {

/// Regular Cartesian grid over the bounding box of B_1(0).
///
/// Nodes sit at coordinates k*h per axis with |k| <= half, half = round(1/h),
/// so the grid always covers [-1,1]^m exactly and node coordinates are
/// reproducible bit-exactly from (m, h, index). Ball-restricted quadrature
/// weights are assigned per node by cell clipping; box nodes outside B_1(0)
/// carry weight zero but remain addressable (they hold ghost/extension values
/// used by stencils and interpolation near the boundary).
struct Lattice {
  int m = 3;
  double h = 1.0 / 32.0;
  int half = 32;

  Lattice() = default;
  Lattice(int m_, double h_) : m(m_), h(h_) {
    if (m < 2 || m > 3) throw Error("lattice dimension must be 2 or 3");
    if (!(h > 0) || h > 0.5) throw Error("lattice resolution h out of range");
    half = static_cast<int>(std::ceil(1.0 / h - 1e-12));
  }

  int n_axis() const { return 2 * half + 1; }
  int64_t node_count() const {
    int64_t n = n_axis();
    int64_t c = 1;
    for (int i = 0; i < m; ++i) c *= n;
    return c;
  }
  /// Coordinate of the largest node along one axis (>= 1).
  double box_radius() const { return half * h; }

  using IVec = std::array<int, 3>;

  int64_t index(const IVec& iv) const {
    const int64_t n = n_axis();
    int64_t idx = 0;
    for (int i = 0; i < m; ++i) idx = idx * n + (iv[size_t(i)] + half);
    return idx;
  }
  IVec multi_index(int64_t idx) const {
    const int64_t n = n_axis();
    IVec iv{0, 0, 0};
    for (int i = m - 1; i >= 0; --i) {
      iv[size_t(i)] = static_cast<int>(idx % n) - half;
      idx /= n;
    }
    return iv;
  }
  bool in_box(const IVec& iv) const {
    for (int i = 0; i < m; ++i)
      if (iv[size_t(i)] < -half || iv[size_t(i)] > half) return false;
    return true;
  }
  Vec coord(const IVec& iv) const {
    Vec x = Vec::zero(m);
    for (int i = 0; i < m; ++i) x[i] = iv[size_t(i)] * h;
    return x;
  }
  Vec coord(int64_t idx) const { return coord(multi_index(idx)); }

  double cell_volume() const {
    double v = 1;
    for (int i = 0; i < m; ++i) v *= h;
    return v;
  }

  /// Quadrature weight of the node's cell clipped to the ball B_r(c):
  /// full weight deep inside, linear ramp of width h through the sphere.
  double clip_fraction(const Vec& x, const Vec& c, double r) const {
    double d = dist(x, c);
    return std::clamp(0.5 + (r - d) / h, 0.0, 1.0);
  }
  double clip_weight(const Vec& x, const Vec& c, double r) const {
    return cell_volume() * clip_fraction(x, c, r);
  }

  /// Visits every node whose cell can intersect B_r(c).
  template <typename Fn>
  void for_each_in_ball(const Vec& c, double r, Fn&& fn) const {
    IVec lo{}, hi{};
    for (int i = 0; i < m; ++i) {
      lo[size_t(i)] = std::max(-half, static_cast<int>(std::floor((c[i] - r) / h)) - 1);
      hi[size_t(i)] = std::min(half, static_cast<int>(std::ceil((c[i] + r) / h)) + 1);
      if (lo[size_t(i)] > hi[size_t(i)]) return;
    }
    IVec iv = lo;
    while (true) {
      fn(index(iv), coord(iv));
      int i = m - 1;
      while (i >= 0) {
        if (++iv[size_t(i)] <= hi[size_t(i)]) break;
        iv[size_t(i)] = lo[size_t(i)];
        --i;
      }
      if (i < 0) break;
    }
  }
};

/// Node-sampled field with `ncomp` real components per node.
struct Field {
  Lattice lat;
  int ncomp = 1;
  std::vector<double> v;

  Field() = default;
  Field(const Lattice& l, int nc) : lat(l), ncomp(nc), v(size_t(l.node_count()) * size_t(nc), 0.0) {}

  double* at(int64_t idx) { return v.data() + size_t(idx) * size_t(ncomp); }
  const double* at(int64_t idx) const { return v.data() + size_t(idx) * size_t(ncomp); }

  Vec value(int64_t idx) const {
    Vec out = Vec::zero(ncomp);
    const double* p = at(idx);
    for (int c = 0; c < ncomp; ++c) out[c] = p[c];
    return out;
  }
  void set(int64_t idx, const Vec& val) {
    double* p = at(idx);
    for (int c = 0; c < ncomp; ++c) p[c] = val[c];
  }

  bool all_finite() const {
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  }

  /// Multilinear interpolation. Exact on multilinear fields.
  Vec interp(const Vec& x) const {
    const int m = lat.m;
    Lattice::IVec base{};
    double frac[3] = {0, 0, 0};
    for (int i = 0; i < m; ++i) {
      double t = x[i] / lat.h;
      double fl = std::floor(t);
      int b = static_cast<int>(fl);
      double f = t - fl;
      if (b < -lat.half || b >= lat.half + 1) throw OutOfDomain("interp point outside lattice box");
      if (b == lat.half) {  // exactly on the upper face
        b -= 1;
        f = 1.0;
      }
      base[size_t(i)] = b;
      frac[i] = f;
    }
    Vec out = Vec::zero(ncomp);
    const int corners = 1 << m;
    for (int ci = 0; ci < corners; ++ci) {
      Lattice::IVec iv = base;
      double w = 1.0;
      for (int i = 0; i < m; ++i) {
        if (ci & (1 << i)) {
          iv[size_t(i)] += 1;
          w *= frac[i];
        } else {
          w *= 1.0 - frac[i];
        }
      }
      const double* p = at(lat.index(iv));
      for (int c = 0; c < ncomp; ++c) out[c] += w * p[c];
    }
    return out;
  }
};

/// m x ncomp matrix of partial derivatives (row = domain axis).
struct GradMat {
  std::array<std::array<double, 4>, 3> g{};
  int m = 0, ncomp = 0;

  double frob2() const {
    double s = 0;
    for (int i = 0; i < m; ++i)
      for (int c = 0; c < ncomp; ++c) s += g[size_t(i)][size_t(c)] * g[size_t(i)][size_t(c)];
    return s;
  }
  /// Gram entry sum_a d_i f^a d_j f^a.
  double gram(int i, int j) const {
    double s = 0;
    for (int c = 0; c < ncomp; ++c) s += g[size_t(i)][size_t(c)] * g[size_t(j)][size_t(c)];
    return s;
  }
};

/// Finite-difference gradient: central where both neighbors exist in the box,
/// one-sided on the box faces. O(h^2) consistent in the interior.
inline GradMat gradient(const Field& f, int64_t idx) {
  if (idx < 0 || idx >= f.lat.node_count()) throw OutOfDomain("gradient: node index out of range");
  const Lattice& L = f.lat;
  GradMat out;
  out.m = L.m;
  out.ncomp = f.ncomp;
  Lattice::IVec iv = L.multi_index(idx);
  for (int i = 0; i < L.m; ++i) {
    Lattice::IVec up = iv, dn = iv;
    up[size_t(i)] += 1;
    dn[size_t(i)] -= 1;
    const bool has_up = up[size_t(i)] <= L.half;
    const bool has_dn = dn[size_t(i)] >= -L.half;
    const double* pu = has_up ? f.at(L.index(up)) : nullptr;
    const double* pd = has_dn ? f.at(L.index(dn)) : nullptr;
    const double* p0 = f.at(idx);
    for (int c = 0; c < f.ncomp; ++c) {
      double d;
      if (has_up && has_dn)
        d = (pu[c] - pd[c]) / (2.0 * L.h);
      else if (has_up)
        d = (pu[c] - p0[c]) / L.h;
      else
        d = (p0[c] - pd[c]) / L.h;
      out.g[size_t(i)][size_t(c)] = d;
    }
  }
  return out;
}

/// A lattice-sampled map into a target manifold.
struct DiscreteMap {
  Field f;
  Target target;

  DiscreteMap() = default;
  DiscreteMap(const Lattice& l, const Target& t) : f(l, t.ambient), target(t) {}

  const Lattice& lattice() const { return f.lat; }
};

/// Blow-up resampling: out(y) = f(center + radius * y) on `target_lat`.
inline Field resample(const Field& f, const Vec& center, double radius, const Lattice& target_lat) {
  if (target_lat.m != f.lat.m) throw Error("resample: dimension mismatch");
  Field out(target_lat, f.ncomp);
  const double box = f.lat.box_radius();
  for (int i = 0; i < f.lat.m; ++i)
    if (std::abs(center[i]) + radius * target_lat.box_radius() > box + 1e-12)
      throw OutOfDomain("blowup-out-of-domain");
  const int64_t n = target_lat.node_count();
  for (int64_t idx = 0; idx < n; ++idx) {
    Vec y = target_lat.coord(idx);
    out.set(idx, f.interp(center + radius * y));
  }
  return out;
}

}  // namespace phl

#endif  // PHL_LATTICE_HPP
