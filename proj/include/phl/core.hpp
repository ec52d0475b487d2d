#ifndef PHL_CORE_HPP
#define PHL_CORE_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace phl {

inline constexpr const char* kVersion = "0.1.0";

/// Small fixed-capacity vector for domain/target points (m <= 3, ambient <= 4).
struct Vec {
  std::array<double, 4> a{};
  int n = 0;

  Vec() = default;
  Vec(double x, double y) : a{x, y, 0.0, 0.0}, n(2) {}
  Vec(double x, double y, double z) : a{x, y, z, 0.0}, n(3) {}

  static Vec zero(int dim) {
    Vec v;
    v.n = dim;
    return v;
  }
  static Vec axis(int dim, int i, double s = 1.0) {
    Vec v = zero(dim);
    v.a[static_cast<size_t>(i)] = s;
    return v;
  }

  double& operator[](int i) { return a[static_cast<size_t>(i)]; }
  double operator[](int i) const { return a[static_cast<size_t>(i)]; }

  Vec& operator+=(const Vec& o) {
    for (int i = 0; i < n; ++i) a[size_t(i)] += o[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    for (int i = 0; i < n; ++i) a[size_t(i)] -= o[i];
    return *this;
  }
  Vec& operator*=(double s) {
    for (int i = 0; i < n; ++i) a[size_t(i)] *= s;
    return *this;
  }
  friend Vec operator+(Vec x, const Vec& y) { return x += y; }
  friend Vec operator-(Vec x, const Vec& y) { return x -= y; }
  friend Vec operator*(Vec x, double s) { return x *= s; }
  friend Vec operator*(double s, Vec x) { return x *= s; }

  double dot(const Vec& o) const {
    double s = 0;
    for (int i = 0; i < n; ++i) s += a[size_t(i)] * o[i];
    return s;
  }
  double norm2() const { return dot(*this); }
  double norm() const { return std::sqrt(norm2()); }
  Vec normalized() const {
    double r = norm();
    Vec v = *this;
    if (r > 0) v *= 1.0 / r;
    return v;
  }
};

inline double dist(const Vec& x, const Vec& y) { return (x - y).norm(); }

/// Volume of the unit ball in R^m.
inline double unit_ball_volume(int m) {
  switch (m) {
    case 1: return 2.0;
    case 2: return M_PI;
    case 3: return 4.0 * M_PI / 3.0;
    default: throw std::invalid_argument("unit_ball_volume: m must be in {1,2,3}");
  }
}

/// Compensated accumulator; keeps bulk reductions deterministic and accurate.
struct KahanSum {
  double s = 0.0, c = 0.0;
  void add(double x) {
    double y = x - c;
    double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  double value() const { return s; }
};

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct ScaleUnderresolved : Error {
  explicit ScaleUnderresolved(const std::string& w) : Error(w) {}
};
struct OutOfDomain : Error {
  explicit OutOfDomain(const std::string& w) : Error(w) {}
};
struct ProjectionUndefined : Error {
  explicit ProjectionUndefined(const std::string& w) : Error(w) {}
};
struct Divergence : Error {
  explicit Divergence(const std::string& w) : Error(w) {}
};

/// FNV-1a over a byte string; used for config fingerprints in reports.
inline uint64_t fnv1a(const std::string& s) {
  uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(uint64_t v) {
  static const char* d = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[size_t(i)] = d[v & 0xf];
    v >>= 4;
  }
  return out;
}

}  // namespace phl

#endif  // PHL_CORE_HPP
