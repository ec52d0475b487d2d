#ifndef PHL_TARGET_HPP
#define PHL_TARGET_HPP

#include <cmath>
#include <string>

#include "phl/core.hpp"

namespace phl {

/// Target manifold: round sphere S^{n-1} in R^n, or a flat R^N used only as a
/// linear test target (p-harmonic maps into it are componentwise p-Laplace).
struct Target {
  enum class Kind { Sphere, Flat };
  Kind kind = Kind::Sphere;
  int ambient = 3;

  static Target sphere(int n) { return Target{Kind::Sphere, n}; }
  static Target flat(int n) { return Target{Kind::Flat, n}; }

  /// Parses "sphere:n" or "flat:N".
  static Target parse(const std::string& s) {
    auto colon = s.find(':');
    if (colon == std::string::npos) throw Error("target spec must be kind:dim, got " + s);
    const std::string kind = s.substr(0, colon);
    const int dim = std::stoi(s.substr(colon + 1));
    if (dim < 1 || dim > 4) throw Error("target ambient dimension out of range: " + s);
    if (kind == "sphere") return sphere(dim);
    if (kind == "flat") return flat(dim);
    throw Error("unknown target kind: " + s);
  }

  std::string name() const {
    return (kind == Kind::Sphere ? "sphere:" : "flat:") + std::to_string(ambient);
  }

  /// Nearest-point projection onto the target.
  Vec project(const Vec& v) const {
    if (kind == Kind::Flat) return v;
    double r = v.norm();
    if (r == 0.0) throw ProjectionUndefined("projection-undefined: zero vector on sphere target");
    if (std::abs(r - 1.0) <= 4e-16) return v;  // already on the sphere: exact idempotence
    return v * (1.0 / r);
  }

  /// Orthogonal projection of an ambient vector onto the tangent space at `point`.
  Vec tangent_project(const Vec& point, const Vec& v) const {
    if (kind == Kind::Flat) return v;
    return v - point * v.dot(point);
  }

  /// Chordal (ambient Euclidean) distance between target points.
  double distance(const Vec& a, const Vec& b) const { return dist(a, b); }
};

}  // namespace phl

#endif  // PHL_TARGET_HPP
