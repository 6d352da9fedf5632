#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "rapdb/linalg.hpp"

namespace rapdb {

// ---------------------------------------------------------------------------
// Primal sets
// ---------------------------------------------------------------------------

// Componentwise bounds; entries may be infinite.
struct Box {
  Vector lower;
  Vector upper;
};

struct Ball {
  Vector center;
  double radius = 1.0;
};

// {x >= 0 : sum(x) = scale}
struct Simplex {
  Eigen::Index dim = 0;
  double scale = 1.0;
};

// {x >= 0 : <direction, x> = 0}
struct NonnegWithLinearEq {
  Vector direction;
};

struct SimpleSet {
  std::variant<Box, Ball, Simplex, NonnegWithLinearEq> kind;

  static SimpleSet box(Vector lower, Vector upper);
  static SimpleSet uniform_box(Eigen::Index n, double lo, double hi);
  static SimpleSet free(Eigen::Index n);
  static SimpleSet ball(Vector center, double radius);
  static SimpleSet simplex(Eigen::Index n, double scale = 1.0);
  static SimpleSet nonneg_with_linear_eq(Vector direction);

  Eigen::Index dim() const;
  // Throws InputError on inconsistent descriptors.
  void validate() const;
  bool contains(const Vector& x, double tol = 1e-9) const;
  bool bounded() const;

  // Smallest ball {x : ||x - center|| <= radius} this routine knows encloses
  // the set, when the set is bounded.
  struct Enclosure {
    Vector center;
    double radius;
  };
  std::optional<Enclosure> enclosure() const;

  // argmin_{u in set} <c, u>, available for bounded sets.
  std::optional<Vector> linear_minimizer(const Vector& c) const;
};

// Euclidean projection onto the set.
Vector project_set(const SimpleSet& s, const Vector& w);

// ---------------------------------------------------------------------------
// Cones
// ---------------------------------------------------------------------------

struct NonnegOrthant {
  Eigen::Index dim = 0;
};

// {(t, u) : t >= ||u||}, first coordinate is t.
struct SecondOrderCone {
  Eigen::Index dim = 0;
};

struct Cone;
struct ProductCone {
  std::vector<Cone> parts;
};

struct Cone {
  std::variant<NonnegOrthant, SecondOrderCone, ProductCone> kind;

  static Cone nonneg(Eigen::Index m) { return Cone{NonnegOrthant{m}}; }
  static Cone soc(Eigen::Index m) { return Cone{SecondOrderCone{m}}; }
  static Cone product(std::vector<Cone> parts) {
    return Cone{ProductCone{std::move(parts)}};
  }

  Eigen::Index dim() const;
  // Both supported base cones are self-dual, so dual() returns a copy.
  Cone dual() const { return *this; }
  bool is_orthant() const;
  bool contains(const Vector& w, double tol = 1e-9) const;
  void validate() const;
};

Vector project_cone(const Cone& c, const Vector& w);
Vector project_dual_cone(const Cone& c, const Vector& w);
// Projection onto -K, the polar of K*.
Vector project_polar_of_dual(const Cone& c, const Vector& w);

// ---------------------------------------------------------------------------
// Dual ball
// ---------------------------------------------------------------------------

struct UnboundedDual {};
struct JointBall {
  double radius;
};
struct SplitBall {
  double radius_v;
  double radius_lambda;
};

struct DualBall {
  std::variant<UnboundedDual, JointBall, SplitBall> kind;

  static DualBall unbounded() { return DualBall{UnboundedDual{}}; }
  static DualBall joint(double b) { return DualBall{JointBall{b}}; }
  static DualBall split(double bv, double bl) { return DualBall{SplitBall{bv, bl}}; }

  bool is_unbounded() const {
    return std::holds_alternative<UnboundedDual>(kind);
  }
  bool contains(const Vector& v, const Vector& lam, double tol = 1e-12) const;
  void validate() const;
};

// Radial scaling onto the ball (in place). Exact for any pair already lying in
// a closed convex cone with apex at the origin, since the ball is centered at
// the apex.
void project_dual_ball(const DualBall& d, Vector& v, Vector& lam);

// ---------------------------------------------------------------------------
// Bregman distances
// ---------------------------------------------------------------------------

// phi(x) = 0.5 ||x||^2; 1-strongly convex with L_phi = 1.
struct EuclideanGenerator {
  static double value(const Vector& x) { return 0.5 * x.squaredNorm(); }
  static Vector gradient(const Vector& x) { return x; }
  static constexpr double lipschitz = 1.0;
};

template <typename Generator = EuclideanGenerator>
double bregman(const Vector& x, const Vector& xbar) {
  return Generator::value(x) - Generator::value(xbar) -
         Generator::gradient(xbar).dot(x - xbar);
}

template <>
inline double bregman<EuclideanGenerator>(const Vector& x, const Vector& xbar) {
  return 0.5 * (x - xbar).squaredNorm();
}

inline double bregman_p(const Vector& x, const Vector& xbar) {
  return bregman<EuclideanGenerator>(x, xbar);
}

inline double bregman_d(const Vector& v, const Vector& lam, const Vector& vbar,
                        const Vector& lambar) {
  return bregman<EuclideanGenerator>(v, vbar) +
         bregman<EuclideanGenerator>(lam, lambar);
}

}  // namespace rapdb
