#include "rapdb/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rapdb/errors.hpp"

namespace rapdb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vector project_simplex(const Vector& w, double scale) {
  const Eigen::Index n = w.size();
  if (n == 0) return w;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  // Descending by value, ties broken by index.
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return w(a) > w(b); });
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < order.size(); ++j) {
    cumulative += w(order[j]);
    const double candidate = (cumulative - scale) / static_cast<double>(j + 1);
    if (w(order[j]) - candidate > 0.0) theta = candidate;
  }
  return (w.array() - theta).max(0.0).matrix();
}

Vector project_ball(const Vector& w, const Vector& center, double radius) {
  const Vector d = w - center;
  const double nd = d.norm();
  if (nd <= radius) return w;
  return center + (radius / nd) * d;
}

double linear_eq_residual(const Vector& w, const Vector& b, double nu) {
  return b.dot((w - nu * b).cwiseMax(0.0));
}

Vector project_nonneg_linear_eq(const Vector& w, const Vector& b) {
  double min_abs = kInf;
  for (Eigen::Index i = 0; i < b.size(); ++i)
    if (b(i) != 0.0) min_abs = std::min(min_abs, std::abs(b(i)));
  if (!std::isfinite(min_abs)) return w.cwiseMax(0.0);

  const double reach = w.lpNorm<Eigen::Infinity>() / min_abs + 1.0;
  double lo = -reach;  // residual(lo) >= 0
  double hi = reach;   // residual(hi) <= 0
  double nu = 0.0;
  constexpr double kTol = 1e-12;
  for (int it = 0; it < 200; ++it) {
    nu = 0.5 * (lo + hi);
    const double r = linear_eq_residual(w, b, nu);
    if (std::abs(r) <= kTol) break;
    if (r > 0.0)
      lo = nu;
    else
      hi = nu;
    if (hi - lo <= std::numeric_limits<double>::epsilon() * reach) break;
  }
  // The residual is piecewise linear in nu; solve exactly on the active set.
  const Vector shifted = w - nu * b;
  double num = 0.0;
  double den = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (shifted(i) > 0.0) {
      num += b(i) * w(i);
      den += b(i) * b(i);
    }
  }
  if (den > 0.0) {
    const double exact = num / den;
    if (std::abs(linear_eq_residual(w, b, exact)) <
        std::abs(linear_eq_residual(w, b, nu)))
      nu = exact;
  }
  return (w - nu * b).cwiseMax(0.0);
}

Vector project_soc(const Vector& w) {
  const Eigen::Index m = w.size();
  if (m == 0) return w;
  const double t = w(0);
  if (m == 1) return Vector::Constant(1, std::max(t, 0.0));
  const double nu = w.tail(m - 1).norm();
  if (nu <= t) return w;
  if (nu <= -t) return Vector::Zero(m);
  const double scale = 0.5 * (t + nu);
  Vector out(m);
  out(0) = scale;
  out.tail(m - 1) = (scale / nu) * w.tail(m - 1);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// SimpleSet
// ---------------------------------------------------------------------------

SimpleSet SimpleSet::box(Vector lower, Vector upper) {
  return SimpleSet{Box{std::move(lower), std::move(upper)}};
}

SimpleSet SimpleSet::uniform_box(Eigen::Index n, double lo, double hi) {
  return box(Vector::Constant(n, lo), Vector::Constant(n, hi));
}

SimpleSet SimpleSet::free(Eigen::Index n) { return uniform_box(n, -kInf, kInf); }

SimpleSet SimpleSet::ball(Vector center, double radius) {
  return SimpleSet{Ball{std::move(center), radius}};
}

SimpleSet SimpleSet::simplex(Eigen::Index n, double scale) {
  return SimpleSet{Simplex{n, scale}};
}

SimpleSet SimpleSet::nonneg_with_linear_eq(Vector direction) {
  return SimpleSet{NonnegWithLinearEq{std::move(direction)}};
}

Eigen::Index SimpleSet::dim() const {
  return std::visit(
      [](const auto& s) -> Eigen::Index {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Box>) return s.lower.size();
        if constexpr (std::is_same_v<T, Ball>) return s.center.size();
        if constexpr (std::is_same_v<T, Simplex>) return s.dim;
        if constexpr (std::is_same_v<T, NonnegWithLinearEq>) return s.direction.size();
      },
      kind);
}

void SimpleSet::validate() const {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Box>) {
          if (s.lower.size() != s.upper.size())
            throw InputError("box: lower and upper have different lengths");
          for (Eigen::Index i = 0; i < s.lower.size(); ++i)
            if (!(s.lower(i) <= s.upper(i)) || std::isnan(s.lower(i)))
              throw InputError("box: lower > upper at index " + std::to_string(i));
        } else if constexpr (std::is_same_v<T, Ball>) {
          if (!(s.radius > 0.0)) throw InputError("ball: radius must be positive");
        } else if constexpr (std::is_same_v<T, Simplex>) {
          if (!(s.scale > 0.0)) throw InputError("simplex: scale must be positive");
          if (s.dim <= 0) throw InputError("simplex: dimension must be positive");
        }
      },
      kind);
}

bool SimpleSet::contains(const Vector& x, double tol) const {
  if (x.size() != dim()) return false;
  return std::visit(
      [&](const auto& s) -> bool {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Box>) {
          return ((x - s.lower).array() >= -tol).all() &&
                 ((s.upper - x).array() >= -tol).all();
        } else if constexpr (std::is_same_v<T, Ball>) {
          return (x - s.center).norm() <= s.radius + tol;
        } else if constexpr (std::is_same_v<T, Simplex>) {
          return (x.array() >= -tol).all() &&
                 std::abs(x.sum() - s.scale) <= tol * (1.0 + s.scale);
        } else {
          return (x.array() >= -tol).all() &&
                 std::abs(s.direction.dot(x)) <= tol * (1.0 + x.norm());
        }
      },
      kind);
}

bool SimpleSet::bounded() const { return enclosure().has_value(); }

std::optional<SimpleSet::Enclosure> SimpleSet::enclosure() const {
  return std::visit(
      [](const auto& s) -> std::optional<Enclosure> {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Box>) {
          if (!s.lower.allFinite() || !s.upper.allFinite()) return std::nullopt;
          return Enclosure{0.5 * (s.lower + s.upper), (0.5 * (s.upper - s.lower)).norm()};
        } else if constexpr (std::is_same_v<T, Ball>) {
          return Enclosure{s.center, s.radius};
        } else if constexpr (std::is_same_v<T, Simplex>) {
          // ||x||_2 <= ||x||_1 = scale on the simplex.
          return Enclosure{Vector::Zero(s.dim), s.scale};
        } else {
          return std::nullopt;
        }
      },
      kind);
}

std::optional<Vector> SimpleSet::linear_minimizer(const Vector& c) const {
  return std::visit(
      [&](const auto& s) -> std::optional<Vector> {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Box>) {
          Vector out(c.size());
          for (Eigen::Index i = 0; i < c.size(); ++i) {
            double v;
            if (c(i) > 0.0)
              v = s.lower(i);
            else if (c(i) < 0.0)
              v = s.upper(i);
            else
              v = std::clamp(0.0, s.lower(i), s.upper(i));
            if (!std::isfinite(v)) return std::nullopt;
            out(i) = v;
          }
          return out;
        } else if constexpr (std::is_same_v<T, Ball>) {
          const double nc = c.norm();
          if (nc == 0.0) return s.center;
          return Vector(s.center - (s.radius / nc) * c);
        } else if constexpr (std::is_same_v<T, Simplex>) {
          Eigen::Index k = 0;
          c.minCoeff(&k);
          Vector out = Vector::Zero(s.dim);
          out(k) = s.scale;
          return out;
        } else {
          return std::nullopt;
        }
      },
      kind);
}

Vector project_set(const SimpleSet& s, const Vector& w) {
  if (w.size() != s.dim())
    throw InputError("project_set: dimension mismatch (" + std::to_string(w.size()) +
                     " vs " + std::to_string(s.dim()) + ")");
  return std::visit(
      [&](const auto& set) -> Vector {
        using T = std::decay_t<decltype(set)>;
        if constexpr (std::is_same_v<T, Box>) {
          return w.cwiseMax(set.lower).cwiseMin(set.upper);
        } else if constexpr (std::is_same_v<T, Ball>) {
          return project_ball(w, set.center, set.radius);
        } else if constexpr (std::is_same_v<T, Simplex>) {
          return project_simplex(w, set.scale);
        } else {
          return project_nonneg_linear_eq(w, set.direction);
        }
      },
      s.kind);
}

// ---------------------------------------------------------------------------
// Cone
// ---------------------------------------------------------------------------

Eigen::Index Cone::dim() const {
  return std::visit(
      [](const auto& c) -> Eigen::Index {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, ProductCone>) {
          Eigen::Index total = 0;
          for (const auto& p : c.parts) total += p.dim();
          return total;
        } else {
          return c.dim;
        }
      },
      kind);
}

bool Cone::is_orthant() const {
  if (std::holds_alternative<NonnegOrthant>(kind)) return true;
  if (const auto* p = std::get_if<ProductCone>(&kind))
    return std::all_of(p->parts.begin(), p->parts.end(),
                       [](const Cone& c) { return c.is_orthant(); });
  return false;
}

void Cone::validate() const {
  std::visit(
      [](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, ProductCone>) {
          for (const auto& p : c.parts) p.validate();
        } else {
          if (c.dim < 0) throw InputError("cone: negative dimension");
        }
      },
      kind);
}

bool Cone::contains(const Vector& w, double tol) const {
  if (w.size() != dim()) return false;
  return std::visit(
      [&](const auto& c) -> bool {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, NonnegOrthant>) {
          return (w.array() >= -tol).all();
        } else if constexpr (std::is_same_v<T, SecondOrderCone>) {
          if (c.dim == 0) return true;
          return w(0) >= w.tail(c.dim - 1).norm() - tol;
        } else {
          Eigen::Index off = 0;
          for (const auto& p : c.parts) {
            if (!p.contains(w.segment(off, p.dim()), tol)) return false;
            off += p.dim();
          }
          return true;
        }
      },
      kind);
}

Vector project_cone(const Cone& c, const Vector& w) {
  if (w.size() != c.dim()) throw InputError("project_cone: dimension mismatch");
  return std::visit(
      [&](const auto& k) -> Vector {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, NonnegOrthant>) {
          return w.cwiseMax(0.0);
        } else if constexpr (std::is_same_v<T, SecondOrderCone>) {
          return project_soc(w);
        } else {
          Vector out(w.size());
          Eigen::Index off = 0;
          for (const auto& p : k.parts) {
            const Eigen::Index d = p.dim();
            out.segment(off, d) = project_cone(p, w.segment(off, d));
            off += d;
          }
          return out;
        }
      },
      c.kind);
}

Vector project_dual_cone(const Cone& c, const Vector& w) {
  return project_cone(c.dual(), w);
}

Vector project_polar_of_dual(const Cone& c, const Vector& w) {
  return -project_cone(c, -w);
}

// ---------------------------------------------------------------------------
// DualBall
// ---------------------------------------------------------------------------

bool DualBall::contains(const Vector& v, const Vector& lam, double tol) const {
  return std::visit(
      [&](const auto& b) -> bool {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, UnboundedDual>) {
          return true;
        } else if constexpr (std::is_same_v<T, JointBall>) {
          return std::sqrt(v.squaredNorm() + lam.squaredNorm()) <= b.radius + tol;
        } else {
          return v.norm() <= b.radius_v + tol && lam.norm() <= b.radius_lambda + tol;
        }
      },
      kind);
}

void DualBall::validate() const {
  if (const auto* j = std::get_if<JointBall>(&kind)) {
    if (!(j->radius > 0.0)) throw ConfigError("dual ball: radius must be positive");
  } else if (const auto* s = std::get_if<SplitBall>(&kind)) {
    if (!(s->radius_v > 0.0) || !(s->radius_lambda > 0.0))
      throw ConfigError("dual ball: split radii must be positive");
  }
}

void project_dual_ball(const DualBall& d, Vector& v, Vector& lam) {
  std::visit(
      [&](const auto& b) {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, JointBall>) {
          const double nrm = std::sqrt(v.squaredNorm() + lam.squaredNorm());
          if (nrm > b.radius) {
            const double s = b.radius / nrm;
            v *= s;
            lam *= s;
          }
        } else if constexpr (std::is_same_v<T, SplitBall>) {
          const double nv = v.norm();
          if (nv > b.radius_v) v *= b.radius_v / nv;
          const double nl = lam.norm();
          if (nl > b.radius_lambda) lam *= b.radius_lambda / nl;
        }
      },
      d.kind);
}

}  // namespace rapdb
