#pragma once

#include <random>

#include "rapdb/problem.hpp"

namespace rapdb::testing {

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

inline Vector randn(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  std::normal_distribution<double> N(0.0, scale);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = N(rng);
  return v;
}

// Small random convex QCQP with PSD Q_i = B'B, optional equalities and a
// box [-3, 3]^n.
inline ProblemData small_random_data(std::uint64_t seed, Eigen::Index n, Eigen::Index m,
                                     Eigen::Index p) {
  std::mt19937_64 rng(seed);
  ProblemData d;
  d.n = n;
  d.m = m;
  d.p = p;
  for (Eigen::Index i = 0; i <= m; ++i) {
    DenseMatrix B(n, n);
    for (Eigen::Index c = 0; c < n; ++c) B.col(c) = randn(rng, n, 0.5);
    d.Q.push_back(Matrix::from_dense(B.transpose() * B));
    d.q.push_back(randn(rng, n));
  }
  d.r = randn(rng, m + 1);
  for (Eigen::Index i = 1; i <= m; ++i) d.r(i) = -1.0 - std::abs(d.r(i));
  d.A = DenseMatrix(p, n);
  for (Eigen::Index r = 0; r < p; ++r) d.A.row(r) = randn(rng, n).transpose();
  d.b = p > 0 ? Vector(d.A * (0.1 * randn(rng, n))) : Vector(0);
  d.primal_set = SimpleSet::uniform_box(n, -3.0, 3.0);
  d.cone = Cone::nonneg(m);
  return d;
}

inline ProblemInstance small_random(std::uint64_t seed, Eigen::Index n, Eigen::Index m,
                                    Eigen::Index p) {
  return ProblemInstance(small_random_data(seed, n, m, p));
}

inline Iterate random_point(std::mt19937_64& rng, const ProblemInstance& inst) {
  Iterate z;
  z.x = project_set(inst.primal_set(), randn(rng, inst.n(), 2.0));
  z.v = randn(rng, inst.p());
  z.lam = randn(rng, inst.m()).cwiseAbs();
  return z;
}

}  // namespace rapdb::testing
