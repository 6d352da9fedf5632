#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "rapdb/instances.hpp"
#include "rapdb/kernels.hpp"
#include "rapdb/problem.hpp"

using namespace rapdb;
using namespace rapdb::testing;

namespace {

std::vector<Matrix> random_symmetric(std::mt19937_64& rng, Eigen::Index n, int count) {
  std::vector<Matrix> out;
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int k = 0; k < count; ++k) {
    DenseMatrix B(n, n);
    for (Eigen::Index c = 0; c < n; ++c) B.col(c) = randn(rng, n);
    DenseMatrix S = B + B.transpose();
    if (k % 2 == 1) {
      // Sparse pattern: keep about 5% of the entries, symmetric.
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j <= i; ++j)
          if (U(rng) > 0.05) S(i, j) = S(j, i) = 0.0;
    }
    out.push_back(Matrix::from_dense(S));
  }
  return out;
}

struct BackendGuard {
  kernels::Backend saved = kernels::backend();
  ~BackendGuard() {
    kernels::set_backend(saved);
    kernels::set_threads(kernels::max_threads());
  }
};

}  // namespace

TEST_CASE("parallel products are identical across thread counts") {
  BackendGuard guard;
  std::mt19937_64 rng(5);
  for (Eigen::Index n : {128, 257}) {
    const std::vector<Matrix> mats = random_symmetric(rng, n, 6);
    CHECK(mats[1].is_sparse());
    const Vector x = randn(rng, n);
    std::vector<Vector> ref;
    kernels::serial::symmetric_products(mats, x, ref);
    std::vector<Vector> first;
    for (int t : {1, 2, 4, 8}) {
      kernels::set_threads(t);
      std::vector<Vector> out;
      kernels::parallel::symmetric_products(mats, x, out);
      REQUIRE(out.size() == mats.size());
      if (first.empty()) first = out;
      for (std::size_t i = 0; i < out.size(); ++i) {
        CHECK(out[i] == first[i]);
        CHECK((out[i] - ref[i]).norm() <= 1e-12 * (1.0 + ref[i].norm()));
      }
    }
  }
}

TEST_CASE("parallel weighted sums are identical across thread counts") {
  BackendGuard guard;
  std::mt19937_64 rng(6);
  std::vector<Vector> vecs;
  std::vector<double> w;
  for (int k = 0; k < 9; ++k) {
    vecs.push_back(randn(rng, 1000));
    w.push_back(randn(rng, 1)(0));
  }
  Vector ref;
  kernels::serial::weighted_sum(vecs, w, ref);
  Vector first;
  for (int t : {1, 2, 4, 8}) {
    kernels::set_threads(t);
    Vector out;
    kernels::parallel::weighted_sum(vecs, w, out);
    if (first.size() == 0) first = out;
    CHECK(out == first);
    CHECK((out - ref).norm() <= 1e-12 * (1.0 + ref.norm()));
  }
}

TEST_CASE("point evaluation does not depend on the backend") {
  BackendGuard guard;
  const ProblemInstance inst = random_qcqp(160, 4, 3);
  std::mt19937_64 rng(7);
  const Vector x = randn(rng, 160);
  kernels::set_backend(kernels::Backend::Serial);
  const PointEval s = evaluate_point(inst, x);
  kernels::set_backend(kernels::Backend::Parallel);
  PointEval first;
  for (int t : {1, 2, 4, 8}) {
    kernels::set_threads(t);
    const PointEval p = evaluate_point(inst, x);
    if (first.Qx.empty()) first = p;
    CHECK(p.f == first.f);
    CHECK(p.g == first.g);
    CHECK(std::abs(p.f - s.f) <= 1e-12 * (1.0 + std::abs(s.f)));
    CHECK((p.g - s.g).norm() <= 1e-12 * (1.0 + s.g.norm()));
  }
}
