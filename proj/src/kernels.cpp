#include "rapdb/kernels.hpp"

#include <atomic>
#include <cassert>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rapdb::kernels {

namespace {
std::atomic<Backend> g_backend{
#ifdef _OPENMP
    Backend::Parallel
#else
    Backend::Serial
#endif
};

// Below this many rows the parallel kernels run on the calling thread.
constexpr std::int64_t kMinParallelRows = 128;

void resize_outputs(std::span<const Matrix> mats, std::vector<Vector>& out) {
  out.resize(mats.size());
  for (std::size_t i = 0; i < mats.size(); ++i)
    if (out[i].size() != mats[i].rows()) out[i].resize(mats[i].rows());
}
}  // namespace

void set_backend(Backend b) {
#ifndef _OPENMP
  b = Backend::Serial;
#endif
  g_backend.store(b);
}

Backend backend() { return g_backend.load(); }

bool parallel_available() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
  omp_set_num_threads(n < 1 ? 1 : n);
#else
  (void)n;
#endif
}

namespace serial {

void symmetric_products(std::span<const Matrix> mats, const Vector& x,
                        std::vector<Vector>& out) {
  resize_outputs(mats, out);
  for (std::size_t i = 0; i < mats.size(); ++i) mats[i].multiply(x, out[i]);
}

void weighted_sum(std::span<const Vector> vecs, std::span<const double> weights,
                  Vector& out) {
  assert(vecs.size() == weights.size() && !vecs.empty());
  out = weights[0] * vecs[0];
  for (std::size_t i = 1; i < vecs.size(); ++i) out += weights[i] * vecs[i];
}

}  // namespace serial

namespace parallel {

void symmetric_products(std::span<const Matrix> mats, const Vector& x,
                        std::vector<Vector>& out) {
  resize_outputs(mats, out);
  for (std::size_t i = 0; i < mats.size(); ++i) {
    const Matrix& m = mats[i];
    Vector& y = out[i];
    const auto rows = static_cast<std::int64_t>(m.rows());
    if (m.is_sparse()) {
      const CsrMatrix& a = m.csr();
      const auto* outer = a.outerIndexPtr();
      const auto* inner = a.innerIndexPtr();
      const double* val = a.valuePtr();
#pragma omp parallel for schedule(static) if (rows >= kMinParallelRows)
      for (std::int64_t r = 0; r < rows; ++r) {
        double acc = 0.0;
        for (auto k = outer[r]; k < outer[r + 1]; ++k) acc += val[k] * x[inner[k]];
        y[r] = acc;
      }
    } else {
      // Column r of a symmetric matrix equals row r; columns are contiguous.
      const DenseMatrix& a = m.dense();
#pragma omp parallel for schedule(static) if (rows >= kMinParallelRows)
      for (std::int64_t r = 0; r < rows; ++r) y[r] = a.col(r).dot(x);
    }
  }
}

void weighted_sum(std::span<const Vector> vecs, std::span<const double> weights,
                  Vector& out) {
  assert(vecs.size() == weights.size() && !vecs.empty());
  const auto n = static_cast<std::int64_t>(vecs[0].size());
  if (out.size() != n) out.resize(n);
  const std::size_t count = vecs.size();
#pragma omp parallel for schedule(static) if (n >= kMinParallelRows)
  for (std::int64_t r = 0; r < n; ++r) {
    double acc = weights[0] * vecs[0][r];
    for (std::size_t i = 1; i < count; ++i) acc += weights[i] * vecs[i][r];
    out[r] = acc;
  }
}

}  // namespace parallel

void symmetric_products(std::span<const Matrix> mats, const Vector& x,
                        std::vector<Vector>& out) {
  if (backend() == Backend::Parallel)
    parallel::symmetric_products(mats, x, out);
  else
    serial::symmetric_products(mats, x, out);
}

void weighted_sum(std::span<const Vector> vecs, std::span<const double> weights,
                  Vector& out) {
  if (backend() == Backend::Parallel)
    parallel::weighted_sum(vecs, weights, out);
  else
    serial::weighted_sum(vecs, weights, out);
}

}  // namespace rapdb::kernels
