#pragma once

#include <span>
#include <vector>

#include "rapdb/linalg.hpp"

// Data-parallel kernels behind the coupling-function evaluations. Each kernel
// has a serial reference (plain Eigen products, kept for testing) and an
// OpenMP version that parallelizes over output rows. Every output entry of the
// parallel version is computed by one thread in a fixed order, so results do
// not depend on the thread count.
namespace rapdb::kernels {

enum class Backend { Serial, Parallel };

void set_backend(Backend b);
Backend backend();
bool parallel_available();
int max_threads();
// Thread count used by later parallel regions of the calling thread.
void set_threads(int n);

namespace serial {
// out[i] = mats[i] * x
void symmetric_products(std::span<const Matrix> mats, const Vector& x,
                        std::vector<Vector>& out);
// out = sum_i weights[i] * vecs[i]
void weighted_sum(std::span<const Vector> vecs, std::span<const double> weights,
                  Vector& out);
}  // namespace serial

namespace parallel {
// Requires every matrix to be symmetric (dense rows are read as columns).
void symmetric_products(std::span<const Matrix> mats, const Vector& x,
                        std::vector<Vector>& out);
void weighted_sum(std::span<const Vector> vecs, std::span<const double> weights,
                  Vector& out);
}  // namespace parallel

// Dispatch on the active backend.
void symmetric_products(std::span<const Matrix> mats, const Vector& x,
                        std::vector<Vector>& out);
void weighted_sum(std::span<const Vector> vecs, std::span<const double> weights,
                  Vector& out);

}  // namespace rapdb::kernels
