#include "rapdb/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>

#include "rapdb/errors.hpp"

namespace rapdb {

namespace {

std::int64_t count_nonzeros(const DenseMatrix& m) {
  std::int64_t nnz = 0;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (m(i, j) != 0.0) ++nnz;
  return nnz;
}

bool prefers_sparse(std::int64_t nnz, Eigen::Index rows, Eigen::Index cols,
                    double threshold) {
  const double total = static_cast<double>(rows) * static_cast<double>(cols);
  return total > 0 && static_cast<double>(nnz) <= threshold * total;
}

// Deterministic start vector with no special alignment.
Vector start_vector(Eigen::Index n) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i)
    v(i) = 1.0 + 0.5 * std::sin(1.0 + 0.7 * static_cast<double>(i));
  return v.normalized();
}

template <typename Apply, typename ApplyT>
double power_norm(Eigen::Index cols, Apply apply, ApplyT apply_t,
                  const PowerIterationOptions& opts) {
  if (cols == 0) return 0.0;
  Vector v = start_vector(cols);
  Vector mv;
  Vector w;
  double estimate = 0.0;
  for (int it = 0; it < opts.max_iterations; ++it) {
    apply(v, mv);
    apply_t(mv, w);
    const double rq = v.dot(w);  // ||M v||^2 with ||v|| = 1
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    v = w / nw;
    const double next = std::sqrt(std::max(rq, 0.0));
    if (it > 0 && std::abs(next - estimate) <= opts.relative_tolerance * next) {
      estimate = next;
      break;
    }
    estimate = next;
  }
  // One final Rayleigh quotient at the converged direction.
  apply(v, mv);
  estimate = std::max(estimate, mv.norm());
  return estimate * opts.inflation;
}

}  // namespace

Matrix Matrix::from_dense(DenseMatrix m, double density_threshold) {
  Matrix out;
  out.rows_ = m.rows();
  out.cols_ = m.cols();
  out.nnz_ = count_nonzeros(m);
  out.sparse_ = prefers_sparse(out.nnz_, out.rows_, out.cols_, density_threshold);
  if (out.sparse_) {
    out.csr_ = m.sparseView();
    out.csr_.makeCompressed();
  } else {
    out.dense_ = std::move(m);
  }
  return out;
}

Matrix Matrix::from_csr(Eigen::Index rows, Eigen::Index cols,
                        const std::vector<std::int64_t>& indptr,
                        const std::vector<std::int64_t>& indices,
                        const std::vector<double>& data,
                        double density_threshold) {
  if (static_cast<Eigen::Index>(indptr.size()) != rows + 1)
    throw InputError("csr: indptr must have rows+1 entries");
  if (indices.size() != data.size())
    throw InputError("csr: indices and data lengths differ");
  if (indptr.front() != 0 ||
      indptr.back() != static_cast<std::int64_t>(data.size()))
    throw InputError("csr: indptr must start at 0 and end at nnz");
  std::vector<Eigen::Triplet<double, std::int64_t>> triplets;
  triplets.reserve(data.size());
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (indptr[r + 1] < indptr[r]) throw InputError("csr: indptr not monotone");
    for (std::int64_t k = indptr[r]; k < indptr[r + 1]; ++k) {
      if (indices[k] < 0 || indices[k] >= cols)
        throw InputError("csr: column index out of range");
      triplets.emplace_back(r, indices[k], data[k]);
    }
  }
  CsrMatrix csr(rows, cols);
  csr.setFromTriplets(triplets.begin(), triplets.end());
  csr.prune(0.0);
  csr.makeCompressed();

  Matrix out;
  out.rows_ = rows;
  out.cols_ = cols;
  out.nnz_ = csr.nonZeros();
  out.sparse_ = prefers_sparse(out.nnz_, rows, cols, density_threshold);
  if (out.sparse_)
    out.csr_ = std::move(csr);
  else
    out.dense_ = DenseMatrix(csr);
  return out;
}

Matrix Matrix::zero(Eigen::Index rows, Eigen::Index cols) {
  Matrix out;
  out.rows_ = rows;
  out.cols_ = cols;
  out.nnz_ = 0;
  out.sparse_ = true;
  out.csr_ = CsrMatrix(rows, cols);
  out.csr_.makeCompressed();
  return out;
}

DenseMatrix Matrix::to_dense() const {
  if (sparse_) return DenseMatrix(csr_);
  return dense_;
}

void Matrix::multiply(const Vector& x, Vector& out) const {
  if (sparse_)
    out.noalias() = csr_ * x;
  else
    out.noalias() = dense_ * x;
}

void Matrix::multiply_transpose(const Vector& x, Vector& out) const {
  if (sparse_)
    out.noalias() = csr_.transpose() * x;
  else
    out.noalias() = dense_.transpose() * x;
}

Vector Matrix::operator*(const Vector& x) const {
  Vector out(rows_);
  multiply(x, out);
  return out;
}

double spectral_norm(const Matrix& m, const PowerIterationOptions& opts) {
  if (m.rows() == 0 || m.cols() == 0 || m.is_zero()) return 0.0;
  return power_norm(
      m.cols(), [&](const Vector& v, Vector& out) { m.multiply(v, out); },
      [&](const Vector& v, Vector& out) { m.multiply_transpose(v, out); }, opts);
}

double spectral_norm(const DenseMatrix& m, const PowerIterationOptions& opts) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  return power_norm(
      m.cols(), [&](const Vector& v, Vector& out) { out.noalias() = m * v; },
      [&](const Vector& v, Vector& out) { out.noalias() = m.transpose() * v; },
      opts);
}

double min_singular_value(const DenseMatrix& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  Eigen::JacobiSVD<DenseMatrix> svd(m);
  return svd.singularValues().minCoeff();
}

Eigen::Index numerical_rank(const DenseMatrix& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  Eigen::ColPivHouseholderQR<DenseMatrix> qr(m);
  return qr.rank();
}

double min_eigenvalue(const DenseMatrix& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

}  // namespace rapdb
