#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cstdint>
#include <vector>

namespace rapdb {

using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;
using CsrMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, std::int64_t>;

// Matrices whose fraction of nonzeros is at or below this value are stored
// in CSR form.
inline constexpr double kSparseDensityThreshold = 0.25;

// A matrix that is stored either dense or in CSR form. Every consumer only
// needs products with vectors, so the storage is chosen per matrix.
class Matrix {
 public:
  Matrix() = default;

  static Matrix from_dense(DenseMatrix m,
                           double density_threshold = kSparseDensityThreshold);
  static Matrix from_csr(Eigen::Index rows, Eigen::Index cols,
                         const std::vector<std::int64_t>& indptr,
                         const std::vector<std::int64_t>& indices,
                         const std::vector<double>& data,
                         double density_threshold = kSparseDensityThreshold);
  static Matrix zero(Eigen::Index rows, Eigen::Index cols);

  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }
  bool is_sparse() const { return sparse_; }
  bool is_zero() const { return nnz_ == 0; }
  std::int64_t nonzeros() const { return nnz_; }

  const DenseMatrix& dense() const { return dense_; }
  const CsrMatrix& csr() const { return csr_; }
  DenseMatrix to_dense() const;

  // out = M x
  void multiply(const Vector& x, Vector& out) const;
  // out = M^T x
  void multiply_transpose(const Vector& x, Vector& out) const;
  Vector operator*(const Vector& x) const;

 private:
  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
  std::int64_t nnz_ = 0;
  bool sparse_ = false;
  DenseMatrix dense_;
  CsrMatrix csr_;
};

struct PowerIterationOptions {
  int max_iterations = 200;
  double relative_tolerance = 1e-10;
  // Multiplicative safety margin applied to the estimate.
  double inflation = 1.01;
};

// Upper estimate of the spectral norm ||M||_2 by power iteration on M^T M.
double spectral_norm(const Matrix& m, const PowerIterationOptions& opts = {});
double spectral_norm(const DenseMatrix& m,
                     const PowerIterationOptions& opts = {});

// Smallest singular value of a p x n matrix with p <= n (dense SVD).
double min_singular_value(const DenseMatrix& m);

// Numerical rank by column-pivoting QR.
Eigen::Index numerical_rank(const DenseMatrix& m);

// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const DenseMatrix& m);

inline double sq(double v) { return v * v; }

}  // namespace rapdb
