#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rapdb/problem.hpp"

namespace rapdb {

// Counter-based generator "rapdb-ctr-v1". Draw number c of stream s under key
// seed is splitmix64_mix(mix(seed) + mix(s + 1) * 2 + c * 0x9E3779B97F4A7C15),
// where mix is the SplitMix64 finalizer. Uniforms keep the top 53 bits;
// normals use Box-Muller on consecutive uniform pairs (both outputs kept).
class CounterRng {
 public:
  static constexpr const char* kName = "rapdb-ctr-v1";

  CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();
  double uniform();  // [0, 1)
  double uniform(double lo, double hi);
  double normal();
  std::uint64_t counter() const { return counter_; }

  static std::uint64_t mix(std::uint64_t z);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::optional<double> spare_;
};

// Orthonormal basis of the columns of G by modified Gram-Schmidt with a
// reorthogonalization pass. Throws DataError on numerical rank deficiency.
DenseMatrix orthonormalize(const DenseMatrix& G);

struct RandomQcqpOptions {
  double box = 10.0;
  double eig_max = 100.0;
};

// Q_i = L' S L with L orthonormal (Gaussian draw), S ~ U[0, eig_max] with its
// smallest entry zeroed; q_i ~ N(0, I); r_0 = 0, -r_i ~ U[0, 1]; X = [-box, box]^n.
ProblemInstance random_qcqp(Eigen::Index n, Eigen::Index m, std::uint64_t seed,
                            const RandomQcqpOptions& opts = {});
ProblemData random_qcqp_data(Eigen::Index n, Eigen::Index m, std::uint64_t seed,
                             const RandomQcqpOptions& opts = {});

// ---------------------------------------------------------------------------
// Kernel matrix learning
// ---------------------------------------------------------------------------

struct KmlData {
  DenseMatrix features;  // one sample per row
  Vector labels;         // +1 / -1
};

// Rows = samples, last column = label. Throws DataError with a line number.
KmlData load_kml_csv(const std::string& path);
void save_kml_csv(const std::string& path, const KmlData& data);
// Mean-centers each feature and divides by its standard deviation.
void standardize_features(DenseMatrix& features);
// Two Gaussian classes with shifted means.
KmlData synthetic_kml_dataset(Eigen::Index samples, Eigen::Index dim, std::uint64_t seed);

// The three unit-diagonal kernels: polynomial, Gaussian, linear.
std::vector<DenseMatrix> kml_kernels(const DenseMatrix& features);

// min over {x >= 0, <b, x> = 0} of max over the unit simplex of
// lambda ||x||^2 - 2 x'1 + sum_i (c / r_i) y_i x'H(K_i)x, with r_i = trace(K_i).
// c defaults to sum_i r_i.
ProblemInstance kml_instance(const KmlData& data, double lambda_reg = 1.0,
                             std::optional<double> c = std::nullopt);
ProblemData kml_data(const KmlData& data, double lambda_reg = 1.0,
                     std::optional<double> c = std::nullopt);

// ---------------------------------------------------------------------------
// Instances with known solutions
// ---------------------------------------------------------------------------

struct AnalyticCase {
  std::string name;
  ProblemInstance instance;
  Iterate solution;  // one saddle point
  double f_star = 0.0;
  // Set of optimal multipliers for a single constraint when it is an interval.
  std::optional<std::pair<double, double>> lambda_interval;

  // Squared distance from z to the saddle-point set.
  double distance_sq(const Iterate& z) const;
  double distance(const Iterate& z) const;
};

// ball: min ||x - (2,0)||^2 s.t. 0.5||x||^2 - 0.5 <= 0 on the unit disk.
AnalyticCase analytic_ball();
// box_lp: min -x1 - 2 x2 s.t. x1 + x2 <= 1.5 on [0,1]^2.
AnalyticCase analytic_box_lp();
// eq_quadratic: min 0.5||x||^2 s.t. x1 + x2 + x3 = 1 on [-10,10]^3.
AnalyticCase analytic_eq_quadratic();
// strongly_convex: min 0.5||x - (2,0)||^2 s.t. 0.5||x||^2 - 0.5 <= 0 on
// [-5,5]^2, mu = 1.
AnalyticCase analytic_strongly_convex();

// The first three cases above.
std::vector<AnalyticCase> analytic_suite();

}  // namespace rapdb
