#include "rapdb/instances.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "rapdb/errors.hpp"

namespace rapdb {

// ---------------------------------------------------------------------------
// Random source
// ---------------------------------------------------------------------------

std::uint64_t CounterRng::mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_(mix(seed) + mix(stream + 1) * 2) {}

std::uint64_t CounterRng::next_u64() {
  const std::uint64_t c = counter_++;
  return mix(key_ + c * 0x9E3779B97F4A7C15ULL);
}

double CounterRng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double CounterRng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double CounterRng::normal() {
  if (spare_) {
    const double v = *spare_;
    spare_.reset();
    return v;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double rad = std::sqrt(-2.0 * std::log(u1));
  const double ang = 2.0 * std::numbers::pi * u2;
  spare_ = rad * std::sin(ang);
  return rad * std::cos(ang);
}

DenseMatrix orthonormalize(const DenseMatrix& G) {
  DenseMatrix Q = G;
  for (Eigen::Index j = 0; j < Q.cols(); ++j) {
    const double original = Q.col(j).norm();
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index i = 0; i < j; ++i) Q.col(j) -= Q.col(i).dot(Q.col(j)) * Q.col(i);
    }
    const double nrm = Q.col(j).norm();
    if (!(nrm > 1e-10 * std::max(1.0, original)))
      throw DataError("orthonormalize: columns are numerically dependent");
    Q.col(j) /= nrm;
  }
  return Q;
}

// ---------------------------------------------------------------------------
// Random QCQP
// ---------------------------------------------------------------------------

ProblemData random_qcqp_data(Eigen::Index n, Eigen::Index m, std::uint64_t seed,
                             const RandomQcqpOptions& opts) {
  if (n < 2) throw ConfigError("random_qcqp: n must be at least 2");
  if (m < 1) throw ConfigError("random_qcqp: m must be at least 1");
  ProblemData d;
  d.n = n;
  d.m = m;
  d.p = 0;
  d.r = Vector::Zero(m + 1);
  for (Eigen::Index i = 0; i <= m; ++i) {
    CounterRng rng(seed, static_cast<std::uint64_t>(i));
    DenseMatrix G(n, n);
    for (Eigen::Index c = 0; c < n; ++c)
      for (Eigen::Index r = 0; r < n; ++r) G(r, c) = rng.normal();
    const DenseMatrix L = orthonormalize(G);
    Vector s(n);
    for (Eigen::Index k = 0; k < n; ++k) s(k) = rng.uniform(0.0, opts.eig_max);
    Eigen::Index kmin = 0;
    s.minCoeff(&kmin);
    s(kmin) = 0.0;
    DenseMatrix Q = L.transpose() * s.asDiagonal() * L;
    Q = 0.5 * (Q + Q.transpose()).eval();
    d.Q.push_back(Matrix::from_dense(std::move(Q)));
    Vector q(n);
    for (Eigen::Index k = 0; k < n; ++k) q(k) = rng.normal();
    d.q.push_back(std::move(q));
    if (i > 0) d.r(i) = -rng.uniform();
  }
  d.A = DenseMatrix(0, n);
  d.b = Vector(0);
  d.primal_set = SimpleSet::uniform_box(n, -opts.box, opts.box);
  d.cone = Cone::nonneg(m);
  d.mu = 0.0;
  return d;
}

ProblemInstance random_qcqp(Eigen::Index n, Eigen::Index m, std::uint64_t seed,
                            const RandomQcqpOptions& opts) {
  return ProblemInstance(random_qcqp_data(n, m, seed, opts));
}

// ---------------------------------------------------------------------------
// Kernel matrix learning
// ---------------------------------------------------------------------------

KmlData load_kml_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path + ": cannot open");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        vals.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        if (rows.empty() && vals.empty()) break;  // header line
        throw DataError(path + ":" + std::to_string(lineno) + ": malformed number '" + cell + "'");
      }
    }
    if (vals.empty()) continue;
    if (vals.size() < 2)
      throw DataError(path + ":" + std::to_string(lineno) + ": need at least one feature and a label");
    if (width == 0) width = vals.size();
    if (vals.size() != width)
      throw DataError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(width) +
                      " columns, got " + std::to_string(vals.size()));
    if (vals.back() != 1.0 && vals.back() != -1.0)
      throw DataError(path + ":" + std::to_string(lineno) + ": label must be +1 or -1");
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw DataError(path + ": no samples");
  KmlData out;
  const auto ns = static_cast<Eigen::Index>(rows.size());
  const auto nf = static_cast<Eigen::Index>(width - 1);
  out.features.resize(ns, nf);
  out.labels.resize(ns);
  for (Eigen::Index i = 0; i < ns; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < nf; ++j) out.features(i, j) = r[static_cast<std::size_t>(j)];
    out.labels(i) = r.back();
  }
  return out;
}

void save_kml_csv(const std::string& path, const KmlData& data) {
  std::ofstream out(path);
  if (!out) throw InputError(path + ": cannot write");
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < data.features.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.features.cols(); ++j) out << data.features(i, j) << ',';
    out << (data.labels(i) > 0 ? 1 : -1) << '\n';
  }
}

void standardize_features(DenseMatrix& features) {
  const auto ns = static_cast<double>(features.rows());
  for (Eigen::Index j = 0; j < features.cols(); ++j) {
    auto col = features.col(j);
    const double mean = col.mean();
    col.array() -= mean;
    const double sd = std::sqrt(col.squaredNorm() / ns);
    if (sd > 0.0) col /= sd;
  }
}

KmlData synthetic_kml_dataset(Eigen::Index samples, Eigen::Index dim, std::uint64_t seed) {
  if (samples < 2 || dim < 1) throw ConfigError("synthetic_kml_dataset: need 2 samples and 1 feature");
  CounterRng rng(seed, 0x6b6d6cULL);
  KmlData d;
  d.features.resize(samples, dim);
  d.labels.resize(samples);
  for (Eigen::Index i = 0; i < samples; ++i) {
    const double label = (i % 2 == 0) ? 1.0 : -1.0;
    d.labels(i) = label;
    for (Eigen::Index j = 0; j < dim; ++j) {
      const double shift = (j < 2) ? 0.75 * label : 0.0;
      d.features(i, j) = shift + rng.normal();
    }
  }
  return d;
}

std::vector<DenseMatrix> kml_kernels(const DenseMatrix& A) {
  const Eigen::Index n = A.rows();
  const DenseMatrix G = A * A.transpose();
  std::vector<DenseMatrix> K(3, DenseMatrix(n, n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      K[0](i, j) = sq(1.0 + G(i, j));
      const double dist2 = G(i, i) + G(j, j) - 2.0 * G(i, j);
      K[1](i, j) = std::exp(-0.5 * std::max(0.0, dist2) / 0.1);
      K[2](i, j) = G(i, j);
    }
  }
  for (std::size_t k = 0; k < K.size(); ++k) {
    const Vector diag = K[k].diagonal();
    for (Eigen::Index i = 0; i < n; ++i)
      if (!(diag(i) > 0.0))
        throw DataError("kernel " + std::to_string(k + 1) + " has a zero diagonal entry at sample " +
                        std::to_string(i));
    const Vector s = diag.cwiseSqrt().cwiseInverse();
    K[k] = s.asDiagonal() * K[k] * s.asDiagonal();
    K[k] = 0.5 * (K[k] + K[k].transpose()).eval();
    K[k].diagonal().setOnes();
  }
  return K;
}

ProblemData kml_data(const KmlData& data, double lambda_reg, std::optional<double> c) {
  const Eigen::Index n = data.features.rows();
  if (data.labels.size() != n) throw DataError("kml: label count does not match samples");
  bool pos = false;
  bool neg = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (data.labels(i) == 1.0)
      pos = true;
    else if (data.labels(i) == -1.0)
      neg = true;
    else
      throw DataError("kml: labels must be +1 or -1");
  }
  if (!pos || !neg) throw DataError("kml: both classes must be present");
  if (!(lambda_reg >= 0.0)) throw ConfigError("kml: lambda must be nonnegative");

  const std::vector<DenseMatrix> K = kml_kernels(data.features);
  double csum = 0.0;
  std::vector<double> traces;
  for (const auto& k : K) {
    traces.push_back(k.trace());
    csum += traces.back();
  }
  const double cval = c.value_or(csum);

  ProblemData d;
  d.n = n;
  d.m = 3;
  d.p = 0;
  DenseMatrix Q0 = DenseMatrix::Identity(n, n) * (2.0 * lambda_reg);
  d.Q.push_back(Matrix::from_dense(std::move(Q0)));
  d.q.push_back(Vector::Constant(n, -2.0));
  const Vector& b = data.labels;
  for (std::size_t k = 0; k < K.size(); ++k) {
    DenseMatrix H = b.asDiagonal() * K[k] * b.asDiagonal();
    d.Q.push_back(Matrix::from_dense(2.0 * (cval / traces[k]) * H));
    d.q.push_back(Vector::Zero(n));
  }
  d.r = Vector::Zero(4);
  d.A = DenseMatrix(0, n);
  d.b = Vector(0);
  d.primal_set = SimpleSet::nonneg_with_linear_eq(b);
  d.cone = Cone::nonneg(3);
  d.multiplier_set = SimpleSet::simplex(3, 1.0);
  d.mu = 2.0 * lambda_reg;
  return d;
}

ProblemInstance kml_instance(const KmlData& data, double lambda_reg, std::optional<double> c) {
  return ProblemInstance(kml_data(data, lambda_reg, c));
}

// ---------------------------------------------------------------------------
// Analytic cases
// ---------------------------------------------------------------------------

double AnalyticCase::distance_sq(const Iterate& z) const {
  double d = (z.x - solution.x).squaredNorm() + (z.v - solution.v).squaredNorm();
  if (lambda_interval) {
    const double l = z.lam(0);
    d += sq(l - std::clamp(l, lambda_interval->first, lambda_interval->second));
  } else {
    d += (z.lam - solution.lam).squaredNorm();
  }
  return d;
}

double AnalyticCase::distance(const Iterate& z) const { return std::sqrt(distance_sq(z)); }

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

ProblemData ball_constrained_quadratic(double scale, SimpleSet set, double mu) {
  // f = scale ||x - c||^2 with c = (2, 0), g = 0.5||x||^2 - 0.5.
  ProblemData d;
  d.n = 2;
  d.m = 1;
  d.p = 0;
  const Vector c = vec({2.0, 0.0});
  d.Q = {Matrix::from_dense(2.0 * scale * DenseMatrix::Identity(2, 2)),
         Matrix::from_dense(DenseMatrix::Identity(2, 2))};
  d.q = {-2.0 * scale * c, Vector::Zero(2)};
  d.r = vec({scale * c.squaredNorm(), -0.5});
  d.A = DenseMatrix(0, 2);
  d.b = Vector(0);
  d.primal_set = std::move(set);
  d.cone = Cone::nonneg(1);
  d.mu = mu;
  return d;
}

}  // namespace

AnalyticCase analytic_ball() {
  ProblemData d = ball_constrained_quadratic(1.0, SimpleSet::ball(Vector::Zero(2), 1.0), 0.0);
  return AnalyticCase{"ball", ProblemInstance(std::move(d)),
                      Iterate{vec({1.0, 0.0}), Vector(0), vec({1.0})}, 1.0,
                      std::make_pair(0.0, 2.0)};
}

AnalyticCase analytic_box_lp() {
  ProblemData d;
  d.n = 2;
  d.m = 1;
  d.p = 0;
  d.Q = {Matrix::zero(2, 2), Matrix::zero(2, 2)};
  d.q = {vec({-1.0, -2.0}), vec({1.0, 1.0})};
  d.r = vec({0.0, -1.5});
  d.A = DenseMatrix(0, 2);
  d.b = Vector(0);
  d.primal_set = SimpleSet::uniform_box(2, 0.0, 1.0);
  d.cone = Cone::nonneg(1);
  return AnalyticCase{"box_lp", ProblemInstance(std::move(d)),
                      Iterate{vec({0.5, 1.0}), Vector(0), vec({1.0})}, -2.5, std::nullopt};
}

AnalyticCase analytic_eq_quadratic() {
  ProblemData d;
  d.n = 3;
  d.m = 0;
  d.p = 1;
  d.Q = {Matrix::from_dense(DenseMatrix::Identity(3, 3))};
  d.q = {Vector::Zero(3)};
  d.r = Vector::Zero(1);
  d.A = DenseMatrix::Ones(1, 3);
  d.b = vec({1.0});
  d.primal_set = SimpleSet::uniform_box(3, -10.0, 10.0);
  d.cone = Cone::nonneg(0);
  return AnalyticCase{"eq_quadratic", ProblemInstance(std::move(d)),
                      Iterate{Vector::Constant(3, 1.0 / 3.0), vec({-1.0 / 3.0}), Vector(0)},
                      1.0 / 6.0, std::nullopt};
}

AnalyticCase analytic_strongly_convex() {
  ProblemData d = ball_constrained_quadratic(0.5, SimpleSet::uniform_box(2, -5.0, 5.0), 1.0);
  return AnalyticCase{"strongly_convex", ProblemInstance(std::move(d)),
                      Iterate{vec({1.0, 0.0}), Vector(0), vec({1.0})}, 0.5, std::nullopt};
}

std::vector<AnalyticCase> analytic_suite() {
  std::vector<AnalyticCase> out;
  out.push_back(analytic_ball());
  out.push_back(analytic_box_lp());
  out.push_back(analytic_eq_quadratic());
  return out;
}

}  // namespace rapdb
