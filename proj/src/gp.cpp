#include "bois/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "bois/error.hpp"
#include "bois/nelder_mead.hpp"

namespace bois {

namespace {

constexpr double kSqrt5 = 2.23606797749978969640917366873128;
constexpr double kScaleFloor = 1e-12;
constexpr double kFirstJitter = 1e-10;
constexpr double kMaxJitter = 1e-4;
constexpr double kLog2Pi = 1.83787706640934548356065947281123;

// Search box for hyperparameters (standardized units).
constexpr double kMinScale = 1e-6, kMaxScale = 1e6;
constexpr double kMinNoise = 1e-10, kMaxNoise = 1e2;

double distance(const Eigen::MatrixXd& a, Eigen::Index i, const Eigen::MatrixXd& b, Eigen::Index j) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < a.cols(); ++k) {
    const double diff = a(i, k) - b(j, k);
    s += diff * diff;
  }
  return std::sqrt(s);
}

Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& x) {
  const auto m = x.rows();
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = j + 1; i < m; ++i) r(i, j) = r(j, i) = distance(x, i, x, j);
  return r;
}

struct Standardized {
  Eigen::VectorXd values;
  double offset = 0.0;
  double scale = 1.0;
};

Standardized standardize(const Eigen::VectorXd& y) {
  Standardized s;
  if (y.size() == 0) return s;
  s.offset = y.mean();
  const double var = (y.array() - s.offset).square().mean();
  const double sd = std::sqrt(var);
  s.scale = sd < kScaleFloor ? 1.0 : sd;
  s.values = (y.array() - s.offset) / s.scale;
  return s;
}

struct Factorization {
  Eigen::MatrixXd lower;
  double jitter = 0.0;
};

// Cholesky of K(r) + noise*I with escalating jitter; nullopt on failure.
std::optional<Factorization> factorize(const Eigen::MatrixXd& distances, const KernelParams& p) {
  const auto m = distances.rows();
  Eigen::MatrixXd k(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = j; i < m; ++i) k(i, j) = k(j, i) = matern52(distances(i, j), p);
    k(j, j) += p.noise_variance;
  }
  double jitter = 0.0;
  while (true) {
    Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt;
    if (jitter > 0.0) {
      Eigen::MatrixXd kj = k;
      kj.diagonal().array() += jitter;
      llt.compute(kj);
    } else {
      llt.compute(k);
    }
    if (llt.info() == Eigen::Success) return Factorization{llt.matrixL(), jitter};
    if (jitter >= kMaxJitter) return std::nullopt;
    jitter = jitter == 0.0 ? kFirstJitter : jitter * 10.0;
  }
}

double lml_from_factor(const Eigen::MatrixXd& lower, const Eigen::VectorXd& y, Eigen::VectorXd* alpha_out) {
  const auto tri = lower.triangularView<Eigen::Lower>();
  Eigen::VectorXd alpha = tri.solve(y);
  const double quad = alpha.squaredNorm();
  lower.triangularView<Eigen::Lower>().transpose().solveInPlace(alpha);
  const double logdet = 2.0 * lower.diagonal().array().log().sum();
  if (alpha_out) *alpha_out = std::move(alpha);
  return -0.5 * quad - 0.5 * logdet - 0.5 * static_cast<double>(y.size()) * kLog2Pi;
}

bool conflicting_duplicates(const Eigen::MatrixXd& distances, const Eigen::VectorXd& y) {
  for (Eigen::Index j = 0; j < distances.rows(); ++j)
    for (Eigen::Index i = j + 1; i < distances.rows(); ++i)
      if (distances(i, j) == 0.0 && y[i] != y[j]) return true;
  return false;
}

}  // namespace

double matern52(double r, const KernelParams& params) {
  const double s = kSqrt5 * r / params.lengthscale;
  return params.signal_variance * (1.0 + s + s * s / 3.0) * std::exp(-s);
}

SurrogateModel::SurrogateModel(std::size_t dims, KernelParams params)
    : dims_(dims), params_(params), inputs_(0, static_cast<Eigen::Index>(dims)), targets_(0) {
  lml_ = 0.0;
}

SurrogateModel SurrogateModel::condition(Eigen::MatrixXd inputs, Eigen::VectorXd targets, KernelParams params) {
  if (inputs.rows() != targets.size()) throw DimensionError("inputs and targets differ in length");
  if (!targets.allFinite() || !inputs.allFinite()) throw InvalidArgument("non-finite training data");
  if (!(params.signal_variance > 0) || !(params.lengthscale > 0) || !(params.noise_variance >= 0))
    throw InvalidArgument("invalid kernel hyperparameters");

  SurrogateModel model;
  model.dims_ = static_cast<std::size_t>(inputs.cols());
  model.params_ = params;
  if (targets.size() == 0) {
    model.inputs_ = std::move(inputs);
    model.targets_ = std::move(targets);
    return model;
  }
  const auto distances = pairwise_distances(inputs);
  auto std_targets = standardize(targets);
  if (params.noise_variance == 0.0 && conflicting_duplicates(distances, targets))
    throw DegenerateDataError("duplicated input with conflicting targets and zero noise");
  auto factor = factorize(distances, params);
  if (!factor) throw DegenerateDataError("kernel matrix is not positive definite even with maximum jitter");

  model.inputs_ = std::move(inputs);
  model.targets_ = std::move(targets);
  model.offset_ = std_targets.offset;
  model.scale_ = std_targets.scale;
  model.jitter_ = factor->jitter;
  model.factor_ = std::move(factor->lower);
  model.lml_ = lml_from_factor(model.factor_, std_targets.values, &model.alpha_);
  return model;
}

KernelParams SurrogateModel::output_params() const {
  const double s2 = scale_ * scale_;
  return KernelParams{params_.signal_variance * s2, params_.lengthscale, params_.noise_variance * s2};
}

Prediction SurrogateModel::predict(std::span<const double> theta) const {
  if (theta.size() != dims_) throw DimensionError("query has wrong dimension");
  const auto m = static_cast<Eigen::Index>(size());
  if (m == 0) return {offset_, params_.signal_variance * scale_ * scale_};
  Eigen::VectorXd k(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    double s = 0.0;
    for (Eigen::Index c = 0; c < inputs_.cols(); ++c) {
      const double diff = inputs_(i, c) - theta[static_cast<std::size_t>(c)];
      s += diff * diff;
    }
    k[i] = matern52(std::sqrt(s), params_);
  }
  const double mean = k.dot(alpha_);
  factor_.triangularView<Eigen::Lower>().solveInPlace(k);
  const double var = std::max(0.0, params_.signal_variance - k.squaredNorm());
  return {offset_ + scale_ * mean, var * scale_ * scale_};
}

void SurrogateModel::predict_batch(const Eigen::MatrixXd& points, Eigen::VectorXd& mean,
                                   Eigen::VectorXd& variance) const {
  if (static_cast<std::size_t>(points.cols()) != dims_) throw DimensionError("query has wrong dimension");
  const auto m = static_cast<Eigen::Index>(size());
  const auto p = points.rows();
  if (m == 0) {
    mean = Eigen::VectorXd::Constant(p, offset_);
    variance = Eigen::VectorXd::Constant(p, params_.signal_variance * scale_ * scale_);
    return;
  }
  Eigen::MatrixXd cross(m, p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = 0; i < m; ++i) cross(i, j) = matern52(distance(inputs_, i, points, j), params_);
  mean = (cross.transpose() * alpha_).array() * scale_ + offset_;
  factor_.triangularView<Eigen::Lower>().solveInPlace(cross);
  variance = ((params_.signal_variance - cross.colwise().squaredNorm().array()).max(0.0) * (scale_ * scale_)).matrix();
}

double SurrogateModel::log_marginal_likelihood() const { return lml_; }

// ---------------------------------------------------------------------------

SurrogateModel fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets, const FitOptions& options, Rng& rng,
                   FitReport* report) {
  if (inputs.rows() < 2) throw InvalidArgument("fit needs at least two training points");
  if (inputs.rows() != targets.size()) throw DimensionError("inputs and targets differ in length");
  if (!targets.allFinite()) throw InvalidArgument("non-finite training target");

  const auto distances = pairwise_distances(inputs);
  const auto y = standardize(targets).values;
  const bool fit_noise = !options.fixed_noise.has_value();

  auto unpack = [&](std::span<const double> x) {
    KernelParams p;
    p.signal_variance = std::clamp(std::exp(x[0]), kMinScale, kMaxScale);
    p.lengthscale = std::clamp(std::exp(x[1]), kMinScale, kMaxScale);
    p.noise_variance = fit_noise ? std::clamp(std::exp(x[2]), kMinNoise, kMaxNoise) : *options.fixed_noise;
    return p;
  };
  auto negative_lml = [&](std::span<const double> x) {
    const auto factor = factorize(distances, unpack(x));
    if (!factor) return std::numeric_limits<double>::infinity();
    return -lml_from_factor(factor->lower, y, nullptr);
  };

  std::vector<std::vector<double>> starts;
  auto pack = [&](const KernelParams& p) {
    std::vector<double> x{std::log(p.signal_variance), std::log(p.lengthscale)};
    if (fit_noise) x.push_back(std::log(std::max(p.noise_variance, kMinNoise)));
    return x;
  };
  if (options.warm_start) starts.push_back(pack(*options.warm_start));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double log10 = std::log(10.0);
  while (starts.size() < std::max<std::size_t>(options.restarts, 1)) {
    std::vector<double> x{(-1.0 + 2.0 * u01(rng)) * log10, (-1.0 + 2.0 * u01(rng)) * log10};
    if (fit_noise) x.push_back((-6.0 + 5.0 * u01(rng)) * log10);
    starts.push_back(std::move(x));
  }

  NelderMeadOptions nm;
  nm.max_evaluations = options.evaluations_per_start;
  nm.initial_step = 0.5;
  nm.value_tolerance = 1e-9;

  FitReport local;
  std::vector<double> best_x;
  double best_value = std::numeric_limits<double>::infinity();
  for (const auto& start : starts) {
    local.start_lml.push_back(-negative_lml(start));
    auto result = nelder_mead(negative_lml, start, nm);
    local.final_lml.push_back(-result.value);
    if (result.value < best_value || best_x.empty()) {
      best_value = result.value;
      best_x = result.x;
    }
  }
  auto model = SurrogateModel::condition(inputs, targets, unpack(best_x));
  local.best_lml = model.log_marginal_likelihood();
  if (report) *report = std::move(local);
  return model;
}

}  // namespace bois
