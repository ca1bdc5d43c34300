#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "bois/random.hpp"

namespace bois {

/// Matern-5/2 hyperparameters with a single isotropic lengthscale.
struct KernelParams {
  double signal_variance = 1.0;
  double lengthscale = 1.0;
  double noise_variance = 0.0;
};

/// sigma_f^2 (1 + sqrt5 r/l + 5 r^2 / (3 l^2)) exp(-sqrt5 r/l)
double matern52(double r, const KernelParams& params);

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

/// Gaussian-process posterior over a cost landscape.
///
/// Targets are standardized (mean removed, divided by their standard
/// deviation, or by 1 when that is below 1e-12) before conditioning;
/// `params()` live in that standardized space and predictions are mapped
/// back to raw target units.
class SurrogateModel {
 public:
  /// Prior with no data: mean 0, variance signal_variance.
  SurrogateModel(std::size_t dims, KernelParams params);

  /// Posterior for fixed hyperparameters. Inputs are rows of `inputs`.
  /// Throws DegenerateDataError when the kernel matrix cannot be factorized
  /// even with 1e-4 jitter, or when noise is exactly zero and a duplicated
  /// input carries conflicting targets.
  static SurrogateModel condition(Eigen::MatrixXd inputs, Eigen::VectorXd targets, KernelParams params);

  std::size_t dims() const { return dims_; }
  std::size_t size() const { return static_cast<std::size_t>(targets_.size()); }
  const KernelParams& params() const { return params_; }
  /// Hyperparameters rescaled to raw target units.
  KernelParams output_params() const;
  double target_offset() const { return offset_; }
  double target_scale() const { return scale_; }
  double jitter() const { return jitter_; }
  const Eigen::MatrixXd& inputs() const { return inputs_; }
  const Eigen::VectorXd& targets() const { return targets_; }

  Prediction predict(std::span<const double> theta) const;
  /// Rows of `points` are query inputs.
  void predict_batch(const Eigen::MatrixXd& points, Eigen::VectorXd& mean, Eigen::VectorXd& variance) const;

  /// Log marginal likelihood of the standardized targets, from the
  /// Cholesky factor.
  double log_marginal_likelihood() const;

 private:
  SurrogateModel() = default;

  std::size_t dims_ = 0;
  KernelParams params_;
  Eigen::MatrixXd inputs_;
  Eigen::VectorXd targets_;
  double offset_ = 0.0;
  double scale_ = 1.0;
  double jitter_ = 0.0;
  Eigen::MatrixXd factor_;  // lower triangular
  Eigen::VectorXd alpha_;   // (K + s_n^2 I)^-1 y_std
  double lml_ = 0.0;
};

struct FitOptions {
  /// Fixes the (standardized) noise variance instead of fitting it.
  std::optional<double> fixed_noise;
  std::size_t restarts = 5;
  std::size_t evaluations_per_start = 120;
  /// Used as the first start when present.
  std::optional<KernelParams> warm_start;
};

struct FitReport {
  std::vector<double> start_lml;
  std::vector<double> final_lml;
  double best_lml = 0.0;
};

/// Maximizes the log marginal likelihood over (sigma_f^2, l, sigma_n^2) in
/// log-space with Nelder-Mead from log-uniform starts. Needs at least two
/// training points.
SurrogateModel fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets, const FitOptions& options, Rng& rng,
                   FitReport* report = nullptr);

}  // namespace bois
