#include "bois/bo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "bois/error.hpp"
#include "bois/nelder_mead.hpp"

namespace bois {

BoundsBox::BoundsBox(std::vector<double> lo, std::vector<double> hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
  if (lo_.size() != hi_.size()) throw DimensionError("bounds lo/hi lengths differ");
  for (std::size_t k = 0; k < lo_.size(); ++k)
    if (!(lo_[k] < hi_[k])) throw InvalidArgument("bounds need lo < hi in dimension " + std::to_string(k));
}

BoundsBox BoundsBox::angles(std::size_t d) {
  return BoundsBox(std::vector<double>(d, 0.0), std::vector<double>(d, 2 * std::numbers::pi));
}

bool BoundsBox::contains(std::span<const double> theta) const {
  if (theta.size() != dims()) return false;
  for (std::size_t k = 0; k < theta.size(); ++k)
    if (!(theta[k] >= lo_[k] && theta[k] <= hi_[k])) return false;
  return true;
}

std::vector<double> BoundsBox::clamp(std::span<const double> theta) const {
  std::vector<double> out(theta.size());
  for (std::size_t k = 0; k < theta.size(); ++k) out[k] = std::clamp(theta[k], lo_[k], hi_[k]);
  return out;
}

std::vector<double> BoundsBox::uniform(Rng& rng) const {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<double> x(dims());
  for (std::size_t k = 0; k < dims(); ++k) x[k] = lo_[k] + (hi_[k] - lo_[k]) * u01(rng);
  return x;
}

std::vector<std::vector<double>> lhs_sample(std::size_t count, const BoundsBox& bounds, Rng& rng) {
  std::vector<std::vector<double>> points(count, std::vector<double>(bounds.dims()));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<std::size_t> strata(count);
  for (std::size_t k = 0; k < bounds.dims(); ++k) {
    std::iota(strata.begin(), strata.end(), 0);
    std::shuffle(strata.begin(), strata.end(), rng);
    const double width = (bounds.hi(k) - bounds.lo(k)) / static_cast<double>(count);
    for (std::size_t i = 0; i < count; ++i) {
      const double x = bounds.lo(k) + (static_cast<double>(strata[i]) + u01(rng)) * width;
      points[i][k] = std::min(x, bounds.hi(k));
    }
  }
  return points;
}

double kappa(std::size_t t, std::size_t iterations, double kappa0) {
  if (iterations == 0 || t < 1 || t > iterations) throw InvalidArgument("kappa needs 1 <= t <= N");
  return kappa0 * static_cast<double>(iterations - t) / static_cast<double>(iterations);
}

double acquisition_lcb(const SurrogateModel& model, std::span<const double> theta, double kappa) {
  const auto p = model.predict(theta);
  if (kappa == 0.0) return p.mean;
  return p.mean - kappa * std::sqrt(p.variance);
}

// ---------------------------------------------------------------------------

OptimizerState::OptimizerState(BoundsBox bounds, BoOptions options, Rng rng)
    : bounds_(std::move(bounds)), options_(std::move(options)), rng_(std::move(rng)) {
  if (options_.iterations == 0) throw InvalidArgument("optimizer needs N >= 1 iterations");
  if (!(options_.kappa0 >= 0)) throw InvalidArgument("kappa0 must be nonnegative");
  if (!(options_.refine_step > 0)) throw InvalidArgument("refine_step must be positive");
}

const SurrogateModel& OptimizerState::model() const {
  if (!model_) throw StateError("optimizer has no fitted model");
  return *model_;
}

void OptimizerState::ingest(std::span<const Observation> records) {
  for (const auto& r : records) {
    if (!std::isfinite(r.cost)) throw InvalidArgument("non-finite cost rejected");
    if (!bounds_.contains(r.theta)) throw InvalidArgument("observation outside the bounds box");
  }
  if (records.empty()) return;
  data_.insert(data_.end(), records.begin(), records.end());
  ++ingests_;
  const bool full = !model_ || data_.size() <= options_.refit_limit || ingests_ % options_.refit_every == 0;
  update_model(full);
}

void OptimizerState::update_model(bool full_fit) {
  const auto m = static_cast<Eigen::Index>(data_.size());
  const auto d = static_cast<Eigen::Index>(bounds_.dims());
  Eigen::MatrixXd x(m, d);
  Eigen::VectorXd y(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) x(i, k) = data_[static_cast<std::size_t>(i)].theta[static_cast<std::size_t>(k)];
    y[i] = data_[static_cast<std::size_t>(i)].cost;
  }
  if (m < 2) {
    KernelParams p;
    p.noise_variance = options_.fit.fixed_noise.value_or(1e-6);
    model_ = SurrogateModel::condition(std::move(x), std::move(y), p);
    return;
  }
  if (full_fit) {
    FitOptions fo = options_.fit;
    if (model_ && model_->size() >= 2) fo.warm_start = model_->params();
    model_ = fit(x, y, fo, rng_);
    ++refits_;
  } else {
    model_ = SurrogateModel::condition(std::move(x), std::move(y), model_->params());
  }
}

std::vector<double> OptimizerState::propose_next() {
  if (!model_) throw StateError("propose_next needs a fitted model");
  if (t_ >= options_.iterations) throw StateError("optimizer already ran all iterations");
  const double k = kappa(t_ + 1, options_.iterations, options_.kappa0);
  const auto d = bounds_.dims();
  const auto count = std::max<std::size_t>(options_.candidates, 1);

  Eigen::MatrixXd candidates(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < count; ++i) {
    const auto x = bounds_.uniform(rng_);
    for (std::size_t c = 0; c < d; ++c) candidates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = x[c];
  }
  Eigen::VectorXd mean, variance;
  model_->predict_batch(candidates, mean, variance);
  Eigen::VectorXd acq = mean - k * variance.cwiseSqrt();

  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  const auto top = std::min(options_.refine_starts, count);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top), order.end(),
                    [&](auto a, auto b) { return acq[a] < acq[b] || (acq[a] == acq[b] && a < b); });

  std::vector<double> best(d);
  for (std::size_t c = 0; c < d; ++c) best[c] = candidates(static_cast<Eigen::Index>(order[0]), static_cast<Eigen::Index>(c));
  double best_value = acq[order[0]];

  auto objective = [&](std::span<const double> x) { return acquisition_lcb(*model_, bounds_.clamp(x), k); };
  NelderMeadOptions nm;
  nm.max_evaluations = options_.refine_evaluations;
  double width = 0.0;
  for (std::size_t c = 0; c < d; ++c) width = std::max(width, bounds_.hi(c) - bounds_.lo(c));
  nm.initial_step = options_.refine_step * width;
  nm.value_tolerance = 1e-12;
  for (std::size_t s = 0; s < top && options_.refine_evaluations > 0; ++s) {
    std::vector<double> start(d);
    for (std::size_t c = 0; c < d; ++c) start[c] = candidates(static_cast<Eigen::Index>(order[s]), static_cast<Eigen::Index>(c));
    auto result = nelder_mead(objective, start, nm);
    if (result.value < best_value) {
      best_value = result.value;
      best = bounds_.clamp(result.x);
    }
  }
  return bounds_.clamp(best);
}

void OptimizerState::advance() {
  if (t_ >= options_.iterations) throw StateError("optimizer already ran all iterations");
  ++t_;
}

const Observation& OptimizerState::best_point() const {
  if (data_.empty()) throw StateError("best_point needs at least one observation");
  std::size_t best = 0;
  for (std::size_t i = 1; i < data_.size(); ++i)
    if (data_[i].cost < data_[best].cost) best = i;
  return data_[best];
}

}  // namespace bois
