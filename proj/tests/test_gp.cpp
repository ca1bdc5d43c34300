#include <doctest.h>

#include <cmath>
#include <random>

#include "bois/error.hpp"
#include "bois/gp.hpp"

using namespace bois;

namespace {

struct Data {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
};

Data sample_data(int m, int d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 6.0);
  Data data{Eigen::MatrixXd(m, d), Eigen::VectorXd(m)};
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    for (int k = 0; k < d; ++k) {
      data.x(i, k) = u(rng);
      s += std::sin(data.x(i, k)) + 0.1 * k * data.x(i, k);
    }
    data.y[i] = 3.0 * s - 1.0;
  }
  return data;
}

// Written out independently of the library's kernel function.
double kernel(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b, double sf2, double l) {
  const double r = (a - b).norm();
  const double z = std::sqrt(5.0) * r / l;
  return sf2 * (1.0 + z + z * z / 3.0) * std::exp(-z);
}

// Posterior from an explicit matrix inverse in raw target units.
Prediction dense_posterior(const Data& data, const KernelParams& raw, double offset, const Eigen::RowVectorXd& q) {
  const auto m = data.x.rows();
  Eigen::MatrixXd k(m, m);
  Eigen::VectorXd ks(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    ks[i] = kernel(data.x.row(i), q, raw.signal_variance, raw.lengthscale);
    for (Eigen::Index j = 0; j < m; ++j)
      k(i, j) = kernel(data.x.row(i), data.x.row(j), raw.signal_variance, raw.lengthscale) +
                (i == j ? raw.noise_variance : 0.0);
  }
  const Eigen::MatrixXd inv = k.fullPivLu().inverse();
  const Eigen::VectorXd centred = data.y.array() - offset;
  return {offset + ks.dot(inv * centred), raw.signal_variance - ks.dot(inv * ks)};
}

}  // namespace

TEST_CASE("Matern-5/2 values") {
  const KernelParams p{2.5, 0.7, 0.0};
  CHECK(matern52(0.0, p) == 2.5);
  const double r = 0.4, z = std::sqrt(5.0) * r / 0.7;
  CHECK(matern52(r, p) == doctest::Approx(2.5 * (1 + z + z * z / 3) * std::exp(-z)).epsilon(1e-14));
  double last = matern52(0.0, p);
  for (double x = 0.05; x < 5.0; x += 0.05) {
    const double v = matern52(x, p);
    CHECK(v < last);
    CHECK(v > 0.0);
    last = v;
  }
}

TEST_CASE("standardization") {
  Eigen::MatrixXd x(3, 1);
  x << 0.0, 1.0, 2.0;
  Eigen::VectorXd y(3);
  y << 1.0, 2.0, 6.0;
  const auto m = SurrogateModel::condition(x, y, {1.0, 1.0, 1e-6});
  CHECK(m.target_offset() == doctest::Approx(3.0));
  CHECK(m.target_scale() == doctest::Approx(std::sqrt(14.0 / 3.0)));
  const auto flat = SurrogateModel::condition(x, Eigen::VectorXd::Constant(3, 4.0), {1.0, 1.0, 1e-6});
  CHECK(flat.target_scale() == 1.0);
  CHECK(flat.predict(std::vector<double>{7.0}).mean == doctest::Approx(4.0));
}

TEST_CASE("noiseless interpolation at training points") {
  std::mt19937_64 rng(31);
  const auto data = sample_data(12, 3, rng);
  const auto m = SurrogateModel::condition(data.x, data.y, {1.0, 1.5, 0.0});
  for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
    Eigen::RowVectorXd row = data.x.row(i);
    std::vector<double> qv(row.data(), row.data() + row.size());
    const auto p = m.predict(qv);
    CHECK(std::abs(p.mean - data.y[i]) < 1e-8);
    CHECK(p.variance < 1e-8);
  }
}

TEST_CASE("posterior matches a dense inverse") {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 5; ++trial) {
    const auto data = sample_data(5, 2, rng);
    const KernelParams p{0.8 + 0.3 * trial, 0.6 + 0.2 * trial, 1e-3 * trial};
    const auto m = SurrogateModel::condition(data.x, data.y, p);
    const auto raw = m.output_params();
    std::uniform_real_distribution<double> u(0.0, 6.0);
    for (int q = 0; q < 20; ++q) {
      Eigen::RowVectorXd point(2);
      point << u(rng), u(rng);
      const auto want = dense_posterior(data, raw, m.target_offset(), point);
      const auto got = m.predict(std::vector<double>{point[0], point[1]});
      CHECK(std::abs(got.mean - want.mean) < 1e-8);
      CHECK(std::abs(got.variance - want.variance) < 1e-8);
    }
  }
}

TEST_CASE("batched and single predictions agree") {
  std::mt19937_64 rng(33);
  const auto data = sample_data(30, 4, rng);
  const auto m = SurrogateModel::condition(data.x, data.y, {1.2, 2.0, 1e-6});
  Eigen::MatrixXd q = (Eigen::MatrixXd::Random(50, 4).array() + 1.0) * 3.0;
  Eigen::VectorXd mean, var;
  m.predict_batch(q, mean, var);
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    const auto p = m.predict(std::vector<double>{q(i, 0), q(i, 1), q(i, 2), q(i, 3)});
    CHECK(mean[i] == doctest::Approx(p.mean).epsilon(1e-10));
    CHECK(var[i] == doctest::Approx(p.variance).epsilon(1e-8).scale(1e-10));
  }
}

TEST_CASE("posterior variance is bounded by the prior") {
  std::mt19937_64 rng(34);
  const auto data = sample_data(40, 3, rng);
  FitOptions fo;
  Rng fit_rng(1);
  const auto m = fit(data.x, data.y, fo, fit_rng);
  const auto raw = m.output_params();
  std::uniform_real_distribution<double> u(-2.0, 8.0);
  for (int i = 0; i < 1000; ++i) {
    const auto p = m.predict(std::vector<double>{u(rng), u(rng), u(rng)});
    CHECK(p.variance >= 0.0);
    CHECK(p.variance <= raw.signal_variance + raw.noise_variance + 1e-8);
  }
}

TEST_CASE("adding data never raises the variance") {
  std::mt19937_64 rng(35);
  std::uniform_real_distribution<double> u(0.0, 6.0);
  const KernelParams p{1.0, 1.3, 1e-4};
  for (int trial = 0; trial < 20; ++trial) {
    auto data = sample_data(8, 2, rng);
    // Fixed hyperparameters in raw units: condition on scaled copies so the
    // standardization does not change between the two models.
    Eigen::VectorXd y = Eigen::VectorXd::Zero(9);
    Eigen::MatrixXd x(9, 2);
    x.topRows(8) = data.x;
    x.row(8) << u(rng), u(rng);
    y.head(8) = data.y;
    y[8] = data.y.mean();
    const auto before = SurrogateModel::condition(data.x, data.y, p);
    const auto raw = before.output_params();
    // Rebuild the nine-point model with identical raw hyperparameters.
    auto after = SurrogateModel::condition(x, y, p);
    const double ratio = before.target_scale() / after.target_scale();
    after = SurrogateModel::condition(x, y, {p.signal_variance * ratio * ratio, p.lengthscale, p.noise_variance * ratio * ratio});
    CHECK(after.output_params().signal_variance == doctest::Approx(raw.signal_variance).epsilon(1e-12));
    for (int q = 0; q < 25; ++q) {
      const std::vector<double> query{u(rng), u(rng)};
      CHECK(after.predict(query).variance <= before.predict(query).variance + 1e-12);
    }
  }
}

TEST_CASE("fit never ends below any of its starts") {
  std::mt19937_64 rng(36);
  const auto data = sample_data(25, 2, rng);
  for (bool fixed : {false, true}) {
    FitOptions fo;
    if (fixed) fo.fixed_noise = 1e-8;
    Rng fit_rng(7);
    FitReport report;
    const auto m = fit(data.x, data.y, fo, fit_rng, &report);
    REQUIRE(report.start_lml.size() == 5);
    for (std::size_t s = 0; s < 5; ++s) {
      CHECK(report.final_lml[s] >= report.start_lml[s] - 1e-12);
      CHECK(report.best_lml >= report.start_lml[s] - 1e-9);
    }
    CHECK(m.log_marginal_likelihood() == doctest::Approx(report.best_lml));
    if (fixed) CHECK(m.params().noise_variance == 1e-8);
    const auto& q = m.params();
    CHECK(q.signal_variance >= 1e-6);
    CHECK(q.signal_variance <= 1e6);
    CHECK(q.lengthscale >= 1e-6);
    CHECK(q.lengthscale <= 1e6);
    CHECK(q.noise_variance >= 1e-10);
    CHECK(q.noise_variance <= 1e2);
  }
}

TEST_CASE("fit is deterministic for a fixed stream and uses the warm start") {
  std::mt19937_64 rng(37);
  const auto data = sample_data(15, 2, rng);
  FitOptions fo;
  Rng a(3), b(3);
  const auto ma = fit(data.x, data.y, fo, a);
  const auto mb = fit(data.x, data.y, fo, b);
  CHECK(ma.params().lengthscale == mb.params().lengthscale);
  CHECK(ma.params().signal_variance == mb.params().signal_variance);

  fo.warm_start = KernelParams{2.0, 3.0, 1e-3};
  FitReport report;
  Rng c(3);
  fit(data.x, data.y, fo, c, &report);
  REQUIRE(report.start_lml.size() == 5);
  const auto warm = SurrogateModel::condition(data.x, data.y, *fo.warm_start);
  CHECK(report.start_lml[0] == doctest::Approx(warm.log_marginal_likelihood()).epsilon(1e-12));
}

TEST_CASE("log marginal likelihood formula") {
  Eigen::MatrixXd x(2, 1);
  x << 0.0, 1.0;
  Eigen::VectorXd y(2);
  y << -1.0, 1.0;  // already standardized
  const KernelParams p{1.0, 1.0, 0.1};
  const auto m = SurrogateModel::condition(x, y, p);
  Eigen::Matrix2d k;
  const double c = matern52(1.0, p);
  k << 1.1, c, c, 1.1;
  const double want = -0.5 * y.dot(k.inverse() * y) - 0.5 * std::log(k.determinant()) - std::log(2 * M_PI);
  CHECK(m.log_marginal_likelihood() == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("degenerate data") {
  Eigen::MatrixXd x(2, 1);
  x << 1.0, 1.0;
  Eigen::VectorXd y(2);
  y << 0.0, 1.0;
  CHECK_THROWS_AS(SurrogateModel::condition(x, y, {1.0, 1.0, 0.0}), DegenerateDataError);
  // Duplicates with equal targets survive through jitter.
  Eigen::VectorXd same(2);
  same << 0.5, 0.5;
  CHECK_NOTHROW(SurrogateModel::condition(x, same, {1.0, 1.0, 0.0}));
  // With noise, conflicting duplicates are fine.
  CHECK_NOTHROW(SurrogateModel::condition(x, y, {1.0, 1.0, 1e-3}));
  Rng rng(1);
  CHECK_THROWS_AS(fit(x.topRows(1), y.head(1), FitOptions{}, rng), InvalidArgument);
}

TEST_CASE("prior model") {
  const SurrogateModel prior(2, {3.0, 1.0, 0.0});
  const auto p = prior.predict(std::vector<double>{0.1, 0.2});
  CHECK(p.mean == 0.0);
  CHECK(p.variance == 3.0);
  CHECK_THROWS_AS(prior.predict(std::vector<double>{0.1}), DimensionError);
}
