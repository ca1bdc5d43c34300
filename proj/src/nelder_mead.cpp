#include "bois/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace bois {

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& objective,
                             std::vector<double> start, const NelderMeadOptions& options) {
  const std::size_t dim = start.size();
  std::size_t evaluations = 0;
  auto eval = [&](const std::vector<double>& x) {
    ++evaluations;
    const double v = objective(x);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };

  std::vector<std::vector<double>> simplex(dim + 1, start);
  std::vector<double> values(dim + 1);
  values[0] = eval(start);
  for (std::size_t k = 0; k < dim && evaluations < options.max_evaluations; ++k) {
    simplex[k + 1][k] += options.initial_step;
    values[k + 1] = eval(simplex[k + 1]);
  }
  if (dim == 0 || evaluations < dim + 1) return {start, values[0], evaluations};

  std::vector<std::size_t> order(dim + 1);
  std::vector<double> centroid(dim), trial(dim), trial2(dim);
  auto point_along = [&](double coeff, std::size_t worst, std::vector<double>& out) {
    for (std::size_t k = 0; k < dim; ++k) out[k] = centroid[k] + coeff * (simplex[worst][k] - centroid[k]);
  };

  while (evaluations < options.max_evaluations) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[dim - 1];
    if (std::abs(values[worst] - values[best]) <= options.value_tolerance) break;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= dim; ++i) {
      if (i == worst) continue;
      for (std::size_t k = 0; k < dim; ++k) centroid[k] += simplex[i][k] / static_cast<double>(dim);
    }

    point_along(-1.0, worst, trial);
    const double reflected = eval(trial);
    if (reflected < values[best]) {
      point_along(-2.0, worst, trial2);
      const double expanded = evaluations < options.max_evaluations ? eval(trial2) : reflected + 1;
      if (expanded < reflected) {
        simplex[worst] = trial2;
        values[worst] = expanded;
      } else {
        simplex[worst] = trial;
        values[worst] = reflected;
      }
      continue;
    }
    if (reflected < values[second]) {
      simplex[worst] = trial;
      values[worst] = reflected;
      continue;
    }
    if (evaluations >= options.max_evaluations) break;
    const bool outside = reflected < values[worst];
    point_along(outside ? -0.5 : 0.5, worst, trial2);
    const double contracted = eval(trial2);
    if (contracted < std::min(reflected, values[worst])) {
      simplex[worst] = trial2;
      values[worst] = contracted;
      continue;
    }
    for (std::size_t i = 0; i <= dim && evaluations < options.max_evaluations; ++i) {
      if (i == best) continue;
      for (std::size_t k = 0; k < dim; ++k) simplex[i][k] = simplex[best][k] + 0.5 * (simplex[i][k] - simplex[best][k]);
      values[i] = eval(simplex[i]);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
  return {simplex[best], values[best], evaluations};
}

}  // namespace bois
