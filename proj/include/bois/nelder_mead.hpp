#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace bois {

struct NelderMeadOptions {
  std::size_t max_evaluations = 200;
  /// Edge length of the initial simplex along each axis.
  double initial_step = 0.1;
  /// Stop once the spread of simplex values falls below this.
  double value_tolerance = 1e-12;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t evaluations = 0;
};

/// Derivative-free simplex minimization (standard reflection / expansion /
/// contraction / shrink coefficients 1, 2, 1/2, 1/2).
NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& objective,
                             std::vector<double> start, const NelderMeadOptions& options = {});

}  // namespace bois
