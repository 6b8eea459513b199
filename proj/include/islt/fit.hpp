#pragma once

#include <span>
#include <vector>

namespace islt {

// Least-squares line through (log lag, log value).
struct ScalingFit {
  std::vector<double> lags;
  std::vector<double> values;
  double slope = 0.0;
  double intercept = 0.0;
  // 95% confidence half-width of the slope (Student t with n - 2 dof).
  double half_width = 0.0;
};

// Throws DomainError for fewer than 3 points, non-increasing lags or
// non-positive values.
ScalingFit fit_loglog(std::span<const double> lags, std::span<const double> values);

}  // namespace islt
