#include "islt/fit.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>

#include "islt/errors.hpp"

namespace islt {

ScalingFit fit_loglog(std::span<const double> lags, std::span<const double> values) {
  const std::size_t n = lags.size();
  if (n != values.size()) throw DomainError("fit_loglog: lags and values differ in length");
  if (n < 3) throw DomainError("fit_loglog: need at least 3 points");
  ScalingFit fit;
  fit.lags.assign(lags.begin(), lags.end());
  fit.values.assign(values.begin(), values.end());
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(lags[i] > 0.0) || (i > 0 && !(lags[i] > lags[i - 1]))) {
      throw DomainError("fit_loglog: lags must be positive and strictly increasing");
    }
    if (!(values[i] > 0.0) || !std::isfinite(values[i])) {
      throw DomainError("fit_loglog: values must be positive and finite");
    }
    x[i] = std::log(lags[i]);
    y[i] = std::log(values[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = y[i] - fit.intercept - fit.slope * x[i];
    sse += r * r;
  }
  const double dof = static_cast<double>(n - 2);
  const double se = std::sqrt(sse / dof / sxx);
  boost::math::students_t dist(dof);
  fit.half_width = boost::math::quantile(boost::math::complement(dist, 0.025)) * se;
  return fit;
}

}  // namespace islt
