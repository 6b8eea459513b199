#include "islt/chebyshev.hpp"

#include <boost/math/constants/constants.hpp>
#include <cmath>

#include "islt/errors.hpp"

namespace islt {

PiecewiseChebyshev PiecewiseChebyshev::fit(const std::function<double(double)>& f, double width,
                                           int degree, double floor, int max_panels) {
  const double pi = boost::math::constants::pi<double>();
  PiecewiseChebyshev c;
  c.width_ = width;
  c.degree_ = degree;
  const int n = degree + 1;
  std::vector<double> samples(n);
  for (int p = 0; p < max_panels; ++p) {
    const double a = p * width;
    double peak = 0.0;
    for (int j = 0; j < n; ++j) {
      double theta = pi * (j + 0.5) / n;
      double x = a + 0.5 * width * (1.0 + std::cos(theta));
      samples[j] = f(x);
      peak = std::max(peak, std::abs(samples[j]));
    }
    for (int m = 0; m < n; ++m) {
      double acc = 0.0;
      for (int j = 0; j < n; ++j) acc += samples[j] * std::cos(pi * m * (j + 0.5) / n);
      c.coef_.push_back((m == 0 ? 1.0 : 2.0) * acc / n);
    }
    ++c.panels_;
    if (peak < floor) return c;
  }
  throw SizeError("Chebyshev profile did not decay below floor within max_panels");
}

double PiecewiseChebyshev::operator()(double x) const {
  if (x < 0.0 || x >= end()) return 0.0;
  int p = static_cast<int>(x / width_);
  if (p >= panels_) p = panels_ - 1;
  const double u = 2.0 * (x - p * width_) / width_ - 1.0;
  const double* c = coef_.data() + static_cast<std::size_t>(p) * (degree_ + 1);
  double b1 = 0.0;
  double b2 = 0.0;
  for (int m = degree_; m >= 1; --m) {
    double b0 = 2.0 * u * b1 - b2 + c[m];
    b2 = b1;
    b1 = b0;
  }
  return u * b1 - b2 + c[0];
}

}  // namespace islt
