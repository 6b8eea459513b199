#pragma once

#include <functional>
#include <vector>

namespace islt {

// Piecewise Chebyshev interpolant on [0, n_panels * width]; zero beyond.
class PiecewiseChebyshev {
 public:
  PiecewiseChebyshev() = default;

  // Samples f at Chebyshev points of each panel. Panels are appended until
  // max|f| on a panel drops below `floor` (or max_panels is reached).
  static PiecewiseChebyshev fit(const std::function<double(double)>& f, double width, int degree,
                                double floor, int max_panels);

  double operator()(double x) const;
  double end() const noexcept { return width_ * static_cast<double>(panels_); }
  int panels() const noexcept { return panels_; }
  int degree() const noexcept { return degree_; }

 private:
  double width_ = 1.0;
  int degree_ = 0;
  int panels_ = 0;
  std::vector<double> coef_;  // panels_ * (degree_ + 1)
};

}  // namespace islt
