#pragma once

#include <functional>
#include <vector>

namespace islt {

// A quadrature rule: nodes and weights on some interval.
struct Rule {
  std::vector<double> x;
  std::vector<double> w;

  std::size_t size() const noexcept { return x.size(); }

  template <class F>
  double apply(F&& f) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += w[i] * f(x[i]);
    return acc;
  }
};

// 15-point Gauss-Legendre rule on [-1, 1].
const Rule& gauss_legendre15();

// Appends the base rule mapped from [-1, 1] onto [a, b].
void append_panel(Rule& rule, double a, double b, const Rule& base = gauss_legendre15());

// Composite rule on [lo, hi]: geometric panels [lo*ratio^i, lo*ratio^(i+1)]
// up to `knee`, then uniform panels of width at most `width` up to hi, and a
// leading panel [0, lo] when include_zero is set.
Rule graded_rule(double lo, double knee, double hi, double ratio, double width,
                 bool include_zero = true);

// Adaptive Gauss-Kronrod (31 point) on [a, b]. Throws QuadratureError when
// the estimated error exceeds both tol * L1 and abs_floor.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double tol = 1e-10, double* error_out = nullptr, double abs_floor = 0.0);

// Same on [a, inf).
double integrate_adaptive_inf(const std::function<double(double)>& f, double a,
                              double tol = 1e-10, double* error_out = nullptr,
                              double abs_floor = 0.0);

}  // namespace islt
