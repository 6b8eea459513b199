#include "islt/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>

#include "islt/errors.hpp"

namespace islt {

namespace bq = boost::math::quadrature;

const Rule& gauss_legendre15() {
  static const Rule rule = [] {
    using G = bq::gauss<double, 15>;
    const auto& a = G::abscissa();
    const auto& w = G::weights();
    Rule r;
    // Boost stores the non-negative half; a[0] == 0 for odd order.
    for (std::size_t i = a.size(); i-- > 1;) {
      r.x.push_back(-a[i]);
      r.w.push_back(w[i]);
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
      r.x.push_back(a[i]);
      r.w.push_back(w[i]);
    }
    return r;
  }();
  return rule;
}

void append_panel(Rule& rule, double a, double b, const Rule& base) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  for (std::size_t i = 0; i < base.size(); ++i) {
    rule.x.push_back(mid + half * base.x[i]);
    rule.w.push_back(half * base.w[i]);
  }
}

Rule graded_rule(double lo, double knee, double hi, double ratio, double width,
                 bool include_zero) {
  if (!(lo > 0.0) || !(ratio > 1.0) || !(width > 0.0) || !(hi > lo)) {
    throw DomainError("graded_rule: invalid grading parameters");
  }
  Rule r;
  if (include_zero) append_panel(r, 0.0, lo);
  double a = lo;
  const double top = std::min(knee, hi);
  while (a < top * (1.0 - 1e-12)) {
    double b = std::min(a * ratio, top);
    append_panel(r, a, b);
    a = b;
  }
  if (hi > a) {
    int n = static_cast<int>(std::ceil((hi - a) / width - 1e-12));
    double step = (hi - a) / n;
    for (int i = 0; i < n; ++i) append_panel(r, a + i * step, i + 1 == n ? hi : a + (i + 1) * step);
  }
  return r;
}

namespace {

double gk(const std::function<double(double)>& f, double a, double b, double tol, double* l1) {
  double err = 0.0;
  if (std::isfinite(a) && std::isfinite(b)) {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    auto g = [&](double u) { return half * f(mid + half * u); };
    return bq::gauss_kronrod<double, 31>::integrate(g, -1.0, 1.0, 15, tol, &err, l1);
  }
  return bq::gauss_kronrod<double, 31>::integrate(f, a, b, 15, tol, &err, l1);
}

}  // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a, double b, double tol,
                          double* error_out, double abs_floor) {
  // Boost's own error estimate is not scaled consistently across sub-panels
  // (1.74), so the achieved error is measured by re-integrating the two halves.
  double l1 = 0.0;
  double l1a = 0.0;
  double l1b = 0.0;
  const double whole = gk(f, a, b, tol, &l1);
  double mid = 0.5 * (a + b);
  if (!std::isfinite(mid)) mid = std::isfinite(a) ? a + 1.0 : (std::isfinite(b) ? b - 1.0 : 0.0);
  const double halves = gk(f, a, mid, tol, &l1a) + gk(f, mid, b, tol, &l1b);
  const double err = std::abs(whole - halves);
  if (error_out) *error_out = err;
  const double scale = std::max({l1, l1a + l1b, std::numeric_limits<double>::min()});
  const double floor = std::max(tol, 100.0 * std::numeric_limits<double>::epsilon());
  if (!std::isfinite(halves) || err > std::max(10.0 * floor * scale, abs_floor) + 1e-300) {
    throw QuadratureError("adaptive Gauss-Kronrod did not converge", err / scale, tol);
  }
  return halves;
}

double integrate_adaptive_inf(const std::function<double(double)>& f, double a, double tol,
                              double* error_out, double abs_floor) {
  return integrate_adaptive(f, a, std::numeric_limits<double>::infinity(), tol, error_out, abs_floor);
}

}  // namespace islt
