#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace islt {

// Argument outside the mathematical domain of an operation (t <= 0, off-lattice point, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// An integral did not reach its requested tolerance.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double achieved, double requested)
      : std::runtime_error(what + " (achieved " + format(achieved) + ", requested " +
                           format(requested) + ")"),
        achieved_(achieved),
        requested_(requested) {}

  double achieved() const noexcept { return achieved_; }
  double requested() const noexcept { return requested_; }

 private:
  static std::string format(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
  }
  double achieved_;
  double requested_;
};

// A table or stencil would exceed its budget, or a lookup fell outside a table.
class SizeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// NaN/overflow or a diverging iteration inside a simulation.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace islt
