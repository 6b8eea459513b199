#include "islt/params.hpp"

#include <charconv>
#include <cmath>
#include <string>

#include "islt/errors.hpp"

namespace islt {

ModelParams ModelParams::make(int k, int d) {
  if (k < 0 || k > kMaxLevel) {
    throw DomainError("beta = 1/2^k supported for 0 <= k <= " + std::to_string(kMaxLevel) +
                      ", got k = " + std::to_string(k));
  }
  if (d < 1 || d > kMaxDimension) {
    throw DomainError("dimension must be in [1, " + std::to_string(kMaxDimension) +
                      "], got " + std::to_string(d));
  }
  return ModelParams(k, d);
}

void ModelParams::require_sie_dimension(std::string_view op) const {
  if (!sie_dimension()) {
    throw DomainError(std::string(op) + " requires d in {1,2,3}, got d = " +
                      std::to_string(d_));
  }
}

std::string ModelParams::beta_string() const {
  return k_ == 0 ? std::string("1") : "1/" + std::to_string(nu());
}

namespace {

int parse_int(std::string_view s) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw DomainError("cannot parse integer from '" + std::string(s) + "'");
  }
  return value;
}

}  // namespace

int parse_beta_level(std::string_view text) {
  if (text.find('.') != std::string_view::npos || text.find('e') != std::string_view::npos) {
    throw DomainError("floating-point beta '" + std::string(text) +
                      "' rejected; use 1, 1/2, 1/4, 1/8 or 1/2^k");
  }
  if (text == "1") return 0;
  if (text.substr(0, 2) != "1/") {
    throw DomainError("beta must look like 1/2^k, got '" + std::string(text) + "'");
  }
  std::string_view rest = text.substr(2);
  int k = 0;
  if (rest.substr(0, 2) == "2^") {
    k = parse_int(rest.substr(2));
  } else {
    int denom = parse_int(rest);
    if (denom <= 0 || (denom & (denom - 1)) != 0) {
      throw DomainError("beta denominator must be a power of two, got '" + std::string(text) +
                        "'");
    }
    while ((1 << k) < denom) ++k;
  }
  if (k < 0 || k > ModelParams::kMaxLevel) {
    throw DomainError("beta = " + std::string(text) + " outside supported range 1/2^k, k <= " +
                      std::to_string(ModelParams::kMaxLevel));
  }
  return k;
}

Lattice::Lattice(double delta, int d, double radius) : delta_(delta), d_(d), radius_(radius) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw DomainError("lattice delta must be > 0");
  if (d < 1 || d > ModelParams::kMaxDimension) throw DomainError("lattice dimension out of range");
  if (!(radius > 0.0)) throw DomainError("lattice radius must be > 0");
}

int Lattice::half_width() const noexcept {
  return static_cast<int>(std::floor(radius_ / delta_ + 1e-9));
}

std::int64_t Lattice::site_count() const noexcept {
  std::int64_t n = 1;
  for (int i = 0; i < d_; ++i) n *= sites_per_axis();
  return n;
}

long Lattice::to_steps(double coordinate) const {
  double steps = coordinate / delta_;
  double rounded = std::round(steps);
  if (std::abs(steps - rounded) > 1e-9 * std::max(1.0, std::abs(steps))) {
    throw DomainError("point " + std::to_string(coordinate) + " is not on the lattice delta = " +
                      std::to_string(delta_));
  }
  return static_cast<long>(rounded);
}

std::int64_t Lattice::reciprocal_denominator() const noexcept {
  double q = 1.0 / delta_;
  double r = std::round(q);
  if (r >= 1.0 && std::abs(q - r) < 1e-9 * r) return static_cast<std::int64_t>(r);
  return 0;
}

}  // namespace islt
