#include <doctest.h>

#include "islt/errors.hpp"
#include "islt/params.hpp"

using namespace islt;

TEST_CASE("beta strings map to levels") {
  CHECK(parse_beta_level("1") == 0);
  CHECK(parse_beta_level("1/2") == 1);
  CHECK(parse_beta_level("1/4") == 2);
  CHECK(parse_beta_level("1/8") == 3);
  CHECK(parse_beta_level("1/2^2") == 2);
  CHECK(parse_beta_level("1/2^0") == 0);
}

TEST_CASE("unsupported beta input is rejected") {
  CHECK_THROWS_AS(parse_beta_level("0.5"), DomainError);
  CHECK_THROWS_AS(parse_beta_level("1e-1"), DomainError);
  CHECK_THROWS_AS(parse_beta_level("1/3"), DomainError);
  CHECK_THROWS_AS(parse_beta_level("1/16"), DomainError);
  CHECK_THROWS_AS(parse_beta_level("2"), DomainError);
  CHECK_THROWS_AS(parse_beta_level("1/2^x"), DomainError);
}

TEST_CASE("model parameters") {
  const ModelParams p = ModelParams::make(2, 3);
  CHECK(p.nu() == 4);
  CHECK(p.beta() == 0.25);
  CHECK(p.beta_string() == "1/4");
  CHECK_FALSE(p.degenerate());
  CHECK(ModelParams::make(0, 1).degenerate());
  CHECK(ModelParams::make(0, 1).beta_string() == "1");
  CHECK(p.sie_dimension());
  CHECK_FALSE(ModelParams::make(1, 4).sie_dimension());
  CHECK_THROWS_AS(ModelParams::make(1, 4).require_sie_dimension("test"), DomainError);
  CHECK_THROWS_AS(ModelParams::make(4, 1), DomainError);
  CHECK_THROWS_AS(ModelParams::make(1, 0), DomainError);
  CHECK(p.with_dimension(1).dimension() == 1);
}

TEST_CASE("lattice geometry") {
  const Lattice lat(0.05, 1, 2.0);
  CHECK(lat.half_width() == 40);
  CHECK(lat.sites_per_axis() == 81);
  CHECK(lat.site_count() == 81);
  CHECK(lat.reciprocal_denominator() == 20);
  CHECK(lat.to_steps(0.35) == 7);
  CHECK_THROWS_AS(lat.to_steps(0.33), DomainError);

  const Lattice lat3(0.2, 3, 1.0);
  CHECK(lat3.half_width() == 5);
  CHECK(lat3.site_count() == 11 * 11 * 11);
  CHECK(Lattice(0.3, 1).reciprocal_denominator() == 0);
  CHECK_THROWS_AS(Lattice(0.0, 1), DomainError);
}
