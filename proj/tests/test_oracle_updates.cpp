#include <doctest.h>

#include "oracle.hpp"

using namespace semvb;

// Smoke-level oracle agreement; the acceptance suite runs the full 25
// instances for both models.

TEST_CASE("outcome-mixture updates match the quadrature oracle") {
  for (std::uint64_t seed : {101ull, 102ull, 103ull}) {
    const auto inst = oracle::make_outcome_instance(seed);
    const auto result =
        oracle::check_outcome_updates(inst.spec, inst.ds, inst.state);
    INFO("seed ", seed, " worst at ", result.worst_coordinate);
    CHECK(result.coordinates_checked > 10);
    CHECK(result.worst <= 1e-6);
  }
}

TEST_CASE("latent-mixture updates match the quadrature oracle") {
  for (std::uint64_t seed : {201ull, 202ull, 203ull}) {
    const auto inst = oracle::make_latent_instance(seed);
    const auto result =
        oracle::check_latent_updates(inst.spec, inst.ds, inst.state);
    INFO("seed ", seed, " worst at ", result.worst_coordinate);
    CHECK(result.coordinates_checked > 10);
    CHECK(result.worst <= 1e-6);
  }
}

TEST_CASE("ig quadrature oracle is self-consistent on closed forms") {
  // For IG(3, 5): E[1/X] = 3/5 exactly.
  const auto m = oracle::ig_numeric(3.0, 5.0);
  CHECK(m.mean_inv == doctest::Approx(0.6).epsilon(1e-9));
  CHECK(m.mean == doctest::Approx(2.5).epsilon(1e-9));
}
