#include "coded_aperture/experiments.hpp"

#include "../oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <sstream>

using namespace cap;

TEST_CASE("log spacing") {
  const auto t = log_spaced(1e2, 1e7, 26);
  CHECK(t.size() == 26);
  CHECK(t.front() == 1e2);
  CHECK(t.back() == 1e7);
  CHECK(t[5] == doctest::Approx(1e3));
  for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i] > t[i - 1]);
  CHECK_THROWS(log_spaced(0.0, 1.0, 3));
  CHECK_THROWS(log_spaced(1.0, 2.0, 1));
}

TEST_CASE("bracelets") {
  CHECK(canonical_bracelet({1, 0, 0}) == std::vector<int>{0, 0, 1});
  CHECK(canonical_bracelet({1, 1, 0, 1, 0, 0}) == canonical_bracelet({0, 0, 1, 0, 1, 1}));
  // Reflection equivalent, not rotation equivalent (chiral 0010011 vs 0011001).
  CHECK(canonical_bracelet({0, 0, 1, 0, 0, 1, 1}) == canonical_bracelet({0, 0, 1, 1, 0, 0, 1}));
}

TEST_CASE("brute force") {
  BruteForceSpec spec;
  spec.epsilons = {0.26, 0.30, 0.34};
  const BruteForceResult r = brute_force(spec);
  CHECK(r.masks == 1716);
  // Minimum over all masks recomputed directly.
  double best = 1e9;
  const std::vector<double> d(13, 0.01 / 13);
  for (std::uint32_t bits = 0; bits < (1u << 13); ++bits) {
    if (__builtin_popcount(bits) != 6) continue;
    std::vector<double> a(13);
    for (int i = 0; i < 13; ++i) a[i] = (bits >> i) & 1;
    best = std::min(best, oracle::lmmse(d, a, 130, 0.001, 0.001));
  }
  CHECK(r.best_lmmse == doctest::Approx(best).epsilon(1e-12));
  const auto reference = canonical_bracelet({1, 0, 1, 0, 0, 1, 1, 0, 1, 1, 0, 0, 0});
  CHECK(std::find(r.tied.begin(), r.tied.end(), reference) != r.tied.end());
  for (const auto& [eps, m] : r.family) CHECK(m < r.best_lmmse);

  BruteForceSpec none = spec;
  none.ones = 0;
  none.epsilons.clear();
  const BruteForceResult z = brute_force(none);
  CHECK(z.masks == 1);
  CHECK(z.best_lmmse == doctest::Approx(0.01));

  BruteForceSpec big = spec;
  big.n = 25;
  CHECK_THROWS(brute_force(big));
}

TEST_CASE("epsilon family") {
  const Aperture a = epsilon_family_mask(13, 0.3);
  CHECK(a.values(0) == 0.3);
  CHECK(a.rho() == doctest::Approx(6.0 / 13));
  CHECK(a.values(1) == doctest::Approx(0.95));
  CHECK(a.values(2) == 0.0);
  CHECK_THROWS(epsilon_family_mask(12, 0.3));
}

TEST_CASE("sweep rows") {
  SweepSpec spec;
  spec.n = 43;
  spec.t_count = 6;
  spec.trials = 2;
  const auto rows = run_sweep(spec);
  REQUIRE(rows.size() == 6);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const SweepRow& r = rows[i];
    if (i) CHECK(r.t > rows[i - 1].t);
    REQUIRE(r.lowerbound);
    REQUIRE(r.flat);
    REQUIRE(r.nazarov);
    REQUIRE(r.random_mean);
    CHECK(*r.lowerbound <= *r.flat + 1e-9);
    CHECK(*r.lowerbound <= *r.nazarov + 1e-9);
    CHECK(*r.lowerbound <= *r.random_mean + 1e-9);
  }
  std::ostringstream a, b;
  write_sweep_csv(a, spec, rows);
  write_sweep_csv(b, spec, run_sweep(spec));
  CHECK(a.str() == b.str());
  CHECK(a.str().find("t,lmmse_lowerbound,lmmse_flat,lmmse_nazarov,lmmse_random_mean,rho_star,rho_random_star,seed\n") !=
        std::string::npos);

  SweepSpec partial = spec;
  partial.methods = {"lowerbound"};
  std::ostringstream c;
  write_sweep_csv(c, partial, run_sweep(partial));
  CHECK(c.str().find(",,,") != std::string::npos);

  SweepSpec bad = spec;
  bad.methods = {"lens"};
  CHECK_THROWS(run_sweep(bad));
  bad = spec;
  bad.t_min = 0;
  CHECK_THROWS(run_sweep(bad));
}
