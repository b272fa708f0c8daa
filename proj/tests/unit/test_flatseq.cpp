#include "coded_aperture/flatseq.hpp"
#include "coded_aperture/waterfill.hpp"

#include "../oracles.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <set>

using namespace cap;

namespace {

double flat_value(const Aperture& a) {
  const double k = a.values.sum();
  const double p = static_cast<double>(a.size());
  return k * (p - k) / (p - 1);
}

}  // namespace

TEST_CASE("Legendre sequence for p = 7") {
  const Aperture a = residue_sequence({7, 2, false});
  CHECK(to_std(a.values) == std::vector<double>{0, 1, 1, 0, 1, 0, 0});
  const auto p = oracle::power(to_std(a.values));
  CHECK(p[0] == doctest::Approx(9.0));
  for (std::size_t j = 1; j < 7; ++j) CHECK(p[j] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("difference-set identity for every family below 1000") {
  for (int e : {2, 4, 8}) {
    for (const ResidueFamily& f : find_residue_lengths(e, 1000)) {
      const Aperture a = residue_sequence(f);
      const double k = static_cast<double>(f.ones());
      CHECK(a.values.sum() == k);
      const double lambda = k * (k - 1) / (f.p - 1.0);
      const auto p = oracle::power(to_std(a.values));
      CHECK(p[0] == doctest::Approx(k * k));
      for (std::size_t j = 1; j < p.size(); ++j) CHECK(rel_err(p[j], k - lambda) < 1e-6);
      CHECK(rel_err(flat_value(a), k - lambda) < 1e-12);
    }
  }
}

TEST_CASE("octic and quartic examples") {
  const Aperture a73 = residue_sequence({73, 8, false});
  CHECK(a73.values.sum() == 9.0);
  const Aperture a677 = residue_sequence({677, 4, false});
  CHECK(a677.values.sum() == 169.0);
  const Vec p = a677.power();
  for (Index j = 1; j < 677; ++j) CHECK(rel_err(p(j), flat_value(a677)) < 1e-6);
  // 26041 = 8 * 57^2 + 49 = 64 * 20^2 + 441: octic with zero.
  const ResidueFamily big{26041, 8, true};
  CHECK(big.valid());
  CHECK(big.ones() == 3256);
}

TEST_CASE("invalid families are rejected") {
  CHECK_THROWS(residue_sequence({13, 2, false}));  // 13 = 1 mod 4
  CHECK_THROWS(residue_sequence({15, 2, false}));
  CHECK_THROWS(residue_sequence({17, 4, false}));  // 17 = 4 * 2^2 + 1, x even
  CHECK_NOTHROW(residue_sequence({37, 4, false}));
}

TEST_CASE("quadratic lengths match a sieve") {
  std::vector<std::uint64_t> got;
  for (const auto& f : find_residue_lengths(2, 30)) got.push_back(f.p);
  CHECK(got == std::vector<std::uint64_t>{3, 7, 11, 19, 23});
  std::vector<std::uint64_t> ref;
  for (std::uint64_t p : oracle::primes_upto(5000))
    if (p % 4 == 3) ref.push_back(p);
  got.clear();
  for (const auto& f : find_residue_lengths(2, 5000)) got.push_back(f.p);
  CHECK(got == ref);
}

TEST_CASE("quartic and octic lengths match direct enumeration") {
  std::set<std::uint64_t> ref4, ref4z, ref8;
  for (std::uint64_t x = 1; 4 * x * x + 9 <= 200000; x += 2) {
    if (oracle::is_prime(4 * x * x + 1)) ref4.insert(4 * x * x + 1);
    if (oracle::is_prime(4 * x * x + 9)) ref4z.insert(4 * x * x + 9);
  }
  std::set<std::uint64_t> got4, got4z;
  for (const auto& f : find_residue_lengths(4, 200000)) (f.include_zero ? got4z : got4).insert(f.p);
  CHECK(got4 == ref4);
  CHECK(got4z == ref4z);

  for (std::uint64_t a = 1; 8 * a * a + 1 <= 1000000; a += 2) {
    const std::uint64_t p = 8 * a * a + 1;
    if (!oracle::is_prime(p) || (p - 9) % 64) continue;
    const auto b2 = (p - 9) / 64;
    const auto b = static_cast<std::uint64_t>(std::llround(std::sqrt(double(b2))));
    if (b * b == b2 && b % 2 == 1) ref8.insert(p);
  }
  std::set<std::uint64_t> got8;
  for (const auto& f : find_residue_lengths(8, 1000000, false)) got8.insert(f.p);
  CHECK(got8 == ref8);
  CHECK(got8 == std::set<std::uint64_t>{73});
}

TEST_CASE("primality and modular powers") {
  const auto primes = oracle::primes_upto(20000);
  const std::set<std::uint64_t> ps(primes.begin(), primes.end());
  for (std::uint64_t n = 0; n <= 20000; ++n) CHECK(is_prime(n) == (ps.count(n) == 1));
  CHECK(is_prime(1000000007ULL));
  CHECK_FALSE(is_prime(1000000007ULL * 3));
  CHECK(pow_mod(3, 200, 1000000007ULL) == 136318165ULL);
  CHECK(pow_mod(2, 10, 1000) == 24);
}

TEST_CASE("loss factor") {
  CHECK(loss_factor(0.0, 0.5) == doctest::Approx(2.0));
  CHECK(loss_factor(0.0, 0.25) == doctest::Approx(4.0 / 3));
  CHECK(loss_factor(0.0, 0.125) == doctest::Approx(8.0 / 7));
  // At a = 0 the supremum is a limit at rho -> 0.
  CHECK(penalty_peak(0.0) == 0.0);
  CHECK(loss_factor(0.0, 1e-9) == doctest::Approx(1.0));
  for (double a : {0.01, 0.5, 1.0, 10.0, 1e3}) {
    const double x = penalty_peak(a);
    CHECK(loss_factor(a, x) == doctest::Approx(1.0));
    // sup by dense scan.
    double sup = 0;
    for (int i = 1; i < 100000; ++i) sup = std::max(sup, penalty_curve(a, i / 100000.0));
    CHECK(penalty_curve(a, x) >= sup - 1e-12);
    for (double rho : {0.05, 0.2, 0.5, 0.9}) CHECK(loss_factor(a, rho) >= 1.0);
  }
  CHECK(penalty_peak(1.0) == doctest::Approx(std::sqrt(2.0) - 1));
  CHECK(loss_factor(std::numeric_limits<double>::infinity(), 0.5) == doctest::Approx(1.0));
}

TEST_CASE("worst case penalty constants") {
  const std::vector<double> s1{0.5}, s2{0.25, 0.5}, s3{0.125, 0.25, 0.5};
  CHECK(std::abs(worst_case_penalty(s1) - 2.0) < 1e-4);
  CHECK(std::abs(worst_case_penalty(s2) - 4.0 / 3) < 1e-4);
  CHECK(std::abs(worst_case_penalty(s3) - 8.0 / 7) < 1e-4);
}

TEST_CASE("flat design") {
  ImagingConfig c;
  c.n = 677;
  c.t = 1e5;
  c.W = c.J = 0.001;
  const Vec d = sample_prior(ScenePrior::iid(1.0), 677);
  const FlatDesign f = flat_design(c, d);
  CHECK(f.family.e == 4);
  CHECK(f.aperture.values.sum() == 169.0);
  CHECK(f.certificate.exposure_penalty == doctest::Approx(loss_factor(1.0, 169.0 / 677)));
  CHECK(f.certificate.spectral_ok);
  // rho = 1/4 sits below rho* ~ 0.414: every j >= 1 bin meets its target,
  // but the DC bin falls short by O(1/n^2) and the strict check reports it.
  CHECK_FALSE(f.certificate.lmmse_ok);
  CHECK(f.certificate.lmmse_at_penalty <= f.certificate.bound_at_t * (1 + 1.0 / (677.0 * 677.0)));
  CHECK(f.certificate.warnings.size() == 1);

  ImagingConfig c103 = c;
  c103.n = 103;
  const FlatDesign q = flat_design(c103, sample_prior(ScenePrior::iid(1.0), 103));
  CHECK(q.certificate.pass);
  CHECK(q.certificate.warnings.empty());

  ImagingConfig c7 = c;
  c7.n = 7;
  c7.W = 1e-5;
  c7.J = 1e-3;
  const FlatDesign f7 = flat_design(c7, sample_prior(ScenePrior::iid(1.0), 7));
  CHECK(f7.family.e == 2);
  CHECK(f7.certificate.exposure_penalty == doctest::Approx(loss_factor(0.01, 3.0 / 7)));

  ImagingConfig c8 = c;
  c8.n = 8;
  CHECK_THROWS(flat_design(c8, sample_prior(ScenePrior::iid(1.0), 8)));

  const FlatDesign band = flat_design(c, sample_prior(ScenePrior::bandlimited(1, 0.2, 0.05), 677));
  CHECK_FALSE(band.certificate.warnings.empty());
}

TEST_CASE("flat masks meet the lower bound at the penalized exposure") {
  // Exposure 2t against the bound at t, quadratic lengths, iid prior.
  for (std::uint64_t p : {7ULL, 11ULL, 19ULL, 43ULL, 103ULL}) {
    const Aperture a = residue_sequence({p, 2, false});
    const Vec d = sample_prior(ScenePrior::iid(1.0), static_cast<Index>(p));
    for (double t : {10.0, 1e3, 1e5, 1e7}) {
      for (double W : {0.0, 1e-3}) {
        ImagingConfig c;
        c.n = static_cast<Index>(p);
        c.W = W;
        c.J = 1e-3;
        c.t = t;
        const double bound = optimal_rho(c, d).bound;
        c.t = 2 * t;
        CHECK(lmmse(c, d, a) <= bound * (1 + 1e-12));
      }
    }
  }
}
