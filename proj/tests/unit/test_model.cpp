#include "coded_aperture/model.hpp"
#include "coded_aperture/rng.hpp"
#include "coded_aperture/waterfill.hpp"

#include "../oracles.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace cap;

namespace {

ImagingConfig cfg(Index n, double t, double W = 0.001, double J = 0.001) {
  ImagingConfig c;
  c.n = n;
  c.t = t;
  c.W = W;
  c.J = J;
  return c;
}

const std::vector<double> kPaperMask13{1, 0, 1, 0, 0, 1, 1, 0, 1, 1, 0, 0, 0};

}  // namespace

TEST_CASE("iid prior samples to theta / n") {
  const Vec d = sample_prior(ScenePrior::iid(1.0), 4);
  for (Index i = 0; i < 4; ++i) CHECK(d(i) == 0.25);
}

TEST_CASE("bandlimited prior follows the band and ramp") {
  const ScenePrior p = ScenePrior::bandlimited(1.0, 0.02, 0.005);
  const Vec d = sample_prior(p, 677);
  for (Index i = 0; i < 677; ++i) {
    const double x = std::min(i, 677 - i) / 677.0;
    if (x <= 0.015) CHECK(d(i) == doctest::Approx(1.0 / 677));
    else if (x >= 0.025) CHECK(d(i) == 0.0);
    else {
      CHECK(d(i) > 0.0);
      CHECK(d(i) < 1.0 / 677);
      CHECK(d(i) == doctest::Approx((0.025 - x) / 0.01 / 677).epsilon(1e-9));
    }
  }
}

TEST_CASE("priors are mirror symmetric and d(0) = theta") {
  const std::vector<ScenePrior> priors{ScenePrior::iid(2.0), ScenePrior::bandlimited(1.5, 0.2, 0.1),
                                       ScenePrior::powerlaw(3.0, 1.7), ScenePrior::from_table({4.0, 2.0, 1.0, 0.5})};
  for (const ScenePrior& p : priors) {
    CHECK(p.density(0.0) == doctest::Approx(p.theta));
    for (Index n : {7, 10, 33}) {
      const Vec d = sample_prior(p, n);
      CHECK(d.minCoeff() >= 0.0);
      for (Index i = 1; i < n; ++i) CHECK(d(i) == d(n - i));
    }
  }
  const ScenePrior pl = ScenePrior::powerlaw(1.0, 2.0, 0.01);
  CHECK(pl.density(0.01) == doctest::Approx(0.25));
  const ScenePrior tab = ScenePrior::from_table({4.0, 2.0, 1.0});
  CHECK(tab.density(0.125) == doctest::Approx(3.0));
  CHECK(tab.density(0.875) == doctest::Approx(3.0));
}

TEST_CASE("invalid priors are rejected") {
  CHECK_THROWS_AS(ScenePrior::bandlimited(1.0, 0.45, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(ScenePrior::bandlimited(1.0, 0.1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(ScenePrior::from_table({1.0, -1.0}), std::invalid_argument);
  CHECK_THROWS_AS(ScenePrior::iid(-1.0), std::invalid_argument);
}

TEST_CASE("prior records parse and format") {
  const ScenePrior a = parse_prior("prior bandlimited theta=1 s=0.02 r=0.005");
  CHECK(a.kind == PriorKind::bandlimited);
  CHECK(a.s == 0.02);
  CHECK(a.r == 0.005);
  const ScenePrior b = parse_prior("powerlaw theta=2 exponent=1.5 x0=0.05");
  CHECK(b.kind == PriorKind::powerlaw);
  CHECK(b.knee == 0.05);
  const ScenePrior c = parse_prior(format_prior(b));
  CHECK(c.exponent == b.exponent);
  CHECK(c.theta == b.theta);
  CHECK_THROWS_AS(parse_prior("prior iid"), std::invalid_argument);
  CHECK_THROWS_AS(parse_prior("prior gaussian theta=1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_prior("prior iid theta=abc"), std::invalid_argument);

  const auto path = std::filesystem::temp_directory_path() / "cap_table_prior.txt";
  {
    std::ofstream out(path);
    out << "# d on [0, 1/2]\n2\n\n1\n0.5\n";
  }
  const ScenePrior t = parse_prior("prior table table=" + path.string());
  CHECK(t.theta == 2.0);
  CHECK(t.table.size() == 3);
  CHECK_THROWS_AS(parse_prior("prior table theta=2 table=" + path.string()), std::invalid_argument);
  std::filesystem::remove(path);
}

TEST_CASE("lmmse matches the direct formula") {
  const Vec d = sample_prior(ScenePrior::iid(0.01), 13);
  const Aperture a = Aperture::line(to_vec(kPaperMask13));
  const ImagingConfig c = cfg(13, 130.0);
  const double ref = oracle::lmmse(to_std(d), kPaperMask13, 130.0, 0.001, 0.001);
  CHECK(lmmse(c, d, a) == doctest::Approx(ref).epsilon(1e-12));
  // Value computed ahead of time with an independent script.
  CHECK(ref == doctest::Approx(0.0005829359913537397).epsilon(1e-12));

  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 2 + static_cast<Index>(rng.uniform() * 30);
    std::vector<double> dv(n), av(n);
    for (Index i = 0; i < n; ++i) {
      dv[i] = rng.uniform() < 0.2 ? 0.0 : rng.uniform();
      av[i] = rng.uniform();
    }
    const double t = std::pow(10.0, 4 * rng.uniform());
    CHECK(lmmse(cfg(n, t, 0.01, 0.02), to_vec(dv), Aperture::line(to_vec(av))) ==
          doctest::Approx(oracle::lmmse(dv, av, t, 0.01, 0.02)).epsilon(1e-11));
  }
}

TEST_CASE("lmmse edge cases") {
  const Vec d = sample_prior(ScenePrior::iid(1.0), 8);
  const Aperture zeros = Aperture::line(Vec::Zero(8));
  const Aperture ones = Aperture::line(Vec::Ones(8));
  CHECK(lmmse(cfg(8, 0.0), d, ones) == doctest::Approx(1.0));
  CHECK(lmmse(cfg(8, 1e4), d, zeros) == doctest::Approx(1.0));
  CHECK(lmmse(cfg(8, 1e4, 0.0, 0.0), d, zeros) == doctest::Approx(1.0));
  CHECK_THROWS_AS(lmmse(cfg(8, 1e4, 0.0, 0.0), d, ones), std::domain_error);
  LmmseOptions noiseless;
  noiseless.allow_noiseless = true;
  // The all-ones mask only resolves the DC bin.
  CHECK(lmmse(cfg(8, 1e4, 0.0, 0.0), d, ones, noiseless) == doctest::Approx(7.0 / 8));
  CHECK_THROWS_AS(lmmse(cfg(8, 1.0), d, Aperture::line(Vec::Constant(8, 1.5))), std::invalid_argument);
  CHECK_THROWS_AS(lmmse(cfg(9, 1.0), d, ones), std::invalid_argument);
}

TEST_CASE("lens benchmark") {
  const Aperture lens = Aperture::ideal_lens(16);
  CHECK(lens.lens);
  CHECK_FALSE(lens.is_mask());
  const Vec p = lens.power();
  for (Index j = 0; j < 16; ++j) CHECK(p(j) == doctest::Approx(256.0));
  const Vec d = sample_prior(ScenePrior::iid(1.0), 16);
  // Every bin gets gain t n^2 / (n (W + J)).
  const double t = 50.0;
  const double expect = 16.0 / (16.0 + t * 256.0 / (16.0 * 0.002));
  CHECK(lmmse(cfg(16, t), d, lens) == doctest::Approx(expect).epsilon(1e-12));

  // With t = log(n) n (W + J) the lens error decays with n.
  double prev = 1e9;
  for (Index n : {8, 32, 128, 512}) {
    const double tn = std::log(double(n)) * n * 0.002;
    const double v = lmmse(cfg(n, tn), sample_prior(ScenePrior::iid(1.0), n), Aperture::ideal_lens(n));
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("lmmse properties on random masks") {
  Rng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const Index n = 3 + static_cast<Index>(rng.uniform() * 40);
    Vec a(n);
    for (Index i = 0; i < n; ++i) a(i) = rng.uniform() < 0.4 ? 1.0 : 0.0;
    const Aperture mask = Aperture::line(a);
    const Vec d = sample_prior(ScenePrior::powerlaw(1.0, 1.0 + rng.uniform()), n);
    // Monotone in t, bounded by sum d.
    double prev = d.sum() + 1e-15;
    for (double t : {0.0, 1.0, 10.0, 1e3, 1e5}) {
      const double v = lmmse(cfg(n, t), d, mask);
      CHECK(v >= 0.0);
      CHECK(v <= prev);
      prev = v;
    }
    // Cyclic shift invariance.
    Vec shifted(n);
    const Index s = 1 + trial % (n - 1);
    for (Index i = 0; i < n; ++i) shifted((i + s) % n) = a(i);
    CHECK(lmmse(cfg(n, 100.0), d, Aperture::line(shifted)) ==
          doctest::Approx(lmmse(cfg(n, 100.0), d, mask)).epsilon(1e-10));
    // Scaling the prior up by c >= 1 scales the error by at most c.
    const double c = 1.0 + 5 * rng.uniform();
    CHECK(lmmse(cfg(n, 100.0), c * d, mask) <= c * lmmse(cfg(n, 100.0), d, mask) * (1 + 1e-12));
    // Waterfilling bound is sound.
    CHECK(lower_bound(cfg(n, 100.0), d, mask.rho()) <= lmmse(cfg(n, 100.0), d, mask) + 1e-9);
  }
}

TEST_CASE("random on-off masks") {
  CHECK(random_onoff(50, 0.0, 1).values.sum() == 0.0);
  CHECK(random_onoff(50, 1.0, 1).values.sum() == 50.0);
  CHECK(random_onoff(50, 0.3, 7).values == random_onoff(50, 0.3, 7).values);
  const Aperture big = random_onoff(10000, 0.3, 123);
  CHECK(big.is_binary());
  CHECK(std::abs(big.rho() - 0.3) <= 3 * std::sqrt(0.3 * 0.7 / 1e4));
  // Repeated sampling: empirical mean over 50 draws within 3 sigma of 0.3.
  double acc = 0;
  for (std::uint64_t s = 0; s < 50; ++s) acc += random_onoff(1000, 0.3, s).rho();
  CHECK(std::abs(acc / 50 - 0.3) <= 3 * std::sqrt(0.3 * 0.7 / 5e4));
}

TEST_CASE("best random on-off") {
  const Vec d = sample_prior(ScenePrior::iid(1.0), 31);
  const std::vector<double> zero{0.0};
  const auto r0 = best_random_onoff(cfg(31, 100.0), d, zero, 3, 1);
  CHECK(r0.rho_star == 0.0);
  CHECK(r0.mean_lmmse == doctest::Approx(1.0));
  const std::vector<double> grid{0.0, 0.25, 0.5, 0.75, 1.0};
  const auto a = best_random_onoff(cfg(31, 100.0), d, grid, 1, 5);
  const auto b = best_random_onoff(cfg(31, 100.0), d, grid, 1, 5);
  CHECK(a.rho_star == b.rho_star);
  CHECK(a.mean_lmmse == b.mean_lmmse);
  CHECK(a.mean_per_rho.size() == grid.size());
  CHECK_THROWS(best_random_onoff(cfg(31, 100.0), d, std::vector<double>{}, 1, 5));
}

TEST_CASE("2D aperture bookkeeping") {
  Mat g(3, 3);
  g << 1, 0, 0, 0, 1, 0, 0, 0, 0.5;
  const Aperture a = Aperture::grid(g);
  CHECK(a.dims == 2);
  CHECK(a.side == 3);
  CHECK(a.rho() == doctest::Approx(2.5 / 9));
  CHECK(a.as_grid() == g);
  const Vec d = sample_prior_2d(ScenePrior::iid(1.0), 3);
  CHECK(d.size() == 9);
  CHECK(d.sum() == doctest::Approx(1.0));
  ImagingConfig c = cfg(3, 10.0);
  c.dims = 2;
  CHECK(lmmse(c, d, a) < 1.0);
  CHECK(c.gamma(0.5) == doctest::Approx(10.0 / (9 * 0.0015)));
}
