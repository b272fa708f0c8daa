#include "coded_aperture/flatseq.hpp"

#include "coded_aperture/waterfill.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>

namespace cap {

namespace {

std::string format_relative(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e relative", x);
  return buf;
}

using u64 = std::uint64_t;
using u128 = unsigned __int128;

u64 mul_mod(u64 a, u64 b, u64 m) { return static_cast<u64>(static_cast<u128>(a) * b % m); }

/// r with r*r == v, if v is a perfect square.
bool exact_sqrt(u64 v, u64& r) {
  r = static_cast<u64>(std::sqrt(static_cast<long double>(v)));
  while (r * r > v) --r;
  while ((r + 1) * (r + 1) <= v) ++r;
  return r * r == v;
}

bool odd(u64 x) { return x % 2 == 1; }

std::vector<bool> sieve(u64 limit) {
  std::vector<bool> composite(limit + 1, false);
  for (u64 i = 2; i * i <= limit; ++i) {
    if (composite[i]) continue;
    for (u64 j = i * i; j <= limit; j += i) composite[j] = true;
  }
  return composite;
}

}  // namespace

std::uint64_t pow_mod(std::uint64_t a, std::uint64_t k, std::uint64_t m) {
  u64 result = 1 % m;
  a %= m;
  while (k > 0) {
    if (k & 1) result = mul_mod(result, a, m);
    a = mul_mod(a, a, m);
    k >>= 1;
  }
  return result;
}

bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  for (u64 p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
    if (n % p == 0) return n == p;
  }
  u64 d = n - 1;
  int s = 0;
  while (d % 2 == 0) {
    d /= 2;
    ++s;
  }
  // Deterministic for all 64-bit n.
  for (u64 a : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
    u64 x = pow_mod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool witness = true;
    for (int r = 1; r < s; ++r) {
      x = mul_mod(x, x, n);
      if (x == n - 1) {
        witness = false;
        break;
      }
    }
    if (witness) return false;
  }
  return true;
}

Index ResidueFamily::ones() const {
  return static_cast<Index>((p - 1) / static_cast<u64>(e)) + (include_zero ? 1 : 0);
}

double ResidueFamily::rho() const { return static_cast<double>(ones()) / static_cast<double>(p); }

bool ResidueFamily::valid() const {
  if (p < 3 || !is_prime(p)) return false;
  u64 x = 0;
  u64 y = 0;
  switch (e) {
    case 2: return !include_zero && p % 4 == 3;
    case 4:
      if (!include_zero) return (p - 1) % 4 == 0 && exact_sqrt((p - 1) / 4, x) && odd(x);
      return p > 9 && (p - 9) % 4 == 0 && exact_sqrt((p - 9) / 4, x) && odd(x);
    case 8:
      if (!include_zero) {
        return p > 9 && (p - 1) % 8 == 0 && (p - 9) % 64 == 0 && exact_sqrt((p - 1) / 8, x) &&
               odd(x) && exact_sqrt((p - 9) / 64, y) && odd(y);
      }
      return p > 441 && (p - 49) % 8 == 0 && (p - 441) % 64 == 0 && exact_sqrt((p - 49) / 8, x) &&
             odd(x) && exact_sqrt((p - 441) / 64, y) && !odd(y);
    default: return false;
  }
}

Aperture residue_sequence(const ResidueFamily& family) {
  if (!family.valid()) {
    throw std::invalid_argument("residue_sequence: p=" + std::to_string(family.p) + " e=" +
                                std::to_string(family.e) + (family.include_zero ? " (with zero)" : "") +
                                " is not a residue difference-set family");
  }
  const u64 p = family.p;
  const u64 exponent = (p - 1) / static_cast<u64>(family.e);
  Vec a = Vec::Zero(static_cast<Index>(p));
  if (family.include_zero) a(0) = 1.0;
  // Euler's criterion: i is an e-th power residue iff i^((p-1)/e) = 1.
  for (u64 i = 1; i < p; ++i) {
    if (pow_mod(i, exponent, p) == 1) a(static_cast<Index>(i)) = 1.0;
  }

  const double k = a.sum();
  const double flat = k * (static_cast<double>(p) - k) / static_cast<double>(p - 1);
  const Vec power = power_spectrum(a);
  for (Index j = 1; j < power.size(); ++j) {
    if (std::abs(power(j) - flat) > 1e-6 * flat) {
      throw std::runtime_error("residue_sequence: spectrum not flat at bin " + std::to_string(j) +
                               " for p=" + std::to_string(p));
    }
  }
  return Aperture::line(std::move(a));
}

std::vector<ResidueFamily> find_residue_lengths(int e, std::uint64_t n_max, bool with_zero_families) {
  std::vector<ResidueFamily> out;
  switch (e) {
    case 2: {
      if (n_max < 3) break;
      const std::vector<bool> composite = sieve(n_max);
      for (u64 p = 3; p <= n_max; p += 4) {
        if (!composite[p]) out.push_back({p, 2, false});
      }
      break;
    }
    case 4:
      for (u64 x = 1; 4 * x * x + 1 <= n_max; x += 2) {
        const u64 p = 4 * x * x + 1;
        if (is_prime(p)) out.push_back({p, 4, false});
      }
      if (with_zero_families) {
        for (u64 x = 1; 4 * x * x + 9 <= n_max; x += 2) {
          const u64 p = 4 * x * x + 9;
          if (is_prime(p)) out.push_back({p, 4, true});
        }
      }
      break;
    case 8:
      for (u64 b = 1; 64 * b * b + 9 <= n_max; b += 2) {
        const ResidueFamily f{64 * b * b + 9, 8, false};
        if (f.valid()) out.push_back(f);
      }
      if (with_zero_families) {
        for (u64 b = 0; 64 * b * b + 441 <= n_max; b += 2) {
          const ResidueFamily f{64 * b * b + 441, 8, true};
          if (f.valid()) out.push_back(f);
        }
      }
      break;
    default: throw std::invalid_argument("find_residue_lengths: e must be 2, 4 or 8");
  }
  std::sort(out.begin(), out.end(), [](const ResidueFamily& a, const ResidueFamily& b) { return a.p < b.p; });
  return out;
}

std::vector<ResidueFamily> families_at(std::uint64_t n) {
  std::vector<ResidueFamily> out;
  for (int e : {2, 4, 8}) {
    for (bool zero : {false, true}) {
      const ResidueFamily f{n, e, zero};
      if (f.valid()) out.push_back(f);
    }
  }
  return out;
}

double penalty_curve(double a, double rho) {
  if (std::isinf(a)) return 0.0;
  return rho * (1.0 - rho) / (a + rho);
}

double penalty_peak(double a) {
  if (a < 0.0) throw std::invalid_argument("penalty_peak: a must be >= 0");
  if (a == 0.0) return 0.0;
  if (std::isinf(a)) return 0.5;
  return 1.0 / (std::sqrt(1.0 + 1.0 / a) + 1.0);
}

double loss_factor(double a, double rho) {
  if (!(a >= 0.0)) throw std::invalid_argument("loss_factor: a must be >= 0");
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("loss_factor: rho must lie in (0, 1)");
  if (std::isinf(a)) return 0.25 / (rho * (1.0 - rho));
  // sup_x f_a(x) = (sqrt(a + 1) - sqrt(a))^2
  const double root = std::sqrt(a + 1.0) + std::sqrt(a);
  const double sup = 1.0 / (root * root);
  return std::max(1.0, sup / penalty_curve(a, rho));
}

double worst_case_penalty(std::span<const double> rho_set) {
  if (rho_set.empty()) throw std::invalid_argument("worst_case_penalty: empty rho set");
  constexpr long kSteps = 1000000;  // a in [0, 1000], step 1e-3
  double worst = 0.0;
  for (long k = 0; k <= kSteps; ++k) {
    const double a = static_cast<double>(k) * 1e-3;
    double best = std::numeric_limits<double>::infinity();
    for (double rho : rho_set) best = std::min(best, loss_factor(a, rho));
    worst = std::max(worst, best);
  }
  return worst;
}

FlatDesign flat_design(const ImagingConfig& config, const Vec& d) {
  config.validate();
  if (config.dims != 1) throw std::invalid_argument("flat_design: 1D only (use design_aperture_2d)");
  if (d.size() != config.n) throw std::invalid_argument("flat_design: prior size does not match n");
  const std::vector<ResidueFamily> families = families_at(static_cast<u64>(config.n));
  if (families.empty()) {
    throw std::invalid_argument("flat_design: n=" + std::to_string(config.n) + " admits no residue construction");
  }

  const double a = config.J > 0.0 ? config.W / config.J : std::numeric_limits<double>::infinity();
  const ResidueFamily* chosen = &families.front();
  for (const ResidueFamily& f : families) {
    if (loss_factor(a, f.rho()) < loss_factor(a, chosen->rho())) chosen = &f;
  }

  FlatDesign out{residue_sequence(*chosen), *chosen, {}};
  DesignCertificate& cert = out.certificate;
  cert.method = "flat";
  cert.dims = 1;
  cert.n = config.n;
  if (d.size() > 1 && d.maxCoeff() != d.minCoeff()) {
    cert.warnings.push_back("prior is not iid; the flat-sequence guarantee is stated for iid scenes");
  }

  const RhoOptimum opt = optimal_rho(config, d);
  cert.rho_star = opt.rho;
  cert.bound_at_t = opt.bound;
  cert.rho_aperture = out.aperture.rho();
  cert.exposure_penalty = loss_factor(a, out.aperture.rho());

  ImagingConfig stretched = config;
  stretched.t = config.t * cert.exposure_penalty;
  cert.lmmse_at_penalty = lmmse(stretched, d, out.aperture);

  // Informational per-bin view: the mask must reach gamma* P_j / gamma_a.
  const Vec power = out.aperture.power();
  cert.achieved = power.tail(config.n - 1);
  cert.required = Vec::Zero(config.n - 1);
  if (config.t > 0.0 && opt.rho > 0.0) {
    const double g_star = config.gamma(opt.rho);
    const double g_mask = stretched.gamma(out.aperture.rho());
    const SpectrumAllocation alloc =
        waterfill(d, g_star, power_budget(config.n, opt.rho).exact);
    cert.required = alloc.targets.tail(config.n - 1) * (g_star / g_mask);
  }
  cert.spectral_ok = (cert.achieved.array() >= cert.required.array() * (1.0 - 1e-12)).all();
  cert.mask_ok = out.aperture.is_mask();
  cert.rho_ok = true;  // flatness was verified by residue_sequence
  cert.lmmse_ok = cert.lmmse_at_penalty <= cert.bound_at_t * (1.0 + 1e-12);
  if (cert.spectral_ok && !cert.lmmse_ok) {
    // The loss factor only covers the bins j >= 1. A mask sparser than rho*
    // puts less power on DC than the bound does, worth O(1/n^2) relative.
    const double excess = cert.lmmse_at_penalty / cert.bound_at_t - 1.0;
    cert.warnings.push_back("bins j >= 1 meet their targets; the DC bin leaves lmmse " + format_relative(excess) +
                            " above the bound (rho(a) < rho*)");
  }
  cert.pass = cert.mask_ok && cert.lmmse_ok;
  return out;
}

}  // namespace cap
