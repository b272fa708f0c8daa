#include "coded_aperture/experiments.hpp"

#include "coded_aperture/flatseq.hpp"
#include "coded_aperture/io.hpp"
#include "coded_aperture/nazarov.hpp"
#include "coded_aperture/rng.hpp"
#include "coded_aperture/waterfill.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <set>
#include <unordered_set>

namespace cap {

namespace {

const std::vector<std::string> kMethods{"lowerbound", "flat", "nazarov", "random"};

std::string cell(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

std::uint64_t binomial(Index n, Index k) {
  std::uint64_t c = 1;
  for (Index i = 1; i <= k; ++i) c = c * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return c;
}

// Entry i of the mask is bit i of `bits`. The key puts entry 0 in the top
// bit so integer order is lexicographic order; min over the dihedral group.
std::uint32_t bracelet_key(std::uint32_t bits, Index n) {
  auto key = [n](auto at) {
    std::uint32_t k = 0;
    for (Index i = 0; i < n; ++i) k = (k << 1) | at(i);
    return k;
  };
  std::uint32_t best = ~0u;
  for (Index s = 0; s < n; ++s) {
    best = std::min(best, key([&](Index i) { return (bits >> ((i + s) % n)) & 1u; }));
    best = std::min(best, key([&](Index i) { return (bits >> ((s - i + n) % n)) & 1u; }));
  }
  return best;
}

}  // namespace

std::vector<double> log_spaced(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi >= lo) || count < 2) {
    throw std::invalid_argument("log_spaced: need 0 < lo <= hi and count >= 2");
  }
  std::vector<double> out(static_cast<std::size_t>(count));
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = std::pow(10.0, a + (b - a) * i / (count - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

void SweepSpec::validate() const {
  if (n < 2) throw std::invalid_argument("sweep: n must be >= 2");
  if (!(t_min > 0.0)) throw std::invalid_argument("sweep: t_min must be > 0");
  if (!(t_max >= t_min)) throw std::invalid_argument("sweep: t_max must be >= t_min");
  if (t_count < 2) throw std::invalid_argument("sweep: t_count must be >= 2");
  if (methods.empty()) throw std::invalid_argument("sweep: no methods");
  for (const std::string& m : methods) {
    if (std::find(kMethods.begin(), kMethods.end(), m) == kMethods.end()) {
      throw std::invalid_argument("sweep: unknown method '" + m + "'");
    }
  }
  if (trials < 1) throw std::invalid_argument("sweep: trials must be >= 1");
  if (rho_grid_points < 2) throw std::invalid_argument("sweep: rho grid needs >= 2 points");
  if (!(W >= 0.0 && J >= 0.0 && W + J > 0.0)) throw std::invalid_argument("sweep: need W, J >= 0 with W + J > 0");
  prior.validate();
}

bool SweepSpec::wants(const std::string& method) const {
  return std::find(methods.begin(), methods.end(), method) != methods.end();
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
  spec.validate();
  const Vec d = sample_prior(spec.prior, spec.n);
  const std::vector<double> ts = log_spaced(spec.t_min, spec.t_max, spec.t_count);

  ImagingConfig base;
  base.n = spec.n;
  base.W = spec.W;
  base.J = spec.J;

  std::optional<Aperture> flat;
  std::string flat_note;
  if (spec.wants("flat")) {
    try {
      base.t = ts.front();
      flat = flat_design(base, d).aperture;
    } catch (const std::exception& e) {
      flat_note = std::string("flat: ") + e.what();
    }
  }

  std::optional<RandomOnOffBank> bank;
  if (spec.wants("random")) {
    std::vector<double> grid(static_cast<std::size_t>(spec.rho_grid_points));
    for (int g = 0; g < spec.rho_grid_points; ++g) {
      grid[static_cast<std::size_t>(g)] = static_cast<double>(g) / (spec.rho_grid_points - 1);
    }
    bank.emplace(spec.n, std::move(grid), spec.trials, spec.seed);
  }

  std::vector<SweepRow> rows;
  for (std::size_t r = 0; r < ts.size(); ++r) {
    SweepRow row;
    row.t = ts[r];
    row.seed = derive_seed(spec.seed, {static_cast<std::uint64_t>(r)});
    ImagingConfig config = base;
    config.t = row.t;

    const RhoOptimum opt = optimal_rho(config, d);
    row.rho_star = opt.rho;
    if (spec.wants("lowerbound")) row.lowerbound = opt.bound;
    if (flat) row.flat = lmmse(config, d, *flat);
    else if (!flat_note.empty()) row.note = flat_note;

    if (spec.wants("nazarov")) {
      DesignOptions options;
      options.seed = row.seed;
      try {
        row.nazarov = lmmse(config, d, design_aperture(config, d, options).aperture);
      } catch (const std::exception& e) {
        row.note += (row.note.empty() ? "" : "; ") + std::string("nazarov: ") + e.what();
      }
    }
    if (bank) {
      const RandomOnOffResult rnd = bank->evaluate(config, d);
      row.random_mean = rnd.mean_lmmse;
      row.rho_random_star = rnd.rho_star;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const SweepSpec& spec, const std::vector<SweepRow>& rows) {
  out << "# n=" << spec.n << '\n';
  out << "# " << format_prior(spec.prior) << '\n';
  out << "# W=" << format_number(spec.W) << " J=" << format_number(spec.J) << '\n';
  out << "# t=log_spaced(" << format_number(spec.t_min) << ',' << format_number(spec.t_max) << ','
      << spec.t_count << ")\n";
  out << "# methods=";
  for (std::size_t i = 0; i < spec.methods.size(); ++i) out << (i ? "," : "") << spec.methods[i];
  out << '\n';
  out << "# seed=" << spec.seed << " random_trials=" << spec.trials << " random_rho_grid=" << spec.rho_grid_points
      << " (mean over trials at each density, evenly spaced on [0,1])\n";
  out << "# nazarov mask redesigned per row with the row seed; flat mask fixed\n";
  for (const SweepRow& r : rows) {
    if (!r.note.empty()) out << "# t=" << format_number(r.t) << " " << r.note << '\n';
  }
  out << "t,lmmse_lowerbound,lmmse_flat,lmmse_nazarov,lmmse_random_mean,rho_star,rho_random_star,seed\n";
  for (const SweepRow& r : rows) {
    out << format_number(r.t) << ',' << cell(r.lowerbound) << ',' << cell(r.flat) << ',' << cell(r.nazarov) << ','
        << cell(r.random_mean) << ',' << format_number(r.rho_star) << ',' << cell(r.rho_random_star) << ','
        << r.seed << '\n';
  }
}

std::vector<int> canonical_bracelet(const std::vector<int>& mask) {
  const std::size_t n = mask.size();
  std::vector<int> best = mask;
  std::vector<int> cand(n);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t i = 0; i < n; ++i) cand[i] = mask[(i + s) % n];
    if (cand < best) best = cand;
    for (std::size_t i = 0; i < n; ++i) cand[i] = mask[(s + n - i) % n];
    if (cand < best) best = cand;
  }
  return best;
}

Aperture epsilon_family_mask(Index n, double eps) {
  if (n < 3 || !is_prime(static_cast<std::uint64_t>(n)) || n % 2 == 0) {
    throw std::invalid_argument("epsilon family: n must be an odd prime");
  }
  const double half = static_cast<double>((n - 1) / 2);
  if (!(eps >= 0.0 && eps <= half)) throw std::invalid_argument("epsilon family: eps out of range");
  Vec a = Vec::Zero(n);
  a(0) = eps;
  const auto p = static_cast<std::uint64_t>(n);
  for (Index i = 1; i < n; ++i) {
    if (pow_mod(static_cast<std::uint64_t>(i), (p - 1) / 2, p) == 1) a(i) = 1.0 - eps / half;
  }
  return Aperture::line(std::move(a));
}

BruteForceResult brute_force(const BruteForceSpec& spec) {
  if (spec.n < 1 || spec.n > 24) throw std::invalid_argument("bruteforce: n must be in [1, 24]");
  if (spec.ones < 0 || spec.ones > spec.n) throw std::invalid_argument("bruteforce: ones must be in [0, n]");
  if (!(spec.theta >= 0.0)) throw std::invalid_argument("bruteforce: theta must be >= 0");

  ImagingConfig config;
  config.n = spec.n;
  config.t = spec.t;
  config.W = spec.W;
  config.J = spec.J;
  config.validate();
  const Vec d = Vec::Constant(spec.n, spec.theta / static_cast<double>(spec.n));
  const Index n = spec.n;
  const double rho = static_cast<double>(spec.ones) / static_cast<double>(n);

  Vec cs(n), sn(n);
  for (Index k = 0; k < n; ++k) {
    const double ang = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    cs(k) = std::cos(ang);
    sn(k) = std::sin(ang);
  }

  BruteForceResult result;
  result.masks = binomial(n, spec.ones);
  result.best_lmmse = std::numeric_limits<double>::infinity();
  std::unordered_set<std::uint32_t> classes;
  std::set<std::uint32_t> tied;
  std::uint32_t best_key = 0;
  Vec power(n);

  auto visit = [&](std::uint32_t bits) {
    for (Index j = 0; j < n; ++j) {
      double re = 0.0, im = 0.0;
      for (std::uint32_t b = bits; b; b &= b - 1) {
        const Index i = std::countr_zero(b);
        const Index k = (j * i) % n;
        re += cs(k);
        im -= sn(k);
      }
      power(j) = re * re + im * im;
    }
    const double m = lmmse_from_power(config, d, power, rho);
    const std::uint32_t key = bracelet_key(bits, n);
    classes.insert(key);
    const double tol = std::isfinite(result.best_lmmse) ? 1e-12 * std::max(1.0, result.best_lmmse) : 0.0;
    if (!std::isfinite(result.best_lmmse) || m < result.best_lmmse - tol) {
      result.best_lmmse = m;
      best_key = key;
      tied.clear();
      tied.insert(key);
    } else if (std::abs(m - result.best_lmmse) <= tol) {
      tied.insert(key);
    }
  };

  if (spec.ones == 0) {
    visit(0u);
  } else {
    // Gosper's hack: next integer with the same popcount.
    std::uint32_t bits = (1u << spec.ones) - 1u;
    const std::uint32_t limit = 1u << n;
    while (bits < limit) {
      visit(bits);
      const std::uint32_t c = bits & (~bits + 1u);
      const std::uint32_t r = bits + c;
      if (r == 0) break;
      bits = (((r ^ bits) >> 2) / c) | r;
    }
  }
  result.classes = classes.size();
  // The key holds entry i at bit n-1-i.
  auto decode = [n](std::uint32_t key) {
    std::vector<int> m(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) m[static_cast<std::size_t>(i)] = (key >> (n - 1 - i)) & 1u;
    return m;
  };
  result.best_mask = decode(best_key);
  for (std::uint32_t key : tied) result.tied.push_back(decode(key));

  for (double eps : spec.epsilons) {
    result.family.emplace_back(eps, lmmse(config, d, epsilon_family_mask(n, eps)));
  }
  return result;
}

}  // namespace cap
