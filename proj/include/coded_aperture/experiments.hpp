#ifndef CODED_APERTURE_EXPERIMENTS_HPP
#define CODED_APERTURE_EXPERIMENTS_HPP

#include "coded_aperture/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cap {

/// lo, ..., hi with equal ratios; count >= 2.
std::vector<double> log_spaced(double lo, double hi, int count);

struct SweepSpec {
  Index n = 677;
  ScenePrior prior = ScenePrior::iid(1.0);
  double W = 0.001;
  double J = 0.001;
  double t_min = 1e2;
  double t_max = 1e7;
  int t_count = 26;
  std::vector<std::string> methods{"lowerbound", "flat", "nazarov", "random"};
  int trials = 10;
  std::uint64_t seed = 1;
  int rho_grid_points = 21;  // random on-off densities, evenly spaced on [0, 1]

  /// Throws std::invalid_argument on t_min <= 0, t_count < 2, unknown or no methods.
  void validate() const;
  bool wants(const std::string& method) const;
};

struct SweepRow {
  double t = 0.0;
  std::optional<double> lowerbound;
  std::optional<double> flat;
  std::optional<double> nazarov;
  std::optional<double> random_mean;
  double rho_star = 0.0;
  std::optional<double> rho_random_star;
  std::uint64_t seed = 0;
  std::string note;  // why a requested cell is empty
};

/// One row per exposure time. The Nazarov mask is redesigned at every t
/// with seed derive_seed(spec.seed, {row}); random masks are shared across
/// rows.
std::vector<SweepRow> run_sweep(const SweepSpec& spec);

/// `#` metadata preamble, then
/// t,lmmse_lowerbound,lmmse_flat,lmmse_nazarov,lmmse_random_mean,rho_star,rho_random_star,seed
void write_sweep_csv(std::ostream& out, const SweepSpec& spec, const std::vector<SweepRow>& rows);

struct BruteForceSpec {
  Index n = 13;
  Index ones = 6;
  double t = 130.0;
  double W = 0.001;
  double J = 0.001;
  double theta = 0.01;
  std::vector<double> epsilons;  // empty: no continuous family
};

struct BruteForceResult {
  std::vector<int> best_mask;  // canonical representative of the best class
  double best_lmmse = 0.0;
  std::uint64_t masks = 0;     // C(n, ones)
  std::uint64_t classes = 0;   // up to rotation and reflection
  /// Classes within 1e-12 relative of the optimum, canonical form,
  /// ascending. Masks related by i -> u*i mod n share a spectrum, so ties
  /// are common.
  std::vector<std::vector<int>> tied;
  std::vector<std::pair<double, double>> family;  // (epsilon, lmmse)
};

/// Exhaustive search over binary masks with `ones` ones (n <= 24) for an
/// iid prior d_i = theta / n.
BruteForceResult brute_force(const BruteForceSpec& spec);

/// Lexicographically smallest rotation or reflection of a 0/1 mask.
std::vector<int> canonical_bracelet(const std::vector<int>& mask);

/// Continuous family for prime n: a_0 = eps, a_i = 1 - eps / ((n-1)/2) when
/// i is a nonzero quadratic residue mod n, else 0.
Aperture epsilon_family_mask(Index n, double eps);

}  // namespace cap

#endif  // CODED_APERTURE_EXPERIMENTS_HPP
