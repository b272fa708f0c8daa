#ifndef CODED_APERTURE_MODEL_HPP
#define CODED_APERTURE_MODEL_HPP

#include "coded_aperture/spectra.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cap {

enum class PriorKind { iid, bandlimited, powerlaw, table };

/// Spectral density d(x) of the scene covariance. Defined on [0, 1/2] and
/// mirrored, so d(x) = d(1 - x); d(0) = theta.
struct ScenePrior {
  PriorKind kind = PriorKind::iid;
  double theta = 1.0;
  double s = 0.0;         // band edge (bandlimited)
  double r = 0.0;         // rolloff half-width (bandlimited)
  double exponent = 1.0;  // powerlaw
  double knee = 0.01;     // powerlaw regularization x0
  std::vector<double> table;  // samples on [0, 1/2] inclusive
  std::string table_path;

  static ScenePrior iid(double theta);
  static ScenePrior bandlimited(double theta, double s, double r);
  static ScenePrior powerlaw(double theta, double exponent, double knee = 0.01);
  static ScenePrior from_table(std::vector<double> samples);

  /// Throws std::invalid_argument on an inconsistent record.
  void validate() const;

  /// d(x) for x in [0, 1].
  double density(double x) const;
};

std::string_view to_string(PriorKind kind);

/// Parses `prior <kind> theta=<f> [s=<f> r=<f>] [exponent=<f>] [x0=<f>] [table=<path>]`.
/// The leading `prior` keyword is optional. Table files are read from disk.
ScenePrior parse_prior(std::string_view record);

/// Inverse of parse_prior (tables are written back by path).
std::string format_prior(const ScenePrior& prior);

/// d_i = (1/n) d(i/n), i = 0..n-1.
Vec sample_prior(const ScenePrior& prior, Index n);

/// Separable 2D sampling, row-major n*n: d_{jk} = d(j/n) d(k/n) / (theta n^2).
Vec sample_prior_2d(const ScenePrior& prior, Index n);

struct ImagingConfig {
  Index n = 1;       // scene side length
  double t = 0.0;    // exposure
  double W = 0.0;    // thermal noise
  double J = 0.0;    // shot noise
  int dims = 1;

  /// Number of scene points: n (1D) or n^2 (2D).
  Index points() const { return dims == 2 ? n * n : n; }

  /// t / (N (W + J rho)), N = points().
  double gamma(double rho) const;

  void validate() const;
};

/// Aperture transmission values; 2D grids are stored row-major.
struct Aperture {
  Vec values;
  int dims = 1;
  Index side = 0;
  bool lens = false;  // ideal-lens benchmark, not a physical mask

  static Aperture line(Vec values);
  static Aperture grid(const Mat& values);
  /// a = (N, 0, ..., 0), whose DFT is constant N.
  static Aperture ideal_lens(Index n, int dims = 1);

  Index size() const { return values.size(); }
  /// (1/N) sum a_i.
  double rho() const { return values.mean(); }
  bool is_mask() const;
  bool is_binary() const;
  Mat as_grid() const;
  /// |\hat a|^2, flattened row-major for 2D.
  Vec power() const;
};

struct LmmseOptions {
  /// Allows W = J = 0 with t > 0 (noiseless limit): each bin is either
  /// resolved exactly (|\hat a_i| > 0) or left at its prior variance.
  bool allow_noiseless = false;
};

/// sum_i 1 / (1/d_i + t |\hat a_i|^2 / (N (W + J rho))); bins with d_i = 0
/// contribute 0.
double lmmse(const ImagingConfig& config, const Vec& d, const Aperture& a,
             const LmmseOptions& options = {});

/// Same as lmmse, from a precomputed power spectrum and transmissivity.
double lmmse_from_power(const ImagingConfig& config, const Vec& d, const Vec& power, double rho,
                        const LmmseOptions& options = {});

/// Each entry independently 1 with probability rho.
Aperture random_onoff(Index n, double rho, std::uint64_t seed);

struct RandomOnOffResult {
  double rho_star = 0.0;
  double mean_lmmse = 0.0;
  std::vector<double> mean_per_rho;  // aligned with the input grid
};

/// Averages lmmse over `trials` seeded masks at each grid density; returns
/// the minimizing density.
RandomOnOffResult best_random_onoff(const ImagingConfig& config, const Vec& d,
                                    std::span<const double> rho_grid, int trials,
                                    std::uint64_t seed);

/// Power spectra of the seeded random masks used by best_random_onoff,
/// cached so a sweep over exposure times reuses them.
class RandomOnOffBank {
 public:
  RandomOnOffBank(Index n, std::vector<double> rho_grid, int trials, std::uint64_t seed);

  RandomOnOffResult evaluate(const ImagingConfig& config, const Vec& d) const;

  /// Seed of mask (grid index, trial).
  static std::uint64_t mask_seed(std::uint64_t seed, std::size_t grid_index, int trial);

 private:
  struct Sample {
    Vec power;
    double rho;
  };
  std::vector<double> grid_;
  int trials_;
  std::vector<std::vector<Sample>> samples_;
};

}  // namespace cap

#endif  // CODED_APERTURE_MODEL_HPP
