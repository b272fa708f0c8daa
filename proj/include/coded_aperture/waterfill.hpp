#ifndef CODED_APERTURE_WATERFILL_HPP
#define CODED_APERTURE_WATERFILL_HPP

#include "coded_aperture/model.hpp"

#include <vector>

namespace cap {

struct PowerBudget {
  double exact = 0.0;   // N(floor(N rho) + frac^2) - N^2 rho^2
  double simple = 0.0;  // N^2 rho (1 - rho)
};

/// Largest nonzero-frequency power sum_{i>=1} |\hat a_i|^2 of a length-N
/// mask in [0,1]^N with mean rho.
PowerBudget power_budget(Index points, double rho);

struct SpectrumAllocation {
  double total_power = 0.0;  // P
  double water_level = 0.0;  // T
  Vec targets;               // P_i; targets(0) = 0
  Vec weights;               // p_i = P_i / sum P; zero when P = 0
};

/// Waterfilling over i >= 1 with a fixed prior. The sorted breakpoints 1/d_i
/// are computed once, so each solve is O(N).
class Waterfiller {
 public:
  explicit Waterfiller(const Vec& d);

  /// P_i = (1/gamma)(T - 1/d_i)^+ with sum P_i = power. At gamma = 0 the
  /// gamma -> 0 limit is used: power split evenly over the largest d_i.
  SpectrumAllocation solve(double gamma, double power) const;

  /// sum_{i>=1} 1/(1/d_i + gamma P_i) for the waterfilled P_i.
  double tail_bound(double gamma, double power) const;

  const Vec& prior() const { return d_; }

 private:
  double level(double gamma, double power, std::size_t& active) const;

  Vec d_;
  std::vector<Index> order_;     // i >= 1 with d_i > 0, by decreasing d_i
  std::vector<double> prefix_;   // prefix sums of 1/d over order_
};

/// One-shot waterfill(d, gamma, P).
SpectrumAllocation waterfill(const Vec& d, double gamma, double power);

/// Waterfilling lower bound on lmmse over all masks with mean rho.
double lower_bound(const ImagingConfig& config, const Vec& d, double rho);

struct RhoOptimum {
  double rho = 0.0;
  double bound = 0.0;
};

/// Minimizes lower_bound over rho in [0, 1]: 1024-point grid scan plus the
/// points k/N, then golden-section search on the bracket around the best.
RhoOptimum optimal_rho(const ImagingConfig& config, const Vec& d);

}  // namespace cap

#endif  // CODED_APERTURE_WATERFILL_HPP
