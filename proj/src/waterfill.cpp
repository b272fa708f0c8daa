#include "coded_aperture/waterfill.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cap {

PowerBudget power_budget(Index points, double rho) {
  if (points < 1) throw std::invalid_argument("power_budget: size must be positive");
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("power_budget: rho must lie in [0, 1]");
  const double n = static_cast<double>(points);
  const double mass = n * rho;
  const double whole = std::floor(mass);
  const double frac = mass - whole;
  PowerBudget b;
  b.exact = std::max(0.0, n * (whole + frac * frac) - mass * mass);
  b.simple = n * n * rho * (1.0 - rho);
  // Rounding can leave exact a few ulps above simple at integer masses.
  b.exact = std::min(b.exact, b.simple);
  return b;
}

Waterfiller::Waterfiller(const Vec& d) : d_(d) {
  if (d.size() < 1) throw std::invalid_argument("waterfill: empty prior");
  for (Index i = 0; i < d.size(); ++i) {
    if (!(d(i) >= 0.0) || !std::isfinite(d(i))) throw std::invalid_argument("waterfill: bad prior sample");
    if (i >= 1 && d(i) > 0.0) order_.push_back(i);
  }
  std::stable_sort(order_.begin(), order_.end(), [&](Index a, Index b) { return d_(a) > d_(b); });
  prefix_.resize(order_.size() + 1, 0.0);
  for (std::size_t k = 0; k < order_.size(); ++k) prefix_[k + 1] = prefix_[k] + 1.0 / d_(order_[k]);
}

double Waterfiller::level(double gamma, double power, std::size_t& active) const {
  const std::size_t count = order_.size();
  if (power == 0.0) {
    active = 0;
    return count > 0 ? 1.0 / d_(order_.front()) : 0.0;
  }
  if (count == 0) throw std::invalid_argument("waterfill: positive power but every d_i (i >= 1) is zero");
  if (gamma == 0.0) {
    // gamma -> 0: the level sits at the smallest breakpoint; ties share the power.
    const double top = 1.0 / d_(order_.front());
    active = 1;
    while (active < count && 1.0 / d_(order_[active]) <= top * (1.0 + 1e-12)) ++active;
    return top;
  }
  const double poured = gamma * power;
  for (std::size_t k = 1; k <= count; ++k) {
    const double t = (poured + prefix_[k]) / static_cast<double>(k);
    if (k == count || t <= 1.0 / d_(order_[k])) {
      active = k;
      return t;
    }
  }
  active = count;
  return (poured + prefix_[count]) / static_cast<double>(count);
}

SpectrumAllocation Waterfiller::solve(double gamma, double power) const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("waterfill: gamma must be >= 0");
  if (!(power >= 0.0) || !std::isfinite(power)) throw std::invalid_argument("waterfill: power must be >= 0");

  SpectrumAllocation out;
  out.total_power = power;
  out.targets = Vec::Zero(d_.size());
  out.weights = Vec::Zero(d_.size());
  std::size_t active = 0;
  out.water_level = level(gamma, power, active);
  if (active == 0) return out;

  if (gamma == 0.0) {
    for (std::size_t k = 0; k < active; ++k) out.targets(order_[k]) = power / static_cast<double>(active);
  } else {
    for (std::size_t k = 0; k < active; ++k) {
      const Index i = order_[k];
      out.targets(i) = std::max(0.0, out.water_level - 1.0 / d_(i)) / gamma;
    }
  }
  const double sum = out.targets.sum();
  if (sum > 0.0) out.weights = out.targets / sum;
  return out;
}

double Waterfiller::tail_bound(double gamma, double power) const {
  std::size_t active = 0;
  const double t = level(gamma, power, active);
  double sum = 0.0;
  for (std::size_t k = 0; k < order_.size(); ++k) {
    const Index i = order_[k];
    double gain = 0.0;  // gamma * P_i
    if (k < active) gain = gamma == 0.0 ? 0.0 : std::max(0.0, t - 1.0 / d_(i));
    sum += d_(i) / (1.0 + d_(i) * gain);
  }
  return sum;
}

SpectrumAllocation waterfill(const Vec& d, double gamma, double power) {
  return Waterfiller(d).solve(gamma, power);
}

namespace {

double bound_with(const ImagingConfig& config, const Waterfiller& filler, double rho) {
  const Vec& d = filler.prior();
  if (rho == 0.0 || config.t == 0.0) return d.sum();
  const double gamma = config.gamma(rho);
  const double n = static_cast<double>(config.points());
  const double power = power_budget(config.points(), rho).exact;
  const double d0 = d(0);
  const double dc = d0 > 0.0 ? d0 / (1.0 + d0 * gamma * n * n * rho * rho) : 0.0;
  return dc + filler.tail_bound(gamma, power);
}

void check_sizes(const ImagingConfig& config, const Vec& d) {
  config.validate();
  if (d.size() != config.points()) throw std::invalid_argument("lower_bound: prior size does not match config");
}

}  // namespace

double lower_bound(const ImagingConfig& config, const Vec& d, double rho) {
  check_sizes(config, d);
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("lower_bound: rho must lie in [0, 1]");
  if (rho == 0.0 || config.t == 0.0) return d.sum();
  return bound_with(config, Waterfiller(d), rho);
}

RhoOptimum optimal_rho(const ImagingConfig& config, const Vec& d) {
  check_sizes(config, d);
  constexpr int kGrid = 1024;
  const Waterfiller filler(d);
  auto grid_rho = [](int i) { return static_cast<double>(i) / (kGrid - 1); };

  if (config.t == 0.0) return {grid_rho(kGrid / 2 - 1), d.sum()};

  // W = 0 makes gamma singular at rho = 0, where the bound is sum d anyway.
  auto f = [&](double rho) { return bound_with(config, filler, rho); };
  int best = 0;
  double best_value = f(0.0);
  for (int i = 1; i < kGrid; ++i) {
    const double v = f(grid_rho(i));
    if (v < best_value) {
      best_value = v;
      best = i;
    }
  }

  double best_rho = grid_rho(best);
  double step = 1.0 / (kGrid - 1);

  // The exact budget equals the simple one only at rho = k/N and dips in
  // between, so the bound is a sawtooth with a tooth per k. A grid coarser
  // than 1/N can land on the wrong tooth; scan the teeth as well.
  const Index points = config.points();
  for (Index k = 1; k < points; ++k) {
    const double rho = static_cast<double>(k) / static_cast<double>(points);
    const double v = f(rho);
    if (v < best_value) {
      best_value = v;
      best_rho = rho;
      step = 1.0 / static_cast<double>(points);
    }
  }

  double lo = std::max(0.0, best_rho - step);
  double hi = std::min(1.0, best_rho + step);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int it = 0; it < 80 && hi - lo > 1e-13; ++it) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = f(x2);
    }
  }
  RhoOptimum out{best_rho, best_value};
  if (f1 < out.bound) out = {x1, f1};
  if (f2 < out.bound) out = {x2, f2};
  return out;
}

}  // namespace cap
