#include "coded_aperture/nazarov.hpp"

#include "coded_aperture/flatseq.hpp"
#include "coded_aperture/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace cap {

namespace {

/// psi_j (1D) or psi_j (x) psi_k (2D), generated row by row.
class ProductBasis {
 public:
  ProductBasis(Index side, int dims) : table_(side), side_(side), dims_(dims), left_(side), right_(side) {}

  Index points() const { return dims_ == 2 ? side_ * side_ : side_; }

  void row(Index j, Eigen::Ref<Vec> out) {
    if (dims_ == 1) {
      table_.row(j, out);
      return;
    }
    table_.row(j / side_, left_);
    table_.row(j % side_, right_);
    for (Index x = 0; x < side_; ++x) out.segment(x * side_, side_) = left_(x) * right_;
  }

  /// (b, basis_j) for every j.
  Vec coefficients(const Vec& b) const {
    if (dims_ == 1) return basis_coefficients(b);
    const Mat psi = basis_matrix(side_);
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const Mat grid = Eigen::Map<const RowMajor>(b.data(), side_, side_);
    RowMajor coef = psi * grid * psi.transpose() / static_cast<double>(points());
    return Eigen::Map<const Vec>(coef.data(), coef.size());
  }

 private:
  BasisTable table_;
  Index side_;
  int dims_;
  Vec left_;
  Vec right_;
};

Index side_of(Index points, int dims) {
  if (dims == 1) return points;
  const auto side = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(points))));
  if (side * side != points) throw std::invalid_argument("2D target size is not a square");
  return side;
}

double default_m(const SpectrumTarget& target) {
  return target.dims == 2 ? m_bound_2d(target.side()) : m_bound(target.side());
}

void check_cortege(const SpectrumTarget& target, const SignCortege& cortege) {
  if (cortege.indices.size() != cortege.signs.size()) throw std::invalid_argument("cortège: size mismatch");
  for (std::size_t s = 0; s < cortege.indices.size(); ++s) {
    const Index j = cortege.indices[s];
    if (j < 0 || j >= target.weights.size()) throw std::invalid_argument("cortège: index out of range");
    if (cortege.signs[s] != 1 && cortege.signs[s] != -1) throw std::invalid_argument("cortège: signs must be +-1");
  }
}

/// Bins grouped for the spectral check: singletons in 1D, the mirror quads
/// {(+-f1, +-f2)} in 2D. The DC bin is excluded.
std::vector<std::vector<Index>> spectral_groups(Index side, int dims) {
  std::vector<std::vector<Index>> groups;
  if (dims == 1) {
    for (Index j = 1; j < side; ++j) groups.push_back({j});
    return groups;
  }
  std::map<Index, std::vector<Index>> quads;
  for (Index f1 = 0; f1 < side; ++f1) {
    for (Index f2 = 0; f2 < side; ++f2) {
      if (f1 == 0 && f2 == 0) continue;
      const Index g1 = std::min(f1, (side - f1) % side);
      const Index g2 = std::min(f2, (side - f2) % side);
      quads[g1 * side + g2].push_back(f1 * side + f2);
    }
  }
  for (auto& [key, bins] : quads) groups.push_back(std::move(bins));
  return groups;
}

/// Fills the certificate fields shared by the 1D and 2D Nazarov designs.
void certify(DesignCertificate& cert, const ImagingConfig& config, const Vec& d, const Aperture& a,
             const SpectrumAllocation& alloc, const RhoOptimum& opt, double m) {
  const Index side = config.n;
  const double points = static_cast<double>(config.points());
  cert.rho_star = opt.rho;
  cert.bound_at_t = opt.bound;
  cert.rho_aperture = a.rho();
  cert.exposure_penalty = 2.0 * m * m;

  const Vec power = a.power();
  const auto groups = spectral_groups(side, config.dims);
  cert.achieved.resize(static_cast<Index>(groups.size()));
  cert.required.resize(static_cast<Index>(groups.size()));
  const double spread = opt.rho * (1.0 - opt.rho);
  const double denom = 4.0 * m * m * spread;
  double exact_margin = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < groups.size(); ++g) {
    double got = 0.0;
    double need = 0.0;
    double weight = 0.0;
    for (Index bin : groups[g]) {
      got += power(bin);
      need += alloc.targets(bin);
      weight += alloc.weights(bin);
    }
    cert.achieved(static_cast<Index>(g)) = got;
    cert.required(static_cast<Index>(g)) = denom > 0.0 ? need / denom : 0.0;
    if (weight > 0.0) {
      exact_margin = std::min(exact_margin, got / (points * points * weight / (4.0 * m * m)));
    }
  }
  cert.exact_budget_margin = exact_margin;
  cert.spectral_ok = denom > 0.0 && (cert.achieved.array() >= cert.required.array()).all();
  cert.mask_ok = a.is_mask();
  cert.rho_ok = a.rho() <= 0.5 + 1e-9;

  ImagingConfig stretched = config;
  stretched.t = config.t * cert.exposure_penalty;
  cert.lmmse_at_penalty = lmmse(stretched, d, a);
  cert.lmmse_ok = cert.lmmse_at_penalty <= cert.bound_at_t * (1.0 + 1e-12);
  cert.pass = cert.mask_ok && cert.bounded_ok && cert.spectral_ok && cert.rho_ok && cert.lmmse_ok;
}

std::string describe(const DesignCertificate& c) {
  std::ostringstream out;
  out << "mask_ok=" << c.mask_ok << " bounded_ok=" << c.bounded_ok << " spectral_ok=" << c.spectral_ok
      << " rho_ok=" << c.rho_ok << " lmmse_ok=" << c.lmmse_ok << " restarts=" << c.restarts;
  return out.str();
}

struct SearchOutcome {
  GreedyResult greedy;
  std::optional<BoundedVector> bounded;
  std::uint64_t seed = 0;
  int restarts = 0;
};

SearchOutcome search(const SpectrumTarget& target, double m, const DesignOptions& options) {
  SearchOutcome out;
  for (int r = 0; r < std::max(1, options.restart_budget); ++r) {
    out.seed = r == 0 ? options.seed : derive_seed(options.seed, {static_cast<std::uint64_t>(r)});
    out.restarts = r;
    out.greedy = greedy_cortege(target, out.seed, options.max_sweeps);
    out.bounded = cortege_to_bounded(target, out.greedy.cortege, m);
    if (out.bounded) break;
  }
  return out;
}

Aperture shift_to_mask(const Vec& b, double m, Index side, int dims) {
  Vec a = ((b.array() + m) / (2.0 * m)).cwiseMax(0.0).cwiseMin(1.0);
  if (dims == 1) return Aperture::line(std::move(a));
  Aperture out;
  out.values = std::move(a);
  out.dims = 2;
  out.side = side;
  return out;
}

}  // namespace

Index SpectrumTarget::side() const { return side_of(weights.size(), dims); }

std::vector<Index> SpectrumTarget::support() const {
  std::vector<Index> out;
  for (Index j = 0; j < weights.size(); ++j) {
    if (weights(j) > 0.0) out.push_back(j);
  }
  return out;
}

void SpectrumTarget::validate() const {
  if (weights.size() == 0) throw std::invalid_argument("SpectrumTarget: empty");
  if (dims != 1 && dims != 2) throw std::invalid_argument("SpectrumTarget: dims must be 1 or 2");
  side_of(weights.size(), dims);
  if (weights.minCoeff() < 0.0) throw std::invalid_argument("SpectrumTarget: negative weight");
  if (std::abs(weights.sum() - 1.0) > 1e-12) throw std::invalid_argument("SpectrumTarget: weights must sum to 1");
}

SpectrumTarget SpectrumTarget::normalized(Vec weights, int dims) {
  const double sum = weights.sum();
  if (!(sum > 0.0)) throw std::invalid_argument("SpectrumTarget: weights sum to zero");
  SpectrumTarget t{weights / sum, dims};
  t.validate();
  return t;
}

Vec signed_combination(const SpectrumTarget& target, const SignCortege& cortege) {
  target.validate();
  check_cortege(target, cortege);
  ProductBasis basis(target.side(), target.dims);
  Vec g = Vec::Zero(basis.points());
  Vec row(basis.points());
  for (std::size_t s = 0; s < cortege.indices.size(); ++s) {
    const Index j = cortege.indices[s];
    basis.row(j, row);
    g += (cortege.signs[s] * std::sqrt(target.weights(j))) * row;
  }
  return g;
}

double potential(const SpectrumTarget& target, const SignCortege& cortege) {
  return mean_abs(signed_combination(target, cortege));
}

GreedyResult greedy_cortege(const SpectrumTarget& target, std::uint64_t seed, int max_sweeps) {
  if (max_sweeps < 1) throw std::invalid_argument("greedy_cortege: max_sweeps must be >= 1");
  target.validate();

  GreedyResult result;
  SignCortege& cortege = result.cortege;
  cortege.indices = target.support();
  Rng rng(seed);
  for (std::size_t s = 0; s < cortege.indices.size(); ++s) cortege.signs.push_back(rng.sign());

  ProductBasis basis(target.side(), target.dims);
  const Index points = basis.points();
  const double inv_points = 1.0 / static_cast<double>(points);
  Vec g = signed_combination(target, cortege);
  double current = mean_abs(g);
  result.trace.push_back(current);

  Vec step(points);
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    result.sweeps = sweep;
    int flips = 0;
    for (std::size_t s = 0; s < cortege.indices.size(); ++s) {
      const Index j = cortege.indices[s];
      basis.row(j, step);
      step *= 2.0 * cortege.signs[s] * std::sqrt(target.weights(j));
      double delta = 0.0;
      for (Index i = 0; i < points; ++i) delta += std::abs(g(i) - step(i)) - std::abs(g(i));
      delta *= inv_points;
      if (delta > 1e-12) {
        g -= step;
        cortege.signs[s] = -cortege.signs[s];
        current += delta;
        result.trace.push_back(current);
        ++flips;
      }
    }
    if (flips == 0) {
      result.converged = true;
      break;
    }
  }
  return result;
}

std::optional<BoundedVector> cortege_to_bounded(const SpectrumTarget& target, const SignCortege& cortege,
                                                std::optional<double> m_override) {
  const Vec g = signed_combination(target, cortege);
  const double m = m_override.value_or(default_m(target));
  const ProductBasis basis(target.side(), target.dims);
  const double peak = g.cwiseAbs().maxCoeff();
  if (!(peak > 0.0)) return std::nullopt;

  constexpr double kHard = std::numeric_limits<double>::infinity();
  std::vector<double> gains{kHard};
  const double linear = m / peak;
  for (int k = 8; k >= 0; --k) gains.push_back(std::ldexp(linear, k));

  for (double kappa : gains) {
    Vec b(g.size());
    if (std::isinf(kappa)) {
      for (Index i = 0; i < g.size(); ++i) b(i) = g(i) >= 0.0 ? m : -m;
    } else {
      b = (kappa * g).cwiseMax(-m).cwiseMin(m);
    }
    if (b.mean() > 0.0) b = -b;

    const Vec coef = basis.coefficients(b);
    double ratio = std::numeric_limits<double>::infinity();
    for (Index j : cortege.indices) ratio = std::min(ratio, coef(j) * coef(j) / target.weights(j));
    const double sup = b.cwiseAbs().maxCoeff();
    if (sup <= m + 1e-9 && ratio >= 1.0) return BoundedVector{std::move(b), m, sup, ratio, kappa};
  }
  return std::nullopt;
}

NazarovDesign design_aperture(const ImagingConfig& config, const Vec& d, const DesignOptions& options) {
  config.validate();
  if (config.dims != 1) throw std::invalid_argument("design_aperture: 1D config expected");
  if (config.n < 2) throw std::invalid_argument("design_aperture: n must be >= 2");
  if (d.size() != config.n) throw std::invalid_argument("design_aperture: prior size does not match n");

  const RhoOptimum opt = optimal_rho(config, d);
  const double gamma = config.gamma(opt.rho);
  const SpectrumAllocation alloc = waterfill(d, gamma, power_budget(config.n, opt.rho).exact);
  if (!(alloc.targets.sum() > 0.0)) {
    throw std::domain_error("design_aperture: waterfilled target is empty (rho* = " + std::to_string(opt.rho) + ")");
  }
  const SpectrumTarget target = SpectrumTarget::normalized(alloc.weights, 1);
  const double m = m_bound(config.n);

  const SearchOutcome found = search(target, m, options);
  NazarovDesign out;
  out.allocation = alloc;
  out.trace = found.greedy.trace;
  DesignCertificate& cert = out.certificate;
  cert.method = "nazarov";
  cert.dims = 1;
  cert.n = config.n;
  cert.m_bound = m;
  cert.seed = found.seed;
  cert.restarts = found.restarts;
  cert.sweeps = found.greedy.sweeps;
  cert.converged = found.greedy.converged;
  if (!found.greedy.converged) cert.warnings.push_back("greedy hit max_sweeps before a local optimum");
  if (!found.bounded) {
    throw CertificateFailure("design_aperture: no bounded vector verified within the restart budget; " +
                                 describe(cert),
                             cert);
  }
  cert.sup_norm = found.bounded->sup_norm;
  cert.min_coefficient_ratio = found.bounded->min_ratio;
  cert.saturation_gain = found.bounded->saturation_gain;
  cert.bounded_ok = true;

  out.aperture = shift_to_mask(found.bounded->b, m, config.n, 1);
  certify(cert, config, d, out.aperture, alloc, opt, m);
  if (!cert.pass) throw CertificateFailure("design_aperture: certificate failed; " + describe(cert), cert);
  return out;
}

namespace {

/// Smallest exposure multiplier c with lmmse(c t) <= bound(t), by bisection
/// on log c (lmmse is nonincreasing in t). +inf if none up to 1e12.
double measured_penalty(const ImagingConfig& config, const Vec& d, const Aperture& a, double bound) {
  auto value = [&](double c) {
    ImagingConfig stretched = config;
    stretched.t = config.t * c;
    return lmmse(stretched, d, a);
  };
  if (config.t == 0.0 || value(1.0) <= bound) return 1.0;
  double lo = 1.0;
  double hi = 2.0;
  while (value(hi) > bound) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) return std::numeric_limits<double>::infinity();
  }
  for (int it = 0; it < 60; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (value(mid) > bound) lo = mid;
    else hi = mid;
  }
  return hi;
}

}  // namespace

Design2D design_aperture_2d(const ImagingConfig& config, const Vec& d, const DesignOptions& options) {
  config.validate();
  if (config.dims != 2) throw std::invalid_argument("design_aperture_2d: 2D config expected");
  if (config.n > options.max_side_2d) {
    throw std::invalid_argument("design_aperture_2d: n=" + std::to_string(config.n) + " exceeds the cap " +
                                std::to_string(options.max_side_2d));
  }
  if (d.size() != config.points()) throw std::invalid_argument("design_aperture_2d: prior must have n*n entries");

  Design2D out;
  DesignCertificate& cert = out.nazarov.certificate;
  cert.method = "nazarov-2d";
  cert.dims = 2;
  cert.n = config.n;
  const RhoOptimum opt = optimal_rho(config, d);

  if (config.n == 1) {
    // Only the DC bin exists; a fully open 1x1 mask maximizes its gain.
    out.nazarov.aperture = Aperture::grid(Mat::Ones(1, 1));
    cert.m_bound = m_bound_2d(1);
    cert.rho_star = opt.rho;
    cert.bound_at_t = opt.bound;
    cert.rho_aperture = 1.0;
    cert.exposure_penalty = 2.0 * cert.m_bound * cert.m_bound;
    ImagingConfig stretched = config;
    stretched.t *= cert.exposure_penalty;
    cert.lmmse_at_penalty = lmmse(stretched, d, out.nazarov.aperture);
    cert.mask_ok = cert.bounded_ok = cert.spectral_ok = cert.rho_ok = true;
    cert.lmmse_ok = cert.lmmse_at_penalty <= cert.bound_at_t * (1.0 + 1e-12);
    cert.pass = cert.lmmse_ok;
    return out;
  }

  const double gamma = config.gamma(opt.rho);
  const SpectrumAllocation alloc = waterfill(d, gamma, power_budget(config.points(), opt.rho).exact);
  if (!(alloc.targets.sum() > 0.0)) throw std::domain_error("design_aperture_2d: waterfilled target is empty");
  const SpectrumTarget target = SpectrumTarget::normalized(alloc.weights, 2);
  const double m = m_bound_2d(config.n);

  const SearchOutcome found = search(target, m, options);
  out.nazarov.allocation = alloc;
  out.nazarov.trace = found.greedy.trace;
  cert.m_bound = m;
  cert.seed = found.seed;
  cert.restarts = found.restarts;
  cert.sweeps = found.greedy.sweeps;
  cert.converged = found.greedy.converged;
  if (!found.bounded) {
    throw CertificateFailure("design_aperture_2d: no bounded vector verified; " + describe(cert), cert);
  }
  cert.sup_norm = found.bounded->sup_norm;
  cert.min_coefficient_ratio = found.bounded->min_ratio;
  cert.saturation_gain = found.bounded->saturation_gain;
  cert.bounded_ok = true;
  out.nazarov.aperture = shift_to_mask(found.bounded->b, m, config.n, 2);
  certify(cert, config, d, out.nazarov.aperture, alloc, opt, m);
  if (!cert.pass) throw CertificateFailure("design_aperture_2d: certificate failed; " + describe(cert), cert);

  // iid prior: offer the separable product of 1D residue masks.
  const bool iid = d.maxCoeff() == d.minCoeff();
  const auto families = families_at(static_cast<std::uint64_t>(config.n));
  if (iid && !families.empty()) {
    const double a = config.J > 0.0 ? config.W / config.J : std::numeric_limits<double>::infinity();
    const ResidueFamily* chosen = &families.front();
    for (const ResidueFamily& f : families) {
      const double r = f.rho() * f.rho();
      if (loss_factor(a, r) < loss_factor(a, chosen->rho() * chosen->rho())) chosen = &f;
    }
    const Vec line = residue_sequence(*chosen).values;
    const Aperture product = Aperture::grid(line * line.transpose());

    DesignCertificate pc;
    pc.method = "flat-product-2d";
    pc.dims = 2;
    pc.n = config.n;
    pc.rho_star = opt.rho;
    pc.bound_at_t = opt.bound;
    pc.rho_aperture = product.rho();
    pc.exposure_penalty = measured_penalty(config, d, product, opt.bound);
    ImagingConfig stretched = config;
    stretched.t *= std::isfinite(pc.exposure_penalty) ? pc.exposure_penalty : 1.0;
    pc.lmmse_at_penalty = lmmse(stretched, d, product);
    pc.mask_ok = product.is_mask();
    pc.rho_ok = true;
    pc.lmmse_ok = std::isfinite(pc.exposure_penalty) && pc.exposure_penalty <= cert.exposure_penalty;
    pc.pass = pc.mask_ok && pc.lmmse_ok;
    out.product_flat = product;
    out.product_certificate = pc;
  }
  return out;
}

}  // namespace cap
