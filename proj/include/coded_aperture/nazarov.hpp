#ifndef CODED_APERTURE_NAZAROV_HPP
#define CODED_APERTURE_NAZAROV_HPP

#include "coded_aperture/certificate.hpp"
#include "coded_aperture/model.hpp"
#include "coded_aperture/waterfill.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace cap {

/// Nonnegative weights p_j over the real DFT basis, summing to 1. In 2D the
/// basis is psi_j (x) psi_k and index (j, k) is stored at j * side + k.
struct SpectrumTarget {
  Vec weights;
  int dims = 1;

  Index side() const;
  /// Indices with p_j > 0, ascending.
  std::vector<Index> support() const;
  /// Throws unless weights >= 0 and sum to 1 within 1e-12.
  void validate() const;

  /// weights / sum(weights).
  static SpectrumTarget normalized(Vec weights, int dims = 1);
};

/// Signs eps_j, one per support index of the target.
struct SignCortege {
  std::vector<Index> indices;
  std::vector<int> signs;
};

/// (1/N) sum_i |g(i)|, g = sum_j eps_j sqrt(p_j) psi_j.
double potential(const SpectrumTarget& target, const SignCortege& cortege);

/// g = sum_j eps_j sqrt(p_j) psi_j.
Vec signed_combination(const SpectrumTarget& target, const SignCortege& cortege);

struct GreedyResult {
  SignCortege cortege;
  std::vector<double> trace;  // potential at start and after every accepted flip
  int sweeps = 0;
  bool converged = false;     // last sweep made no flip
};

/// Seeded random start, then sweeps over the support in index order,
/// flipping any sign that raises the potential by more than 1e-12, until a
/// full sweep makes no flip or max_sweeps is reached.
GreedyResult greedy_cortege(const SpectrumTarget& target, std::uint64_t seed, int max_sweeps = 1000);

struct BoundedVector {
  Vec b;
  double m_bound = 0.0;
  double sup_norm = 0.0;
  double min_ratio = 0.0;        // min over support of (b, psi_j)^2 / p_j
  double saturation_gain = 0.0;  // kappa; +inf for b = M sgn(g)
};

/// b with ||b||_inf <= M and (b, psi_j)^2 >= p_j on the support, built from
/// g of the cortège: first b = M sgn(g) (sgn(0) = +1), then
/// b = clip(kappa g, -M, M) for kappa decreasing to M / ||g||_inf. b is
/// negated when (b, psi_0) > 0. Empty when no candidate verifies.
/// M defaults to m_bound(n) (1D) or m_bound_2d(side) (2D).
std::optional<BoundedVector> cortege_to_bounded(const SpectrumTarget& target,
                                                const SignCortege& cortege,
                                                std::optional<double> m = std::nullopt);

struct DesignOptions {
  std::uint64_t seed = 1;
  int max_sweeps = 1000;
  int restart_budget = 16;
  Index max_side_2d = 128;
};

struct NazarovDesign {
  Aperture aperture;
  DesignCertificate certificate;
  SpectrumAllocation allocation;
  std::vector<double> trace;
};

/// Thrown when no restart produced a verifying bounded vector, or the
/// final certificate fails. Carries the last certificate for diagnostics.
class CertificateFailure : public std::runtime_error {
 public:
  CertificateFailure(const std::string& what, DesignCertificate cert)
      : std::runtime_error(what), certificate(std::move(cert)) {}
  DesignCertificate certificate;
};

/// Waterfilled target at rho*, greedy cortège, bounded vector b, and the
/// mask a = (b + M) / (2M), with its certificate.
NazarovDesign design_aperture(const ImagingConfig& config, const Vec& d, const DesignOptions& options = {});

struct Design2D {
  NazarovDesign nazarov;
  /// Product of two 1D residue masks, offered for iid priors when n admits
  /// a residue family.
  std::optional<Aperture> product_flat;
  std::optional<DesignCertificate> product_certificate;
};

/// 2D version over the product basis with M_2D = (3 pi/2) beta(n)^-4.
/// `d` is the flattened row-major n x n prior.
Design2D design_aperture_2d(const ImagingConfig& config, const Vec& d, const DesignOptions& options = {});

}  // namespace cap

#endif  // CODED_APERTURE_NAZAROV_HPP
