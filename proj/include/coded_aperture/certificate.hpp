#ifndef CODED_APERTURE_CERTIFICATE_HPP
#define CODED_APERTURE_CERTIFICATE_HPP

#include "coded_aperture/spectra.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cap {

/// What a design guarantees and whether the guarantee was verified.
struct DesignCertificate {
  std::string method;  // "nazarov", "nazarov-2d", "flat", "flat-product-2d"
  int dims = 1;
  Index n = 0;

  double rho_star = 0.0;      // minimizer of the lower bound
  double bound_at_t = 0.0;    // lower bound at rho_star, exposure t
  double rho_aperture = 0.0;  // mean of the returned mask

  /// Exposure multiplier: 2 M(n)^2 for Nazarov designs, the loss factor for
  /// flat sequences.
  double exposure_penalty = 1.0;
  double lmmse_at_penalty = 0.0;  // lmmse of the mask at exposure_penalty * t

  // Sup-norm stage (Nazarov designs only).
  double m_bound = 0.0;
  double sup_norm = 0.0;
  double min_coefficient_ratio = 0.0;  // min_j (b, psi_j)^2 / p_j over p_j > 0
  double saturation_gain = 0.0;        // kappa of b = clip(kappa g); inf = hard sign

  /// Per-bin (1D) or per-quad (2D) achieved |\hat a|^2 and required minimum.
  Vec achieved;
  Vec required;
  /// Worst achieved/required ratio against the exact-budget threshold
  /// P_j / (4 M^2 P / N^2), logged next to the simple-budget test.
  double exact_budget_margin = 0.0;

  bool mask_ok = false;      // values in [0, 1]
  bool bounded_ok = false;   // ||b||_inf <= M and (b, psi_j)^2 >= p_j on the support
  bool spectral_ok = false;  // achieved >= required
  bool rho_ok = false;       // rho(a) <= 1/2 (Nazarov) / flatness (flat)
  bool lmmse_ok = false;     // lmmse_at_penalty <= bound_at_t
  bool pass = false;

  std::uint64_t seed = 0;
  int restarts = 0;
  int sweeps = 0;
  bool converged = true;
  std::vector<std::string> warnings;
};

}  // namespace cap

#endif  // CODED_APERTURE_CERTIFICATE_HPP
