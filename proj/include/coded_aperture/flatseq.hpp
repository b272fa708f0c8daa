#ifndef CODED_APERTURE_FLATSEQ_HPP
#define CODED_APERTURE_FLATSEQ_HPP

#include "coded_aperture/certificate.hpp"
#include "coded_aperture/model.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace cap {

/// Cyclic difference set from e-th power residues modulo a prime p.
///
///   e = 2: p = 3 (mod 4)
///   e = 4: p = 4x^2 + 1, x odd;  with zero: p = 4x^2 + 9, x odd
///   e = 8: p = 8a^2 + 1 = 64b^2 + 9, a, b odd;
///          with zero: p = 8a^2 + 49 = 64b^2 + 441, a odd, b even
struct ResidueFamily {
  std::uint64_t p = 0;
  int e = 2;
  bool include_zero = false;

  /// Number of ones, (p - 1)/e (+1 with zero).
  Index ones() const;
  /// k / p.
  double rho() const;
  /// True when p, e, include_zero match one of the families above.
  bool valid() const;
};

bool is_prime(std::uint64_t n);

/// a^k mod m without overflow for m < 2^63.
std::uint64_t pow_mod(std::uint64_t a, std::uint64_t k, std::uint64_t m);

/// a_i = 1 iff i is a nonzero e-th power residue mod p (plus i = 0 with
/// include_zero). Throws if the family is invalid or the spectrum is not
/// flat within 1e-6 relative.
Aperture residue_sequence(const ResidueFamily& family);

/// All valid families of exponent e with p <= n_max, sorted by p. For e = 4
/// and e = 8 both the plain and the with-zero families are listed;
/// `with_zero_families = false` restricts to the plain ones.
std::vector<ResidueFamily> find_residue_lengths(int e, std::uint64_t n_max,
                                                bool with_zero_families = true);

/// Every residue family of length exactly n.
std::vector<ResidueFamily> families_at(std::uint64_t n);

/// f_a(rho) = rho (1 - rho) / (a + rho); a = W/J may be +inf.
double penalty_curve(double a, double rho);

/// Maximizer of f_a on [0, 1]: sqrt(a^2 + a) - a.
double penalty_peak(double a);

/// sup_x f_a(x) / f_a(rho).
double loss_factor(double a, double rho);

/// sup over a in [0, 1000] (step 1e-3) of min over rho in rho_set of
/// loss_factor(a, rho).
double worst_case_penalty(std::span<const double> rho_set);

struct FlatDesign {
  Aperture aperture;
  ResidueFamily family;
  DesignCertificate certificate;
};

/// Picks the residue family at config.n with the smallest loss factor for
/// a = W/J and certifies lmmse(penalty * t) <= min_rho lower_bound(t).
FlatDesign flat_design(const ImagingConfig& config, const Vec& d);

}  // namespace cap

#endif  // CODED_APERTURE_FLATSEQ_HPP
