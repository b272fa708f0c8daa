#ifndef CODED_APERTURE_SPECTRA_HPP
#define CODED_APERTURE_SPECTRA_HPP

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace cap {

using Index = Eigen::Index;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXd;

template <typename Scalar>
using ComplexVector = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

/// Unnormalized forward DFT, \hat a_j = sum_i a_i exp(-2 pi i j i / n).
///
/// Direct O(n^2) summation. The twiddle factor for (j, i) is looked up at
/// (j * i) mod n, which keeps the phase exact for any n, prime or not.
/// Real or complex input.
template <typename Derived>
ComplexVector<typename Eigen::NumTraits<typename Derived::Scalar>::Real> dft(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Eigen::NumTraits<typename Derived::Scalar>::Real;
  const Index n = a.size();
  if (n == 0) throw std::invalid_argument("dft: empty input");

  const Scalar step = Scalar(-2) * std::numbers::pi_v<Scalar> / Scalar(n);
  std::vector<std::complex<Scalar>> twiddle(static_cast<std::size_t>(n));
  for (Index k = 0; k < n; ++k) twiddle[k] = std::polar(Scalar(1), step * Scalar(k));

  ComplexVector<Scalar> out(n);
  for (Index j = 0; j < n; ++j) {
    std::complex<Scalar> acc(0);
    Index phase = 0;
    for (Index i = 0; i < n; ++i) {
      acc += std::complex<Scalar>(a(i)) * twiddle[phase];
      phase += j;
      if (phase >= n) phase -= n;
    }
    out(j) = acc;
  }
  return out;
}

/// |\hat a_j|^2 for every j.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> power_spectrum(
    const Eigen::MatrixBase<Derived>& a) {
  return dft(a).cwiseAbs2();
}

/// 2D unnormalized DFT of an n x n grid (separable: rows, then columns).
Eigen::MatrixXcd dft2(const Mat& grid);

/// |\hat a_{jk}|^2 of an n x n grid.
Mat power_spectrum_2d(const Mat& grid);

/// Index bookkeeping for the real orthonormal DFT basis psi_j.
struct BasisSpec {
  Index n = 1;
  Index h = 0;         // ceil((n - 1) / 2)
  double omega = 0.0;  // 2 pi / n

  static BasisSpec make(Index n);
};

/// psi_j as a length-n vector:
///   psi_0 = 1
///   sqrt(2) cos(omega j i)   0 < j < h
///   sqrt(2) sin(omega j i)   h < j < n
///   cos(omega h i) at j = h for even n, sqrt(2) cos(omega h i) for odd n.
Vec basis_vector(const BasisSpec& spec, Index j);

/// Rows are psi_0 .. psi_{n-1}. O(n^2) memory; meant for small n and 2D work.
Mat basis_matrix(Index n);

/// Evaluates psi_j(i) from cosine/sine tables of length n, so a basis row
/// costs O(n) time and no O(n^2) storage.
class BasisTable {
 public:
  explicit BasisTable(Index n);

  Index size() const { return spec_.n; }
  const BasisSpec& spec() const { return spec_; }

  double value(Index j, Index i) const;
  /// Writes psi_j into out (length n).
  void row(Index j, Eigen::Ref<Vec> out) const;

 private:
  BasisSpec spec_;
  std::vector<double> cos_;
  std::vector<double> sin_;
};

/// All inner products (b, psi_j) = (1/n) sum_i b_i psi_j(i), computed from
/// the DFT of b.
Vec basis_coefficients(const Vec& b);

/// Normalized l1 norm (1/n) sum_i |v_i|.
inline double mean_abs(const Vec& v) { return v.cwiseAbs().mean(); }

/// beta(n) = min_j (1/n) sum_i |psi_j(i)|.
double beta(Index n);

/// M(n) = (3 pi / 2) beta(n)^-2.
double m_bound(Index n);

/// Sup-norm constant for the 2D product basis: (3 pi / 2) beta(n)^-4.
double m_bound_2d(Index n);

}  // namespace cap

#endif  // CODED_APERTURE_SPECTRA_HPP
