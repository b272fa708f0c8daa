#include "coded_aperture/spectra.hpp"

#include <map>
#include <numeric>
#include <utility>

namespace cap {

namespace {

enum class BasisKind { constant, cosine, half_cosine, sine };

BasisKind kind_of(const BasisSpec& spec, Index j) {
  if (j == 0) return BasisKind::constant;
  if (j < spec.h) return BasisKind::cosine;
  if (j == spec.h) return spec.n % 2 == 0 ? BasisKind::half_cosine : BasisKind::cosine;
  return BasisKind::sine;
}

void check_index(const BasisSpec& spec, Index j) {
  if (j < 0 || j >= spec.n) throw std::out_of_range("basis index out of range");
}

}  // namespace

Eigen::MatrixXcd dft2(const Mat& grid) {
  if (grid.size() == 0) throw std::invalid_argument("dft2: empty input");
  Eigen::MatrixXcd rows(grid.rows(), grid.cols());
  for (Index r = 0; r < grid.rows(); ++r) rows.row(r) = dft(grid.row(r).transpose()).transpose();
  Eigen::MatrixXcd out(grid.rows(), grid.cols());
  for (Index c = 0; c < grid.cols(); ++c) out.col(c) = dft(rows.col(c));
  return out;
}

Mat power_spectrum_2d(const Mat& grid) { return dft2(grid).cwiseAbs2(); }

BasisSpec BasisSpec::make(Index n) {
  if (n < 1) throw std::invalid_argument("BasisSpec: n must be positive");
  return BasisSpec{n, n / 2, 2.0 * std::numbers::pi / static_cast<double>(n)};
}

Vec basis_vector(const BasisSpec& spec, Index j) {
  check_index(spec, j);
  BasisTable table(spec.n);
  Vec out(spec.n);
  table.row(j, out);
  return out;
}

Mat basis_matrix(Index n) {
  BasisTable table(n);
  Mat out(n, n);
  Vec row(n);
  for (Index j = 0; j < n; ++j) {
    table.row(j, row);
    out.row(j) = row.transpose();
  }
  return out;
}

BasisTable::BasisTable(Index n) : spec_(BasisSpec::make(n)), cos_(n), sin_(n) {
  for (Index k = 0; k < n; ++k) {
    // Exact zeros and signs at the quarter points keep sgn() stable.
    const double angle = spec_.omega * static_cast<double>(k);
    if (4 * k == n) {
      cos_[k] = 0.0;
      sin_[k] = 1.0;
    } else if (4 * k == 3 * n) {
      cos_[k] = 0.0;
      sin_[k] = -1.0;
    } else if (2 * k == n) {
      cos_[k] = -1.0;
      sin_[k] = 0.0;
    } else {
      cos_[k] = std::cos(angle);
      sin_[k] = k == 0 ? 0.0 : std::sin(angle);
    }
  }
}

double BasisTable::value(Index j, Index i) const {
  check_index(spec_, j);
  const Index k = static_cast<Index>((static_cast<long long>(j) * i) % spec_.n);
  switch (kind_of(spec_, j)) {
    case BasisKind::constant: return 1.0;
    case BasisKind::cosine: return std::numbers::sqrt2 * cos_[k];
    case BasisKind::half_cosine: return cos_[k];
    case BasisKind::sine: return std::numbers::sqrt2 * sin_[k];
  }
  return 0.0;
}

void BasisTable::row(Index j, Eigen::Ref<Vec> out) const {
  check_index(spec_, j);
  const Index n = spec_.n;
  const BasisKind kind = kind_of(spec_, j);
  if (kind == BasisKind::constant) {
    out.setOnes();
    return;
  }
  const std::vector<double>& table = kind == BasisKind::sine ? sin_ : cos_;
  const double scale = kind == BasisKind::half_cosine ? 1.0 : std::numbers::sqrt2;
  Index phase = 0;
  for (Index i = 0; i < n; ++i) {
    out(i) = scale * table[phase];
    phase += j;
    if (phase >= n) phase -= n;
  }
}

Vec basis_coefficients(const Vec& b) {
  const Index n = b.size();
  const BasisSpec spec = BasisSpec::make(n);
  const CVec spectrum = dft(b);
  const double inv_n = 1.0 / static_cast<double>(n);
  Vec out(n);
  for (Index j = 0; j < n; ++j) {
    switch (kind_of(spec, j)) {
      case BasisKind::constant: out(j) = spectrum(0).real() * inv_n; break;
      case BasisKind::cosine: out(j) = std::numbers::sqrt2 * spectrum(j).real() * inv_n; break;
      case BasisKind::half_cosine: out(j) = spectrum(j).real() * inv_n; break;
      case BasisKind::sine: out(j) = -std::numbers::sqrt2 * spectrum(j).imag() * inv_n; break;
    }
  }
  return out;
}

double beta(Index n) {
  const BasisSpec spec = BasisSpec::make(n);
  if (n == 1) return 1.0;

  // (1/n) sum_i |cos(omega j i)| depends on j only through q = n / gcd(j, n):
  // the phases j*i mod n visit each multiple of gcd(j, n) equally often.
  std::map<std::pair<int, Index>, double> cache;
  auto orbit_mean = [&](bool sine, Index q) {
    auto [it, fresh] = cache.try_emplace({sine ? 1 : 0, q}, 0.0);
    if (fresh) {
      const double step = 2.0 * std::numbers::pi / static_cast<double>(q);
      double acc = 0.0;
      for (Index m = 0; m < q; ++m) {
        const double x = step * static_cast<double>(m);
        if (sine) {
          acc += (2 * m == q) ? 0.0 : std::abs(std::sin(x));
        } else {
          acc += (4 * m == q || 4 * m == 3 * q) ? 0.0 : std::abs(std::cos(x));
        }
      }
      it->second = acc / static_cast<double>(q);
    }
    return it->second;
  };

  double best = 1.0;
  for (Index j = 1; j < n; ++j) {
    const Index q = n / std::gcd(j, n);
    double l1 = 0.0;
    switch (kind_of(spec, j)) {
      case BasisKind::constant: l1 = 1.0; break;
      case BasisKind::cosine: l1 = std::numbers::sqrt2 * orbit_mean(false, q); break;
      case BasisKind::half_cosine: l1 = orbit_mean(false, q); break;
      case BasisKind::sine: l1 = std::numbers::sqrt2 * orbit_mean(true, q); break;
    }
    best = std::min(best, l1);
  }
  return best;
}

double m_bound(Index n) {
  const double b = beta(n);
  return 1.5 * std::numbers::pi / (b * b);
}

double m_bound_2d(Index n) {
  const double b = beta(n);
  return 1.5 * std::numbers::pi / (b * b * b * b);
}

}  // namespace cap
