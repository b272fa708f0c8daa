#pragma once

#include "coded_aperture/spectra.hpp"

#include <vector>

inline std::vector<double> to_std(const cap::Vec& v) { return {v.data(), v.data() + v.size()}; }

inline cap::Vec to_vec(const std::vector<double>& v) {
  return Eigen::Map<const cap::Vec>(v.data(), static_cast<cap::Index>(v.size()));
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }
