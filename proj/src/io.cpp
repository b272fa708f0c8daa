#include "coded_aperture/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <istream>
#include <ostream>
#include <sstream>

namespace cap {

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_aperture(std::ostream& out, const Aperture& a) {
  if (a.lens) throw std::invalid_argument("write_aperture: the ideal lens is not a mask");
  if (a.dims != 1 && a.dims != 2) throw std::invalid_argument("write_aperture: dims must be 1 or 2");
  out << "n=" << a.side << " dims=" << a.dims << " kind=" << (a.is_binary() ? "binary" : "continuous") << '\n';
  const Index per_line = a.dims == 2 ? a.side : 1;
  for (Index i = 0; i < a.size(); ++i) {
    out << format_number(a.values(i)) << ((i + 1) % per_line == 0 ? '\n' : ' ');
  }
}

Aperture read_aperture(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw FormatError("aperture file: missing header");
  std::istringstream hs(header);
  long long n = -1;
  int dims = -1;
  std::string kind;
  for (std::string tok; hs >> tok;) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw FormatError("aperture file: bad header token '" + tok + "'");
    const std::string key = tok.substr(0, eq);
    const std::string value = tok.substr(eq + 1);
    try {
      if (key == "n") n = std::stoll(value);
      else if (key == "dims") dims = std::stoi(value);
      else if (key == "kind") kind = value;
      else throw FormatError("aperture file: unknown header key '" + key + "'");
    } catch (const std::logic_error&) {
      throw FormatError("aperture file: bad header value '" + tok + "'");
    }
  }
  if (n < 1) throw FormatError("aperture file: header needs n >= 1");
  if (dims != 1 && dims != 2) throw FormatError("aperture file: header needs dims=1 or dims=2");
  if (kind != "binary" && kind != "continuous") throw FormatError("aperture file: header needs kind=binary|continuous");

  const Index count = dims == 2 ? n * n : n;
  Vec values(count);
  Index read = 0;
  for (std::string tok; in >> tok;) {
    if (read == count) throw FormatError("aperture file: more values than the header declares");
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::logic_error&) {
      throw FormatError("aperture file: bad value '" + tok + "'");
    }
    if (!(v >= 0.0 && v <= 1.0)) throw FormatError("aperture file: value out of [0, 1]: " + tok);
    values(read++) = v;
  }
  if (read != count) {
    throw FormatError("aperture file: expected " + std::to_string(count) + " values, found " + std::to_string(read));
  }

  Aperture a;
  a.values = std::move(values);
  a.dims = dims;
  a.side = static_cast<Index>(n);
  if (kind == "binary" && !a.is_binary()) throw FormatError("aperture file: kind=binary but values are not 0/1");
  return a;
}

void save_aperture(const std::string& path, const Aperture& a) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_aperture(out, a);
}

Aperture load_aperture(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open aperture file '" + path + "'");
  return read_aperture(in);
}

namespace {

nlohmann::json finite_or_string(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
}

}  // namespace

nlohmann::json to_json(const DesignCertificate& c) {
  nlohmann::json j;
  j["method"] = c.method;
  j["dims"] = c.dims;
  j["n"] = c.n;
  j["pass"] = c.pass;
  j["checks"] = {{"mask", c.mask_ok},       {"bounded", c.bounded_ok}, {"spectral", c.spectral_ok},
                 {"rho", c.rho_ok},         {"lmmse", c.lmmse_ok}};
  j["rho_star"] = c.rho_star;
  j["rho_aperture"] = c.rho_aperture;
  j["bound_at_t"] = c.bound_at_t;
  j["exposure_penalty"] = finite_or_string(c.exposure_penalty);
  j["lmmse_at_penalty"] = c.lmmse_at_penalty;
  j["m_bound"] = c.m_bound;
  j["sup_norm"] = c.sup_norm;
  j["min_coefficient_ratio"] = finite_or_string(c.min_coefficient_ratio);
  j["saturation_gain"] = finite_or_string(c.saturation_gain);
  j["exact_budget_margin"] = finite_or_string(c.exact_budget_margin);
  j["seed"] = c.seed;
  j["restarts"] = c.restarts;
  j["sweeps"] = c.sweeps;
  j["converged"] = c.converged;
  j["achieved"] = std::vector<double>(c.achieved.data(), c.achieved.data() + c.achieved.size());
  j["required"] = std::vector<double>(c.required.data(), c.required.data() + c.required.size());
  j["warnings"] = c.warnings;
  return j;
}

std::string summarize(const DesignCertificate& c) {
  std::ostringstream out;
  out.precision(8);
  out << "method            " << c.method << " (" << c.dims << "D, n=" << c.n << ")\n";
  out << "certificate       " << (c.pass ? "PASS" : "FAIL") << '\n';
  out << "rho*              " << c.rho_star << "   rho(a) " << c.rho_aperture << '\n';
  out << "exposure penalty  " << c.exposure_penalty;
  if (c.exposure_penalty > 0.0 && std::isfinite(c.exposure_penalty)) {
    out << "  (" << 10.0 * std::log10(c.exposure_penalty) << " dB)";
  }
  out << '\n';
  out << "lmmse at penalty  " << c.lmmse_at_penalty << "  <=  bound at t " << c.bound_at_t << "  : "
      << (c.lmmse_ok ? "ok" : "FAIL") << '\n';
  if (c.m_bound > 0.0) {
    out << "M                 " << c.m_bound << "   ||b||_inf " << c.sup_norm << "   min (b,psi)^2/p "
        << c.min_coefficient_ratio << "   gain " << c.saturation_gain << '\n';
  }
  if (c.achieved.size() > 0) {
    double worst = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < c.achieved.size(); ++i) {
      if (c.required(i) > 0.0) worst = std::min(worst, c.achieved(i) / c.required(i));
    }
    out << "spectral          " << (c.spectral_ok ? "ok" : "FAIL") << "   worst achieved/required " << worst << '\n';
  }
  if (c.restarts > 0 || c.sweeps > 0) {
    out << "seed              " << c.seed << "   restarts " << c.restarts << "   sweeps " << c.sweeps << '\n';
  }
  for (const std::string& w : c.warnings) out << "warning           " << w << '\n';
  return out.str();
}

}  // namespace cap
