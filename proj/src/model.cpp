#include "coded_aperture/model.hpp"

#include "coded_aperture/rng.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace cap {

namespace {

using RowMajorMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double parse_double(std::string_view key, std::string_view text) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw std::invalid_argument("prior: bad value for " + std::string(key) + ": '" +
                                std::string(text) + "'");
  }
  return value;
}

std::vector<double> read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("prior: cannot open table file '" + path + "'");
  std::vector<double> values;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    values.push_back(parse_double("table", std::string_view(line).substr(first, last - first + 1)));
  }
  return values;
}

Vec flatten_row_major(const Mat& grid) {
  RowMajorMat rm = grid;
  return Eigen::Map<const Vec>(rm.data(), rm.size());
}

}  // namespace

ScenePrior ScenePrior::iid(double theta) {
  ScenePrior p;
  p.kind = PriorKind::iid;
  p.theta = theta;
  p.validate();
  return p;
}

ScenePrior ScenePrior::bandlimited(double theta, double s, double r) {
  ScenePrior p;
  p.kind = PriorKind::bandlimited;
  p.theta = theta;
  p.s = s;
  p.r = r;
  p.validate();
  return p;
}

ScenePrior ScenePrior::powerlaw(double theta, double exponent, double knee) {
  ScenePrior p;
  p.kind = PriorKind::powerlaw;
  p.theta = theta;
  p.exponent = exponent;
  p.knee = knee;
  p.validate();
  return p;
}

ScenePrior ScenePrior::from_table(std::vector<double> samples) {
  ScenePrior p;
  p.kind = PriorKind::table;
  p.table = std::move(samples);
  p.theta = p.table.empty() ? 0.0 : p.table.front();
  p.validate();
  return p;
}

void ScenePrior::validate() const {
  if (!std::isfinite(theta) || theta < 0.0) throw std::invalid_argument("prior: theta must be >= 0");
  switch (kind) {
    case PriorKind::iid: break;
    case PriorKind::bandlimited:
      if (!(r > 0.0)) throw std::invalid_argument("prior: bandlimited needs r > 0");
      if (s < r) throw std::invalid_argument("prior: bandlimited needs s >= r");
      if (s + r > 0.5) throw std::invalid_argument("prior: bandlimited needs s + r <= 1/2");
      break;
    case PriorKind::powerlaw:
      if (!(exponent > 0.0)) throw std::invalid_argument("prior: powerlaw needs exponent > 0");
      if (!(knee > 0.0)) throw std::invalid_argument("prior: powerlaw needs x0 > 0");
      break;
    case PriorKind::table:
      if (table.empty()) throw std::invalid_argument("prior: empty table");
      for (double v : table) {
        if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("prior: negative table entry");
      }
      if (theta != table.front()) throw std::invalid_argument("prior: table theta must equal table[0]");
      break;
  }
}

double ScenePrior::density(double x) const {
  const double y = x > 0.5 ? 1.0 - x : x;
  switch (kind) {
    case PriorKind::iid: return theta;
    case PriorKind::bandlimited:
      if (y <= s - r) return theta;
      if (y >= s + r) return 0.0;
      return theta * (s + r - y) / (2.0 * r);
    case PriorKind::powerlaw: return theta * std::pow(knee / (knee + y), exponent);
    case PriorKind::table: {
      if (table.size() == 1) return table.front();
      const double pos = y / 0.5 * static_cast<double>(table.size() - 1);
      const auto lo = std::min(static_cast<std::size_t>(pos), table.size() - 2);
      const double frac = pos - static_cast<double>(lo);
      return table[lo] + frac * (table[lo + 1] - table[lo]);
    }
  }
  return 0.0;
}

std::string_view to_string(PriorKind kind) {
  switch (kind) {
    case PriorKind::iid: return "iid";
    case PriorKind::bandlimited: return "bandlimited";
    case PriorKind::powerlaw: return "powerlaw";
    case PriorKind::table: return "table";
  }
  return "?";
}

ScenePrior parse_prior(std::string_view record) {
  std::istringstream in{std::string(record)};
  std::vector<std::string> tokens;
  for (std::string tok; in >> tok;) tokens.push_back(tok);
  std::size_t pos = 0;
  if (pos < tokens.size() && tokens[pos] == "prior") ++pos;
  if (pos >= tokens.size()) throw std::invalid_argument("prior: missing kind");

  ScenePrior p;
  const std::string& kind = tokens[pos++];
  if (kind == "iid") p.kind = PriorKind::iid;
  else if (kind == "bandlimited") p.kind = PriorKind::bandlimited;
  else if (kind == "powerlaw") p.kind = PriorKind::powerlaw;
  else if (kind == "table") p.kind = PriorKind::table;
  else throw std::invalid_argument("prior: unknown kind '" + kind + "'");

  bool have_theta = false;
  for (; pos < tokens.size(); ++pos) {
    const std::string& tok = tokens[pos];
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("prior: expected key=value, got '" + tok + "'");
    const std::string key = tok.substr(0, eq);
    const std::string_view value = std::string_view(tok).substr(eq + 1);
    if (key == "theta") {
      p.theta = parse_double(key, value);
      have_theta = true;
    } else if (key == "s") {
      p.s = parse_double(key, value);
    } else if (key == "r") {
      p.r = parse_double(key, value);
    } else if (key == "exponent") {
      p.exponent = parse_double(key, value);
    } else if (key == "x0") {
      p.knee = parse_double(key, value);
    } else if (key == "table") {
      p.table_path = std::string(value);
    } else {
      throw std::invalid_argument("prior: unknown key '" + key + "'");
    }
  }

  if (p.kind == PriorKind::table) {
    if (have_theta) throw std::invalid_argument("prior: table priors take theta from the table");
    if (p.table_path.empty()) throw std::invalid_argument("prior: table kind needs table=<path>");
    p.table = read_table(p.table_path);
    if (p.table.empty()) throw std::invalid_argument("prior: empty table");
    p.theta = p.table.front();
  } else if (!have_theta) {
    throw std::invalid_argument("prior: missing theta=");
  }
  p.validate();
  return p;
}

std::string format_prior(const ScenePrior& prior) {
  std::ostringstream out;
  out.precision(17);
  out << "prior " << to_string(prior.kind);
  switch (prior.kind) {
    case PriorKind::iid: out << " theta=" << prior.theta; break;
    case PriorKind::bandlimited:
      out << " theta=" << prior.theta << " s=" << prior.s << " r=" << prior.r;
      break;
    case PriorKind::powerlaw:
      out << " theta=" << prior.theta << " exponent=" << prior.exponent << " x0=" << prior.knee;
      break;
    case PriorKind::table: out << " table=" << prior.table_path; break;
  }
  return out.str();
}

Vec sample_prior(const ScenePrior& prior, Index n) {
  if (n < 1) throw std::invalid_argument("sample_prior: n must be positive");
  prior.validate();
  Vec d(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (Index i = 0; i < n; ++i) {
    // Sample index and n - i through the same argument so mirror pairs match bitwise.
    const Index folded = std::min(i, n - i);
    d(i) = inv_n * prior.density(static_cast<double>(folded) * inv_n);
  }
  return d;
}

Vec sample_prior_2d(const ScenePrior& prior, Index n) {
  const Vec line = sample_prior(prior, n) * static_cast<double>(n);  // d(i/n)
  Vec out(n * n);
  const double scale =
      prior.theta > 0.0 ? 1.0 / (prior.theta * static_cast<double>(n * n)) : 0.0;
  for (Index j = 0; j < n; ++j) {
    for (Index k = 0; k < n; ++k) out(j * n + k) = line(j) * line(k) * scale;
  }
  return out;
}

double ImagingConfig::gamma(double rho) const {
  if (t == 0.0) return 0.0;
  const double noise = W + J * rho;
  if (!(noise > 0.0)) throw std::domain_error("gamma: W + J rho must be positive when t > 0");
  return t / (static_cast<double>(points()) * noise);
}

void ImagingConfig::validate() const {
  if (n < 1) throw std::invalid_argument("config: n must be positive");
  if (dims != 1 && dims != 2) throw std::invalid_argument("config: dims must be 1 or 2");
  auto nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (!nonneg(t)) throw std::invalid_argument("config: t must be >= 0");
  if (!nonneg(W)) throw std::invalid_argument("config: W must be >= 0");
  if (!nonneg(J)) throw std::invalid_argument("config: J must be >= 0");
}

Aperture Aperture::line(Vec values) {
  Aperture a;
  a.side = values.size();
  a.values = std::move(values);
  a.dims = 1;
  return a;
}

Aperture Aperture::grid(const Mat& values) {
  if (values.rows() != values.cols()) throw std::invalid_argument("Aperture: 2D grid must be square");
  Aperture a;
  a.values = flatten_row_major(values);
  a.dims = 2;
  a.side = values.rows();
  return a;
}

Aperture Aperture::ideal_lens(Index n, int dims) {
  const Index points = dims == 2 ? n * n : n;
  Aperture a;
  a.values = Vec::Zero(points);
  a.values(0) = static_cast<double>(points);
  a.dims = dims;
  a.side = n;
  a.lens = true;
  return a;
}

bool Aperture::is_mask() const {
  return !lens && values.size() > 0 && values.minCoeff() >= 0.0 && values.maxCoeff() <= 1.0;
}

bool Aperture::is_binary() const {
  for (Index i = 0; i < values.size(); ++i) {
    if (values(i) != 0.0 && values(i) != 1.0) return false;
  }
  return true;
}

Mat Aperture::as_grid() const {
  if (dims == 1) return values;
  return Eigen::Map<const RowMajorMat>(values.data(), side, side);
}

Vec Aperture::power() const {
  if (dims == 1) return power_spectrum(values);
  return flatten_row_major(power_spectrum_2d(as_grid()));
}

double lmmse_from_power(const ImagingConfig& config, const Vec& d, const Vec& power, double rho,
                        const LmmseOptions& options) {
  config.validate();
  if (d.size() != power.size() || d.size() != config.points()) {
    throw std::invalid_argument("lmmse: size mismatch between prior, aperture and config");
  }
  double prior_total = 0.0;
  for (Index i = 0; i < d.size(); ++i) {
    if (d(i) < 0.0) throw std::invalid_argument("lmmse: negative prior sample");
    prior_total += d(i);
  }
  if (config.t == 0.0) return prior_total;

  const double noise = config.W + config.J * rho;
  if (!(noise > 0.0)) {
    if (power.maxCoeff() == 0.0) return prior_total;
    if (!options.allow_noiseless) {
      throw std::domain_error("lmmse: W + J rho = 0 with t > 0 (enable the noiseless limit)");
    }
    // Bins the aperture does not reach stay at their prior variance. The DFT
    // leaves round-off in bins that are exactly zero.
    const double floor = 1e-12 * power.maxCoeff();
    double sum = 0.0;
    for (Index i = 0; i < d.size(); ++i) {
      if (power(i) <= floor) sum += d(i);
    }
    return sum;
  }

  const double gain = config.t / (static_cast<double>(config.points()) * noise);
  double sum = 0.0;
  for (Index i = 0; i < d.size(); ++i) {
    if (d(i) == 0.0) continue;
    // 1 / (1/d + g p) written to stay finite for tiny d.
    sum += d(i) / (1.0 + d(i) * gain * power(i));
  }
  return sum;
}

double lmmse(const ImagingConfig& config, const Vec& d, const Aperture& a,
             const LmmseOptions& options) {
  if (a.dims != config.dims) throw std::invalid_argument("lmmse: aperture/config dimension mismatch");
  if (!a.lens && !a.is_mask()) throw std::invalid_argument("lmmse: aperture values must lie in [0, 1]");
  return lmmse_from_power(config, d, a.power(), a.rho(), options);
}

Aperture random_onoff(Index n, double rho, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("random_onoff: n must be positive");
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("random_onoff: rho must lie in [0, 1]");
  Rng rng(seed);
  Vec v(n);
  for (Index i = 0; i < n; ++i) v(i) = rng.bernoulli(rho) ? 1.0 : 0.0;
  return Aperture::line(std::move(v));
}

std::uint64_t RandomOnOffBank::mask_seed(std::uint64_t seed, std::size_t grid_index, int trial) {
  return derive_seed(seed, {0x72616E64ULL, grid_index, static_cast<std::uint64_t>(trial)});
}

RandomOnOffBank::RandomOnOffBank(Index n, std::vector<double> rho_grid, int trials,
                                 std::uint64_t seed)
    : grid_(std::move(rho_grid)), trials_(trials) {
  if (grid_.empty()) throw std::invalid_argument("random on-off: empty rho grid");
  if (trials_ < 1) throw std::invalid_argument("random on-off: trials must be >= 1");
  samples_.resize(grid_.size());
  for (std::size_t g = 0; g < grid_.size(); ++g) {
    for (int k = 0; k < trials_; ++k) {
      const Aperture a = random_onoff(n, grid_[g], mask_seed(seed, g, k));
      samples_[g].push_back({a.power(), a.rho()});
    }
  }
}

RandomOnOffResult RandomOnOffBank::evaluate(const ImagingConfig& config, const Vec& d) const {
  RandomOnOffResult result;
  result.mean_lmmse = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < grid_.size(); ++g) {
    double acc = 0.0;
    for (const Sample& s : samples_[g]) acc += lmmse_from_power(config, d, s.power, s.rho);
    const double mean = acc / static_cast<double>(trials_);
    result.mean_per_rho.push_back(mean);
    if (mean < result.mean_lmmse) {
      result.mean_lmmse = mean;
      result.rho_star = grid_[g];
    }
  }
  return result;
}

RandomOnOffResult best_random_onoff(const ImagingConfig& config, const Vec& d,
                                    std::span<const double> rho_grid, int trials,
                                    std::uint64_t seed) {
  const RandomOnOffBank bank(config.n, std::vector<double>(rho_grid.begin(), rho_grid.end()),
                             trials, seed);
  return bank.evaluate(config, d);
}

}  // namespace cap
