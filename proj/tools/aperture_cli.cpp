// coded-aperture: design, evaluate and study aperture masks.

#include "coded_aperture/experiments.hpp"
#include "coded_aperture/flatseq.hpp"
#include "coded_aperture/io.hpp"
#include "coded_aperture/nazarov.hpp"
#include "coded_aperture/waterfill.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace cap;

constexpr int kOk = 0;
constexpr int kInvalid = 2;
constexpr int kCertificate = 3;

struct NoiseFlags {
  double t = 0.0;
  double W = 0.001;
  double J = 0.001;
};

void add_noise(CLI::App* cmd, NoiseFlags& f, bool need_t = true) {
  auto* t = cmd->add_option("--t", f.t, "exposure time");
  if (need_t) t->required();
  cmd->add_option("--W", f.W, "thermal noise")->capture_default_str();
  cmd->add_option("--J", f.J, "shot noise")->capture_default_str();
}

// A prior is either an inline record or a file whose first record line is used.
ScenePrior load_prior(const std::string& text) {
  if (std::filesystem::is_regular_file(text)) {
    std::ifstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      return parse_prior(line);
    }
    throw std::invalid_argument("prior file '" + text + "' holds no record");
  }
  return parse_prior(text);
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

std::string aperture_text(const Aperture& a) {
  std::ostringstream s;
  write_aperture(s, a);
  return s.str();
}

std::string sig12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// design ---------------------------------------------------------------------

struct DesignFlags {
  Index n = 0;
  NoiseFlags noise;
  std::string prior = "iid theta=1";
  std::string method = "nazarov";
  std::uint64_t seed = 1;
  int restarts = 16;
  int dims = 1;
  std::string out;
  std::string report;
};

int emit_design(const DesignFlags& f, const Aperture& a, const DesignCertificate& cert) {
  write_text(f.out, aperture_text(a));
  if (!f.report.empty()) write_text(f.report, to_json(cert).dump(2) + "\n");
  std::cerr << summarize(cert);
  return cert.pass ? kOk : kCertificate;
}

int run_design(const DesignFlags& f) {
  ImagingConfig config{f.n, f.noise.t, f.noise.W, f.noise.J, f.dims};
  config.validate();
  const ScenePrior prior = load_prior(f.prior);
  DesignOptions options;
  options.seed = f.seed;
  options.restart_budget = f.restarts;

  try {
    if (f.dims == 2) {
      const Vec d = sample_prior_2d(prior, f.n);
      const Design2D design = design_aperture_2d(config, d, options);
      if (f.method == "flat") {
        if (!design.product_flat) throw std::invalid_argument("no product flat design for this prior and n");
        return emit_design(f, *design.product_flat, *design.product_certificate);
      }
      return emit_design(f, design.nazarov.aperture, design.nazarov.certificate);
    }
    const Vec d = sample_prior(prior, f.n);
    if (f.method == "flat") {
      const FlatDesign design = flat_design(config, d);
      return emit_design(f, design.aperture, design.certificate);
    }
    const NazarovDesign design = design_aperture(config, d, options);
    return emit_design(f, design.aperture, design.certificate);
  } catch (const CertificateFailure& e) {
    if (!f.report.empty()) write_text(f.report, to_json(e.certificate).dump(2) + "\n");
    std::cerr << summarize(e.certificate) << "error: " << e.what() << '\n';
    return kCertificate;
  }
}

// evaluate -------------------------------------------------------------------

struct EvaluateFlags {
  std::string aperture;
  bool ideal_lens = false;
  Index n = 0;
  int dims = 1;
  NoiseFlags noise;
  std::string prior = "iid theta=1";
  bool allow_noiseless = false;
};

int run_evaluate(const EvaluateFlags& f) {
  Aperture a;
  if (f.ideal_lens) {
    if (f.n < 1) throw std::invalid_argument("--ideal-lens needs --n");
    a = Aperture::ideal_lens(f.n, f.dims);
  } else {
    if (f.aperture.empty()) throw std::invalid_argument("give --aperture or --ideal-lens");
    a = load_aperture(f.aperture);
  }
  ImagingConfig config{a.side, f.noise.t, f.noise.W, f.noise.J, a.dims};
  config.validate();
  const ScenePrior prior = load_prior(f.prior);
  const Vec d = a.dims == 2 ? sample_prior_2d(prior, a.side) : sample_prior(prior, a.side);
  LmmseOptions options;
  options.allow_noiseless = f.allow_noiseless;

  std::cout << "lmmse " << sig12(lmmse(config, d, a, options)) << '\n';
  std::cout << "rho " << sig12(a.rho()) << '\n';
  if (config.W + config.J * a.rho() > 0.0 || config.t == 0.0) {
    std::cout << "lower_bound_at_rho " << sig12(lower_bound(config, d, a.rho())) << '\n';
  }
  return kOk;
}

// sweep ----------------------------------------------------------------------

int run_sweep_cmd(SweepSpec spec, const std::string& prior, const std::string& methods, const std::string& out) {
  spec.prior = load_prior(prior);
  spec.methods.clear();
  std::stringstream ss(methods);
  for (std::string m; std::getline(ss, m, ',');) {
    if (!m.empty()) spec.methods.push_back(m);
  }
  const auto rows = run_sweep(spec);
  std::ostringstream csv;
  write_sweep_csv(csv, spec, rows);
  write_text(out, csv.str());
  return kOk;
}

// bruteforce -----------------------------------------------------------------

int run_bruteforce(BruteForceSpec spec, bool family, const std::vector<double>& grid) {
  if (family) spec.epsilons = grid;
  const BruteForceResult r = brute_force(spec);
  std::cout << "masks " << r.masks << "  classes " << r.classes << '\n';
  std::cout << "best ";
  for (int v : r.best_mask) std::cout << v;
  std::cout << "  lmmse " << format_number(r.best_lmmse) << '\n';
  for (const auto& m : r.tied) {
    std::cout << "tied ";
    for (int v : m) std::cout << v;
    std::cout << '\n';
  }
  for (const auto& [eps, m] : r.family) {
    std::cout << "epsilon " << format_number(eps) << "  lmmse " << format_number(m)
              << (m < r.best_lmmse ? "  below binary optimum" : "") << '\n';
  }
  return kOk;
}

// beta / residues --------------------------------------------------------------

int run_beta(Index n, Index n_max) {
  if (n < 1 && n_max < 1) throw std::invalid_argument("give --n or --n-max");
  const Index lo = n >= 1 ? n : 1;
  const Index hi = n >= 1 ? n : n_max;
  std::printf("n,beta,M,2M^2_dB\n");
  for (Index k = lo; k <= hi; ++k) {
    const double m = m_bound(k);
    std::printf("%ld,%.12g,%.12g,%.6f\n", static_cast<long>(k), beta(k), m, 10.0 * std::log10(2.0 * m * m));
  }
  return kOk;
}

int run_residues(int e, std::uint64_t n_max, bool plain_only) {
  if (e != 2 && e != 4 && e != 8) throw std::invalid_argument("--e must be 2, 4 or 8");
  std::printf("p,k,rho,zero\n");
  for (const ResidueFamily& f : find_residue_lengths(e, n_max, !plain_only)) {
    std::printf("%llu,%ld,%.12g,%d\n", static_cast<unsigned long long>(f.p), static_cast<long>(f.ones()), f.rho(),
                f.include_zero ? 1 : 0);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coded aperture design toolkit"};
  app.require_subcommand(1);

  DesignFlags design;
  auto* cmd_design = app.add_subcommand("design", "design a mask and certify it");
  cmd_design->add_option("--n", design.n, "scene length (side in 2D)")->required();
  add_noise(cmd_design, design.noise);
  cmd_design->add_option("--prior", design.prior, "prior record or file")->capture_default_str();
  cmd_design->add_option("--method", design.method)->check(CLI::IsMember({"nazarov", "flat"}))->capture_default_str();
  cmd_design->add_option("--seed", design.seed)->capture_default_str();
  cmd_design->add_option("--restarts", design.restarts, "restart budget")->capture_default_str();
  cmd_design->add_option("--dims", design.dims)->check(CLI::IsMember({1, 2}))->capture_default_str();
  cmd_design->add_option("--out", design.out, "aperture file (default stdout)");
  cmd_design->add_option("--report", design.report, "JSON certificate");

  EvaluateFlags evaluate;
  auto* cmd_eval = app.add_subcommand("evaluate", "LMMSE of a mask");
  cmd_eval->add_option("--aperture", evaluate.aperture, "aperture file");
  cmd_eval->add_flag("--ideal-lens", evaluate.ideal_lens, "evaluate the ideal lens instead");
  cmd_eval->add_option("--n", evaluate.n, "lens size");
  cmd_eval->add_option("--dims", evaluate.dims, "lens dims")->check(CLI::IsMember({1, 2}));
  add_noise(cmd_eval, evaluate.noise);
  cmd_eval->add_option("--prior", evaluate.prior)->capture_default_str();
  cmd_eval->add_flag("--allow-noiseless", evaluate.allow_noiseless);

  SweepSpec sweep;
  std::string sweep_prior = "iid theta=1";
  std::string sweep_methods = "lowerbound,flat,nazarov,random";
  std::string sweep_out;
  auto* cmd_sweep = app.add_subcommand("sweep", "LMMSE against exposure time, CSV");
  cmd_sweep->add_option("--n", sweep.n)->capture_default_str();
  cmd_sweep->add_option("--prior", sweep_prior)->capture_default_str();
  cmd_sweep->add_option("--W", sweep.W)->capture_default_str();
  cmd_sweep->add_option("--J", sweep.J)->capture_default_str();
  cmd_sweep->add_option("--t-min", sweep.t_min)->capture_default_str();
  cmd_sweep->add_option("--t-max", sweep.t_max)->capture_default_str();
  cmd_sweep->add_option("--t-count", sweep.t_count)->capture_default_str();
  cmd_sweep->add_option("--methods", sweep_methods)->capture_default_str();
  cmd_sweep->add_option("--trials", sweep.trials, "random masks per density")->capture_default_str();
  cmd_sweep->add_option("--rho-grid", sweep.rho_grid_points, "random mask densities")->capture_default_str();
  cmd_sweep->add_option("--seed", sweep.seed)->capture_default_str();
  cmd_sweep->add_option("--out", sweep_out, "CSV file (default stdout)");

  BruteForceSpec brute;
  bool eps_family = false;
  std::vector<double> eps_grid;
  for (int i = 0; i <= 25; ++i) eps_grid.push_back(0.02 * i);
  auto* cmd_brute = app.add_subcommand("bruteforce", "exhaustive search over binary masks");
  cmd_brute->add_option("--n", brute.n)->capture_default_str();
  cmd_brute->add_option("--ones", brute.ones)->capture_default_str();
  cmd_brute->add_option("--t", brute.t)->capture_default_str();
  cmd_brute->add_option("--W", brute.W)->capture_default_str();
  cmd_brute->add_option("--J", brute.J)->capture_default_str();
  cmd_brute->add_option("--theta", brute.theta)->capture_default_str();
  cmd_brute->add_flag("--epsilon-family", eps_family, "also evaluate the continuous residue family");
  cmd_brute->add_option("--epsilons", eps_grid, "epsilon grid")->delimiter(',');

  Index beta_n = 0, beta_max = 0;
  auto* cmd_beta = app.add_subcommand("beta", "beta(n), M(n) and 2M(n)^2 in dB");
  auto* beta_n_opt = cmd_beta->add_option("--n", beta_n);
  cmd_beta->add_option("--n-max", beta_max)->excludes(beta_n_opt);

  int res_e = 2;
  std::uint64_t res_max = 1000;
  bool res_plain = false;
  auto* cmd_res = app.add_subcommand("residues", "lengths with a residue difference set");
  cmd_res->add_option("--e", res_e)->required();
  cmd_res->add_option("--n-max", res_max)->required();
  cmd_res->add_flag("--plain-only", res_plain, "skip the families that include index 0");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kInvalid;
  }

  try {
    if (*cmd_design) return run_design(design);
    if (*cmd_eval) return run_evaluate(evaluate);
    if (*cmd_sweep) return run_sweep_cmd(sweep, sweep_prior, sweep_methods, sweep_out);
    if (*cmd_brute) return run_bruteforce(brute, eps_family, eps_grid);
    if (*cmd_beta) return run_beta(beta_n, beta_max);
    if (*cmd_res) return run_residues(res_e, res_max, res_plain);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  }
  return kInvalid;
}
