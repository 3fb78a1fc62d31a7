// SPDX-License-Identifier: Apache-2.0
#include "beamcap/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>

#include "beamcap/beam_design.hpp"
#include "beamcap/errors.hpp"
#include "beamcap/grassmann.hpp"
#include "beamcap/onoff_asymptotic.hpp"
#include "beamcap/simulate.hpp"
#include "beamcap/spectra.hpp"
#include "beamcap/waterfilling.hpp"

namespace beamcap {

namespace {

using std::numbers::ln2;
using std::numbers::pi;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

double from_db(double db) { return std::pow(10.0, db / 10.0); }

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Manifest {
  std::string command;
  std::vector<std::pair<std::string, std::string>> parameters;
  std::uint64_t seed = 0;

  void write(std::ostream& os) const {
    os << "# command: " << command << '\n' << "# parameters:";
    for (const auto& [k, v] : parameters) os << ' ' << k << '=' << v;
    os << '\n'
       << "# seed: " << seed << '\n'
       << "# tool_version: " << kToolVersion << '\n'
       << "# timestamp: " << utc_now() << '\n';
  }
};

// Writes to --out when given, else to the provided stream.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw UsageError("cannot open output file: " + path);
    }
    os_ = path.empty() ? &fallback : &file_;
  }
  std::ostream& operator*() { return *os_; }

 private:
  std::ofstream file_;
  std::ostream* os_;
};

void require_ratio(double y) {
  if (!(y > 0.0 && y <= 1.0)) throw UsageError("--y must lie in (0, 1]");
}

std::vector<double> parse_db_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("bad SNR value: " + item);
    }
  }
  if (out.empty()) throw UsageError("empty SNR list");
  return out;
}

// ---- asymptotic ----

struct AsymptoticArgs {
  double y = 1.0;
  double rho_min = -10.0;
  double rho_max = 20.0;
  int points = 31;
  std::string out;
};

void cmd_asymptotic(const AsymptoticArgs& a, std::ostream& fallback) {
  require_ratio(a.y);
  if (a.points < 1) throw UsageError("--points must be >= 1");
  if (a.points > 1 && !(a.rho_max > a.rho_min)) throw UsageError("--rho-max must exceed --rho-min");
  std::vector<double> db(a.points);
  for (int i = 0; i < a.points; ++i)
    db[i] = a.points == 1 ? a.rho_min : a.rho_min + (a.rho_max - a.rho_min) * i / (a.points - 1);
  std::vector<double> rho(db.size());
  for (std::size_t i = 0; i < db.size(); ++i) rho[i] = from_db(db[i]);
  const auto sweep = sweep_rho(a.y, rho);

  Sink sink(a.out, fallback);
  Manifest{"asymptotic",
           {{"y", num(a.y)}, {"rho_min_db", num(a.rho_min)}, {"rho_max_db", num(a.rho_max)},
            {"points", std::to_string(a.points)}},
           0}
      .write(*sink);
  *sink << "rho_db,a_opt,sbar,pbar_on,rate_nats_per_dim,rate_bits_per_dim\n";
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    const DesignPoint& p = sweep[i];
    *sink << num(db[i]) << ',' << num(p.a) << ',' << num(p.sbar) << ',' << num(p.pbar_on) << ','
          << num(p.rate) << ',' << num(p.rate / ln2) << '\n';
  }
}

// ---- waterfill ----

struct WaterfillArgs {
  double y = 1.0;
  std::string rho_grid = "-10,-5,0,5,10,15,20";
  std::string oracle = "closed";
  std::string out;
};

// Water-filling through direct quadrature of the defining integrals.
WaterfillSolution waterfill_by_quadrature(double rho, double y) {
  const double r = std::sqrt(y);
  auto weight = [y](double t) { return t_density(t, y); };
  auto power = [&](double nu) {
    const double a = a_of_nu(nu, y);
    return integrate([&](double t) { return (nu - y / (1.0 + y - 2.0 * r * std::cos(t))) * weight(t); },
                     a, pi, 1e-13);
  };
  const double nu_min = 1.0 / mp_support(y).lambda_plus;
  double lo = nu_min, hi = 2.0 * nu_min;
  while (power(hi) <= rho) lo = hi, hi *= 2.0;
  for (int i = 0; i < 400 && hi - lo > 1e-16 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (power(mid) < rho ? lo : hi) = mid;
  }
  WaterfillSolution s;
  s.nu = 0.5 * (lo + hi);
  s.a = a_of_nu(s.nu, y);
  s.rho = power(s.nu);
  s.capacity = integrate(
      [&](double t) { return std::log(s.nu / y * (1.0 + y - 2.0 * r * std::cos(t))) * weight(t); },
      s.a, pi, 1e-13);
  return s;
}

void cmd_waterfill(const WaterfillArgs& a, std::ostream& fallback) {
  require_ratio(a.y);
  const std::vector<double> db = parse_db_list(a.rho_grid);
  for (std::size_t i = 1; i < db.size(); ++i)
    if (!(db[i] > db[i - 1])) throw UsageError("--rho-grid must be strictly increasing");
  const bool quad = a.oracle == "quad";
  Sink sink(a.out, fallback);
  Manifest{"waterfill", {{"y", num(a.y)}, {"rho_grid_db", a.rho_grid}, {"oracle", a.oracle}}, 0}
      .write(*sink);
  *sink << "rho_db,nu,a,capacity_nats_per_dim,capacity_bits_per_dim\n";
  for (double d : db) {
    const WaterfillSolution s = quad ? waterfill_by_quadrature(from_db(d), a.y) : solve_nu(from_db(d), a.y);
    *sink << num(d) << ',' << num(s.nu) << ',' << num(s.a) << ',' << num(s.capacity) << ','
          << num(s.capacity / ln2) << '\n';
  }
}

// ---- simulate ----

struct SimulateArgs {
  int tx = 4;
  int rx = 4;
  std::string rho_db = "0,10,20";
  std::string strategy = "perfect";
  std::optional<int> rfb;
  std::size_t trials = 10000;
  std::uint64_t seed = 0;
  int design_iters = 2000;
  std::string partition;
  std::string out;
};

struct SimRow {
  RateEstimate est;
  std::optional<double> predicted;  // nats per channel use
  std::string detail;
};

std::string join(const std::vector<int>& v, char sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? std::string(1, sep) : "") + std::to_string(v[i]);
  return s;
}

SimRow simulate_point(const SimulateArgs& a, const SimConfig& config) {
  const SystemDims& dims = config.dims;
  const double rho = config.rho;
  if (a.strategy == "perfect") {
    const StrategySpec spec = finite_design(dims, rho);
    return {rate_perfect_onoff(config, spec), spec.predicted_rate * dims.m,
            "kind=" + to_string(spec.kind) + ";s=" + std::to_string(spec.s) +
                ";p_on=" + num(spec.p_on)};
  }
  if (a.strategy == "csitr") {
    const WaterfillSolution w = solve_nu(rho, dims.y);
    return {rate_csitr_waterfill(config), w.capacity * dims.m, "nu=" + num(w.nu)};
  }
  if (a.strategy == "csir") return {rate_csir(config), std::nullopt, ""};
  if (a.strategy == "codebook") {
    const StrategySpec spec = finite_design(dims, rho);
    const int s = std::max(spec.s, 1);
    Rng rng = make_stream(config.seed, std::uint64_t{3} << 56);
    const Codebook cb = design_codebook(dims.tx, s, 1 << *a.rfb, rng, a.design_iters);
    const MuEstimate mu = estimate_mu(cb, 100000, config.seed, config.workers);
    return {rate_with_codebook(config, cb, s, rho / s), capacity_approx(dims, s, mu.mu_hat, rho) * dims.m,
            "s=" + std::to_string(s) + ";mu=" + num(mu.mu_hat)};
  }
  // multirank
  MultiRankOptions options;
  options.design_iterations = a.design_iters;
  if (!a.partition.empty()) {
    std::vector<int> p;
    std::stringstream ss(a.partition);
    std::string item;
    while (std::getline(ss, item, '/')) {
      try {
        p.push_back(std::stoi(item));
      } catch (const std::exception&) {
        throw UsageError("bad --partition entry: " + item);
      }
    }
    options.partition = p;
  }
  const MultiRankResult r = rate_multirank(config, *a.rfb, options);
  return {r.estimate, std::nullopt,
          "partition=" + join(r.partition, '/') + ";p_on=" + num(r.p_on) + ";kappa=" + num(r.kappa)};
}

void cmd_simulate(const SimulateArgs& a, std::ostream& fallback) {
  if (a.tx < 1 || a.rx < 1) throw UsageError("--tx and --rx must be >= 1");
  if (a.trials < 1) throw UsageError("--trials must be >= 1");
  if ((a.strategy == "codebook" || a.strategy == "multirank") && !a.rfb)
    throw UsageError("--strategy " + a.strategy + " requires --rfb");
  if (a.rfb && (*a.rfb < 1 || *a.rfb > 16)) throw UsageError("--rfb must lie in [1, 16]");
  if (!a.partition.empty() && a.strategy != "multirank")
    throw UsageError("--partition applies to --strategy multirank only");
  const std::vector<double> db = parse_db_list(a.rho_db);

  std::vector<SimRow> rows;
  for (double d : db) {
    SimConfig config;
    config.dims = SystemDims::from_antennas(a.tx, a.rx);
    config.rho = from_db(d);
    config.trials = a.trials;
    config.seed = a.seed;
    rows.push_back(simulate_point(a, config));
  }

  Sink sink(a.out, fallback);
  Manifest m{"simulate",
             {{"tx", std::to_string(a.tx)}, {"rx", std::to_string(a.rx)}, {"rho_db", a.rho_db},
              {"strategy", a.strategy}, {"trials", std::to_string(a.trials)}},
             a.seed};
  if (a.rfb) m.parameters.emplace_back("rfb", std::to_string(*a.rfb));
  m.write(*sink);
  *sink << "rho_db,strategy,rate_nats,rate_bits,std_error_nats,mean_power,predicted_nats,"
           "predicted_bits,detail\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const SimRow& r = rows[i];
    *sink << num(db[i]) << ',' << a.strategy << ',' << num(r.est.mean_rate) << ','
          << num(r.est.mean_rate / ln2) << ',' << num(r.est.std_error) << ','
          << num(r.est.mean_power_used) << ',' << (r.predicted ? num(*r.predicted) : "") << ','
          << (r.predicted ? num(*r.predicted / ln2) : "") << ',' << r.detail << '\n';
  }
}

// ---- codebook ----

struct CodebookArgs {
  int tx = 4;
  int rank = 2;
  int bits = 4;
  std::uint64_t seed = 0;
  int design_iters = 2000;
  std::size_t measure_trials = 100000;
  std::string load;
  std::string out;
};

void cmd_codebook(const CodebookArgs& a, std::ostream& out, std::ostream& err) {
  Codebook cb;
  if (!a.load.empty()) {
    std::ifstream in(a.load);
    if (!in) throw UsageError("cannot open codebook file: " + a.load);
    cb = read_codebook(in);
  } else {
    if (a.rank < 1 || a.rank >= a.tx) throw UsageError("--rank must lie in [1, --tx)");
    if (a.bits < 1 || a.bits > 12) throw UsageError("--bits must lie in [1, 12]");
    Rng rng = make_stream(a.seed, std::uint64_t{3} << 56);
    cb = design_codebook(a.tx, a.rank, 1 << a.bits, rng, a.design_iters);
  }
  if (cb.rank >= cb.ltx) throw UsageError("codebook rank must be below the antenna count");
  const MuEstimate mu = estimate_mu(cb, a.measure_trials, a.seed);
  int bits = 0;
  while ((std::size_t{1} << bits) < cb.size()) ++bits;
  const DistortionBounds b = distortion_bounds(cb.ltx, cb.rank, std::max(bits, 1));

  if (!a.out.empty()) {
    std::ofstream file(a.out);
    if (!file) throw UsageError("cannot open output file: " + a.out);
    write_codebook(file, cb);
  }
  if (b.small_codebook)
    err << "warning: distortion bounds assume a large codebook (K >= 10); K = " << cb.size() << '\n';
  Manifest{"codebook",
           {{"tx", std::to_string(cb.ltx)}, {"rank", std::to_string(cb.rank)},
            {"size", std::to_string(cb.size())}, {"measure_trials", std::to_string(a.measure_trials)},
            {"load", a.load.empty() ? "-" : a.load}},
           a.seed}
      .write(out);
  out << "ltx,rank,size,min_pairwise_dc2,mean_dc2,mu_hat,t,eta,dc2_lower,dc2_upper,mu_lower,"
         "mu_upper,large_k\n"
      << cb.ltx << ',' << cb.rank << ',' << cb.size() << ',' << num(cb.min_pairwise_dc2) << ','
      << num(mu.mean_dc2) << ',' << num(mu.mu_hat) << ',' << b.t << ',' << num(b.eta) << ','
      << num(b.lower) << ',' << num(b.upper) << ',' << num(b.mu_lower) << ',' << num(b.mu_upper)
      << ',' << (b.small_codebook ? "no" : "yes") << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Information rate of MIMO power on/off transmission with limited feedback", "beamcap"};
  app.require_subcommand(1);

  AsymptoticArgs asym;
  auto* c_asym = app.add_subcommand("asymptotic", "Optimal on/off design across SNR");
  c_asym->add_option("--y", asym.y, "Dimension ratio m/n in (0, 1]");
  c_asym->add_option("--rho-min", asym.rho_min, "Lowest SNR (dB)");
  c_asym->add_option("--rho-max", asym.rho_max, "Highest SNR (dB)");
  c_asym->add_option("--points", asym.points, "Number of SNR points");
  c_asym->add_option("--out", asym.out, "Output CSV path (default stdout)");

  WaterfillArgs wf;
  auto* c_wf = app.add_subcommand("waterfill", "Water-filling capacity across SNR");
  c_wf->add_option("--y", wf.y, "Dimension ratio m/n in (0, 1]");
  c_wf->add_option("--rho-grid", wf.rho_grid, "Comma-separated SNR values (dB)");
  c_wf->add_option("--oracle", wf.oracle, "closed or quad")->check(CLI::IsMember({"closed", "quad"}));
  c_wf->add_option("--out", wf.out, "Output CSV path (default stdout)");

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Monte Carlo information rates");
  c_sim->add_option("--tx", sim.tx, "Transmit antennas")->required();
  c_sim->add_option("--rx", sim.rx, "Receive antennas")->required();
  c_sim->add_option("--rho-db", sim.rho_db, "Comma-separated SNR values (dB)");
  c_sim->add_option("--strategy", sim.strategy, "perfect, codebook, csitr, csir or multirank")
      ->check(CLI::IsMember({"perfect", "codebook", "csitr", "csir", "multirank"}));
  c_sim->add_option("--rfb", sim.rfb, "Feedback bits");
  c_sim->add_option("--trials", sim.trials, "Monte Carlo trials per SNR");
  c_sim->add_option("--seed", sim.seed, "Master seed");
  c_sim->add_option("--design-iters", sim.design_iters, "Codebook refinement steps per restart");
  c_sim->add_option("--partition", sim.partition, "Multi-rank sizes K_0/K_1/.../K_LT");
  c_sim->add_option("--out", sim.out, "Output CSV path (default stdout)");

  CodebookArgs cbk;
  auto* c_cb = app.add_subcommand("codebook", "Design and measure a Grassmann codebook");
  c_cb->add_option("--tx", cbk.tx, "Transmit antennas");
  c_cb->add_option("--rank", cbk.rank, "Beamforming rank");
  c_cb->add_option("--bits", cbk.bits, "Feedback bits (size 2^bits)");
  c_cb->add_option("--seed", cbk.seed, "Seed for design and measurement");
  c_cb->add_option("--design-iters", cbk.design_iters, "Refinement steps per restart");
  c_cb->add_option("--measure-trials", cbk.measure_trials, "Draws for the distortion estimate");
  c_cb->add_option("--load", cbk.load, "Measure an existing codebook file instead of designing");
  c_cb->add_option("--out", cbk.out, "Codebook output path");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (c_asym->parsed()) cmd_asymptotic(asym, out);
    if (c_wf->parsed()) cmd_waterfill(wf, out);
    if (c_sim->parsed()) cmd_simulate(sim, out);
    if (c_cb->parsed()) cmd_codebook(cbk, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Infeasible& e) {
    err << "infeasible: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInfeasible;
  }
  return kExitOk;
}

}  // namespace beamcap
