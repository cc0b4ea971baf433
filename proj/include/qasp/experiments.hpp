#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qasp/chem.hpp"
#include "qasp/dense.hpp"
#include "qasp/engine.hpp"
#include "qasp/estimators.hpp"
#include "qasp/planner.hpp"
#include "qasp/sampler.hpp"
#include "qasp/schedule.hpp"

namespace qasp::cli {

using json = nlohmann::json;
namespace fs = std::filesystem;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunContext {
  fs::path config_dir;
  fs::path out_dir;
  std::optional<std::uint64_t> seed_override;
  std::optional<int> threads_override;
};

inline json load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  try {
    return json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw ConfigError("config parse error in " + path.string() + ": " + e.what());
  }
}

namespace detail {

template <class T>
inline T get_or(const json& cfg, const std::string& key, T fallback) {
  if (!cfg.contains(key)) return fallback;
  try {
    return cfg.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

template <class T>
inline T require(const json& cfg, const std::string& key) {
  if (!cfg.contains(key)) throw ConfigError("missing config key '" + key + "'");
  try {
    return cfg.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

inline fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

inline std::string read_text_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot open file: " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string fmt(double v, const char* spec = "%.12g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const std::string& header) : out_(path) {
    if (!out_) throw ConfigError("cannot write output file: " + path.string());
    out_ << header << '\n';
  }
  void comment(const std::string& line) { out_ << "# " << line << '\n'; }
  template <class... Cols>
  void row(Cols&&... cols) {
    bool first = true;
    ((out_ << (first ? "" : ",") << format(cols), first = false), ...);
    out_ << '\n';
  }

 private:
  static std::string format(double v) { return fmt(v); }
  static std::string format(long v) { return std::to_string(v); }
  static std::string format(int v) { return std::to_string(v); }
  static std::string format(std::size_t v) { return std::to_string(v); }
  static std::string format(const std::string& s) { return s; }
  static std::string format(const char* s) { return s; }
  std::ofstream out_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Problem loading
// ---------------------------------------------------------------------------

struct LoadedProblem {
  HamiltonianModel model;
  double alpha = 0.0;
  int electrons = 0;
  std::size_t ini_index = 0;
  AdiabaticPath path = AdiabaticPath::linear();
  double exact_ground_energy = 0.0;  // incl identity constant; dense cap only
  bool has_exact = false;
};

/// Coefficient-weighted mean two-qubit cost of ancilla-controlled rotations.
inline double controlled_g_avg(const HamiltonianModel& model) {
  double weighted = 0.0;
  for (const auto& t : model.interaction.terms())
    weighted += t.coefficient * rotation_two_qubit_count(t.string.weight(), true);
  return model.mu_I > 0 ? weighted / model.mu_I : 0.0;
}

inline double noise_exponent_r(const NoiseModel& noise) {
  return noise.active() ? -std::log1p(-noise.p_depol) : 0.0;
}

inline NoiseModel parse_noise(const json& cfg) {
  NoiseModel noise;
  if (!cfg.contains("noise")) return noise;
  const json& n = cfg.at("noise");
  const std::string mode = detail::get_or<std::string>(n, "mode", "trajectory");
  const double amplitude = detail::get_or<double>(n, "amplitude", 0.0);
  const std::string convention =
      detail::get_or<std::string>(n, "convention", "pauli_probability");
  noise.p_depol = depolarizing_probability(convention, amplitude);
  noise.mode = (mode == "off" || noise.p_depol == 0.0) ? NoiseModel::Mode::off
                                                       : NoiseModel::Mode::trajectory;
  if (mode != "off" && mode != "trajectory")
    throw ConfigError("noise.mode must be off or trajectory");
  return noise;
}

inline LoadedProblem load_problem(const json& cfg, const fs::path& config_dir) {
  if (!cfg.contains("hamiltonian")) throw ConfigError("missing config section 'hamiltonian'");
  const json& ham = cfg.at("hamiltonian");
  const auto rule = background_rule_from_string(
      detail::get_or<std::string>(cfg, "background_rule", "z_weight_le_1"));

  LoadedProblem prob;
  PauliSum h;
  if (ham.contains("fcidump")) {
    const fs::path p = detail::resolve(config_dir, ham.at("fcidump").get<std::string>());
    MolecularIntegrals ints = parse_fcidump(detail::read_text_file(p));
    h = jordan_wigner(ints);
    verify_spin_parity_conservation(h);
    prob.electrons = ints.electron_count;
  } else if (ham.contains("pauli")) {
    const fs::path p = detail::resolve(config_dir, ham.at("pauli").get<std::string>());
    h = parse_pauli_sum(detail::read_text_file(p));
  } else {
    throw ConfigError("hamiltonian section needs 'fcidump' or 'pauli'");
  }
  if (ham.contains("electrons")) prob.electrons = ham.at("electrons").get<int>();

  if (detail::get_or<bool>(cfg, "reduce_norm", true)) {
    NormReduction red = reduce_norm_particle_number(h);
    h = red.reduced;
    prob.alpha = red.alpha;
  }
  prob.model = split(h, rule);
  prob.ini_index = initial_state(prob.model, prob.electrons).basis_index;
  prob.path = parse_path_spec(detail::get_or<std::string>(cfg, "path", "linear"),
                              [&](const std::string& rel) {
                                return detail::read_text_file(detail::resolve(config_dir, rel));
                              });
  if (prob.model.qubit_count <= kDenseCap) {
    prob.exact_ground_energy = ground_energy(prob.model.full());
    prob.has_exact = true;
  }
  return prob;
}

/// `tau` config value: a number, or "auto" for the noise-aware optimum of
/// runtime_R with g taken as the controlled-rotation average.
inline double resolve_tau(const json& cfg, const LoadedProblem& prob, double T,
                          const NoiseModel& noise) {
  if (!cfg.contains("tau")) throw ConfigError("missing config key 'tau'");
  const json& tau = cfg.at("tau");
  if (tau.is_number()) {
    double v = tau.get<double>();
    SamplerConfig check{v, T, SamplerVariant::background};
    check.validate();
    return v;
  }
  if (tau.get<std::string>() != "auto") throw ConfigError("tau must be a number or \"auto\"");
  CostInputs in;
  in.mu_I = prob.model.mu_I;
  in.mu_B = prob.model.mu_B;
  in.zeta = prob.path.zeta();
  in.T = T;
  in.g = controlled_g_avg(prob.model);
  in.r = noise_exponent_r(noise);
  return optimal_gate_angle(in).tau_star;
}

inline void write_resolved_config(const RunContext& ctx, json cfg,
                                  const std::string& subcommand) {
  cfg["resolved"] = {{"subcommand", subcommand}};
  if (ctx.seed_override) cfg["seed"] = *ctx.seed_override;
  if (ctx.threads_override) cfg["threads"] = *ctx.threads_override;
  fs::create_directories(ctx.out_dir);
  std::ofstream out(ctx.out_dir / "resolved_config.json");
  out << cfg.dump(2) << '\n';
}

inline std::uint64_t seed_of(const json& cfg, const RunContext& ctx) {
  if (ctx.seed_override) return *ctx.seed_override;
  return detail::get_or<std::uint64_t>(cfg, "seed", 1);
}

inline int threads_of(const json& cfg, const RunContext& ctx) {
  int t = ctx.threads_override ? *ctx.threads_override : detail::get_or<int>(cfg, "threads", 0);
  if (t <= 0) t = static_cast<int>(std::thread::hardware_concurrency());
  return std::max(1, t);
}

// ---------------------------------------------------------------------------
// Damped-sine fit for rho(E) scans
// ---------------------------------------------------------------------------

struct SineFit {
  double amplitude = 0.0;  // q
  double shift = 0.0;      // delta0 (zero crossing offset)
};

/// Least-squares fit of values ~= q sin(s (delta - delta0)) via the linear
/// basis a sin(s delta) + b cos(s delta).
inline SineFit fit_damped_sine(const std::vector<double>& deltas,
                               const std::vector<double>& values, double s) {
  if (deltas.size() != values.size() || deltas.size() < 2)
    throw std::invalid_argument("fit_damped_sine: need matching arrays with >= 2 points");
  double sss = 0, scc = 0, ssc = 0, sys = 0, syc = 0;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    double sn = std::sin(s * deltas[i]), cs = std::cos(s * deltas[i]);
    sss += sn * sn;
    scc += cs * cs;
    ssc += sn * cs;
    sys += values[i] * sn;
    syc += values[i] * cs;
  }
  double det = sss * scc - ssc * ssc;
  if (std::abs(det) < 1e-15) throw NumericalError("fit_damped_sine: singular design");
  double a = (sys * scc - syc * ssc) / det;
  double b = (syc * sss - sys * ssc) / det;
  SineFit fit;
  fit.amplitude = std::hypot(a, b);
  fit.shift = std::atan2(-b, a) / s;
  return fit;
}

/// Noiseless rho(E) = Im <psi| e^{i s (E - H)} |psi> via dense spectra.
inline double exact_rho(const HamiltonianModel& model, const StateVector& psi, double E,
                        double s) {
  Eigen::SelfAdjointEigenSolver<DenseMatrix> solver(to_dense(model.full()));
  const auto& evals = solver.eigenvalues();
  DenseVector amps = solver.eigenvectors().adjoint() *
                     Eigen::Map<const DenseVector>(psi.amplitudes().data(), psi.dim());
  double rho = 0;
  for (Eigen::Index k = 0; k < evals.size(); ++k)
    rho += std::norm(amps[k]) * std::sin(s * (E - evals[k]));
  return rho;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

/// ingest: FCIDUMP -> Pauli file + metadata sidecar.
inline void run_ingest(const fs::path& fcidump, const RunContext& ctx, bool reduce,
                       std::optional<int> electrons_override, BackgroundRule rule) {
  MolecularIntegrals ints = parse_fcidump(detail::read_text_file(fcidump));
  PauliSum h = jordan_wigner(ints);
  verify_spin_parity_conservation(h);
  double alpha = 0.0;
  if (reduce) {
    NormReduction red = reduce_norm_particle_number(h);
    h = red.reduced;
    alpha = red.alpha;
  }
  HamiltonianModel model = split(h, rule);
  int electrons = electrons_override.value_or(ints.electron_count);

  fs::create_directories(ctx.out_dir);
  {
    std::ofstream out(ctx.out_dir / "hamiltonian.pauli");
    out << "# jordan-wigner qubit hamiltonian (interleaved up/down spin orbitals)\n";
    write_pauli_sum(out, h);
  }
  {
    std::ofstream out(ctx.out_dir / "metadata.txt");
    write_model_metadata(out, model, electrons, alpha);
  }
}

/// plan: cost report for the configured inputs (and the H6 preset table).
inline void run_plan(const json& cfg, const RunContext& ctx) {
  CostInputs in;
  in.mu_I = detail::require<double>(cfg, "mu_I");
  in.mu_B = detail::get_or<double>(cfg, "mu_B", 0.0);
  in.zeta = detail::get_or<double>(cfg, "zeta", 0.5);
  in.T = detail::require<double>(cfg, "T");
  in.g = detail::require<double>(cfg, "g");
  in.r = detail::get_or<double>(cfg, "r", 0.0);
  in.delta = detail::get_or<double>(cfg, "delta", 1e-3);
  in.delta0 = detail::get_or<double>(cfg, "delta0", in.delta);
  in.L = detail::get_or<long>(cfg, "L", 0);
  in.validate();

  OptimalAngle prep = optimal_gate_angle(in);
  OptimalAngle query = minimize_runtime_RQ(in);
  AspCosts costs = asp_costs(in.L, in.mu_I, in.T);
  TrotterLcuReport h6 = compare_h6_preset();

  write_resolved_config(ctx, cfg, "plan");
  detail::CsvWriter csv(ctx.out_dir / "plan.csv", "quantity,value");
  csv.row("tau_star", prep.tau_star);
  csv.row("R_star", prep.R_star);
  csv.row("tau_star_query", query.tau_star);
  csv.row("RQ_star", query.R_star);
  csv.row("RQ_closed_form_10x",
          binary_search_closed_form(in.g, in.mu_I, in.delta, in.zeta, in.T));
  csv.row("c_prepare", costs.c_prepare);
  csv.row("c_measure", costs.c_measure);
  csv.row("c_total", costs.c_total);
  csv.row("h6_trotter_rotations", h6.trotter_rotations);
  csv.row("h6_tetris_rotations", h6.tetris_rotations);
  csv.row("h6_ratio", h6.ratio);
  QuarticResiduals qr = quartic_residuals(in, prep.tau_star);
  csv.row("quartic_residual_printed", qr.printed);
  csv.row("quartic_residual_derived", qr.derived);

  std::cout << "tau* = " << prep.tau_star << "  R(tau*) = " << prep.R_star << '\n'
            << "query tau* = " << query.tau_star << "  RQ(tau*) = " << query.R_star << '\n'
            << "C_prepare = " << costs.c_prepare << "  C_measure = " << costs.c_measure << '\n';
}

/// asp-sweep: (T, E(T) - E_GS) for the exact reference, with optional TETRIS
/// Monte-Carlo columns, per configured path.
inline void run_asp_sweep(const json& cfg, const RunContext& ctx) {
  LoadedProblem prob = load_problem(cfg, ctx.config_dir);
  if (!prob.has_exact) throw NumericalError("asp-sweep: qubit count above dense cap");
  const std::vector<double> t_values = detail::require<std::vector<double>>(cfg, "T_values");
  const long mc_samples = detail::get_or<long>(cfg, "mc_samples", 0);
  const std::uint64_t seed = seed_of(cfg, ctx);
  const double e_gs = prob.exact_ground_energy;

  write_resolved_config(ctx, cfg, "asp-sweep");
  detail::CsvWriter csv(ctx.out_dir / "asp_sweep.csv",
                        "T,exact_error,mc_error,mc_std_error");
  double t_min_chemical = -1.0;
  for (double T : t_values) {
    HamiltonianSchedule sched = make_weight_schedule(prob.model, prob.path, T);
    StateVector psi = run_exact_reference(sched, prob.ini_index);
    double err = energy_expectation(prob.model, psi) - e_gs;
    double mc_err = 0.0, mc_se = 0.0;
    if (mc_samples > 0) {
      SamplerConfig scfg{detail::get_or<double>(cfg, "mc_tau", 0.2), T,
                         SamplerVariant::background};
      double lambda = attenuation(prob.model, prob.path, scfg);
      double sum = 0, sumsq = 0;
      for (long i = 0; i < mc_samples; ++i) {
        auto rng = stream_rng(seed, static_cast<std::uint64_t>(i));
        StateVector a(prob.model.qubit_count, prob.ini_index);
        apply_sampled_circuit(a, sample_adiabatic(prob.model, prob.path, scfg, rng), prob.model);
        StateVector b(prob.model.qubit_count, prob.ini_index);
        apply_sampled_circuit(b, sample_adiabatic(prob.model, prob.path, scfg, rng), prob.model);
        std::vector<std::complex<double>> hb(b.dim(), {0, 0});
        b.accumulate_apply(prob.model.background, {1, 0}, hb);
        b.accumulate_apply(prob.model.interaction, {1, 0}, hb);
        std::complex<double> v = 0;
        for (std::size_t k = 0; k < a.dim(); ++k) v += std::conj(a.amplitudes()[k]) * hb[k];
        double x = v.real() / (lambda * lambda);
        sum += x;
        sumsq += x * x;
      }
      double mean = sum / mc_samples;
      double var = mc_samples > 1 ? (sumsq - mc_samples * mean * mean) / (mc_samples - 1) : 0.0;
      mc_err = mean + prob.model.constant_energy - e_gs;
      mc_se = std::sqrt(std::max(0.0, var) / mc_samples);
    }
    csv.row(T, err, mc_err, mc_se);
    if (t_min_chemical < 0 && std::abs(err) <= 1e-3) t_min_chemical = T;
  }
  csv.comment("T_min_chemical_precision " + detail::fmt(t_min_chemical));
}

/// trotter-compare: Trotterized ASP energies against the exact reference,
/// plus the rotation-count table.
inline void run_trotter_compare(const json& cfg, const RunContext& ctx) {
  LoadedProblem prob = load_problem(cfg, ctx.config_dir);
  if (!prob.has_exact) throw NumericalError("trotter-compare: qubit count above dense cap");
  const std::vector<double> t_values = detail::require<std::vector<double>>(cfg, "T_values");
  const std::vector<long> steps_values = detail::require<std::vector<long>>(cfg, "steps_values");
  const double e_gs = prob.exact_ground_energy;

  write_resolved_config(ctx, cfg, "trotter-compare");
  detail::CsvWriter csv(ctx.out_dir / "trotter_compare.csv",
                        "T,steps,trotter_error,exact_error");
  for (double T : t_values) {
    HamiltonianSchedule sched = make_weight_schedule(prob.model, prob.path, T);
    double exact_err =
        energy_expectation(prob.model, run_exact_reference(sched, prob.ini_index)) - e_gs;
    for (long steps : steps_values) {
      StateVector psi = run_trotter_asp(sched, steps, prob.ini_index);
      csv.row(T, steps, energy_expectation(prob.model, psi) - e_gs, exact_err);
    }
  }
  TrotterLcuReport h6 = compare_h6_preset();
  csv.comment("h6_trotter_rotations " + detail::fmt(h6.trotter_rotations));
  csv.comment("h6_tetris_rotations " + detail::fmt(h6.tetris_rotations));
  csv.comment("h6_ratio " + detail::fmt(h6.ratio));
}

struct RhoScanResult {
  std::vector<double> deltas;
  std::vector<AmplitudeEstimate> raw;
  std::vector<AmplitudeEstimate> filtered;
  std::vector<double> exact;
  SineFit fit_raw, fit_filtered;
  double mean_two_qubit_gates = 0.0;
  double lambda_total = 1.0;
  double e_gs = 0.0;
};

/// rho-scan core: scans rho(E_GS + delta) on a delta grid, raw and
/// parity-filtered, and fits q sin(s(delta - delta0)) to both.
inline RhoScanResult rho_scan(const LoadedProblem& prob, const json& cfg,
                              std::uint64_t seed, int threads) {
  if (!prob.has_exact) throw NumericalError("rho-scan: qubit count above dense cap");
  RhoScanResult res;
  res.e_gs = prob.exact_ground_energy;
  const double T = detail::require<double>(cfg, "T");
  const double s = detail::require<double>(cfg, "s");
  NoiseModel noise = parse_noise(cfg);
  const double tau = resolve_tau(cfg, prob, T, noise);
  const std::vector<double> grid_mh = detail::require<std::vector<double>>(cfg, "delta_grid_mh");

  HamiltonianSchedule sched = make_weight_schedule(prob.model, prob.path, T);
  StateVector psi_T = run_exact_reference(sched, prob.ini_index);

  RhoPlan plan;
  plan.total_time = T;
  plan.tau = tau;
  plan.central_time = s;
  plan.samples = detail::get_or<long>(cfg, "samples", 1000);
  plan.shots_per_sample = detail::get_or<long>(cfg, "shots_per_sample", 1);
  plan.mode = noise.active() ? ExecMode::circuit : ExecMode::analytic;
  plan.noise = noise;
  plan.path = prob.path;
  plan.threads = threads;

  double tqg_sum = 0;
  for (std::size_t i = 0; i < grid_mh.size(); ++i) {
    double delta = grid_mh[i] * 1e-3;
    plan.energy = res.e_gs + delta;
    plan.seed = splitmix64(seed ^ splitmix64(i));
    double tqg = 0, lambda = 1;
    std::vector<ShotRecord> records = collect_rho_shots(prob.model, prob.ini_index, plan,
                                                        &tqg, &lambda);
    AmplitudeEstimate raw = parity_filter(records, FilterPolicy::none);
    AmplitudeEstimate filt = parity_filter(records, FilterPolicy::discard_parity_violations);
    res.deltas.push_back(delta);
    res.raw.push_back(raw);
    res.filtered.push_back(filt);
    res.exact.push_back(exact_rho(prob.model, psi_T, plan.energy, s));
    res.lambda_total = lambda;
    tqg_sum += tqg;
  }
  res.mean_two_qubit_gates = tqg_sum / grid_mh.size();

  std::vector<double> raw_means, filt_means;
  for (const auto& e : res.raw) raw_means.push_back(e.mean);
  for (const auto& e : res.filtered) filt_means.push_back(e.mean);
  res.fit_raw = fit_damped_sine(res.deltas, raw_means, s);
  res.fit_filtered = fit_damped_sine(res.deltas, filt_means, s);
  return res;
}

inline void run_rho_scan(const json& cfg, const RunContext& ctx) {
  LoadedProblem prob = load_problem(cfg, ctx.config_dir);
  const std::uint64_t seed = seed_of(cfg, ctx);
  RhoScanResult res = rho_scan(prob, cfg, seed, threads_of(cfg, ctx));

  write_resolved_config(ctx, cfg, "rho-scan");
  detail::CsvWriter csv(
      ctx.out_dir / "rho_scan.csv",
      "delta_mh,raw_mean,raw_std_error,filtered_mean,filtered_std_error,exact,"
      "shots,filtered_out");
  for (std::size_t i = 0; i < res.deltas.size(); ++i)
    csv.row(res.deltas[i] * 1e3, res.raw[i].mean, res.raw[i].std_error, res.filtered[i].mean,
            res.filtered[i].std_error, res.exact[i], res.raw[i].shots_used,
            res.filtered[i].shots_filtered);
  csv.comment("fit_raw_q " + detail::fmt(res.fit_raw.amplitude));
  csv.comment("fit_raw_delta0 " + detail::fmt(res.fit_raw.shift));
  csv.comment("fit_filtered_q " + detail::fmt(res.fit_filtered.amplitude));
  csv.comment("fit_filtered_delta0 " + detail::fmt(res.fit_filtered.shift));
  csv.comment("mean_two_qubit_gates " + detail::fmt(res.mean_two_qubit_gates));
  csv.comment("lambda_total " + detail::fmt(res.lambda_total));
  csv.comment("e_gs " + detail::fmt(res.e_gs, "%.17g"));
}

/// variance-study: single-shot estimator variance at tau = n / (T mu_I) for
/// the constant path, against the 1/lambda^2 bound and the e^{2n} plateau.
inline void run_variance_study(const json& cfg, const RunContext& ctx) {
  LoadedProblem prob = load_problem(cfg, ctx.config_dir);
  const std::vector<double> n_values = detail::require<std::vector<double>>(cfg, "n_values");
  const std::vector<double> t_values = detail::require<std::vector<double>>(cfg, "T_values");
  const long shots = detail::get_or<long>(cfg, "shots", 100000);
  const std::uint64_t seed = seed_of(cfg, ctx);
  const int threads = threads_of(cfg, ctx);

  write_resolved_config(ctx, cfg, "variance-study");
  detail::CsvWriter csv(ctx.out_dir / "variance_study.csv",
                        "n,T,tau,lambda,variance,bound,e_2n");
  for (double n : n_values) {
    for (double T : t_values) {
      const double tau = n / (T * prob.model.mu_I);
      RhoPlan plan;
      plan.total_time = T;
      plan.tau = tau;
      plan.central_time = 0.0;
      plan.energy = 0.0;
      plan.samples = shots;
      plan.shots_per_sample = 1;
      plan.part = Part::real_part;
      plan.mode = ExecMode::analytic;
      plan.path = AdiabaticPath::constant();
      plan.seed = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(n * 1000) ^
                                               splitmix64(static_cast<std::uint64_t>(T * 1000))));
      plan.threads = threads;
      double tqg = 0, lambda = 1;
      std::vector<ShotRecord> records = collect_rho_shots(prob.model, prob.ini_index, plan,
                                                          &tqg, &lambda);
      double sum = 0, sumsq = 0;
      for (const auto& r : records) {
        double x = single_shot_estimator(r, lambda);
        sum += x;
        sumsq += x * x;
      }
      double mean = sum / records.size();
      double var = sumsq / records.size() - mean * mean;
      csv.row(n, T, tau, lambda, var, 1.0 / (lambda * lambda), std::exp(2 * n));
    }
  }
}

// ---------------------------------------------------------------------------
// measure
// ---------------------------------------------------------------------------

inline void write_trace_csv(const fs::path& path, const std::vector<TraceRow>& trace) {
  detail::CsvWriter csv(path, "iteration,energy_query,s,mean,std_error,decision");
  for (const auto& row : trace)
    csv.row(row.iteration, row.energy_query, row.s, row.mean, row.std_error, row.decision);
}

/// measure: runs the configured estimator against the engine-backed rho
/// oracle and writes a trace plus summary.
inline void run_measure(const json& cfg, const RunContext& ctx) {
  LoadedProblem prob = load_problem(cfg, ctx.config_dir);
  const json& est = cfg.contains("estimator") ? cfg.at("estimator") : json::object();
  const std::string kind = detail::require<std::string>(est, "kind");
  const double T = detail::require<double>(cfg, "T");
  NoiseModel noise = parse_noise(cfg);
  const double tau = resolve_tau(cfg, prob, T, noise);
  const std::uint64_t seed = seed_of(cfg, ctx);
  const int threads = threads_of(cfg, ctx);
  const FilterPolicy policy = filter_policy_from_string(
      detail::get_or<std::string>(cfg, "filter_policy", noise.active() ? "discard" : "none"));

  write_resolved_config(ctx, cfg, "measure");

  auto make_plan = [&](double E, double s, long samples, long shots_per_sample,
                       std::uint64_t stream) {
    RhoPlan plan;
    plan.total_time = T;
    plan.tau = tau;
    plan.energy = E;
    plan.central_time = s;
    plan.samples = samples;
    plan.shots_per_sample = shots_per_sample;
    plan.mode = noise.active() ? ExecMode::circuit : ExecMode::analytic;
    plan.noise = noise;
    plan.policy = policy;
    plan.path = prob.path;
    plan.seed = splitmix64(seed ^ splitmix64(stream));
    plan.threads = threads;
    return plan;
  };

  EnergyEstimate result;
  std::vector<TraceRow> trace;

  if (kind == "binary_search") {
    EnergyWindow window;
    if (est.contains("window_lo_hi")) {
      auto v = est.at("window_lo_hi").get<std::vector<double>>();
      window = {v.at(0), v.at(1)};
    } else {
      if (!prob.has_exact)
        throw ConfigError("binary_search: relative window needs a dense-solvable fixture");
      double center = prob.exact_ground_energy +
                      detail::get_or<double>(est, "center_offset_mh", 0.0) * 1e-3;
      double half = detail::require<double>(est, "halfwidth_mh") * 1e-3;
      window = {center - half, center + half};
    }
    const double eps = detail::require<double>(est, "precision_mh") * 1e-3;
    BinarySearchConfig bs;
    bs.shots_per_query = detail::get_or<long>(est, "shots_per_query", 2000);
    bs.u_tau = central_time_u(tau, prob.model.mu_I, noise_exponent_r(noise),
                              controlled_g_avg(prob.model));
    std::uint64_t query_counter = 0;
    const double g_plan = prob.model.g_avg;
    RhoOracle oracle = [&](double E, double s, long shots) {
      RhoPlan plan = make_plan(E, s, shots, 1, ++query_counter);
      AmplitudeEstimate a = estimate_rho(prob.model, prob.ini_index, plan);
      RhoSample sample;
      sample.mean = a.mean;
      sample.std_error = a.std_error;
      sample.gates = static_cast<double>(shots) *
                     (s + 2 * prob.path.zeta() * T) * prob.model.mu_I * g_plan / std::sin(tau);
      return sample;
    };
    result = binary_search_energy(oracle, window, eps, bs);
    trace = result.trace;
  } else if (kind == "arctan_fit") {
    const double eps = detail::require<double>(est, "eps_mh") * 1e-3;
    const double s = detail::require<double>(est, "s");
    const long samples = detail::get_or<long>(est, "samples", 1000);
    const long shots_per_sample = detail::get_or<long>(est, "shots_per_sample", 100);
    double E_test;
    if (est.contains("E_test")) {
      E_test = est.at("E_test").get<double>();
    } else {
      if (!prob.has_exact)
        throw ConfigError("arctan_fit: relative E_test needs a dense-solvable fixture");
      E_test = prob.exact_ground_energy +
               detail::get_or<double>(est, "E_test_offset_mh", -10.0) * 1e-3;
    }
    const bool reuse = detail::get_or<bool>(est, "reuse_circuits", false);
    RhoPlan plan_plus = make_plan(E_test + eps, s, samples, shots_per_sample, 11);
    RhoPlan plan_minus = make_plan(E_test - eps, s, samples, shots_per_sample, reuse ? 11 : 12);
    AmplitudeEstimate rp = estimate_rho(prob.model, prob.ini_index, plan_plus);
    AmplitudeEstimate rm = estimate_rho(prob.model, prob.ini_index, plan_minus);
    ArctanFit fit = arctan_fit_energy(rp.mean, rm.mean, E_test, eps, s);
    result.energy = fit.energy;
    result.flagged = fit.flagged;
    result.flag_reason = fit.flag_reason;
    result.shots_used = rp.shots_used + rm.shots_used;
    trace.push_back({0, E_test + eps, s, rp.mean, rp.std_error, "rho_plus"});
    trace.push_back({1, E_test - eps, s, rm.mean, rm.std_error, "rho_minus"});
  } else if (kind == "robbins_monro") {
    RMConfig rm;
    rm.a0 = detail::get_or<double>(est, "a0", 10.0);
    rm.beta = detail::get_or<double>(est, "beta", 0.75);
    rm.s = detail::require<double>(est, "s");
    rm.max_iters = detail::get_or<long>(est, "iterations", 1000);
    const long shots_per_iter = detail::get_or<long>(est, "shots_per_iteration", 100);
    const bool scale_by_lambda = detail::get_or<bool>(est, "scale_by_lambda", false);
    double E0;
    if (est.contains("E0")) {
      E0 = est.at("E0").get<double>();
    } else {
      if (!prob.has_exact)
        throw ConfigError("robbins_monro: relative E0 needs a dense-solvable fixture");
      E0 = prob.exact_ground_energy + detail::get_or<double>(est, "E0_offset_mh", -10.0) * 1e-3;
    }
    std::uint64_t iter_counter = 100;
    long shots_used = 0;
    auto V = [&](double E) {
      RhoPlan plan = make_plan(E, rm.s, 1, shots_per_iter, ++iter_counter);
      AmplitudeEstimate a = estimate_rho(prob.model, prob.ini_index, plan);
      shots_used += a.shots_used;
      return scale_by_lambda ? a.mean : a.mean * a.lambda_total;
    };
    RMResult rr = robbins_monro_energy(V, E0, rm);
    result.energy = rr.iterates.back();
    result.flagged = rr.flagged;
    if (rr.flagged) result.flag_reason = "iterates clamped to the monotone window";
    result.shots_used = shots_used;
    for (std::size_t i = 0; i < rr.iterates.size(); ++i)
      trace.push_back({static_cast<long>(i), rr.iterates[i], rm.s, 0.0, 0.0, "iterate"});
  } else if (kind == "direct") {
    const double eps = detail::require<double>(est, "eps");
    HamiltonianSchedule sched = make_weight_schedule(prob.model, prob.path, T);
    StateVector psi = run_exact_reference(sched, prob.ini_index);
    auto rng = stream_rng(seed, 777);
    result = direct_pauli_energy(prob.model, psi, eps, rng);
  } else {
    throw ConfigError("unknown estimator kind: " + kind);
  }

  write_trace_csv(ctx.out_dir / "trace.csv", trace);
  {
    std::ofstream out(ctx.out_dir / "summary.txt");
    out << "estimator " << kind << '\n'
        << "energy " << detail::fmt(result.energy, "%.17g") << '\n'
        << "uncertainty " << detail::fmt(result.uncertainty) << '\n'
        << "shots_used " << result.shots_used << '\n'
        << "gates_used " << detail::fmt(result.gates_used) << '\n'
        << "queries " << result.queries << '\n';
    if (prob.has_exact)
      out << "error_vs_exact "
          << detail::fmt(result.energy - prob.exact_ground_energy, "%.17g") << '\n';
    if (result.flagged) out << "flag " << result.flag_reason << '\n';
  }
}

}  // namespace qasp::cli
