#include "lrc/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <optional>
#include <random>
#include <sstream>

#include "lrc/error.hpp"
#include "lrc/seeding.hpp"

namespace lrc {

namespace fs = std::filesystem;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::string num(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> to_std(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

/// Files produced by a command; written in one go after all work is done.
class Artifacts {
 public:
  std::ostringstream& file(const std::string& name) { return files_[name]; }

  void write(const RunOptions& options, const std::string& command, const RunConfig& config) {
    nlohmann::json manifest;
    manifest["tool"] = "lrc";
    manifest["version"] = kToolVersion;
    manifest["command"] = command;
    manifest["config_hash"] = config.hash();
    manifest["master_seed"] = config.master_seed();
    manifest["config"] = config.canonical;
    std::vector<std::string> names;
    for (const auto& [name, body] : files_) names.push_back(name);
    manifest["artifacts"] = names;
    files_["manifest.json"] << manifest.dump(2) << '\n';

    const fs::path dir(options.out_dir);
    fs::create_directories(dir);
    for (const auto& [name, body] : files_) {
      std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
      if (!f) throw Error(ErrorCode::InvalidArgument, "cannot write " + (dir / name).string());
      f << body.str();
    }
  }

 private:
  std::map<std::string, std::ostringstream> files_;
};

/// Refuses to clobber existing artifacts unless --force was given.
bool check_overwrite(const RunOptions& options, const std::vector<std::string>& names,
                     std::ostream& err) {
  if (options.force) return true;
  const fs::path dir(options.out_dir);
  for (const auto& name : names) {
    if (fs::exists(dir / name)) {
      err << "error: " << (dir / name).string() << " exists; rerun with --force to overwrite\n";
      return false;
    }
  }
  return true;
}

void write_fit_csv(std::ostream& out, const StateMatrix& rows, const VectorXd& target,
                   const VectorXd& fit) {
  out << "time,target,fit\n";
  for (Index k = 0; k < target.size(); ++k) {
    out << num(rows.time(k)) << ',' << num(target(k)) << ',' << num(fit(k)) << '\n';
  }
}

void write_fit_files(Artifacts& files, const ReadoutFit& fit, double beta) {
  write_fit_csv(files.file("fit_train.csv"), fit.train, fit.y_train, fit.fit_train);
  write_fit_csv(files.file("fit_test.csv"), fit.test, fit.y_test, fit.fit_test);
  FitReport report;
  report.beta = beta;
  report.nrmse_train = fit.scores.nrmse_train;
  report.nrmse_test = fit.scores.nrmse_test;
  report.kappa = fit.kappa;
  report.domain = ReadoutDomain::Time;
  files.file("fit_report.json") << fit_report_to_json(report) << '\n';
}

ReservoirTopology resolve_topology(const RunConfig& config) {
  if (!config.reservoir.topology_file.empty()) {
    std::ifstream in(config.reservoir.topology_file);
    if (!in) {
      throw Error(ErrorCode::ConfigError,
                  "cannot open topology file '" + config.reservoir.topology_file + "'");
    }
    std::ostringstream text;
    text << in.rdbuf();
    ReservoirTopology topo = topology_from_json(text.str());
    if (topo.size() != config.reservoir.n) {
      throw Error(ErrorCode::ConfigError, "topology file size differs from reservoir.n");
    }
    return topo;
  }
  return generate_random_topology(config.reservoir.n, config.reservoir.edge_prob,
                                  config.reservoir.weighted, config.reservoir.target_max_eig,
                                  derive_seed(config.master_seed(), "cli.topology"),
                                  config.optimizer.gamma);
}

OptimizerConfig optimizer_with_jobs(const RunConfig& config, const RunOptions& options) {
  OptimizerConfig opt = config.optimizer;
  opt.jobs = options.jobs;
  return opt;
}

std::string modal_json(const ModalReservoir& modal) {
  nlohmann::json doc;
  doc["lambdas"] = to_std(modal.lambdas);
  doc["c"] = to_std(modal.c);
  doc["gamma"] = modal.gamma;
  return doc.dump(2);
}

struct OptimizedRun {
  OptimizationResult result;
  ModalReservoir modal;
  ReadoutFit fit;
};

OptimizedRun optimize_and_fit(const RunConfig& config, const RunOptions& options,
                              const MultiSineSignal& u, const MultiSineSignal& y) {
  const ReservoirTopology topo = resolve_topology(config);
  const VectorXd c = decouple(topo).modal.c;
  OptimizedRun run;
  run.result = optimize(optimizer_with_jobs(config, options), u, y, c);
  run.modal = ModalReservoir(run.result.lambdas, c, config.optimizer.gamma);
  run.fit = fit_readout(modal_window_states(run.modal, u, config.signals.window), y,
                        config.pipeline());
  return run;
}

int cmd_optimize(const RunConfig& config, const RunOptions& options, std::ostream& out,
                 std::ostream& err) {
  const std::vector<std::string> names = {"optimization.json", "reservoir.json", "topology.json",
                                          "fit_train.csv",     "fit_test.csv",   "fit_report.json",
                                          "manifest.json"};
  if (!check_overwrite(options, names, err)) return kExitConfig;
  const auto [u, y] = resolve_signals(config);
  const OptimizedRun run = optimize_and_fit(config, options, u, y);
  for (const auto& w : run.result.warnings) err << "warning: " << w << '\n';

  Artifacts files;
  files.file("optimization.json") << optimization_result_to_json(run.result) << '\n';
  files.file("reservoir.json") << modal_json(run.modal) << '\n';
  files.file("topology.json")
      << topology_to_json(recouple(run.modal, derive_seed(config.master_seed(), "cli.recouple")))
      << '\n';
  write_fit_files(files, run.fit, config.reservoir.readout_beta);
  files.write(options, "optimize", config);

  out << "optimize: n=" << run.modal.size() << " lowest_error=" << num(run.result.lowest_error)
      << " nrmse_train=" << num(run.fit.scores.nrmse_train)
      << " nrmse_test=" << num(run.fit.scores.nrmse_test) << '\n';
  return kExitOk;
}

int cmd_simulate(const RunConfig& config, const RunOptions& options, std::ostream& out,
                 std::ostream& err) {
  const std::vector<std::string> names = {"states.csv",    "input.csv",    "topology.json",
                                          "fit_train.csv", "fit_test.csv", "fit_report.json",
                                          "manifest.json"};
  if (!check_overwrite(options, names, err)) return kExitConfig;
  const auto [u, y] = resolve_signals(config);
  const PipelineConfig pipeline = config.pipeline();
  const Activation act = config.reservoir.activation;
  const ReservoirTopology topo =
      act == Activation::Identity || !config.reservoir.topology_file.empty()
          ? resolve_topology(config)
          : nonlinear_topology(config.reservoir.n, u,
                               derive_seed(config.master_seed(), "cli.topology"), pipeline);

  const SeriesWindow& w = config.signals.window;
  SimulationOptions sim;
  sim.activation = act;
  sim.bias_column = true;
  const StateMatrix all =
      simulate(topo, u, w.washout + 2 * w.steps, w.tau, 0.0, VectorXd::Zero(topo.size()), sim);
  const StateMatrix kept =
      all.window(static_cast<Index>(w.washout), static_cast<Index>(2 * w.steps));
  const ReadoutFit fit = fit_readout(kept, y, pipeline);

  Artifacts files;
  write_states_csv(files.file("states.csv"), kept);
  write_series_csv(files.file("input.csv"), sample(u, 2 * w.steps, w.tau, kept.t_first));
  files.file("topology.json") << topology_to_json(topo) << '\n';
  write_fit_files(files, fit, config.reservoir.readout_beta);
  files.write(options, "simulate", config);

  out << "simulate: n=" << topo.size() << " activation=" << to_string(act)
      << " nrmse_train=" << num(fit.scores.nrmse_train)
      << " nrmse_test=" << num(fit.scores.nrmse_test) << '\n';
  return kExitOk;
}

int cmd_theorem_check(const RunConfig& config, const RunOptions& options, std::ostream& out,
                      std::ostream& err) {
  const BenchmarkSection& b = config.benchmark;
  if (b.theorem_instances < 0 || b.theorem_n_min < 1 || b.theorem_n_max < b.theorem_n_min ||
      b.theorem_k_max < 1) {
    err << "error: invalid theorem-check instance settings\n";
    return kExitConfig;
  }
  const std::vector<std::string> names = {"theorem_check.csv", "manifest.json"};
  if (!check_overwrite(options, names, err)) return kExitConfig;
  if (b.theorem_instances == 0) err << "warning: zero instances requested; nothing to check\n";

  Artifacts files;
  auto& csv = files.file("theorem_check.csv");
  csv << "instance,n,k,eps_coupled,eps_decoupled,kappa_transform_residual,bias_coupled,"
         "bias_decoupled,fit_deviation_coupled,n2,k2,nrmse_time,nrmse_frequency,fit_deviation_time_freq,"
         "kappa_deviation,pass\n";
  int failures = 0;
  for (int i = 0; i < b.theorem_instances; ++i) {
    const auto idx = static_cast<std::uint64_t>(i);
    const Theorem1Instance t1 = make_theorem1_instance(
        derive_seed(config.master_seed(), "theorem.one", idx), b.theorem_n_min, b.theorem_n_max,
        b.theorem_k_max);
    std::optional<MatrixXd> basis;
    if (b.corrupt_basis) {
      Rng rng = make_rng(derive_seed(config.master_seed(), "theorem.corrupt", idx));
      std::normal_distribution<double> noise(0.0, 0.1);
      MatrixXd v = decouple(t1.topology).v;
      for (Index r = 0; r < v.rows(); ++r) {
        for (Index c = 0; c < v.cols(); ++c) v(r, c) += noise(rng);
      }
      basis = v;
    }
    const Theorem1Report r1 =
        verify_theorem1(t1.topology, t1.u_signal, t1.y_signal, config.signals.window, 0.0, basis);
    const Theorem2Instance t2 = make_theorem2_instance(
        derive_seed(config.master_seed(), "theorem.two", idx), b.theorem_n_min,
        std::min(b.theorem_n_max, 20), b.theorem_k_max, config.signals.window);
    const Theorem2Report r2 =
        verify_theorem2(t2.modal, t2.u_signal, t2.y_signal, config.signals.window, b.theorem2_beta);

    const bool ok1 = std::abs(r1.eps_coupled - r1.eps_decoupled) < 1e-8 && r1.fit_deviation < 1e-6;
    const bool ok2 = r2.fit_deviation < 1e-2 && std::abs(r2.nrmse_time - r2.nrmse_frequency) < 1e-2;
    const bool ok = ok1 && ok2;
    if (!ok) ++failures;
    csv << i << ',' << t1.topology.size() << ',' << t1.u_signal.size() << ','
        << num(r1.eps_coupled) << ',' << num(r1.eps_decoupled) << ','
        << num(r1.kappa_transform_residual) << ',' << num(r1.bias_coupled) << ','
        << num(r1.bias_decoupled) << ',' << num(r1.fit_deviation) << ',' << t2.modal.size() << ','
        << t2.u_signal.size() << ','
        << num(r2.nrmse_time) << ',' << num(r2.nrmse_frequency) << ',' << num(r2.fit_deviation)
        << ',' << num(r2.kappa_deviation) << ',' << (ok ? "true" : "false") << '\n';
    out << "instance " << i << ": eps_coupled=" << num(r1.eps_coupled)
        << " eps_decoupled=" << num(r1.eps_decoupled)
        << " kappa_residual=" << num(r1.kappa_transform_residual)
        << " fit_deviation=" << num(r1.fit_deviation)
        << " time_freq_fit_deviation=" << num(r2.fit_deviation)
        << " kappa_deviation=" << num(r2.kappa_deviation) << (ok ? " ok" : " VIOLATION") << '\n';
  }
  files.write(options, "theorem-check", config);
  out << "theorem-check: " << b.theorem_instances - failures << "/" << b.theorem_instances
      << " instances within tolerance\n";
  return failures == 0 ? kExitOk : kExitFailure;
}

int cmd_sweep(const RunConfig& config, const RunOptions& options, std::ostream& out,
              std::ostream& err) {
  ScenarioSpec spec = config.benchmark.scenario;
  spec.jobs = options.jobs;
  spec.seed = config.master_seed();
  spec.pipeline = config.pipeline();
  try {
    spec.validate();
  } catch (const Error& e) {
    err << "error: [benchmark] " << e.what() << '\n';
    return kExitConfig;
  }
  const std::vector<std::string> names = {"sweep.csv", "sweep_summary.json", "sweep_trials.jsonl",
                                          "manifest.json"};
  if (!check_overwrite(options, names, err)) return kExitConfig;

  BenchmarkReport report = run_sweep(spec);
  report.config_hash = config.hash();
  Artifacts files;
  write_report_csv(files.file("sweep.csv"), report);
  files.file("sweep_summary.json") << report_summary_json(report) << '\n';
  write_trials_jsonl(files.file("sweep_trials.jsonl"), report);
  files.write(options, "sweep", config);

  int failed_cells = 0;
  for (const auto& cell : report.cells) {
    if (cell.failures > 0) {
      ++failed_cells;
      err << "warning: " << to_string(cell.method) << " at " << report.sweep_var << "="
          << cell.sweep_value << " failed in " << cell.failures << " of " << cell.trial_count
          << " trials\n";
    }
  }
  out << "sweep: " << report.cells.size() << " cells, " << failed_cells << " with failures\n";
  return failed_cells > 0 && options.strict ? kExitFailure : kExitOk;
}

int cmd_sensitivity(const RunConfig& config, const RunOptions& options, std::ostream& out,
                    std::ostream& err) {
  const BenchmarkSection& b = config.benchmark;
  if (b.epsilons.empty() || b.sensitivity_trials < 1) {
    err << "error: sensitivity needs epsilons and sensitivity_trials >= 1\n";
    return kExitConfig;
  }
  const std::vector<std::string> names = {"sensitivity.csv", "sensitivity.json",
                                          "optimization.json", "manifest.json"};
  if (!check_overwrite(options, names, err)) return kExitConfig;
  const auto [u, y] = resolve_signals(config);
  const OptimizedRun run = optimize_and_fit(config, options, u, y);
  const auto rows = sensitivity_study(run.modal, u, y, b.epsilons, b.sensitivity_trials,
                                      derive_seed(config.master_seed(), "cli.sensitivity"),
                                      config.optimizer.beta1, config.signals.window,
                                      config.optimizer.constraint_margin);

  Artifacts files;
  files.file("optimization.json") << optimization_result_to_json(run.result) << '\n';
  auto& csv = files.file("sensitivity.csv");
  csv << "epsilon,draw,nrmse_train\n";
  nlohmann::json summary = nlohmann::json::array();
  for (const auto& row : rows) {
    for (std::size_t d = 0; d < row.nrmse.size(); ++d) {
      csv << num(row.epsilon) << ',' << d << ',' << num(row.nrmse[d]) << '\n';
    }
    summary.push_back({{"epsilon", row.epsilon},
                       {"mean_nrmse_train", row.mean_nrmse},
                       {"std_nrmse_train", row.std_nrmse},
                       {"draws", row.nrmse.size()}});
  }
  nlohmann::json doc;
  doc["lambdas"] = to_std(run.modal.lambdas);
  doc["refit_beta"] = config.optimizer.beta1;
  doc["rows"] = summary;
  files.file("sensitivity.json") << doc.dump(2) << '\n';
  files.write(options, "sensitivity", config);

  out << "sensitivity:";
  for (const auto& row : rows) out << " eps=" << num(row.epsilon) << ":" << num(row.mean_nrmse);
  out << '\n';
  return kExitOk;
}

int cmd_beta_study(const RunConfig& config, const RunOptions& options, std::ostream& out,
                   std::ostream& err) {
  const BenchmarkSection& b = config.benchmark;
  if (b.beta1_values.empty() || b.beta2_values.empty() || b.beta_trials < 1) {
    err << "error: beta-study needs beta1_values, beta2_values and beta_trials >= 1\n";
    return kExitConfig;
  }
  const std::vector<std::string> names = {"beta_study.csv", "beta_study.json", "manifest.json"};
  if (!check_overwrite(options, names, err)) return kExitConfig;
  const auto [u, y] = resolve_signals(config);
  const auto cells =
      beta_weight_study(b.beta1_values, b.beta2_values, u, y, config.optimizer.n_modes,
                        b.beta_trials, config.master_seed(), optimizer_with_jobs(config, options));

  Artifacts files;
  auto& csv = files.file("beta_study.csv");
  csv << "beta1,beta2,trial,lowest_error\n";
  nlohmann::json grid = nlohmann::json::array();
  for (const auto& cell : cells) {
    for (std::size_t t = 0; t < cell.errors.size(); ++t) {
      csv << num(cell.beta1) << ',' << num(cell.beta2) << ',' << t << ',' << num(cell.errors[t])
          << '\n';
    }
    grid.push_back({{"beta1", cell.beta1}, {"beta2", cell.beta2}, {"mean_error", cell.mean_error}});
  }
  nlohmann::json doc;
  doc["n_modes"] = config.optimizer.n_modes;
  doc["trials"] = b.beta_trials;
  doc["cells"] = grid;
  files.file("beta_study.json") << doc.dump(2) << '\n';
  files.write(options, "beta-study", config);

  out << "beta-study: " << cells.size() << " cells\n";
  return kExitOk;
}

}  // namespace

std::pair<MultiSineSignal, MultiSineSignal> resolve_signals(const RunConfig& config) {
  const SignalsSection& s = config.signals;
  if (s.u_file.empty()) return {s.u_signal, s.y_signal};
  const auto read = [](const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot open series file '" + path + "'");
    return read_series_csv(in);
  };
  const CommonFrequencies common =
      extract_common_frequencies(read(s.u_file), read(s.y_file), s.n_frequencies);
  return {common.u_signal, common.y_signal};
}

Theorem1Instance make_theorem1_instance(std::uint64_t seed, int n_min, int n_max, int k_max) {
  Rng rng = make_rng(seed);
  std::uniform_int_distribution<int> n_dist(n_min, n_max);
  std::uniform_int_distribution<int> k_dist(1, k_max);
  const int n = n_dist(rng);
  const int k = k_dist(rng);
  auto task = generate_task(static_cast<std::size_t>(k), derive_seed(seed, "task"));
  return {generate_random_topology(n, 0.5, false, -0.1, derive_seed(seed, "topology")),
          std::move(task.first), std::move(task.second)};
}

Theorem2Instance make_theorem2_instance(std::uint64_t seed, int n_min, int n_max, int k_max,
                                        const SeriesWindow& window) {
  Rng rng = make_rng(seed);
  std::uniform_int_distribution<int> n_dist(n_min, n_max);
  std::uniform_int_distribution<int> k_dist(1, k_max);
  const int n = n_dist(rng);
  const int k = k_dist(rng);
  const double bin = 2.0 * kPi / (static_cast<double>(window.steps) * window.tau);
  const int max_bin = static_cast<int>(std::floor(5.0 / bin));
  require(max_bin >= k, "regression window too short for bin-centred tones");
  std::vector<int> bins(static_cast<std::size_t>(max_bin));
  for (int m = 1; m <= max_bin; ++m) bins[static_cast<std::size_t>(m - 1)] = m;
  for (std::size_t i = bins.size() - 1; i > 0; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i);
    std::swap(bins[i], bins[pick(rng)]);
  }
  std::uniform_real_distribution<double> amp(0.5, 2.5);
  std::uniform_real_distribution<double> phase(-kPi, kPi);
  std::vector<SineComponent> uc, yc;
  for (int i = 0; i < k; ++i) {
    const double w = bin * bins[static_cast<std::size_t>(i)];
    uc.push_back({w, amp(rng), 0.0});
    yc.push_back({w, amp(rng), wrap_phase(phase(rng))});
  }
  MultiSineSignal u(std::move(uc)), y(std::move(yc));
  const double upper = lambda_upper_bound(6.0, u.max_omega(), 1e-6);
  std::uniform_real_distribution<double> lam(-20.0, upper);
  std::normal_distribution<double> normal(0.0, 1.0);
  VectorXd lambdas(n), c(n);
  for (Index i = 0; i < n; ++i) lambdas(i) = lam(rng);
  for (Index i = 0; i < n; ++i) c(i) = normal(rng);
  return {ModalReservoir(lambdas, c, 6.0), std::move(u), std::move(y)};
}

int run_command(const std::string& command, const RunConfig& config, const RunOptions& options,
                std::ostream& out, std::ostream& err) {
  if (options.jobs < 1) {
    err << "error: --jobs must be >= 1\n";
    return kExitConfig;
  }
  try {
    if (command == "optimize") return cmd_optimize(config, options, out, err);
    if (command == "simulate") return cmd_simulate(config, options, out, err);
    if (command == "theorem-check") return cmd_theorem_check(config, options, out, err);
    if (command == "sweep") return cmd_sweep(config, options, out, err);
    if (command == "sensitivity") return cmd_sensitivity(config, options, out, err);
    if (command == "beta-study") return cmd_beta_study(config, options, out, err);
    err << "error: unknown command '" << command << "'\n";
    return kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    if (e.code() == ErrorCode::ConfigError) return kExitConfig;
    if (e.code() == ErrorCode::AllRestartsFailed) return kExitNoRestarts;
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace lrc
