#include "lrc/benchmarks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>

#include "lrc/error.hpp"
#include "lrc/reservoir.hpp"
#include "lrc/seeding.hpp"

namespace lrc {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string to_string(Method method) {
  switch (method) {
    case Method::OptimizedLrc: return "optimized_lrc";
    case Method::RandomLrc: return "random_lrc";
    case Method::NlrcTanh: return "nlrc_tanh";
    case Method::NlrcRelu: return "nlrc_relu";
  }
  return "optimized_lrc";
}

Method parse_method(const std::string& name) {
  for (Method m : kAllMethods) {
    if (to_string(m) == name) return m;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown method '" + name + "'");
}

std::string to_string(SweepMode mode) {
  return mode == SweepMode::FixNodesVaryFreqs ? "fix_nodes_vary_freqs" : "fix_freqs_vary_nodes";
}

SweepMode parse_sweep_mode(const std::string& name) {
  if (name == "fix_nodes_vary_freqs") return SweepMode::FixNodesVaryFreqs;
  if (name == "fix_freqs_vary_nodes") return SweepMode::FixFreqsVaryNodes;
  throw Error(ErrorCode::InvalidArgument, "unknown sweep mode '" + name + "'");
}

namespace {

double time_of_row(const SeriesWindow& w, std::size_t row) {
  return static_cast<double>(row + 1) * w.tau;
}

MethodResult simulate_and_score(const ReservoirTopology& topology, Activation activation,
                                const MultiSineSignal& u_signal, const MultiSineSignal& y_signal,
                                const PipelineConfig& config) {
  const SeriesWindow& w = config.window;
  SimulationOptions opts;
  opts.activation = activation;
  opts.bias_column = true;
  const StateMatrix all = simulate(topology, u_signal, w.washout + 2 * w.steps, w.tau, 0.0,
                                   VectorXd::Zero(topology.size()), opts);
  return fit_readout(all.window(static_cast<Index>(w.washout), static_cast<Index>(2 * w.steps)),
                     y_signal, config)
      .scores;
}

std::string format_double(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json json_number(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json();
}

}  // namespace

ReadoutFit fit_readout(const StateMatrix& states, const MultiSineSignal& y_signal,
                       const PipelineConfig& config) {
  const SeriesWindow& w = config.window;
  const auto steps = static_cast<Index>(w.steps);
  require(states.rows() == 2 * steps, "state matrix must cover the train and test windows");
  ReadoutFit out;
  out.train = states.window(0, steps);
  out.test = states.window(steps, steps);
  out.y_train = to_eigen(sample(y_signal, w.steps, w.tau, out.train.t_first));
  out.y_test = to_eigen(sample(y_signal, w.steps, w.tau, out.test.t_first));
  out.kappa = ridge_fit(out.train, out.y_train, config.readout_beta).kappa;
  out.fit_train = out.train.states * out.kappa;
  out.fit_test = out.test.states * out.kappa;
  out.scores = {nrmse(out.fit_train, out.y_train), nrmse(out.fit_test, out.y_test)};
  return out;
}

StateMatrix modal_window_states(const ModalReservoir& modal, const MultiSineSignal& u_signal,
                                const SeriesWindow& window) {
  return steady_state_series(modal, u_signal, 2 * window.steps, window.tau,
                             time_of_row(window, window.washout))
      .with_bias();
}

MethodResult evaluate_modal(const ModalReservoir& modal, const MultiSineSignal& u_signal,
                            const MultiSineSignal& y_signal, const PipelineConfig& config) {
  return fit_readout(modal_window_states(modal, u_signal, config.window), y_signal, config).scores;
}

ReservoirTopology nonlinear_topology(Index n, const MultiSineSignal& u_signal, std::uint64_t seed,
                                     const PipelineConfig& config) {
  const ReservoirTopology topo = generate_scaled_topology(
      n, config.edge_prob, config.weighted, config.spectral_radius, config.optimizer.gamma, seed);
  double power = 0.0;
  for (const auto& comp : u_signal.components()) power += 0.5 * comp.amplitude * comp.amplitude;
  require(power > 0.0, "input signal has zero power");
  return ReservoirTopology::unchecked(topo.adjacency(),
                                      topo.input_mask() * (config.input_scale / std::sqrt(power)),
                                      config.optimizer.gamma);
}

VectorXd random_mask(Index n, std::uint64_t seed, const PipelineConfig& config) {
  const ReservoirTopology topo = generate_random_topology(
      n, config.edge_prob, config.weighted, config.target_max_eig, seed, config.optimizer.gamma);
  return decouple(topo).modal.c;
}

MethodResult run_method(Method method, Index n, const MultiSineSignal& u_signal,
                        const MultiSineSignal& y_signal, std::uint64_t seed,
                        const PipelineConfig& config) {
  require(n >= 1, "reservoir size must be >= 1");
  require_same_frequencies(u_signal, y_signal);
  const double gamma = config.optimizer.gamma;
  switch (method) {
    case Method::OptimizedLrc: {
      const ReservoirTopology topo =
          generate_random_topology(n, config.edge_prob, config.weighted, config.target_max_eig,
                                   derive_seed(seed, "benchmarks.linear_topology"), gamma);
      const VectorXd c = decouple(topo).modal.c;
      OptimizerConfig opt = config.optimizer;
      opt.n_modes = static_cast<int>(n);
      opt.seed = derive_seed(seed, "benchmarks.optimizer");
      const OptimizationResult res = optimize(opt, u_signal, y_signal, c);
      return evaluate_modal(ModalReservoir(res.lambdas, c, gamma), u_signal, y_signal, config);
    }
    case Method::RandomLrc: {
      const ReservoirTopology topo =
          generate_random_topology(n, config.edge_prob, config.weighted, config.target_max_eig,
                                   derive_seed(seed, "benchmarks.linear_topology"), gamma);
      return simulate_and_score(topo, Activation::Identity, u_signal, y_signal, config);
    }
    case Method::NlrcTanh:
    case Method::NlrcRelu: {
      const ReservoirTopology topo = nonlinear_topology(
          n, u_signal, derive_seed(seed, "benchmarks.nonlinear_topology"), config);
      const Activation act = method == Method::NlrcTanh ? Activation::Tanh : Activation::Relu;
      return simulate_and_score(topo, act, u_signal, y_signal, config);
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown method");
}

std::pair<MultiSineSignal, MultiSineSignal> generate_task(std::size_t k, std::uint64_t seed,
                                                          const SignalGenConfig& gen) {
  require(k >= 1, "need at least one frequency");
  require(gen.omega_low > 0.0 && gen.omega_low < gen.omega_high, "bad frequency range");
  require(gen.grid_points >= 2, "frequency grid needs at least two points");
  require(gen.amp_low >= 0.0 && gen.amp_low <= gen.amp_high, "bad amplitude range");

  Rng rng = make_rng(seed);
  std::vector<double> grid(gen.grid_points);
  const double log_lo = std::log(gen.omega_low);
  const double log_step = (std::log(gen.omega_high) - log_lo) / static_cast<double>(gen.grid_points - 1);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid[i] = std::exp(log_lo + log_step * static_cast<double>(i));
  }
  std::vector<std::size_t> order(grid.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i);
    std::swap(order[i], order[pick(rng)]);
  }
  std::vector<double> omegas;
  for (std::size_t idx : order) {
    const double w = grid[idx];
    const bool clear = std::all_of(omegas.begin(), omegas.end(), [&](double o) {
      return std::abs(o - w) >= gen.min_separation;
    });
    if (clear) omegas.push_back(w);
    if (omegas.size() == k) break;
  }
  if (omegas.size() < k) {
    throw Error(ErrorCode::InvalidArgument,
                "cannot place " + std::to_string(k) + " frequencies with the requested separation");
  }
  std::sort(omegas.begin(), omegas.end());

  std::uniform_real_distribution<double> amp(gen.amp_low, gen.amp_high);
  std::uniform_real_distribution<double> phase(-kPi, kPi);
  std::vector<SineComponent> uc(k), yc(k);
  for (std::size_t i = 0; i < k; ++i) uc[i] = {omegas[i], amp(rng), 0.0};
  for (std::size_t i = 0; i < k; ++i) yc[i].amplitude = amp(rng);
  for (std::size_t i = 0; i < k; ++i) {
    yc[i].omega = omegas[i];
    yc[i].phase = wrap_phase(phase(rng));
  }
  return {MultiSineSignal(std::move(uc)), MultiSineSignal(std::move(yc))};
}

void ScenarioSpec::validate() const {
  require(fixed_value >= 1, "fixed value must be >= 1");
  require(!sweep_values.empty(), "sweep values must be non-empty");
  require(std::is_sorted(sweep_values.begin(), sweep_values.end()) &&
              std::adjacent_find(sweep_values.begin(), sweep_values.end()) == sweep_values.end(),
          "sweep values must be strictly ascending");
  require(sweep_values.front() >= 1, "sweep values must be >= 1");
  require(trials >= 1, "trials must be >= 1");
  require(!methods.empty(), "at least one method is required");
  require(jobs >= 1, "jobs must be >= 1");
}

double pairwise_mean(const std::vector<double>& values) {
  require(!values.empty(), "mean of an empty set");
  const auto sum = [&](auto&& self, std::size_t lo, std::size_t hi) -> double {
    if (hi - lo <= 8) {
      double s = 0.0;
      for (std::size_t i = lo; i < hi; ++i) s += values[i];
      return s;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    return self(self, lo, mid) + self(self, mid, hi);
  };
  return sum(sum, 0, values.size()) / static_cast<double>(values.size());
}

double sample_std(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  const double m = pairwise_mean(values);
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) sq[i] = (values[i] - m) * (values[i] - m);
  const double n = static_cast<double>(values.size());
  return std::sqrt(pairwise_mean(sq) * n / (n - 1.0));
}

const CellSummary& BenchmarkReport::cell(Method method, int sweep_value) const {
  for (const auto& c : cells) {
    if (c.method == method && c.sweep_value == sweep_value) return c;
  }
  throw Error(ErrorCode::InvalidArgument, "no such benchmark cell");
}

bool BenchmarkReport::has_failures() const {
  return std::any_of(cells.begin(), cells.end(), [](const CellSummary& c) { return c.failures > 0; });
}

BenchmarkReport run_sweep(const ScenarioSpec& spec) {
  spec.validate();
  const bool vary_freqs = spec.mode == SweepMode::FixNodesVaryFreqs;
  const std::size_t n_values = spec.sweep_values.size();
  const std::size_t n_methods = spec.methods.size();
  const auto trials = static_cast<std::size_t>(spec.trials);

  PipelineConfig pipeline = spec.pipeline;
  if (spec.jobs > 1) pipeline.optimizer.jobs = 1;

  // results[(v * trials + t) * n_methods + m]
  std::vector<TrialRecord> results(n_values * trials * n_methods);
  const auto run_job = [&](std::size_t job) {
    const std::size_t v = job / trials;
    const std::size_t t = job % trials;
    const int value = spec.sweep_values[v];
    const int n_nodes = vary_freqs ? spec.fixed_value : value;
    const int n_freqs = vary_freqs ? value : spec.fixed_value;
    const auto cell_index = static_cast<std::uint64_t>(value);
    for (std::size_t m = 0; m < n_methods; ++m) {
      TrialRecord& rec = results[job * n_methods + m];
      rec.trial = static_cast<int>(t);
      try {
        const auto task = generate_task(static_cast<std::size_t>(n_freqs),
                                        derive_seed(spec.seed, "benchmarks.task", cell_index, t),
                                        spec.signal_gen);
        const MethodResult r =
            run_method(spec.methods[m], n_nodes, task.first, task.second,
                       derive_seed(spec.seed, "benchmarks.trial", cell_index, t), pipeline);
        rec.nrmse_train = r.nrmse_train;
        rec.nrmse_test = r.nrmse_test;
      } catch (const Error& e) {
        rec.ok = false;
        rec.nrmse_train = std::numeric_limits<double>::quiet_NaN();
        rec.nrmse_test = std::numeric_limits<double>::quiet_NaN();
        rec.error = e.what();
      }
    }
  };

  const std::size_t n_jobs = n_values * trials;
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(spec.jobs), n_jobs);
  if (workers <= 1) {
    for (std::size_t j = 0; j < n_jobs; ++j) run_job(j);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t j = w; j < n_jobs; j += workers) run_job(j);
      });
    }
    for (auto& th : pool) th.join();
  }

  BenchmarkReport report;
  report.sweep_var = vary_freqs ? "n_frequencies" : "n_nodes";
  report.seed = spec.seed;
  for (std::size_t v = 0; v < n_values; ++v) {
    for (std::size_t m = 0; m < n_methods; ++m) {
      CellSummary cell;
      cell.method = spec.methods[m];
      cell.sweep_value = spec.sweep_values[v];
      cell.trial_count = spec.trials;
      std::vector<double> train, test;
      for (std::size_t t = 0; t < trials; ++t) {
        const TrialRecord& rec = results[(v * trials + t) * n_methods + m];
        cell.trials.push_back(rec);
        if (rec.ok) {
          train.push_back(rec.nrmse_train);
          test.push_back(rec.nrmse_test);
        } else {
          ++cell.failures;
        }
      }
      if (train.empty()) {
        cell.mean_train = cell.mean_test = std::numeric_limits<double>::quiet_NaN();
        cell.std_train = cell.std_test = std::numeric_limits<double>::quiet_NaN();
      } else {
        cell.mean_train = pairwise_mean(train);
        cell.std_train = sample_std(train);
        cell.mean_test = pairwise_mean(test);
        cell.std_test = sample_std(test);
      }
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

void write_report_csv(std::ostream& out, const BenchmarkReport& report) {
  out << "method,sweep_var,sweep_value,trial,nrmse_train,nrmse_test\n";
  for (const auto& cell : report.cells) {
    for (const auto& rec : cell.trials) {
      out << to_string(cell.method) << ',' << report.sweep_var << ',' << cell.sweep_value << ','
          << rec.trial << ',' << format_double(rec.nrmse_train) << ','
          << format_double(rec.nrmse_test) << '\n';
    }
  }
}

std::string report_summary_json(const BenchmarkReport& report) {
  nlohmann::json doc;
  doc["sweep_var"] = report.sweep_var;
  doc["seed"] = report.seed;
  doc["config_hash"] = report.config_hash;
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& cell : report.cells) {
    nlohmann::json c;
    c["method"] = to_string(cell.method);
    c["sweep_value"] = cell.sweep_value;
    c["trials"] = cell.trial_count;
    c["failures"] = cell.failures;
    c["mean_nrmse_train"] = json_number(cell.mean_train);
    c["std_nrmse_train"] = json_number(cell.std_train);
    c["mean_nrmse_test"] = json_number(cell.mean_test);
    c["std_nrmse_test"] = json_number(cell.std_test);
    cells.push_back(c);
  }
  doc["cells"] = cells;
  return doc.dump(2);
}

void write_trials_jsonl(std::ostream& out, const BenchmarkReport& report) {
  for (const auto& cell : report.cells) {
    for (const auto& rec : cell.trials) {
      nlohmann::json j;
      j["method"] = to_string(cell.method);
      j["sweep_var"] = report.sweep_var;
      j["sweep_value"] = cell.sweep_value;
      j["trial"] = rec.trial;
      j["ok"] = rec.ok;
      j["nrmse_train"] = json_number(rec.nrmse_train);
      j["nrmse_test"] = json_number(rec.nrmse_test);
      if (!rec.ok) j["error"] = rec.error;
      out << j.dump() << '\n';
    }
  }
}

double frequency_readout_nrmse(const ModalReservoir& modal, const MultiSineSignal& u_signal,
                               const MultiSineSignal& y_signal, double beta,
                               const SeriesWindow& window) {
  const FrequencyDesignMatrix sys = build_frequency_system(modal, u_signal, y_signal);
  const VectorXd kappa = frequency_fit(sys, beta, SingularPolicy::MinimumNorm).kappa;
  const StateMatrix series = steady_state_series(modal, u_signal, window.steps, window.tau,
                                                 time_of_row(window, window.washout));
  const VectorXd y = to_eigen(sample(y_signal, window.steps, window.tau, series.t_first));
  return nrmse(series.states * kappa, y);
}

std::vector<SensitivityRow> sensitivity_study(const ModalReservoir& optimum,
                                              const MultiSineSignal& u_signal,
                                              const MultiSineSignal& y_signal,
                                              const std::vector<double>& epsilons, int trials,
                                              std::uint64_t seed, double beta,
                                              const SeriesWindow& window, double margin) {
  require(trials >= 1, "trials must be >= 1");
  const double upper = lambda_upper_bound(optimum.gamma, u_signal.max_omega(), margin);
  require(feasible(optimum.lambdas, optimum.gamma, u_signal.max_omega(), margin),
          "optimized eigenvalues are not feasible");
  std::vector<SensitivityRow> rows;
  for (double eps : epsilons) {
    require(eps >= 0.0, "perturbation size must be >= 0");
    SensitivityRow row;
    row.epsilon = eps;
    for (int t = 0; t < trials; ++t) {
      // The same delta draws are reused for every epsilon.
      const VectorXd lam = perturb(optimum.lambdas, eps,
                                   derive_seed(seed, "benchmarks.sensitivity", static_cast<std::uint64_t>(t)),
                                   upper);
      row.nrmse.push_back(frequency_readout_nrmse(ModalReservoir(lam, optimum.c, optimum.gamma),
                                                  u_signal, y_signal, beta, window));
    }
    row.mean_nrmse = pairwise_mean(row.nrmse);
    row.std_nrmse = sample_std(row.nrmse);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<BetaCell> beta_weight_study(const std::vector<double>& beta1_values,
                                        const std::vector<double>& beta2_values,
                                        const MultiSineSignal& u_signal,
                                        const MultiSineSignal& y_signal, int n, int trials,
                                        std::uint64_t seed, const OptimizerConfig& base) {
  require(!beta1_values.empty() && !beta2_values.empty(), "beta grids must be non-empty");
  require(trials >= 1, "trials must be >= 1");
  PipelineConfig pc;
  pc.optimizer = base;
  std::vector<VectorXd> masks;
  for (int t = 0; t < trials; ++t) {
    masks.push_back(random_mask(n, derive_seed(seed, "benchmarks.beta_study.mask",
                                               static_cast<std::uint64_t>(t)), pc));
  }
  std::vector<BetaCell> cells;
  for (double b1 : beta1_values) {
    for (double b2 : beta2_values) {
      BetaCell cell;
      cell.beta1 = b1;
      cell.beta2 = b2;
      for (int t = 0; t < trials; ++t) {
        OptimizerConfig cfg = base;
        cfg.n_modes = n;
        cfg.beta1 = b1;
        cfg.beta2 = b2;
        cfg.seed = derive_seed(seed, "benchmarks.beta_study.optimizer", static_cast<std::uint64_t>(t));
        cell.errors.push_back(optimize(cfg, u_signal, y_signal, masks[static_cast<std::size_t>(t)]).lowest_error);
      }
      cell.mean_error = pairwise_mean(cell.errors);
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

}  // namespace lrc
