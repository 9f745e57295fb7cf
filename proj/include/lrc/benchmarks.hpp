#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "lrc/optimizer.hpp"
#include "lrc/regression.hpp"
#include "lrc/signals.hpp"

namespace lrc {

enum class Method { OptimizedLrc, RandomLrc, NlrcTanh, NlrcRelu };

inline constexpr std::array<Method, 4> kAllMethods = {Method::OptimizedLrc, Method::RandomLrc,
                                                      Method::NlrcTanh, Method::NlrcRelu};

std::string to_string(Method method);
Method parse_method(const std::string& name);

/// Settings shared by every method in a comparison. The training window is
/// `window.steps` rows after `window.washout`; the test window is the next
/// `window.steps` rows.
struct PipelineConfig {
  SeriesWindow window{};
  double readout_beta = 1e-8;
  double edge_prob = 0.5;
  bool weighted = false;
  double target_max_eig = -0.1;   // Hurwitz shift of the random linear topology
  double spectral_radius = 0.9;   // nonlinear baselines
  double input_scale = 1.0;       // nonlinear baselines see u / rms(u) * input_scale
  OptimizerConfig optimizer{};    // n_modes is overridden by N
};

struct MethodResult {
  double nrmse_train = 0.0;
  double nrmse_test = 0.0;
};

/// Readout trained on the first `window.steps` rows of `states` and frozen
/// for the next `window.steps` rows.
struct ReadoutFit {
  Eigen::VectorXd kappa;
  StateMatrix train;
  StateMatrix test;
  Eigen::VectorXd y_train, fit_train;
  Eigen::VectorXd y_test, fit_test;
  MethodResult scores;
};

ReadoutFit fit_readout(const StateMatrix& states, const MultiSineSignal& y_signal,
                       const PipelineConfig& config);

/// Transient-free modal series over the train and test windows, with bias column.
StateMatrix modal_window_states(const ModalReservoir& modal, const MultiSineSignal& u_signal,
                                const SeriesWindow& window);

/// Nonlinear baseline network: ER graph at the configured spectral radius with
/// the input mask divided by rms(u) and multiplied by input_scale.
ReservoirTopology nonlinear_topology(Eigen::Index n, const MultiSineSignal& u_signal,
                                     std::uint64_t seed, const PipelineConfig& config);

/// Trains one method on (u, y) and scores it on the train and test windows.
/// Linear methods share the random topology drawn from `seed` (the optimized
/// reservoir keeps its modal mask and redesigns the eigenvalues).
MethodResult run_method(Method method, Eigen::Index n, const MultiSineSignal& u_signal,
                        const MultiSineSignal& y_signal, std::uint64_t seed,
                        const PipelineConfig& config = {});

/// Time-domain readout of a given modal reservoir, evaluated on the transient-free
/// series over the train/test windows.
MethodResult evaluate_modal(const ModalReservoir& modal, const MultiSineSignal& u_signal,
                            const MultiSineSignal& y_signal, const PipelineConfig& config);

struct SignalGenConfig {
  double omega_low = 0.5;
  double omega_high = 5.0;
  std::size_t grid_points = 64;  // log-spaced candidates in [omega_low, omega_high]
  double min_separation = 0.2;
  double amp_low = 0.5;
  double amp_high = 2.5;
};

/// Random task with K shared frequencies: input phases 0, output phases
/// uniform in (-pi, pi], amplitudes uniform in [amp_low, amp_high].
std::pair<MultiSineSignal, MultiSineSignal> generate_task(std::size_t k, std::uint64_t seed,
                                                          const SignalGenConfig& gen = {});

enum class SweepMode { FixNodesVaryFreqs, FixFreqsVaryNodes };

std::string to_string(SweepMode mode);
SweepMode parse_sweep_mode(const std::string& name);

struct ScenarioSpec {
  SweepMode mode = SweepMode::FixFreqsVaryNodes;
  int fixed_value = 3;
  std::vector<int> sweep_values{5, 10, 20, 50};
  int trials = 10;
  std::uint64_t seed = 0;
  SignalGenConfig signal_gen{};
  std::vector<Method> methods{kAllMethods.begin(), kAllMethods.end()};
  PipelineConfig pipeline{};
  int jobs = 1;

  void validate() const;
};

struct TrialRecord {
  int trial = 0;
  bool ok = true;
  double nrmse_train = 0.0;
  double nrmse_test = 0.0;
  std::string error;
};

struct CellSummary {
  Method method = Method::OptimizedLrc;
  int sweep_value = 0;
  std::vector<TrialRecord> trials;
  int trial_count = 0;
  int failures = 0;
  double mean_train = 0.0;
  double std_train = 0.0;
  double mean_test = 0.0;
  double std_test = 0.0;
};

struct BenchmarkReport {
  std::string sweep_var;  // "n_frequencies" or "n_nodes"
  std::uint64_t seed = 0;
  std::string config_hash;
  std::vector<CellSummary> cells;  // sweep-value major, method minor

  const CellSummary& cell(Method method, int sweep_value) const;
  bool has_failures() const;
};

BenchmarkReport run_sweep(const ScenarioSpec& spec);

/// Pairwise (cascade) summation mean.
double pairwise_mean(const std::vector<double>& values);
/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double sample_std(const std::vector<double>& values);

/// method,sweep_var,sweep_value,trial,nrmse_train,nrmse_test
void write_report_csv(std::ostream& out, const BenchmarkReport& report);
std::string report_summary_json(const BenchmarkReport& report);
/// One JSON object per trial and method.
void write_trials_jsonl(std::ostream& out, const BenchmarkReport& report);

struct SensitivityRow {
  double epsilon = 0.0;
  double mean_nrmse = 0.0;
  double std_nrmse = 0.0;
  std::vector<double> nrmse;  // per draw
};

/// Perturbs the optimized eigenvalues, refits the readout in the frequency
/// domain with `beta` and scores the transient-free fit on the training window.
std::vector<SensitivityRow> sensitivity_study(const ModalReservoir& optimum,
                                              const MultiSineSignal& u_signal,
                                              const MultiSineSignal& y_signal,
                                              const std::vector<double>& epsilons, int trials,
                                              std::uint64_t seed, double beta,
                                              const SeriesWindow& window = {},
                                              double margin = 1e-6);

/// Train NRMSE of the frequency-domain readout of `modal` on the training window.
double frequency_readout_nrmse(const ModalReservoir& modal, const MultiSineSignal& u_signal,
                               const MultiSineSignal& y_signal, double beta,
                               const SeriesWindow& window = {});

struct BetaCell {
  double beta1 = 0.0;
  double beta2 = 0.0;
  double mean_error = 0.0;
  std::vector<double> errors;  // lowest weighted error per trial
};

/// Full factorial grid of optimize() runs. Trial t draws its modal mask and
/// optimizer seed from (seed, t) and reuses them in every cell.
std::vector<BetaCell> beta_weight_study(const std::vector<double>& beta1_values,
                                        const std::vector<double>& beta2_values,
                                        const MultiSineSignal& u_signal,
                                        const MultiSineSignal& y_signal, int n, int trials,
                                        std::uint64_t seed, const OptimizerConfig& base = {});

/// Modal mask of the random ER topology used for trial seeds.
Eigen::VectorXd random_mask(Eigen::Index n, std::uint64_t seed, const PipelineConfig& config = {});

}  // namespace lrc
