#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lrc/benchmarks.hpp"
#include "lrc/optimizer.hpp"
#include "lrc/regression.hpp"
#include "lrc/reservoir.hpp"
#include "lrc/signals.hpp"

namespace lrc {

inline constexpr const char* kToolVersion = "0.1.0";

struct SignalsSection {
  MultiSineSignal u_signal;
  MultiSineSignal y_signal;
  // Alternative source: two "time,value" CSV files and the number of common
  // frequencies to extract from them.
  std::string u_file;
  std::string y_file;
  std::size_t n_frequencies = 0;
  SeriesWindow window{};
};

struct ReservoirSection {
  int n = 10;
  double edge_prob = 0.5;
  bool weighted = false;
  double target_max_eig = -0.1;
  std::string topology_file;  // JSON topology; replaces the random draw
  Activation activation = Activation::Identity;
  double spectral_radius = 0.9;
  double input_scale = 1.0;
  double readout_beta = 1e-8;
};

struct BenchmarkSection {
  ScenarioSpec scenario{};
  std::vector<double> epsilons{0.0, 0.001, 0.01, 0.1, 1.0, 5.0};
  int sensitivity_trials = 20;
  std::vector<double> beta1_values{1e-2, 1e-4, 1e-7};
  std::vector<double> beta2_values{0.0, 1e-3, 1e-1};
  int beta_trials = 5;
  int theorem_instances = 20;
  int theorem_n_min = 2;
  int theorem_n_max = 20;
  int theorem_k_max = 5;
  double theorem2_beta = 1e-8;
  bool corrupt_basis = false;  // negative control for theorem-check
};

struct RunConfig {
  SignalsSection signals;
  ReservoirSection reservoir;
  OptimizerConfig optimizer;  // optimizer.seed is the master seed
  BenchmarkSection benchmark;
  std::string canonical;      // normalized key=value listing of the effective config

  std::uint64_t master_seed() const { return optimizer.seed; }
  /// FNV-1a of `canonical`, 16 hex digits.
  std::string hash() const;
  PipelineConfig pipeline() const;
};

/// Parses INI text with sections [signals], [reservoir], [optimizer] and
/// [benchmark]. Overrides are "section.key=value" strings applied on top of
/// the file. Unknown keys and malformed values raise ConfigError.
RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {});
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// The three-tone task used as the default signal pair.
MultiSineSignal default_input_signal();
MultiSineSignal default_output_signal();

}  // namespace lrc
