#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>

#include "lrc/config.hpp"

namespace lrc {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,       // check violated, partial results under --strict, runtime error
  kExitConfig = 2,        // unreadable or invalid config, refused overwrite
  kExitNoRestarts = 3,    // AllRestartsFailed
};

struct RunOptions {
  std::string out_dir = ".";
  bool force = false;
  bool strict = false;
  int jobs = 1;
};

/// Dispatches optimize | simulate | theorem-check | sweep | sensitivity | beta-study.
/// Artifacts go to options.out_dir together with manifest.json; a one-line
/// summary goes to `out`, diagnostics to `err`.
int run_command(const std::string& command, const RunConfig& config, const RunOptions& options,
                std::ostream& out, std::ostream& err);

/// Signals from the config, extracting common tones from the series files if given.
std::pair<MultiSineSignal, MultiSineSignal> resolve_signals(const RunConfig& config);

/// Random instances used by theorem-check.
struct Theorem1Instance {
  ReservoirTopology topology;
  MultiSineSignal u_signal;
  MultiSineSignal y_signal;
};

struct Theorem2Instance {
  ModalReservoir modal;
  MultiSineSignal u_signal;
  MultiSineSignal y_signal;
};

/// ER topology (p = 0.5) with N in [n_min, n_max] and a random K-tone task, K in [1, k_max].
Theorem1Instance make_theorem1_instance(std::uint64_t seed, int n_min, int n_max, int k_max);

/// Stable modal reservoir with N in [n_min, n_max], lambda ~ U[-20, upper] and
/// K in [1, k_max] tones placed on DFT bins of the regression window.
Theorem2Instance make_theorem2_instance(std::uint64_t seed, int n_min, int n_max, int k_max,
                                        const SeriesWindow& window);

}  // namespace lrc
