#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <numeric>
#include <sstream>

#include "lrc/benchmarks.hpp"
#include "lrc/error.hpp"
#include "lrc/seeding.hpp"
#include "support.hpp"

using namespace lrc;
using Eigen::VectorXd;

namespace {

ScenarioSpec tiny_spec() {
  ScenarioSpec spec;
  spec.mode = SweepMode::FixFreqsVaryNodes;
  spec.fixed_value = 2;
  spec.sweep_values = {3, 5};
  spec.trials = 3;
  spec.seed = 11;
  spec.pipeline.window = {600, 0.01, 200};
  spec.pipeline.optimizer.restarts = 3;
  return spec;
}

std::string csv_of(const BenchmarkReport& r) {
  std::ostringstream out;
  write_report_csv(out, r);
  return out.str();
}

}  // namespace

TEST_SUITE("benchmarks") {

TEST_CASE("summary statistics") {
  CHECK(pairwise_mean({1.0, 2.0, 3.0, 4.0}) == doctest::Approx(2.5));
  CHECK(sample_std({2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0}) ==
        doctest::Approx(std::sqrt(32.0 / 7.0)));
  CHECK(sample_std({3.0}) == 0.0);
  CHECK(sample_std({}) == 0.0);
  // many small terms: pairwise summation stays close to the exact mean
  std::vector<double> v(1 << 20, 0.1);
  CHECK(std::abs(pairwise_mean(v) - 0.1) < 1e-15);
}

TEST_CASE("method and mode names round trip") {
  for (Method m : kAllMethods) CHECK(parse_method(to_string(m)) == m);
  CHECK(to_string(Method::NlrcTanh) == "nlrc_tanh");
  CHECK_THROWS_AS(parse_method("esn"), Error);
  CHECK(parse_sweep_mode("fix_nodes_vary_freqs") == SweepMode::FixNodesVaryFreqs);
  CHECK(parse_sweep_mode("fix_freqs_vary_nodes") == SweepMode::FixFreqsVaryNodes);
}

TEST_CASE("generated tasks respect the generator settings") {
  SignalGenConfig gen;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto [u, y] = generate_task(5, seed, gen);
    REQUIRE(u.size() == 5);
    for (std::size_t k = 0; k < 5; ++k) {
      const auto& uc = u.components()[k];
      const auto& yc = y.components()[k];
      CHECK(uc.omega == yc.omega);
      CHECK(uc.omega >= gen.omega_low - 1e-12);
      CHECK(uc.omega <= gen.omega_high + 1e-12);
      CHECK(uc.phase == 0.0);
      CHECK(yc.phase > -kPi);
      CHECK(yc.phase <= kPi);
      CHECK(uc.amplitude >= gen.amp_low);
      CHECK(uc.amplitude <= gen.amp_high);
      if (k > 0) CHECK(uc.omega - u.components()[k - 1].omega >= gen.min_separation - 1e-12);
    }
  }
  const auto a = generate_task(3, 4);
  const auto b = generate_task(3, 4);
  CHECK(a.second.components()[1].phase == b.second.components()[1].phase);
}

TEST_CASE("every method runs and scores") {
  PipelineConfig cfg;
  cfg.window = {600, 0.01, 200};
  cfg.optimizer.restarts = 2;
  for (Method m : kAllMethods) {
    const auto r = run_method(m, 4, testing::three_tone_input(), testing::three_tone_output(), 3, cfg);
    CHECK(std::isfinite(r.nrmse_train));
    CHECK(std::isfinite(r.nrmse_test));
    CHECK(r.nrmse_train >= 0.0);
  }
}

TEST_CASE("sweep layout, statistics and determinism") {
  const auto spec = tiny_spec();
  const auto report = run_sweep(spec);
  CHECK(report.sweep_var == "n_nodes");
  REQUIRE(report.cells.size() == spec.sweep_values.size() * spec.methods.size());
  CHECK_FALSE(report.has_failures());
  for (const auto& cell : report.cells) {
    REQUIRE(cell.trials.size() == 3);
    std::vector<double> test;
    for (const auto& t : cell.trials) test.push_back(t.nrmse_test);
    CHECK(cell.mean_test == doctest::Approx(std::accumulate(test.begin(), test.end(), 0.0) / 3));
    CHECK(cell.std_test == doctest::Approx(sample_std(test)));
  }
  CHECK(csv_of(run_sweep(spec)) == csv_of(report));

  auto threaded = spec;
  threaded.jobs = 4;
  CHECK(csv_of(run_sweep(threaded)) == csv_of(report));
}

TEST_CASE("methods share tasks within a trial") {
  // with a single method the report for that method is unchanged
  auto spec = tiny_spec();
  const auto all = run_sweep(spec);
  spec.methods = {Method::RandomLrc};
  const auto one = run_sweep(spec);
  for (int v : spec.sweep_values) {
    for (int t = 0; t < spec.trials; ++t) {
      CHECK(one.cell(Method::RandomLrc, v).trials[t].nrmse_test ==
            all.cell(Method::RandomLrc, v).trials[t].nrmse_test);
    }
  }
}

TEST_CASE("single trial has zero spread") {
  auto spec = tiny_spec();
  spec.trials = 1;
  spec.sweep_values = {3};
  spec.methods = {Method::OptimizedLrc};
  const auto report = run_sweep(spec);
  CHECK(report.cells.at(0).std_test == 0.0);
  CHECK(report.cells.at(0).std_train == 0.0);
}

TEST_CASE("invalid scenarios") {
  auto spec = tiny_spec();
  spec.sweep_values.clear();
  CHECK_THROWS_AS(spec.validate(), Error);
  spec = tiny_spec();
  spec.trials = 0;
  CHECK_THROWS_AS(spec.validate(), Error);
  spec = tiny_spec();
  spec.methods.clear();
  CHECK_THROWS_AS(spec.validate(), Error);
}

TEST_CASE("report formats") {
  auto spec = tiny_spec();
  spec.sweep_values = {3};
  spec.trials = 2;
  spec.methods = {Method::OptimizedLrc, Method::NlrcRelu};
  const auto report = run_sweep(spec);
  std::istringstream csv(csv_of(report));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "method,sweep_var,sweep_value,trial,nrmse_train,nrmse_test");
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 4);

  const auto summary = nlohmann::json::parse(report_summary_json(report));
  CHECK(summary.at("sweep_var") == "n_nodes");
  CHECK(summary.at("cells").size() == 2);

  std::ostringstream jsonl;
  write_trials_jsonl(jsonl, report);
  std::istringstream lines(jsonl.str());
  int count = 0;
  while (std::getline(lines, line)) {
    CHECK(nlohmann::json::accept(line));
    ++count;
  }
  CHECK(count == 4);
}

TEST_CASE("sensitivity at zero perturbation reproduces the optimum") {
  const ModalReservoir m((VectorXd(5) << -9.0, -4.0, -2.0, -1.0, -0.3).finished(),
                         (VectorXd(5) << 1.0, 0.5, -0.8, 1.2, 0.7).finished(), 6.0);
  const SeriesWindow w{800, 0.01, 200};
  const auto u = testing::three_tone_input();
  const auto y = testing::three_tone_output();
  const auto rows = sensitivity_study(m, u, y, {0.0, 0.5}, 4, 1, 1e-7, w);
  REQUIRE(rows.size() == 2);
  const double base = frequency_readout_nrmse(m, u, y, 1e-7, w);
  for (double v : rows[0].nrmse) CHECK(v == base);
  CHECK(rows[0].std_nrmse == 0.0);
  CHECK(rows[1].nrmse.size() == 4);
  CHECK(sensitivity_study(m, u, y, {0.5}, 4, 1, 1e-7, w)[0].nrmse == rows[1].nrmse);
}

TEST_CASE("beta study cells equal direct optimizer runs") {
  const auto u = testing::three_tone_input();
  const auto y = testing::three_tone_output();
  OptimizerConfig base;
  base.restarts = 2;
  const auto cells = beta_weight_study({1e-4}, {0.0, 1e-1}, u, y, 4, 2, 8, base);
  REQUIRE(cells.size() == 2);
  for (const auto& cell : cells) {
    REQUIRE(cell.errors.size() == 2);
    for (int t = 0; t < 2; ++t) {
      OptimizerConfig cfg = base;
      cfg.n_modes = 4;
      cfg.beta1 = cell.beta1;
      cfg.beta2 = cell.beta2;
      cfg.seed = derive_seed(8, "benchmarks.beta_study.optimizer", static_cast<std::uint64_t>(t));
      const VectorXd mask = random_mask(4, derive_seed(8, "benchmarks.beta_study.mask",
                                                       static_cast<std::uint64_t>(t)));
      CHECK(cell.errors[t] == optimize(cfg, u, y, mask).lowest_error);
    }
    CHECK(cell.mean_error == doctest::Approx((cell.errors[0] + cell.errors[1]) / 2));
  }
}

}  // TEST_SUITE
