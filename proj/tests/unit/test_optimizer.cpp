#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <random>

#include "lrc/error.hpp"
#include "lrc/optimizer.hpp"
#include "support.hpp"

using namespace lrc;
using Eigen::VectorXd;

namespace {

CostContext three_tone_context(Eigen::Index n, double beta1 = 1e-7, double beta2 = 1e-1) {
  return CostContext(testing::three_tone_input(), testing::three_tone_output(), 6.0,
                     VectorXd::Ones(n), beta1, beta2);
}

OptimizerConfig small_config(int n, int restarts, std::uint64_t seed) {
  OptimizerConfig cfg;
  cfg.n_modes = n;
  cfg.restarts = restarts;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_SUITE("optimizer") {

TEST_CASE("harmonic spread examples") {
  // two eigenvalues one apart: 2 / (1 + 1)
  CHECK(harmonic_spread((VectorXd(2) << -1.0, 0.0).finished()) == doctest::Approx(1.0));
  // gaps 1, 2, 1 over six ordered pairs: 3 / (2 (1 + 0.5 + 1))
  CHECK(harmonic_spread((VectorXd(3) << -2.0, -1.0, 0.0).finished()) == doctest::Approx(0.6));
  // coincident eigenvalues hit the 1e-12 floor
  CHECK(harmonic_spread(VectorXd::Constant(2, -1.0)) == doctest::Approx(1e-12));
}

TEST_CASE("inverse spread gradient matches finite differences") {
  const VectorXd l = (VectorXd(4) << -5.0, -2.2, -1.0, -0.1).finished();
  const VectorXd g = inverse_spread_gradient(l);
  for (Eigen::Index i = 0; i < 4; ++i) {
    VectorXd lp = l, lm = l;
    lp(i) += 1e-6;
    lm(i) -= 1e-6;
    const double fd = (1.0 / harmonic_spread(lp) - 1.0 / harmonic_spread(lm)) / 2e-6;
    CHECK(std::abs(g(i) - fd) < 1e-6 * (1 + std::abs(fd)));
  }
}

TEST_CASE("cost examples") {
  const auto ctx = three_tone_context(2, 0.0, 0.1);
  const VectorXd l = (VectorXd(2) << -1.0, 0.0).finished();
  // kappa = 0 leaves every target coefficient as error: sum_k W_k b_k^2
  const auto parts = cost(l, VectorXd::Zero(2), ctx);
  const auto& y = ctx.y_signal.components();
  double expect = 0;
  for (const auto& c : y) expect += c.amplitude * c.amplitude / c.omega;
  CHECK(parts.weighted_error_sq == doctest::Approx(expect));
  CHECK(parts.kappa_penalty == 0.0);
  CHECK(parts.spread_penalty == doctest::Approx(0.1));
  CHECK(parts.total == doctest::Approx(expect + 0.1));

  const auto three = cost((VectorXd(3) << -2.0, -1.0, 0.0).finished(), VectorXd::Zero(3),
                          three_tone_context(3, 0.0, 0.1));
  CHECK(three.spread_penalty == doctest::Approx(0.16667).epsilon(1e-4));

  const auto pen = cost(l, VectorXd::Ones(2), three_tone_context(2, 0.5, 0.0));
  CHECK(pen.kappa_penalty == doctest::Approx(1.0));

  try {
    cost((VectorXd(2) << -1.0, 0.5).finished(), VectorXd::Zero(2), ctx);
    FAIL("expected InfeasibleLambdas");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InfeasibleLambdas);
  }
}

TEST_CASE("feasibility") {
  CHECK(feasible((VectorXd(2) << -1.0, 0.0).finished(), 6.0, 5.0));
  CHECK_FALSE(feasible((VectorXd(2) << -1.0, 0.1).finished(), 6.0, 5.0));
  // 6 (l - 1) + 7 <= 0 needs l <= -1/6
  CHECK_FALSE(feasible(VectorXd::Constant(1, 0.0), 6.0, 7.0));
  CHECK(feasible(VectorXd::Constant(1, -0.2), 6.0, 7.0));
  CHECK(lambda_upper_bound(6.0, 5.0, 1e-6) == 0.0);
  CHECK(lambda_upper_bound(6.0, 7.0, 0.0) == doctest::Approx(-1.0 / 6.0));
}

TEST_CASE("reduced cost kappa is the weighted ridge minimizer") {
  const auto ctx = three_tone_context(4, 1e-4, 0.1);
  const VectorXd l = (VectorXd(4) << -8.0, -3.0, -1.0, -0.2).finished();
  const auto rc = reduced_cost(l, ctx);
  const auto base = cost(l, rc.kappa, ctx);
  CHECK(base.total == doctest::Approx(rc.parts.total).epsilon(1e-12));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd(0.0, 1e-3);
  for (int trial = 0; trial < 20; ++trial) {
    VectorXd k = rc.kappa;
    for (auto& v : k) v += nd(rng);
    CHECK(cost(l, k, ctx).total >= base.total - 1e-14);
  }
}

TEST_CASE("reduced cost gradient matches central differences") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> init(-15.0, -0.5);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index n = 3 + trial % 5;
    VectorXd l(n);
    for (auto& v : l) v = init(rng);
    VectorXd c(n);
    for (auto& v : c) v = init(rng) / -5.0;
    const CostContext ctx(testing::three_tone_input(), testing::three_tone_output(), 6.0, c, 1e-4,
                          1e-1);
    const auto rc = reduced_cost(l, ctx);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double h = 1e-6 * std::max(1.0, std::abs(l(i)));
      VectorXd lp = l, lm = l;
      lp(i) += h;
      lm(i) -= h;
      const double fd =
          (reduced_cost(lp, ctx, false).parts.total - reduced_cost(lm, ctx, false).parts.total) /
          (2 * h);
      CHECK(std::abs(rc.gradient(i) - fd) <= 1e-4 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("single mode reaches a reachable target") {
  // y is what a mode at lambda = -2 with kappa = 1.5 produces from u
  const double gamma = 6.0, w = 1.0, lam = -2.0;
  const double rate = gamma * (1 - lam);
  const double mag = gamma / std::hypot(w, rate);
  const double lag = std::atan(w / rate);
  const MultiSineSignal u({{w, 1.0, 0.0}});
  const MultiSineSignal y({{w, 1.5 * mag, -lag}});
  OptimizerConfig cfg = small_config(1, 5, 2);
  cfg.beta1 = 0.0;
  cfg.beta2 = 0.0;
  const auto r = optimize(cfg, u, y, VectorXd::Ones(1));
  CHECK(r.lowest_error < 1e-6);
  CHECK(r.lambdas(0) == doctest::Approx(lam).epsilon(1e-4));
  CHECK(r.kappa(0) == doctest::Approx(1.5).epsilon(1e-4));
}

TEST_CASE("optimize is deterministic and keeps the best restart") {
  const auto cfg = small_config(6, 8, 42);
  const auto u = testing::three_tone_input();
  const auto y = testing::three_tone_output();
  const VectorXd c = VectorXd::LinSpaced(6, 0.5, 1.5);
  const auto a = optimize(cfg, u, y, c);
  const auto b = optimize(cfg, u, y, c);
  CHECK(a.lambdas == b.lambdas);
  CHECK(a.kappa == b.kappa);
  CHECK(optimization_result_to_json(a) == optimization_result_to_json(b));

  REQUIRE(a.restart_history.size() == 8);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& rec : a.restart_history) {
    best = std::min(best, rec.final_error);
    CHECK(rec.best_error_so_far == best);
    CHECK(feasible(rec.final_lambdas, cfg.gamma, u.max_omega(), cfg.constraint_margin));
    CHECK((rec.init_lambdas.array() >= cfg.lambda_init_low).all());
    CHECK((rec.init_lambdas.array() <= cfg.lambda_init_high).all());
  }
  CHECK(a.lowest_error == best);
  CHECK(feasible(a.lambdas, cfg.gamma, u.max_omega(), cfg.constraint_margin));
  CHECK(a.m.rows() == 3);
  CHECK(a.theta.cols() == 6);
}

TEST_CASE("thread count does not change the result") {
  auto cfg = small_config(5, 6, 9);
  const VectorXd c = VectorXd::Ones(5);
  const auto one = optimize(cfg, testing::three_tone_input(), testing::three_tone_output(), c);
  cfg.jobs = 3;
  const auto many = optimize(cfg, testing::three_tone_input(), testing::three_tone_output(), c);
  CHECK(optimization_result_to_json(one) == optimization_result_to_json(many));
}

TEST_CASE("more restarts never do worse") {
  const VectorXd c = VectorXd::Ones(4);
  double last = std::numeric_limits<double>::infinity();
  for (int r : {1, 3, 9}) {
    const auto res = optimize(small_config(4, r, 5), testing::three_tone_input(),
                              testing::three_tone_output(), c);
    CHECK(res.lowest_error <= last);
    last = res.lowest_error;
  }
}

TEST_CASE("spread penalty keeps eigenvalues apart") {
  const VectorXd c = VectorXd::Ones(6);
  auto cfg = small_config(6, 6, 3);
  cfg.beta2 = 0.0;
  const auto loose = optimize(cfg, testing::three_tone_input(), testing::three_tone_output(), c);
  cfg.beta2 = 10.0;
  const auto tight = optimize(cfg, testing::three_tone_input(), testing::three_tone_output(), c);
  CHECK(harmonic_spread(tight.lambdas) >= harmonic_spread(loose.lambdas));
}

TEST_CASE("zero mask entries are reported") {
  VectorXd c = VectorXd::Ones(3);
  c(1) = 0.0;
  const auto r = optimize(small_config(3, 2, 1), testing::three_tone_input(),
                          testing::three_tone_output(), c);
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].find("ZeroMaskEntry") != std::string::npos);
}

TEST_CASE("invalid configurations") {
  auto cfg = small_config(3, 0, 1);
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = small_config(3, 2, 1);
  cfg.beta1 = -1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = small_config(3, 2, 1);
  CHECK_THROWS_AS(optimize(cfg, testing::three_tone_input(), testing::three_tone_output(),
                           VectorXd::Ones(4)),
                  Error);
}

TEST_CASE("perturb stays in range") {
  const VectorXd l = (VectorXd(4) << -6.0, -3.0, -1.0, -0.1).finished();
  CHECK(perturb(l, 0.0, 1) == l);
  for (double eps : {0.01, 1.0, 5.0}) {
    const VectorXd p = perturb(l, eps, 7);
    CHECK(((p - l).array() <= 0.0).all());
    CHECK(((p - l).array() >= -eps).all());
  }
  CHECK(perturb(l, 1.0, 7) == perturb(l, 1.0, 7));
  CHECK(perturb(l, 1.0, 7) != perturb(l, 1.0, 8));
  CHECK((perturb(l, 1.0, 3, -0.5).array() <= -0.5).all());
}

TEST_CASE("optimization json") {
  const auto r = optimize(small_config(3, 2, 1), testing::three_tone_input(),
                          testing::three_tone_output(), VectorXd::Ones(3));
  const auto doc = nlohmann::json::parse(optimization_result_to_json(r));
  for (const char* key : {"lambdas", "kappa", "m", "theta", "lowest_error", "restarts", "warnings"}) {
    CHECK(doc.contains(key));
  }
  CHECK(doc.at("lambdas").size() == 3);
  CHECK(doc.at("restarts").size() == 2);
}

}  // TEST_SUITE
