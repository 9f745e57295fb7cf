#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>
#include <sstream>

#include "lrc/error.hpp"
#include "lrc/reservoir.hpp"
#include "support.hpp"

using namespace lrc;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_SUITE("reservoir") {

TEST_CASE("topology checks stability and symmetrizes") {
  MatrixXd a(2, 2);
  a << 0.0, 0.4, 0.2, 0.0;
  const ReservoirTopology t(a, VectorXd::Ones(2), 6.0);
  CHECK(t.adjacency()(0, 1) == doctest::Approx(0.3));
  CHECK(t.adjacency()(1, 0) == doctest::Approx(0.3));
  CHECK_THROWS_AS(ReservoirTopology(MatrixXd::Identity(2, 2), VectorXd::Ones(2), 6.0), Error);
  CHECK_THROWS_AS(ReservoirTopology(MatrixXd::Zero(2, 2), VectorXd::Ones(3), 6.0), Error);
  CHECK_THROWS_AS(ReservoirTopology(MatrixXd::Zero(2, 2), VectorXd::Ones(2), 0.0), Error);
}

TEST_CASE("random topologies are shifted to the requested max eigenvalue") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (bool weighted : {false, true}) {
      const auto t = generate_random_topology(12, 0.5, weighted, -0.1, seed);
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(t.adjacency());
      CHECK(es.eigenvalues().maxCoeff() == doctest::Approx(-0.1).epsilon(1e-10));
      CHECK((t.adjacency() - t.adjacency().transpose()).norm() == 0.0);
    }
  }
  const auto a = generate_random_topology(8, 0.5, false, -0.1, 3);
  const auto b = generate_random_topology(8, 0.5, false, -0.1, 3);
  CHECK(a.adjacency() == b.adjacency());
  CHECK(a.input_mask() == b.input_mask());
}

TEST_CASE("decouple gives an orthogonal eigenbasis") {
  const auto t = generate_random_topology(15, 0.5, true, -0.1, 9);
  const Decomposition d = decouple(t);
  const MatrixXd& v = d.v;
  CHECK((v.transpose() * v - MatrixXd::Identity(15, 15)).cwiseAbs().maxCoeff() < 1e-12);
  const MatrixXd rebuilt = v * d.modal.lambdas.asDiagonal() * v.transpose();
  CHECK((rebuilt - t.adjacency()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((d.modal.c - v.transpose() * t.input_mask()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("recouple realizes the requested spectrum") {
  const ModalReservoir m(VectorXd::LinSpaced(5, -4.0, -0.5), VectorXd::LinSpaced(5, 0.5, 2.5), 6.0);
  const auto t = recouple(m, 17);
  const Decomposition d = decouple(t);
  CHECK((d.modal.lambdas - m.lambdas).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((d.modal.c.cwiseAbs() - m.c).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("transfer response matches the complex transfer function") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> g(0.5, 10.0), lam(-20.0, 0.0), cc(-2.0, 2.0), w(0.1, 5.0);
  for (int i = 0; i < 200; ++i) {
    const double gamma = g(rng), l = lam(rng), c = cc(rng), omega = w(rng);
    const ModalReservoir m(VectorXd::Constant(1, l), VectorXd::Constant(1, c), gamma);
    const auto r = transfer_response(m, {omega});
    const std::complex<double> tf =
        gamma * c / std::complex<double>(gamma * (1.0 - l), omega);
    CHECK(std::abs(r.magnitude(0, 0) - std::abs(tf)) <= 1e-12 * std::abs(tf));
    // The response lags by phase: angle(T) = -phase (mod 2 pi).
    CHECK(std::abs(std::remainder(std::arg(tf) + r.phase(0, 0), 2 * kPi)) < 1e-12);
  }
}

TEST_CASE("modes are low-pass") {
  const ModalReservoir m(VectorXd::LinSpaced(6, -10.0, 0.0), VectorXd::Ones(6), 6.0);
  const auto r = transfer_response(m, {0.5, 1.0, 2.0, 4.0, 8.0});
  for (Eigen::Index i = 0; i < 6; ++i) {
    for (Eigen::Index k = 1; k < 5; ++k) CHECK(r.magnitude(k, i) < r.magnitude(k - 1, i));
  }
}

TEST_CASE("single mode simulation matches the closed-form solution") {
  const double gamma = 6.0, lam = -1.5, c = 0.8, omega = 2.0, a = 1.3, q0 = 0.4;
  const ModalReservoir m(VectorXd::Constant(1, lam), VectorXd::Constant(1, c), gamma);
  const MultiSineSignal u({{omega, a, 0.0}});
  const auto states = simulate(m, u, 1000, 0.01, 0.0, VectorXd::Constant(1, q0));
  const double rate = gamma * (1.0 - lam);
  const double mag = gamma * c / std::hypot(omega, rate);
  const double lag = std::atan(omega / rate);
  for (Eigen::Index k = 0; k < states.rows(); ++k) {
    const double t = states.time(k);
    const double exact = a * mag * std::cos(omega * t - lag) +
                         (q0 - a * mag * std::cos(-lag)) * std::exp(-rate * t);
    CHECK(std::abs(states.states(k, 0) - exact) < 1e-6);
  }
}

TEST_CASE("coupled and modal trajectories agree after the basis change") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 19);
    const auto t = generate_random_topology(n, 0.5, trial % 2 == 1, -0.1, rng());
    const Decomposition d = decouple(t);
    const auto u = testing::three_tone_input();
    const auto r = simulate(t, u, 1500, 0.01, 0.0, VectorXd::Zero(n));
    const auto q = simulate(d.modal, u, 1500, 0.01, 0.0, VectorXd::Zero(n));
    const MatrixXd projected = r.states * d.v;  // rows are (V^T r)^T
    CHECK((projected - q.states).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("free response decays") {
  const auto t = generate_random_topology(10, 0.5, true, -0.1, 8);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  VectorXd r0(10);
  for (auto& v : r0) v = nd(rng);
  const auto states = simulate(t, SampledSeries(std::vector<double>(400, 0.0), 0.01, 0.0), r0);
  double prev = r0.norm();
  for (Eigen::Index k = 0; k < states.rows(); ++k) {
    const double now = states.states.row(k).norm();
    CHECK(now <= prev * (1 + 1e-12));
    prev = now;
  }
}

TEST_CASE("steady-state series matches late simulation") {
  const ModalReservoir m(VectorXd::LinSpaced(4, -8.0, 0.0), (VectorXd(4) << 1.0, -0.5, 2.0, -1.2).finished(), 6.0);
  const auto u = testing::three_tone_input();
  const auto sim = simulate(m, u, 1000, 0.01, 0.0, VectorXd::Zero(4));
  const auto late = sim.window(600, 400);
  const auto ss = steady_state_series(m, u, 400, 0.01, late.t_first);
  CHECK((late.states - ss.states).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("nonlinear simulation") {
  const auto t = generate_scaled_topology(10, 0.5, false, 0.9, 6.0, 3);
  SimulationOptions opts;
  opts.activation = Activation::Tanh;
  const auto u = testing::three_tone_input();
  const auto a = simulate(t, u, 500, 0.01, 0.0, VectorXd::Zero(10), opts);
  CHECK(a.states.allFinite());
  CHECK(a.states.cwiseAbs().maxCoeff() <= 1.0 + 1e-9);  // tanh-bounded drive from r0 = 0
  // halving the step changes the trajectory only slightly
  const auto fine = simulate(t, u, 1000, 0.005, 0.0, VectorXd::Zero(10), opts);
  double diff = 0.0;
  for (Eigen::Index k = 0; k < 500; ++k) {
    diff = std::max(diff, (fine.states.row(2 * k + 1) - a.states.row(k)).cwiseAbs().maxCoeff());
  }
  CHECK(diff < 1e-5);
  opts.activation = Activation::Relu;
  const auto r = simulate(t, u, 500, 0.01, 0.0, VectorXd::Zero(10), opts);
  CHECK(r.states.minCoeff() >= -1e-12);
}

TEST_CASE("runaway states raise UnstableSimulation") {
  const auto t = ReservoirTopology::unchecked(MatrixXd::Identity(2, 2) * 5.0, VectorXd::Ones(2), 6.0);
  try {
    simulate(t, testing::three_tone_input(), 5000, 0.01, 0.0, VectorXd::Ones(2));
    FAIL("expected UnstableSimulation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnstableSimulation);
  }
}

TEST_CASE("bias column and windows") {
  const auto t = generate_random_topology(3, 0.5, false, -0.1, 1);
  SimulationOptions opts;
  opts.bias_column = true;
  const auto s = simulate(t, testing::three_tone_input(), 20, 0.01, 1.0, VectorXd::Zero(3), opts);
  CHECK(s.states.cols() == 4);
  CHECK(s.node_count() == 3);
  CHECK((s.states.col(3).array() == 1.0).all());
  CHECK(s.time(0) == doctest::Approx(1.01));
  const auto w = s.window(5, 10);
  CHECK(w.rows() == 10);
  CHECK(w.t_first == doctest::Approx(1.06));
}

TEST_CASE("topology json and states csv") {
  const auto t = generate_random_topology(4, 0.5, true, -0.1, 21);
  const auto back = topology_from_json(topology_to_json(t));
  CHECK(back.adjacency() == t.adjacency());
  CHECK(back.input_mask() == t.input_mask());
  CHECK(back.gamma() == t.gamma());
  CHECK_THROWS_AS(topology_from_json("{\"n\": 2}"), Error);

  SimulationOptions opts;
  opts.bias_column = true;
  const auto s = simulate(t, testing::three_tone_input(), 3, 0.01, 0.0, VectorXd::Zero(4), opts);
  std::stringstream csv;
  write_states_csv(csv, s);
  std::string header;
  std::getline(csv, header);
  CHECK(header == "r_1,r_2,r_3,r_4,bias");
}

TEST_CASE("activation names") {
  CHECK(parse_activation("tanh") == Activation::Tanh);
  CHECK(parse_activation("relu") == Activation::Relu);
  CHECK(parse_activation("identity") == Activation::Identity);
  CHECK_THROWS_AS(parse_activation("sigmoid"), Error);
}

}  // TEST_SUITE
