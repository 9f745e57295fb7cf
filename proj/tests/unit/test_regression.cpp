#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <random>

#include "lrc/error.hpp"
#include "lrc/regression.hpp"
#include "support.hpp"

using namespace lrc;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = nd(rng);
  return m;
}

VectorXd random_vector(Eigen::Index n, std::uint64_t seed) { return random_matrix(n, 1, seed).col(0); }

}  // namespace

TEST_SUITE("regression") {

TEST_CASE("ridge_fit small examples") {
  MatrixXd x(3, 1);
  x << 1, 1, 1;
  VectorXd y(3);
  y << 1, 2, 3;
  CHECK(ridge_fit(x, y, 0.0).kappa(0) == doctest::Approx(2.0));
  CHECK(ridge_fit(x, y, 3.0).kappa(0) == doctest::Approx(1.0));

  const MatrixXd id = MatrixXd::Identity(2, 2);
  const VectorXd k = ridge_fit(id, VectorXd::Ones(2), 1.0).kappa;
  CHECK(k(0) == doctest::Approx(0.5));
  CHECK(k(1) == doctest::Approx(0.5));
}

TEST_CASE("ridge_fit matches the normal equations") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const MatrixXd x = random_matrix(40, 6, seed);
    const VectorXd y = random_vector(40, seed + 100);
    for (double beta : {0.0, 1e-6, 0.1, 10.0}) {
      const VectorXd k = ridge_fit(x, y, beta).kappa;
      const MatrixXd g = x.transpose() * x + beta * MatrixXd::Identity(6, 6);
      const VectorXd expect = g.colPivHouseholderQr().solve(x.transpose() * y);
      CHECK((k - expect).norm() <= 1e-10 * (1 + expect.norm()));
    }
  }
}

TEST_CASE("unregularized residual is orthogonal to the design") {
  const MatrixXd x = random_matrix(50, 5, 7);
  const VectorXd y = random_vector(50, 8);
  const VectorXd k = ridge_fit(x, y, 0.0).kappa;
  CHECK((x.transpose() * (x * k - y)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("ridge norm shrinks and training error grows with beta") {
  const MatrixXd x = random_matrix(30, 8, 3);
  const VectorXd y = random_vector(30, 4);
  double last_norm = std::numeric_limits<double>::infinity();
  double last_err = 0.0;
  for (double beta : {0.0, 1e-4, 1e-2, 1.0, 100.0}) {
    const VectorXd k = ridge_fit(x, y, beta).kappa;
    const double err = time_domain_error(x, y, k);
    CHECK(k.norm() <= last_norm * (1 + 1e-12));
    CHECK(err >= last_err * (1 - 1e-12));
    last_norm = k.norm();
    last_err = err;
  }
}

TEST_CASE("singular designs") {
  MatrixXd x(4, 2);
  x << 1, 2, 2, 4, 3, 6, 4, 8;
  const VectorXd y = VectorXd::LinSpaced(4, 1.0, 4.0);
  try {
    ridge_fit(x, y, 0.0);
    FAIL("expected SingularSystem");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingularSystem);
  }
  // minimum-norm solution lies along (1, 2)
  const VectorXd k = ridge_fit(x, y, 0.0, SingularPolicy::MinimumNorm).kappa;
  CHECK(k(1) == doctest::Approx(2 * k(0)));
  CHECK((x * k - y).norm() < 1e-10);
  // any beta > 0 regularizes
  CHECK(ridge_fit(x, y, 1e-6).kappa.allFinite());
  CHECK_THROWS_AS(ridge_fit(x, y, -1.0), Error);
  CHECK_THROWS_AS(ridge_fit(x, VectorXd::Ones(3), 0.1), Error);
}

TEST_CASE("time_domain_error examples") {
  MatrixXd x = MatrixXd::Identity(4, 2);
  VectorXd y(4);
  y << 1, 1, 1, 1;
  VectorXd k(2);
  k << 1, 1;
  CHECK(time_domain_error(x, y, k) == doctest::Approx(std::sqrt(2.0 / 4.0)));
  CHECK(time_domain_error(x, x * k, k) == 0.0);
}

TEST_CASE("nrmse") {
  VectorXd y(2), f(2);
  y << 3, 4;
  f << 3, 4;
  CHECK(nrmse(f, y) == 0.0);
  f << 0, 0;
  CHECK(nrmse(f, y) == doctest::Approx(1.0));
  f << 3, 5;
  CHECK(nrmse(f, y) == doctest::Approx(0.2));
  try {
    nrmse(f, VectorXd::Zero(2));
    FAIL("expected ZeroReference");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ZeroReference);
  }
}

TEST_CASE("frequency system matches projections of steady-state modes") {
  // bin-centred tones over T steps: cos/sin projections are exact
  const std::size_t t = 2000;
  const double tau = 0.01;
  const double bin = 2 * kPi / (t * tau);
  const MultiSineSignal u({{7 * bin, 1.5, 0.0}, {23 * bin, 0.7, 0.0}, {61 * bin, 2.0, 0.0}});
  const MultiSineSignal y({{7 * bin, 1.0, 0.4}, {23 * bin, 2.0, -1.1}, {61 * bin, 0.3, 2.9}});
  const ModalReservoir m((VectorXd(4) << -6.0, -2.0, -0.5, 0.0).finished(),
                         (VectorXd(4) << 1.0, -0.7, 0.3, 2.0).finished(), 6.0);
  const auto sys = build_frequency_system(m, u, y);
  REQUIRE(sys.omega_tilde.rows() == 6);
  REQUIRE(sys.omega_tilde.cols() == 4);
  const auto q = steady_state_series(m, u, t, tau, 0.0);
  for (std::size_t k = 0; k < 3; ++k) {
    const double w = u.components()[k].omega;
    for (Eigen::Index i = 0; i < 4; ++i) {
      double pc = 0, ps = 0;
      for (Eigen::Index j = 0; j < q.rows(); ++j) {
        pc += q.states(j, i) * std::cos(w * q.time(j));
        ps += q.states(j, i) * std::sin(w * q.time(j));
      }
      pc *= 2.0 / t;
      ps *= 2.0 / t;
      // h = sum R cos(psi) - I sin(psi)
      CHECK(std::abs(sys.omega_tilde(2 * k, i) - pc) < 1e-9);
      CHECK(std::abs(sys.omega_tilde(2 * k + 1, i) + ps) < 1e-9);
    }
    const auto& yc = y.components()[k];
    CHECK(sys.b(2 * k) == doctest::Approx(yc.amplitude * std::cos(yc.phase)));
    CHECK(sys.b(2 * k + 1) == doctest::Approx(yc.amplitude * std::sin(yc.phase)));
    CHECK(sys.weights_w(k) == doctest::Approx(1.0 / w));
  }
}

TEST_CASE("frequency mismatch and zero target") {
  const ModalReservoir m(VectorXd::Constant(2, -1.0), VectorXd::Ones(2), 6.0);
  const MultiSineSignal u({{1.0, 1.0, 0.0}});
  try {
    build_frequency_system(m, u, MultiSineSignal({{2.0, 1.0, 0.0}}));
    FAIL("expected FrequencyMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FrequencyMismatch);
  }
  const auto sys = build_frequency_system(m, u, MultiSineSignal({{1.0, 0.0, 0.0}}));
  CHECK(sys.b.norm() == 0.0);
  CHECK(frequency_fit(sys, 1e-3).kappa.norm() == 0.0);
}

TEST_CASE("2K distinct modes interpolate the target exactly") {
  const auto u = testing::three_tone_input();
  const auto y = testing::three_tone_output();
  const ModalReservoir m(VectorXd::LinSpaced(6, -12.0, -0.5), VectorXd::Ones(6), 6.0);
  const auto sys = build_frequency_system(m, u, y);
  const VectorXd k = frequency_fit(sys, 0.0, SingularPolicy::MinimumNorm).kappa;
  CHECK(frequency_residual(sys, k).norm() < 1e-6 * sys.b.norm());
}

TEST_CASE("weighted fit equals a fit on scaled rows") {
  const auto u = testing::three_tone_input();
  const auto y = testing::three_tone_output();
  const ModalReservoir m(VectorXd::LinSpaced(4, -10.0, -1.0), VectorXd::Ones(4), 6.0);
  auto sys = build_frequency_system(m, u, y);
  const VectorXd weighted = weighted_frequency_fit(sys, 1e-4).kappa;
  MatrixXd xs = sys.omega_tilde;
  VectorXd bs = sys.b;
  for (Eigen::Index k = 0; k < 3; ++k) {
    const double s = std::sqrt(sys.weights_w(k));
    xs.row(2 * k) *= s;
    xs.row(2 * k + 1) *= s;
    bs.segment(2 * k, 2) *= s;
  }
  CHECK((weighted - ridge_fit(xs, bs, 1e-4).kappa).norm() < 1e-10 * weighted.norm());
}

TEST_CASE("coupled and decoupled readouts coincide") {
  const SeriesWindow window{1500, 0.01, 300};
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto t = generate_random_topology(12, 0.5, seed % 2 == 0, -0.1, seed);
    const auto r = verify_theorem1(t, testing::three_tone_input(), testing::three_tone_output(),
                                   window, 0.0);
    CHECK(std::abs(r.eps_coupled - r.eps_decoupled) < 1e-8);
    CHECK(r.fit_deviation < 1e-6);
  }
}

TEST_CASE("readout weights transform with the eigenbasis when the design is well posed") {
  // N + 1 <= 2K + 1 columns: the design has full, moderate rank
  const SeriesWindow window{1500, 0.01, 300};
  for (std::uint64_t seed : {4u, 5u, 6u}) {
    const auto t = generate_random_topology(3, 0.5, true, -0.1, seed);
    const auto r = verify_theorem1(t, testing::three_tone_input(), testing::three_tone_output(),
                                   window, 0.0);
    CHECK(r.kappa_transform_residual < 1e-6);
    CHECK(std::abs(r.bias_coupled - r.bias_decoupled) < 1e-8);
  }
}

TEST_CASE("single node coupled equals decoupled") {
  const ReservoirTopology t(MatrixXd::Constant(1, 1, -0.4), VectorXd::Constant(1, 1.5), 6.0);
  const auto r = verify_theorem1(t, testing::three_tone_input(), testing::three_tone_output(),
                                 {800, 0.01, 200}, 1e-6);
  CHECK(std::abs(r.eps_coupled - r.eps_decoupled) < 1e-10);
}

TEST_CASE("a wrong basis breaks the equivalence") {
  const auto t = generate_random_topology(6, 0.5, true, -0.1, 5);
  const Decomposition d = decouple(t);
  MatrixXd v = d.v + 0.1 * random_matrix(6, 6, 9);
  const auto r = verify_theorem1(t, testing::three_tone_input(), testing::three_tone_output(),
                                 {1500, 0.01, 300}, 0.0, v);
  CHECK(std::abs(r.eps_coupled - r.eps_decoupled) > 1e-6);
}

TEST_CASE("time and frequency readouts agree on bin-centred tones") {
  const SeriesWindow window{3000, 0.01, 500};
  const double bin = 2 * kPi / (window.steps * window.tau);
  const MultiSineSignal u({{5 * bin, 1.0, 0.0}, {14 * bin, 2.0, 0.5}});
  const MultiSineSignal y({{5 * bin, 0.8, -0.6}, {14 * bin, 1.2, 1.9}});
  const ModalReservoir m((VectorXd(5) << -9.0, -4.0, -2.5, -1.0, -0.3).finished(),
                         (VectorXd(5) << 1.0, 0.6, -1.4, 0.9, 0.4).finished(), 6.0);
  const auto r = verify_theorem2(m, u, y, window, 1e-8);
  CHECK(r.fit_deviation < 1e-2);
  CHECK(std::abs(r.nrmse_time - r.nrmse_frequency) < 1e-2);
}

TEST_CASE("fit report json") {
  FitReport report;
  report.beta = 1e-8;
  report.nrmse_train = 0.1;
  report.nrmse_test = 0.2;
  report.kappa = VectorXd::Ones(3);
  const auto doc = nlohmann::json::parse(fit_report_to_json(report));
  CHECK(doc.at("beta").get<double>() == 1e-8);
  CHECK(doc.at("nrmse_train").get<double>() == 0.1);
  CHECK(doc.at("nrmse_test").get<double>() == 0.2);
  CHECK(doc.at("kappa").size() == 3);
  CHECK(doc.at("domain").get<std::string>() == "time");
}

}  // TEST_SUITE
