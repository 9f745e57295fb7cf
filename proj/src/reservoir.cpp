#include "lrc/reservoir.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <array>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <ostream>
#include <random>

#include "lrc/error.hpp"
#include "lrc/seeding.hpp"

namespace lrc {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kBlowUp = 1e12;

double max_eigenvalue(const MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(a, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::EigenFailure, "symmetric eigen-solver did not converge");
  }
  return solver.eigenvalues().maxCoeff();
}

MatrixXd random_graph(Index n, double edge_prob, bool weighted, Rng& rng) {
  require(n >= 1, "reservoir needs at least one node");
  require(edge_prob >= 0.0 && edge_prob <= 1.0, "edge probability must lie in [0, 1]");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  MatrixXd a = MatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if (unit(rng) < edge_prob) {
        const double w = weighted ? unit(rng) : 1.0;
        a(i, j) = w;
        a(j, i) = w;
      }
    }
  }
  return a;
}

VectorXd normal_vector(Index n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  VectorXd v(n);
  for (Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

}  // namespace

ReservoirTopology::ReservoirTopology(MatrixXd adjacency, VectorXd input_mask, double gamma,
                                     NoCheck)
    : a_(std::move(adjacency)), d_(std::move(input_mask)), gamma_(gamma) {
  require(a_.rows() == a_.cols(), "adjacency must be square");
  require(a_.rows() == d_.size(), "input mask length must match adjacency");
  require(d_.size() >= 1, "reservoir needs at least one node");
  require(gamma_ > 0.0 && std::isfinite(gamma_), "gamma must be positive");
  require(a_.allFinite() && d_.allFinite(), "topology entries must be finite");
  a_ = (0.5 * (a_ + a_.transpose())).eval();
}

ReservoirTopology::ReservoirTopology(MatrixXd adjacency, VectorXd input_mask, double gamma)
    : ReservoirTopology(std::move(adjacency), std::move(input_mask), gamma, NoCheck{}) {
  require(max_eigenvalue(a_) < 1.0, "max eigenvalue of A must be < 1 (Hurwitz)");
}

ReservoirTopology ReservoirTopology::unchecked(MatrixXd adjacency, VectorXd input_mask,
                                               double gamma) {
  return ReservoirTopology(std::move(adjacency), std::move(input_mask), gamma, NoCheck{});
}

ModalReservoir::ModalReservoir(VectorXd eigenvalues, VectorXd modal_mask, double rate)
    : lambdas(std::move(eigenvalues)), c(std::move(modal_mask)), gamma(rate) {
  require(lambdas.size() == c.size(), "lambda and c lengths differ");
  require(lambdas.size() >= 1, "modal reservoir needs at least one mode");
  require(gamma > 0.0 && std::isfinite(gamma), "gamma must be positive");
  require(lambdas.allFinite() && c.allFinite(), "modal entries must be finite");
  require((lambdas.array() < 1.0).all(), "every lambda must be < 1 (stable modes)");
}

StateMatrix StateMatrix::window(Index first, Index count) const {
  require(first >= 0 && count >= 0 && first + count <= rows(), "state window out of range");
  StateMatrix out;
  out.states = states.middleRows(first, count);
  out.tau = tau;
  out.t_first = time(first);
  out.bias_column = bias_column;
  return out;
}

StateMatrix StateMatrix::with_bias() const {
  if (bias_column) return *this;
  StateMatrix out = *this;
  out.states.conservativeResize(Eigen::NoChange, states.cols() + 1);
  out.states.col(states.cols()).setOnes();
  out.bias_column = true;
  return out;
}

Activation parse_activation(const std::string& name) {
  if (name == "identity" || name == "linear") return Activation::Identity;
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::Relu;
  throw Error(ErrorCode::InvalidArgument, "unknown activation '" + name + "'");
}

std::string to_string(Activation activation) {
  switch (activation) {
    case Activation::Identity: return "identity";
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
  }
  return "identity";
}

ReservoirTopology generate_random_topology(Index n, double edge_prob, bool weighted,
                                           double target_max_eig, std::uint64_t seed,
                                           double gamma) {
  require(target_max_eig < 1.0, "target max eigenvalue must be < 1");
  Rng rng = make_rng(seed);
  MatrixXd a = random_graph(n, edge_prob, weighted, rng);
  VectorXd d = normal_vector(n, rng);
  a.diagonal().array() += target_max_eig - max_eigenvalue(a);
  return ReservoirTopology(std::move(a), std::move(d), gamma);
}

ReservoirTopology generate_scaled_topology(Index n, double edge_prob, bool weighted,
                                           double spectral_radius, double gamma,
                                           std::uint64_t seed) {
  Rng rng = make_rng(seed);
  MatrixXd a = random_graph(n, edge_prob, weighted, rng);
  VectorXd d = normal_vector(n, rng);
  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(a, Eigen::EigenvaluesOnly);
  const double radius = solver.eigenvalues().cwiseAbs().maxCoeff();
  if (radius > 0.0) a *= spectral_radius / radius;
  return ReservoirTopology::unchecked(std::move(a), std::move(d), gamma);
}

Decomposition decouple(const ReservoirTopology& topology) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(topology.adjacency());
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::EigenFailure, "symmetric eigen-solver did not converge");
  }
  MatrixXd v = solver.eigenvectors();
  // Fix each eigenvector's sign so its largest-magnitude entry is positive.
  for (Index j = 0; j < v.cols(); ++j) {
    Index idx = 0;
    v.col(j).cwiseAbs().maxCoeff(&idx);
    if (v(idx, j) < 0.0) v.col(j) *= -1.0;
  }
  VectorXd c = v.transpose() * topology.input_mask();
  return {ModalReservoir(solver.eigenvalues(), std::move(c), topology.gamma()), std::move(v)};
}

ReservoirTopology recouple(const ModalReservoir& modal, std::uint64_t seed) {
  const Index n = modal.size();
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd z(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) z(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<MatrixXd> qr(z);
  MatrixXd q = qr.householderQ() * MatrixXd::Identity(n, n);
  const MatrixXd& r = qr.matrixQR();
  for (Index j = 0; j < n; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  MatrixXd a = q * modal.lambdas.asDiagonal() * q.transpose();
  VectorXd d = q * modal.c;
  return ReservoirTopology(std::move(a), std::move(d), modal.gamma);
}

// ---------------------------------------------------------------------------
// Simulation

namespace {

/// Local cubic input model. For step n the cubic passes through four
/// consecutive samples (centred on [t_n, t_n+1] when possible) and is written
/// in x = (t - t_n) / tau as sum_m coef[m] x^m.
class InputInterpolant {
 public:
  explicit InputInterpolant(const std::vector<double>& samples)
      : u_(samples), degree_(std::min<std::size_t>(3, samples.size() - 1)) {
    // Offset o = n - first stencil node, in {0, 1, 2, 3}; nodes sit at x = j - o.
    for (int o = 0; o < 4; ++o) {
      Eigen::Matrix4d vander = Eigen::Matrix4d::Identity();
      const int nodes = static_cast<int>(degree_) + 1;
      Eigen::MatrixXd v(nodes, nodes);
      for (int j = 0; j < nodes; ++j) {
        const double x = -o + j;
        double p = 1.0;
        for (int m = 0; m < nodes; ++m) {
          v(j, m) = p;
          p *= x;
        }
      }
      vander.topLeftCorner(nodes, nodes) = v.inverse();
      inverse_[static_cast<std::size_t>(o)] = vander;
    }
  }

  /// Monomial coefficients (degree <= 3, padded with zeros) for step n.
  Eigen::Vector4d coefficients(std::size_t n) const {
    const std::size_t nodes = degree_ + 1;
    const std::ptrdiff_t last_start = static_cast<std::ptrdiff_t>(u_.size() - nodes);
    std::ptrdiff_t start = static_cast<std::ptrdiff_t>(n) - 1;
    start = std::clamp<std::ptrdiff_t>(start, 0, last_start);
    const auto offset = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(n) - start);
    Eigen::Vector4d vals = Eigen::Vector4d::Zero();
    for (std::size_t j = 0; j < nodes; ++j) vals(static_cast<Index>(j)) = u_[static_cast<std::size_t>(start) + j];
    return inverse_[offset] * vals;
  }

  static double eval(const Eigen::Vector4d& coef, double x) {
    return coef(0) + x * (coef(1) + x * (coef(2) + x * coef(3)));
  }

 private:
  const std::vector<double>& u_;
  std::size_t degree_;
  std::array<Eigen::Matrix4d, 4> inverse_;
};

struct LinearDynamics {
  MatrixXd z;  // gamma (A - I)
  VectorXd b;  // gamma d
  MatrixXd weights;  // A (for the nonlinear right-hand side)
  VectorXd mask;
  double gamma;
};

LinearDynamics dynamics_of(const ReservoirSystem& system) {
  return std::visit(
      [](const auto& s) -> LinearDynamics {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ReservoirTopology>) {
          const Index n = s.size();
          return {s.gamma() * (s.adjacency() - MatrixXd::Identity(n, n)),
                  s.gamma() * s.input_mask(), s.adjacency(), s.input_mask(), s.gamma()};
        } else {
          MatrixXd w = s.lambdas.asDiagonal();
          MatrixXd z = s.gamma * (s.lambdas.array() - 1.0).matrix().asDiagonal();
          return {z, s.gamma * s.c, w, s.c, s.gamma};
        }
      },
      system);
}

void check_finite_bounded(const VectorXd& r, std::size_t step) {
  if (!r.allFinite() || r.cwiseAbs().maxCoeff() > kBlowUp) {
    throw Error(ErrorCode::UnstableSimulation,
                "state magnitude exceeded 1e12 at step " + std::to_string(step));
  }
}

StateMatrix integrate(const ReservoirSystem& system, const std::vector<double>& samples,
                      std::size_t steps, double tau, double t0, const VectorXd& r0,
                      const SimulationOptions& options) {
  const LinearDynamics dyn = dynamics_of(system);
  const Index n = dyn.b.size();
  require(r0.size() == n, "initial state length must equal node count");
  require(tau > 0.0, "time step must be positive");
  require(steps >= 1, "need at least one step");

  InputInterpolant input(samples);
  StateMatrix out;
  out.tau = tau;
  out.t_first = t0 + tau;
  out.bias_column = options.bias_column;
  out.states.resize(static_cast<Index>(steps), n + (options.bias_column ? 1 : 0));
  if (options.bias_column) out.states.col(n).setOnes();

  VectorXd r = r0;
  if (options.activation == Activation::Identity) {
    // exp of [[Z, b, 0..],[0, shift]] * tau: top-left is exp(Z tau); column j
    // of the top-right block is int_0^tau exp(Z (tau - s)) b s^j / j! ds.
    MatrixXd aug = MatrixXd::Zero(n + 4, n + 4);
    aug.topLeftCorner(n, n) = dyn.z;
    aug.block(0, n, n, 1) = dyn.b;
    for (Index j = 0; j < 3; ++j) aug(n + j, n + j + 1) = 1.0;
    const MatrixXd e = (aug * tau).exp();
    const MatrixXd phi = e.topLeftCorner(n, n);
    MatrixXd g = e.block(0, n, n, 4);
    // Rescale so that g.col(m) integrates against (s / tau)^m.
    double fact = 1.0;
    for (Index m = 0; m < 4; ++m) {
      if (m > 0) fact *= static_cast<double>(m);
      g.col(m) *= fact / std::pow(tau, static_cast<double>(m));
    }
    for (std::size_t k = 0; k < steps; ++k) {
      r = phi * r + g * input.coefficients(k);
      check_finite_bounded(r, k);
      out.states.row(static_cast<Index>(k)).head(n) = r.transpose();
    }
    return out;
  }

  const double gamma = dyn.gamma;
  const auto f = [&](const VectorXd& x) -> VectorXd {
    if (options.activation == Activation::Tanh) return x.array().tanh().matrix();
    return x.cwiseMax(0.0);
  };
  const auto rhs = [&](const VectorXd& state, double u) -> VectorXd {
    return gamma * (f(dyn.weights * state + dyn.mask * u) - state);
  };
  for (std::size_t k = 0; k < steps; ++k) {
    const Eigen::Vector4d coef = input.coefficients(k);
    const double u0 = InputInterpolant::eval(coef, 0.0);
    const double uh = InputInterpolant::eval(coef, 0.5);
    const double u1 = InputInterpolant::eval(coef, 1.0);
    const VectorXd k1 = rhs(r, u0);
    const VectorXd k2 = rhs(r + 0.5 * tau * k1, uh);
    const VectorXd k3 = rhs(r + 0.5 * tau * k2, uh);
    const VectorXd k4 = rhs(r + tau * k3, u1);
    r += (tau / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    check_finite_bounded(r, k);
    out.states.row(static_cast<Index>(k)).head(n) = r.transpose();
  }
  return out;
}

}  // namespace

StateMatrix simulate(const ReservoirSystem& system, const SampledSeries& u, const VectorXd& r0,
                     const SimulationOptions& options) {
  require(u.tau > 0.0, "time step must be positive");
  require(u.size() >= 1, "input series is empty");
  return integrate(system, u.values, u.size(), u.tau, u.t0, r0, options);
}

StateMatrix simulate(const ReservoirSystem& system, const MultiSineSignal& u, std::size_t steps,
                     double tau, double t0, const VectorXd& r0, const SimulationOptions& options) {
  require(steps >= 1, "need at least one step");
  const SampledSeries samples = sample(u, steps + 2, tau, t0);
  return integrate(system, samples.values, steps, tau, t0, r0, options);
}

FrequencyResponse transfer_response(const ModalReservoir& modal, const std::vector<double>& omegas) {
  const Index n = modal.size();
  const auto k = static_cast<Index>(omegas.size());
  FrequencyResponse out{MatrixXd(k, n), MatrixXd(k, n)};
  for (Index row = 0; row < k; ++row) {
    const double w = omegas[static_cast<std::size_t>(row)];
    require(w > 0.0, "frequencies must be positive");
    for (Index i = 0; i < n; ++i) {
      const double decay = modal.gamma * (1.0 - modal.lambdas(i));
      out.magnitude(row, i) = modal.gamma * std::abs(modal.c(i)) / std::hypot(w, decay);
      out.phase(row, i) = std::atan(w / decay) + (modal.c(i) < 0.0 ? kPi : 0.0);
    }
  }
  return out;
}

StateMatrix steady_state_series(const ModalReservoir& modal, const MultiSineSignal& u,
                                std::size_t steps, double tau, double t_first) {
  require(!u.empty(), "input signal has no components");
  require(tau > 0.0, "time step must be positive");
  const auto& comps = u.components();
  const FrequencyResponse resp = transfer_response(modal, u.omegas());
  const Index n = modal.size();
  StateMatrix out;
  out.tau = tau;
  out.t_first = t_first;
  out.states = MatrixXd::Zero(static_cast<Index>(steps), n);
  for (std::size_t j = 0; j < steps; ++j) {
    const double t = t_first + static_cast<double>(j) * tau;
    for (std::size_t k = 0; k < comps.size(); ++k) {
      const auto row = static_cast<Index>(k);
      const double base = comps[k].omega * t + comps[k].phase;
      for (Index i = 0; i < n; ++i) {
        out.states(static_cast<Index>(j), i) +=
            comps[k].amplitude * resp.magnitude(row, i) * std::cos(base - resp.phase(row, i));
      }
    }
  }
  return out;
}

std::string topology_to_json(const ReservoirTopology& topology) {
  const Index n = topology.size();
  nlohmann::json doc;
  doc["n"] = n;
  doc["gamma"] = topology.gamma();
  std::vector<double> a;
  a.reserve(static_cast<std::size_t>(n * n));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) a.push_back(topology.adjacency()(i, j));
  }
  doc["a"] = a;
  doc["d"] = std::vector<double>(topology.input_mask().data(), topology.input_mask().data() + n);
  return doc.dump();
}

ReservoirTopology topology_from_json(const std::string& text) {
  Index n = 0;
  std::vector<double> a, d;
  double gamma = 0.0;
  try {
    const auto doc = nlohmann::json::parse(text);
    n = doc.at("n").get<Index>();
    a = doc.at("a").get<std::vector<double>>();
    d = doc.at("d").get<std::vector<double>>();
    gamma = doc.at("gamma").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("topology JSON: ") + e.what());
  }
  require(n >= 1 && static_cast<Index>(a.size()) == n * n && static_cast<Index>(d.size()) == n,
          "topology JSON dimensions are inconsistent");
  MatrixXd am(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) am(i, j) = a[static_cast<std::size_t>(i * n + j)];
  }
  return ReservoirTopology(std::move(am), Eigen::Map<const VectorXd>(d.data(), n), gamma);
}

void write_states_csv(std::ostream& out, const StateMatrix& states) {
  const Index n = states.node_count();
  for (Index i = 0; i < n; ++i) out << (i ? ",r_" : "r_") << (i + 1);
  if (states.bias_column) out << ",bias";
  out << '\n';
  char buf[40];
  for (Index row = 0; row < states.rows(); ++row) {
    for (Index col = 0; col < states.states.cols(); ++col) {
      std::snprintf(buf, sizeof buf, col ? ",%.17g" : "%.17g", states.states(row, col));
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace lrc
