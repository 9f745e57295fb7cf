#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>

#include "lrc/signals.hpp"

namespace lrc {

/// Coupled linear reservoir  dr/dt = gamma (-r + A r + d u).
/// A is symmetrized on construction and must have max eigenvalue < 1.
class ReservoirTopology {
 public:
  ReservoirTopology(Eigen::MatrixXd adjacency, Eigen::VectorXd input_mask, double gamma);

  const Eigen::MatrixXd& adjacency() const { return a_; }
  const Eigen::VectorXd& input_mask() const { return d_; }
  double gamma() const { return gamma_; }
  Eigen::Index size() const { return d_.size(); }

  /// Builds a topology without the Hurwitz check (nonlinear benchmarks scale
  /// A by spectral radius instead of shifting it).
  static ReservoirTopology unchecked(Eigen::MatrixXd adjacency, Eigen::VectorXd input_mask,
                                     double gamma);

 private:
  struct NoCheck {};
  ReservoirTopology(Eigen::MatrixXd adjacency, Eigen::VectorXd input_mask, double gamma, NoCheck);

  Eigen::MatrixXd a_;
  Eigen::VectorXd d_;
  double gamma_;
};

/// N independent first-order modes  dq_i/dt = gamma (lambda_i - 1) q_i + gamma c_i u.
struct ModalReservoir {
  Eigen::VectorXd lambdas;
  Eigen::VectorXd c;
  double gamma = 6.0;

  ModalReservoir() = default;
  ModalReservoir(Eigen::VectorXd eigenvalues, Eigen::VectorXd modal_mask, double rate);

  Eigen::Index size() const { return lambdas.size(); }
};

struct Decomposition {
  ModalReservoir modal;
  Eigen::MatrixXd v;  // orthogonal, A = V diag(lambdas) V^T
};

/// Reservoir states, one row per time step; rows start at t_first and advance by tau.
struct StateMatrix {
  Eigen::MatrixXd states;
  double tau = 0.01;
  double t_first = 0.0;
  bool bias_column = false;

  Eigen::Index rows() const { return states.rows(); }
  Eigen::Index node_count() const { return states.cols() - (bias_column ? 1 : 0); }
  double time(Eigen::Index row) const { return t_first + static_cast<double>(row) * tau; }

  /// Rows [first, first + count).
  StateMatrix window(Eigen::Index first, Eigen::Index count) const;
  StateMatrix with_bias() const;
};

/// Steady-state gain and phase lag of every mode at every task frequency
/// (K x N). phase(k, i) = atan(w_k / (gamma (1 - lambda_i))), plus pi when
/// c_i < 0; the mode responds as M cos(w t - phase).
struct FrequencyResponse {
  Eigen::MatrixXd magnitude;
  Eigen::MatrixXd phase;
};

enum class Activation { Identity, Tanh, Relu };

Activation parse_activation(const std::string& name);
std::string to_string(Activation activation);

ReservoirTopology generate_random_topology(Eigen::Index n, double edge_prob, bool weighted,
                                           double target_max_eig, std::uint64_t seed,
                                           double gamma = 6.0);

/// Echo-state style topology for nonlinear baselines: ER graph rescaled to the
/// given spectral radius, no Hurwitz shift.
ReservoirTopology generate_scaled_topology(Eigen::Index n, double edge_prob, bool weighted,
                                           double spectral_radius, double gamma,
                                           std::uint64_t seed);

Decomposition decouple(const ReservoirTopology& topology);

/// Realizes a modal reservoir as a dense network through a random orthogonal basis.
ReservoirTopology recouple(const ModalReservoir& modal, std::uint64_t seed);

using ReservoirSystem = std::variant<ReservoirTopology, ModalReservoir>;

struct SimulationOptions {
  Activation activation = Activation::Identity;
  bool bias_column = false;
};

/// Integrates from r(u.t0) = r0 and returns the states at u.t0 + tau, ...,
/// u.t0 + T tau (T = u.size()). The input between samples is the local cubic
/// through the neighbouring samples; the final two steps use one-sided stencils.
/// Linear dynamics use an exponential integrator that is exact for that cubic;
/// nonlinear activations use classical RK4 with step tau.
StateMatrix simulate(const ReservoirSystem& system, const SampledSeries& u,
                     const Eigen::VectorXd& r0, const SimulationOptions& options = {});

/// Same, with the input known analytically: samples two extra points so that
/// every step uses a centred stencil.
StateMatrix simulate(const ReservoirSystem& system, const MultiSineSignal& u, std::size_t steps,
                     double tau, double t0, const Eigen::VectorXd& r0,
                     const SimulationOptions& options = {});

FrequencyResponse transfer_response(const ModalReservoir& modal, const std::vector<double>& omegas);

/// Transient-free modal states sum_k a_k M_ik cos(w_k t + phi_k - theta_ik) at
/// t = t_first + j tau, j = 0..steps-1.
StateMatrix steady_state_series(const ModalReservoir& modal, const MultiSineSignal& u,
                                std::size_t steps, double tau, double t_first);

/// JSON document {n, gamma, a (row-major), d}.
std::string topology_to_json(const ReservoirTopology& topology);
ReservoirTopology topology_from_json(const std::string& text);

/// CSV with header r_1..r_N[,bias].
void write_states_csv(std::ostream& out, const StateMatrix& states);

}  // namespace lrc
