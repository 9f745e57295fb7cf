#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "lrc/reservoir.hpp"
#include "lrc/signals.hpp"

namespace lrc {

enum class ReadoutDomain { Time, Frequency };

struct ReadoutWeights {
  Eigen::VectorXd kappa;
  ReadoutDomain domain = ReadoutDomain::Time;
};

/// What ridge_fit does with beta = 0 on a numerically singular design
/// (condition number of the normal matrix above 1e12).
enum class SingularPolicy {
  Throw,        // SingularSystem
  MinimumNorm,  // pseudo-inverse solution with a 1e-9 relative rank cut
};

/// kappa = (X^T X + beta I)^{-1} X^T y via an SPD factorization; beta = 0 goes
/// through an SVD instead of the normal equations.
ReadoutWeights ridge_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& target, double beta,
                         SingularPolicy policy = SingularPolicy::Throw);

ReadoutWeights ridge_fit(const StateMatrix& states, const Eigen::VectorXd& target, double beta,
                         SingularPolicy policy = SingularPolicy::Throw);

/// (1 / sqrt(T)) ||X kappa - y||.
double time_domain_error(const Eigen::MatrixXd& design, const Eigen::VectorXd& target,
                         const Eigen::VectorXd& kappa);

/// Real 2K x N system matching the cos/sin coefficients of the readout to the
/// target: rows 2k and 2k+1 hold a_k Re(T_ik) and a_k Im(T_ik), where T_ik is
/// the complex gain of mode i at w_k; b holds b_k cos(dphi_k), b_k sin(dphi_k)
/// with dphi_k the output phase relative to the input phase.
struct FrequencyDesignMatrix {
  Eigen::MatrixXd omega_tilde;
  Eigen::VectorXd b;
  std::vector<double> omegas;
  Eigen::VectorXd weights_w;  // 1 / omega_k
};

FrequencyDesignMatrix build_frequency_system(const ModalReservoir& modal,
                                             const MultiSineSignal& u_signal,
                                             const MultiSineSignal& y_signal);

/// Checks the two signals share one frequency set; throws FrequencyMismatch.
void require_same_frequencies(const MultiSineSignal& u_signal, const MultiSineSignal& y_signal);

/// Unweighted ridge solve of omega_tilde kappa = b.
ReadoutWeights frequency_fit(const FrequencyDesignMatrix& system, double beta,
                             SingularPolicy policy = SingularPolicy::Throw);

/// Ridge solve with each cos/sin row pair scaled by sqrt(W_k) = 1/sqrt(w_k).
ReadoutWeights weighted_frequency_fit(const FrequencyDesignMatrix& system, double beta);

/// omega_tilde kappa - b.
Eigen::VectorXd frequency_residual(const FrequencyDesignMatrix& system, const Eigen::VectorXd& kappa);

/// ||fit - target|| / ||target||; throws ZeroReference for a zero target.
double nrmse(const Eigen::VectorXd& fit, const Eigen::VectorXd& target);

Eigen::VectorXd to_eigen(const std::vector<double>& v);
Eigen::VectorXd to_eigen(const SampledSeries& series);

struct FitReport {
  double beta = 0.0;
  double nrmse_train = 0.0;
  double nrmse_test = 0.0;
  Eigen::VectorXd kappa;
  ReadoutDomain domain = ReadoutDomain::Time;
};

std::string fit_report_to_json(const FitReport& report);

/// Simulation window shared by the equivalence checks: the first `washout`
/// steps are discarded and the next `steps` rows are regressed.
struct SeriesWindow {
  std::size_t steps = 3000;
  double tau = 0.01;
  std::size_t washout = 500;
};

struct Theorem1Report {
  double eps_coupled = 0.0;
  double eps_decoupled = 0.0;
  double kappa_transform_residual = 0.0;  // ||kappa - V kappa'||_inf over node weights
  double bias_coupled = 0.0;
  double bias_decoupled = 0.0;
  double fit_deviation = 0.0;  // ||h_r - h_q|| / ||y||
};

/// Coupled vs decoupled time-domain regressions on identical input. A basis
/// other than the eigenvectors of A may be forced for negative controls; the
/// "decoupled" reservoir is then diag(V^T A V) with mask V^T d.
Theorem1Report verify_theorem1(const ReservoirTopology& topology, const MultiSineSignal& u_signal,
                               const MultiSineSignal& y_signal, const SeriesWindow& window,
                               double beta,
                               const std::optional<Eigen::MatrixXd>& basis_override = std::nullopt);

struct Theorem2Report {
  double nrmse_time = 0.0;
  double nrmse_frequency = 0.0;
  double fit_deviation = 0.0;  // ||X kappa - X kappa~|| / ||y|| on the simulated window
  double kappa_deviation = 0.0;  // ||kappa - kappa~|| / ||kappa~||
};

/// Time-domain readout from simulated post-washout modes vs frequency-domain
/// readout from the 2K-row system. `beta` applies to the frequency system; the
/// time-domain solve uses beta * T / 2, its asymptotic counterpart.
Theorem2Report verify_theorem2(const ModalReservoir& modal, const MultiSineSignal& u_signal,
                               const MultiSineSignal& y_signal, const SeriesWindow& window,
                               double beta);

}  // namespace lrc
