#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "lrc/regression.hpp"
#include "lrc/reservoir.hpp"
#include "lrc/signals.hpp"

namespace lrc {

struct OptimizerConfig {
  int n_modes = 10;
  double beta1 = 1e-7;  // readout norm penalty
  double beta2 = 1e-1;  // eigenvalue spread penalty
  double gamma = 6.0;
  int restarts = 50;
  double lambda_init_low = -20.0;
  double lambda_init_high = 0.0;
  double constraint_margin = 1e-6;
  int max_inner_iters = 500;
  double grad_tol = 1e-8;
  std::uint64_t seed = 0;
  bool frequency_weighting = true;  // W_k = 1 / w_k; false gives W = 1
  int jobs = 1;

  void validate() const;
};

/// Harmonic mean of pairwise eigenvalue gaps, N / sum_{j != z} 1/|l_j - l_z|
/// over ordered pairs. Gaps are floored at 1e-12.
double harmonic_spread(const Eigen::VectorXd& lambdas);

/// d(1/H)/d lambda.
Eigen::VectorXd inverse_spread_gradient(const Eigen::VectorXd& lambdas);

/// True iff every lambda <= 0 and w_max + gamma (lambda - 1) <= -margin.
bool feasible(const Eigen::VectorXd& lambdas, double gamma, double omega_max, double margin = 1e-6);

/// Largest feasible eigenvalue: min(0, 1 - (w_max + margin) / gamma).
double lambda_upper_bound(double gamma, double omega_max, double margin);

/// Everything the cost needs besides lambda and kappa.
struct CostContext {
  MultiSineSignal u_signal;
  MultiSineSignal y_signal;
  double gamma = 6.0;
  Eigen::VectorXd c;
  double beta1 = 1e-7;
  double beta2 = 1e-1;
  double margin = 1e-6;
  bool frequency_weighting = true;

  CostContext() = default;
  CostContext(MultiSineSignal u, MultiSineSignal y, double rate, Eigen::VectorXd mask,
              double b1, double b2, double constraint_margin = 1e-6, bool weighting = true);

  Eigen::VectorXd weights() const;  // W_k per frequency
  double omega_max() const { return u_signal.max_omega(); }
};

struct CostParts {
  double total = 0.0;
  double weighted_error_sq = 0.0;  // sum_k W_k (e_cos,k^2 + e_sin,k^2)
  double kappa_penalty = 0.0;      // beta1 ||kappa||^2
  double spread_penalty = 0.0;     // beta2 / H
};

/// Full three-term cost at (lambda, kappa). Throws InfeasibleLambdas.
CostParts cost(const Eigen::VectorXd& lambdas, const Eigen::VectorXd& kappa,
               const CostContext& context);

/// Cost with kappa eliminated: for fixed lambda the first two terms are a
/// weighted ridge problem whose minimizer is kappa*(lambda).
struct ReducedCost {
  CostParts parts;
  Eigen::VectorXd kappa;
  Eigen::VectorXd gradient;  // d total / d lambda
};

/// Lambdas need not be feasible here (only < 1); callers enforce the box.
ReducedCost reduced_cost(const Eigen::VectorXd& lambdas, const CostContext& context,
                         bool with_gradient = true);

/// Weighted error sqrt(sum_k W_k (e_cos,k^2 + e_sin,k^2)) of a cost evaluation.
inline double weighted_error(const CostParts& parts) { return std::sqrt(parts.weighted_error_sq); }

struct RestartRecord {
  Eigen::VectorXd init_lambdas;
  Eigen::VectorXd final_lambdas;
  double initial_error = 0.0;
  double final_error = 0.0;
  double final_cost = 0.0;
  bool converged = false;
  int iterations = 0;
  double best_error_so_far = 0.0;
};

struct OptimizationResult {
  Eigen::VectorXd lambdas;
  Eigen::VectorXd kappa;
  Eigen::MatrixXd m;      // K x N gains
  Eigen::MatrixXd theta;  // K x N phase lags
  double lowest_error = 0.0;
  std::vector<RestartRecord> restart_history;
  std::vector<std::string> warnings;  // e.g. near-zero mask entries
};

struct LocalSolveResult {
  Eigen::VectorXd lambdas;
  ReducedCost at_solution;
  int iterations = 0;
  bool converged = false;
};

/// Projected L-BFGS on the reduced cost inside [lower, upper]^N.
LocalSolveResult solve_local(const Eigen::VectorXd& start, const CostContext& context,
                             double lower, double upper, int max_iters, double grad_tol);

/// Multi-start eigenvalue design: `restarts` independent local solves from
/// lambda0 ~ U[lambda_init_low, lambda_init_high]^N, best weighted error kept
/// (earliest restart wins ties). Throws AllRestartsFailed.
OptimizationResult optimize(const OptimizerConfig& config, const MultiSineSignal& u_signal,
                            const MultiSineSignal& y_signal, const Eigen::VectorXd& c);

/// lambda + eps * delta, delta_i ~ U(-1, 0), clamped to at most `upper`.
Eigen::VectorXd perturb(const Eigen::VectorXd& lambdas, double epsilon_s, std::uint64_t seed,
                        double upper = 0.0);

std::string optimization_result_to_json(const OptimizationResult& result);

}  // namespace lrc
