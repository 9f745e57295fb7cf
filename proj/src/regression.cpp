#include "lrc/regression.hpp"

#include <cmath>
#include <complex>
#include <json.hpp>

#include "lrc/error.hpp"

namespace lrc {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kMaxNormalCondition = 1e12;
constexpr double kMinimumNormCut = 1e-9;

}  // namespace

ReadoutWeights ridge_fit(const MatrixXd& design, const VectorXd& target, double beta,
                         SingularPolicy policy) {
  require(design.rows() == target.size(), "design rows must match target length");
  require(beta >= 0.0 && std::isfinite(beta), "beta must be >= 0");
  require(design.cols() >= 1, "design needs at least one column");

  ReadoutWeights out;
  if (beta > 0.0) {
    MatrixXd normal = design.transpose() * design;
    normal.diagonal().array() += beta;
    Eigen::LDLT<MatrixXd> ldlt(normal);
    if (ldlt.info() != Eigen::Success) {
      throw Error(ErrorCode::SingularSystem, "ridge normal matrix factorization failed");
    }
    out.kappa = ldlt.solve(design.transpose() * target);
  } else {
    Eigen::BDCSVD<MatrixXd> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const VectorXd& s = svd.singularValues();
    const double smax = s.size() ? s(0) : 0.0;
    const double smin = s.size() ? s(s.size() - 1) : 0.0;
    const bool singular = smax == 0.0 || smin == 0.0 ||
                          (smax / smin) * (smax / smin) > kMaxNormalCondition ||
                          design.rows() < design.cols();
    if (singular && policy == SingularPolicy::Throw) {
      throw Error(ErrorCode::SingularSystem,
                  "beta = 0 and the normal matrix is numerically singular");
    }
    if (smax == 0.0) {
      out.kappa = VectorXd::Zero(design.cols());
    } else {
      if (policy == SingularPolicy::MinimumNorm) svd.setThreshold(kMinimumNormCut);
      out.kappa = svd.solve(target);
    }
  }
  if (!out.kappa.allFinite()) {
    throw Error(ErrorCode::SingularSystem, "ridge solution is not finite");
  }
  return out;
}

ReadoutWeights ridge_fit(const StateMatrix& states, const VectorXd& target, double beta,
                         SingularPolicy policy) {
  return ridge_fit(states.states, target, beta, policy);
}

double time_domain_error(const MatrixXd& design, const VectorXd& target, const VectorXd& kappa) {
  require(design.rows() == target.size() && design.cols() == kappa.size(),
          "inconsistent shapes in time-domain error");
  require(design.rows() >= 1, "empty design");
  return (design * kappa - target).norm() / std::sqrt(static_cast<double>(design.rows()));
}

void require_same_frequencies(const MultiSineSignal& u_signal, const MultiSineSignal& y_signal) {
  const auto& uc = u_signal.components();
  const auto& yc = y_signal.components();
  bool same = uc.size() == yc.size() && !uc.empty();
  for (std::size_t k = 0; same && k < uc.size(); ++k) {
    same = std::abs(uc[k].omega - yc[k].omega) <= 1e-12 * uc[k].omega;
  }
  if (!same) {
    throw Error(ErrorCode::FrequencyMismatch, "input and output frequency sets differ");
  }
}

FrequencyDesignMatrix build_frequency_system(const ModalReservoir& modal,
                                             const MultiSineSignal& u_signal,
                                             const MultiSineSignal& y_signal) {
  require_same_frequencies(u_signal, y_signal);
  const auto& uc = u_signal.components();
  const auto& yc = y_signal.components();
  const auto k_count = static_cast<Index>(uc.size());
  const Index n = modal.size();

  FrequencyDesignMatrix sys;
  sys.omegas = u_signal.omegas();
  sys.omega_tilde.resize(2 * k_count, n);
  sys.b.resize(2 * k_count);
  sys.weights_w.resize(k_count);
  const FrequencyResponse resp = transfer_response(modal, sys.omegas);
  for (Index k = 0; k < k_count; ++k) {
    const auto& u = uc[static_cast<std::size_t>(k)];
    const auto& y = yc[static_cast<std::size_t>(k)];
    for (Index i = 0; i < n; ++i) {
      // Mode responds as a M cos(w t - theta); its complex gain has angle -theta.
      const double gain = u.amplitude * resp.magnitude(k, i);
      sys.omega_tilde(2 * k, i) = gain * std::cos(resp.phase(k, i));
      sys.omega_tilde(2 * k + 1, i) = -gain * std::sin(resp.phase(k, i));
    }
    const double rel_phase = y.phase - u.phase;
    sys.b(2 * k) = y.amplitude * std::cos(rel_phase);
    sys.b(2 * k + 1) = y.amplitude * std::sin(rel_phase);
    sys.weights_w(k) = 1.0 / u.omega;
  }
  return sys;
}

ReadoutWeights frequency_fit(const FrequencyDesignMatrix& system, double beta,
                             SingularPolicy policy) {
  ReadoutWeights out = ridge_fit(system.omega_tilde, system.b, beta, policy);
  out.domain = ReadoutDomain::Frequency;
  return out;
}

ReadoutWeights weighted_frequency_fit(const FrequencyDesignMatrix& system, double beta) {
  MatrixXd x = system.omega_tilde;
  VectorXd z = system.b;
  for (Index k = 0; k < system.weights_w.size(); ++k) {
    const double s = std::sqrt(system.weights_w(k));
    x.middleRows(2 * k, 2) *= s;
    z.segment(2 * k, 2) *= s;
  }
  ReadoutWeights out = ridge_fit(x, z, beta, SingularPolicy::MinimumNorm);
  out.domain = ReadoutDomain::Frequency;
  return out;
}

VectorXd frequency_residual(const FrequencyDesignMatrix& system, const VectorXd& kappa) {
  require(kappa.size() == system.omega_tilde.cols(), "kappa length must equal mode count");
  return system.omega_tilde * kappa - system.b;
}

double nrmse(const VectorXd& fit, const VectorXd& target) {
  require(fit.size() == target.size(), "fit and target lengths differ");
  const double ref = target.norm();
  if (!(ref > 0.0)) throw Error(ErrorCode::ZeroReference, "target signal has zero norm");
  return (fit - target).norm() / ref;
}

VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size()));
}

VectorXd to_eigen(const SampledSeries& series) { return to_eigen(series.values); }

std::string fit_report_to_json(const FitReport& report) {
  nlohmann::json doc;
  doc["beta"] = report.beta;
  doc["nrmse_train"] = report.nrmse_train;
  doc["nrmse_test"] = report.nrmse_test;
  doc["kappa"] = std::vector<double>(report.kappa.data(), report.kappa.data() + report.kappa.size());
  doc["domain"] = report.domain == ReadoutDomain::Time ? "time" : "frequency";
  return doc.dump();
}

namespace {

struct WindowedStates {
  StateMatrix states;
  VectorXd target;
};

WindowedStates run_window(const ReservoirSystem& system, Index n, const MultiSineSignal& u_signal,
                          const MultiSineSignal& y_signal, const SeriesWindow& window,
                          bool bias) {
  require(window.steps >= 1 && window.tau > 0.0, "invalid simulation window");
  SimulationOptions opts;
  opts.bias_column = bias;
  const StateMatrix all = simulate(system, u_signal, window.washout + window.steps, window.tau, 0.0,
                                   VectorXd::Zero(n), opts);
  WindowedStates out;
  out.states = all.window(static_cast<Index>(window.washout), static_cast<Index>(window.steps));
  out.target = to_eigen(sample(y_signal, window.steps, window.tau, out.states.t_first));
  return out;
}

}  // namespace

Theorem1Report verify_theorem1(const ReservoirTopology& topology, const MultiSineSignal& u_signal,
                               const MultiSineSignal& y_signal, const SeriesWindow& window,
                               double beta, const std::optional<MatrixXd>& basis_override) {
  const Index n = topology.size();
  ModalReservoir modal;
  MatrixXd v;
  if (basis_override) {
    v = *basis_override;
    require(v.rows() == n && v.cols() == n, "basis must be N x N");
    const MatrixXd projected = v.transpose() * topology.adjacency() * v;
    VectorXd lambdas = projected.diagonal().cwiseMin(1.0 - 1e-9);
    modal = ModalReservoir(std::move(lambdas), v.transpose() * topology.input_mask(),
                           topology.gamma());
  } else {
    Decomposition dec = decouple(topology);
    modal = std::move(dec.modal);
    v = std::move(dec.v);
  }

  const WindowedStates coupled = run_window(topology, n, u_signal, y_signal, window, true);
  const WindowedStates decoupled = run_window(modal, n, u_signal, y_signal, window, true);

  const VectorXd kr = ridge_fit(coupled.states, coupled.target, beta, SingularPolicy::MinimumNorm).kappa;
  const VectorXd kq =
      ridge_fit(decoupled.states, decoupled.target, beta, SingularPolicy::MinimumNorm).kappa;

  Theorem1Report rep;
  rep.eps_coupled = time_domain_error(coupled.states.states, coupled.target, kr);
  rep.eps_decoupled = time_domain_error(decoupled.states.states, decoupled.target, kq);
  rep.kappa_transform_residual = (kr.head(n) - v * kq.head(n)).cwiseAbs().maxCoeff();
  rep.bias_coupled = kr(n);
  rep.bias_decoupled = kq(n);
  const VectorXd hr = coupled.states.states * kr;
  const VectorXd hq = decoupled.states.states * kq;
  rep.fit_deviation = (hr - hq).norm() / coupled.target.norm();
  return rep;
}

Theorem2Report verify_theorem2(const ModalReservoir& modal, const MultiSineSignal& u_signal,
                               const MultiSineSignal& y_signal, const SeriesWindow& window,
                               double beta) {
  const FrequencyDesignMatrix sys = build_frequency_system(modal, u_signal, y_signal);
  const VectorXd kf = frequency_fit(sys, beta, SingularPolicy::MinimumNorm).kappa;

  const WindowedStates sim = run_window(modal, modal.size(), u_signal, y_signal, window, false);
  const double beta_time = beta * static_cast<double>(window.steps) / 2.0;
  const VectorXd kt = ridge_fit(sim.states, sim.target, beta_time, SingularPolicy::MinimumNorm).kappa;

  const VectorXd fit_time = sim.states.states * kt;
  const VectorXd fit_freq = sim.states.states * kf;
  Theorem2Report rep;
  rep.nrmse_time = nrmse(fit_time, sim.target);
  rep.nrmse_frequency = nrmse(fit_freq, sim.target);
  rep.fit_deviation = (fit_time - fit_freq).norm() / sim.target.norm();
  const double kn = kf.norm();
  rep.kappa_deviation = kn > 0.0 ? (kt - kf).norm() / kn : (kt - kf).norm();
  return rep;
}

}  // namespace lrc
