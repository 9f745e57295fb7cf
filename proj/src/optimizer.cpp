#include "lrc/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <deque>
#include <json.hpp>
#include <limits>
#include <random>
#include <thread>

#include "lrc/error.hpp"
#include "lrc/seeding.hpp"

namespace lrc {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kGapFloor = 1e-12;
constexpr int kLbfgsMemory = 10;

std::vector<double> to_std(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

void OptimizerConfig::validate() const {
  require(n_modes >= 1, "n_modes must be >= 1");
  require(beta1 >= 0.0 && beta2 >= 0.0, "beta1 and beta2 must be >= 0");
  require(gamma > 0.0, "gamma must be positive");
  require(restarts >= 1, "restarts must be >= 1");
  require(lambda_init_low < lambda_init_high && lambda_init_high <= 0.0,
          "need lambda_init_low < lambda_init_high <= 0");
  require(constraint_margin > 0.0, "constraint_margin must be positive");
  require(max_inner_iters >= 1, "max_inner_iters must be >= 1");
  require(grad_tol > 0.0, "grad_tol must be positive");
  require(jobs >= 1, "jobs must be >= 1");
}

double harmonic_spread(const VectorXd& lambdas) {
  const Index n = lambdas.size();
  require(n >= 2, "harmonic spread needs at least two eigenvalues");
  double sum = 0.0;
  for (Index j = 0; j < n; ++j) {
    for (Index z = 0; z < n; ++z) {
      if (j == z) continue;
      sum += 1.0 / std::max(std::abs(lambdas(j) - lambdas(z)), kGapFloor);
    }
  }
  return static_cast<double>(n) / sum;
}

VectorXd inverse_spread_gradient(const VectorXd& lambdas) {
  const Index n = lambdas.size();
  VectorXd g = VectorXd::Zero(n);
  if (n < 2) return g;
  // 1/H = (2/N) sum_{j<z} 1/|l_j - l_z|
  for (Index i = 0; i < n; ++i) {
    for (Index z = 0; z < n; ++z) {
      if (z == i) continue;
      const double diff = lambdas(i) - lambdas(z);
      if (std::abs(diff) <= kGapFloor) continue;
      g(i) -= 2.0 * (diff > 0.0 ? 1.0 : -1.0) / (diff * diff);
    }
  }
  return g / static_cast<double>(n);
}

double lambda_upper_bound(double gamma, double omega_max, double margin) {
  return std::min(0.0, 1.0 - (omega_max + margin) / gamma);
}

bool feasible(const VectorXd& lambdas, double gamma, double omega_max, double margin) {
  require(gamma > 0.0, "gamma must be positive");
  for (Index i = 0; i < lambdas.size(); ++i) {
    const double l = lambdas(i);
    if (!(l <= 0.0)) return false;
    if (!(omega_max + gamma * (l - 1.0) <= -margin)) return false;
  }
  return true;
}

CostContext::CostContext(MultiSineSignal u, MultiSineSignal y, double rate, VectorXd mask,
                         double b1, double b2, double constraint_margin, bool weighting)
    : u_signal(std::move(u)),
      y_signal(std::move(y)),
      gamma(rate),
      c(std::move(mask)),
      beta1(b1),
      beta2(b2),
      margin(constraint_margin),
      frequency_weighting(weighting) {
  require_same_frequencies(u_signal, y_signal);
  require(gamma > 0.0, "gamma must be positive");
  require(beta1 >= 0.0 && beta2 >= 0.0, "penalty weights must be >= 0");
  require(c.size() >= 1, "mask must be non-empty");
}

VectorXd CostContext::weights() const {
  const auto omegas = u_signal.omegas();
  VectorXd w(static_cast<Index>(omegas.size()));
  for (std::size_t k = 0; k < omegas.size(); ++k) {
    w(static_cast<Index>(k)) = frequency_weighting ? 1.0 / omegas[k] : 1.0;
  }
  return w;
}

namespace {

/// Weighted design X = sqrt(W) * omega_tilde and its column derivatives.
struct WeightedSystem {
  MatrixXd x;
  MatrixXd dx;  // column i: d X(:, i) / d lambda_i
  VectorXd z;
};

WeightedSystem weighted_system(const VectorXd& lambdas, const CostContext& ctx, bool derivative) {
  const auto& uc = ctx.u_signal.components();
  const auto& yc = ctx.y_signal.components();
  const auto k_count = static_cast<Index>(uc.size());
  const Index n = lambdas.size();
  const VectorXd w = ctx.weights();
  WeightedSystem ws{MatrixXd(2 * k_count, n), MatrixXd(), VectorXd(2 * k_count)};
  if (derivative) ws.dx.resize(2 * k_count, n);
  const double g = ctx.gamma;
  for (Index k = 0; k < k_count; ++k) {
    const auto& u = uc[static_cast<std::size_t>(k)];
    const auto& y = yc[static_cast<std::size_t>(k)];
    const double s = std::sqrt(w(k));
    for (Index i = 0; i < n; ++i) {
      const std::complex<double> denom(g * (1.0 - lambdas(i)), u.omega);
      const std::complex<double> gain = g * ctx.c(i) / denom;
      ws.x(2 * k, i) = s * u.amplitude * gain.real();
      ws.x(2 * k + 1, i) = s * u.amplitude * gain.imag();
      if (derivative) {
        const std::complex<double> dgain = g * gain / denom;
        ws.dx(2 * k, i) = s * u.amplitude * dgain.real();
        ws.dx(2 * k + 1, i) = s * u.amplitude * dgain.imag();
      }
    }
    const double rel = y.phase - u.phase;
    ws.z(2 * k) = s * y.amplitude * std::cos(rel);
    ws.z(2 * k + 1) = s * y.amplitude * std::sin(rel);
  }
  return ws;
}

VectorXd solve_readout(const MatrixXd& x, const VectorXd& z, double beta1) {
  if (beta1 <= 0.0) {
    return ridge_fit(x, z, 0.0, SingularPolicy::MinimumNorm).kappa;
  }
  if (x.cols() <= x.rows()) {
    MatrixXd normal = x.transpose() * x;
    normal.diagonal().array() += beta1;
    return normal.ldlt().solve(x.transpose() * z);
  }
  // Dual form: kappa = X^T (X X^T + beta I)^{-1} z, same minimizer.
  MatrixXd gram = x * x.transpose();
  gram.diagonal().array() += beta1;
  return x.transpose() * gram.ldlt().solve(z);
}

CostParts assemble(const MatrixXd& x, const VectorXd& z, const VectorXd& lambdas,
                   const VectorXd& kappa, const CostContext& ctx, VectorXd* residual) {
  CostParts parts;
  VectorXd res = x * kappa - z;
  parts.weighted_error_sq = res.squaredNorm();
  parts.kappa_penalty = ctx.beta1 * kappa.squaredNorm();
  parts.spread_penalty =
      lambdas.size() >= 2 && ctx.beta2 > 0.0 ? ctx.beta2 / harmonic_spread(lambdas) : 0.0;
  parts.total = parts.weighted_error_sq + parts.kappa_penalty + parts.spread_penalty;
  if (residual) *residual = std::move(res);
  return parts;
}

}  // namespace

CostParts cost(const VectorXd& lambdas, const VectorXd& kappa, const CostContext& ctx) {
  require(lambdas.size() == ctx.c.size(), "lambda length must equal mask length");
  require(kappa.size() == lambdas.size(), "kappa length must equal mode count");
  if (!feasible(lambdas, ctx.gamma, ctx.omega_max(), ctx.margin)) {
    throw Error(ErrorCode::InfeasibleLambdas, "eigenvalues violate the cut-off constraints");
  }
  const WeightedSystem ws = weighted_system(lambdas, ctx, false);
  return assemble(ws.x, ws.z, lambdas, kappa, ctx, nullptr);
}

ReducedCost reduced_cost(const VectorXd& lambdas, const CostContext& ctx, bool with_gradient) {
  require(lambdas.size() == ctx.c.size(), "lambda length must equal mask length");
  require((lambdas.array() < 1.0).all(), "eigenvalues must be < 1");
  const WeightedSystem ws = weighted_system(lambdas, ctx, with_gradient);
  ReducedCost out;
  out.kappa = solve_readout(ws.x, ws.z, ctx.beta1);
  VectorXd res;
  out.parts = assemble(ws.x, ws.z, lambdas, out.kappa, ctx, &res);
  if (with_gradient) {
    // Envelope theorem: kappa* is stationary for the kappa-dependent terms.
    out.gradient = 2.0 * out.kappa.cwiseProduct(ws.dx.transpose() * res);
    if (ctx.beta2 > 0.0) out.gradient += ctx.beta2 * inverse_spread_gradient(lambdas);
  }
  return out;
}

LocalSolveResult solve_local(const VectorXd& start, const CostContext& ctx, double lower,
                             double upper, int max_iters, double grad_tol) {
  require(lower < upper, "empty box");
  const auto project = [&](const VectorXd& v) { return v.cwiseMax(lower).cwiseMin(upper).eval(); };

  LocalSolveResult out;
  VectorXd x = project(start);
  ReducedCost f = reduced_cost(x, ctx);
  const double f0 = f.parts.total;
  if (!std::isfinite(f0)) {
    out.lambdas = x;
    out.at_solution = f;
    return out;
  }

  std::deque<std::pair<VectorXd, VectorXd>> memory;
  bool stationary = false;
  int iter = 0;
  for (; iter < max_iters; ++iter) {
    const VectorXd& g = f.gradient;
    if ((project(x - g) - x).cwiseAbs().maxCoeff() < grad_tol) {
      stationary = true;
      break;
    }
    Eigen::Array<bool, Eigen::Dynamic, 1> active(x.size());
    for (Index i = 0; i < x.size(); ++i) {
      active(i) = (x(i) <= lower && g(i) > 0.0) || (x(i) >= upper && g(i) < 0.0);
    }
    const auto mask = [&](VectorXd v) {
      for (Index i = 0; i < v.size(); ++i) {
        if (active(i)) v(i) = 0.0;
      }
      return v;
    };

    // L-BFGS two-loop recursion restricted to the free variables.
    VectorXd q = mask(g);
    std::vector<double> alpha(memory.size());
    for (std::size_t j = memory.size(); j-- > 0;) {
      const VectorXd s = mask(memory[j].first);
      const VectorXd y = mask(memory[j].second);
      const double sy = s.dot(y);
      alpha[j] = sy > 0.0 ? s.dot(q) / sy : 0.0;
      q -= alpha[j] * y;
    }
    if (!memory.empty()) {
      const VectorXd s = mask(memory.back().first);
      const VectorXd y = mask(memory.back().second);
      const double yy = y.squaredNorm();
      if (yy > 0.0 && s.dot(y) > 0.0) q *= s.dot(y) / yy;
    }
    for (std::size_t j = 0; j < memory.size(); ++j) {
      const VectorXd s = mask(memory[j].first);
      const VectorXd y = mask(memory[j].second);
      const double sy = s.dot(y);
      if (sy <= 0.0) continue;
      q += (alpha[j] - y.dot(q) / sy) * s;
    }
    VectorXd dir = -mask(q);
    if (!(dir.dot(g) < 0.0)) {
      dir = -mask(g);
      memory.clear();
    }
    double step = 1.0;
    // Without curvature pairs the first trial moves the largest component by one unit.
    if (memory.empty()) step = 1.0 / std::max(dir.cwiseAbs().maxCoeff(), 1e-300);

    bool accepted = false;
    VectorXd xn;
    ReducedCost fn;
    for (int ls = 0; ls < 60; ++ls) {
      xn = project(x + step * dir);
      const VectorXd delta = xn - x;
      if (delta.cwiseAbs().maxCoeff() == 0.0) break;
      fn = reduced_cost(xn, ctx);
      if (std::isfinite(fn.parts.total) && fn.parts.total <= f.parts.total + 1e-4 * g.dot(delta)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!memory.empty()) {
        memory.clear();
        continue;
      }
      stationary = true;  // no descent possible along the projected gradient
      break;
    }

    const VectorXd s = xn - x;
    const VectorXd y = fn.gradient - g;
    if (s.dot(y) > 1e-12 * s.norm() * y.norm()) {
      memory.emplace_back(s, y);
      if (static_cast<int>(memory.size()) > kLbfgsMemory) memory.pop_front();
    }
    const double decrease = f.parts.total - fn.parts.total;
    x = std::move(xn);
    f = std::move(fn);
    if (decrease <= 1e-15 * std::max(1.0, std::abs(f.parts.total))) {
      stationary = true;
      ++iter;
      break;
    }
  }

  out.lambdas = x;
  out.iterations = iter;
  out.converged = std::isfinite(f.parts.total) && (stationary || f.parts.total < f0);
  out.at_solution = std::move(f);
  return out;
}

OptimizationResult optimize(const OptimizerConfig& config, const MultiSineSignal& u_signal,
                            const MultiSineSignal& y_signal, const VectorXd& c) {
  config.validate();
  require(c.size() == config.n_modes, "mask length must equal n_modes");
  const CostContext ctx(u_signal, y_signal, config.gamma, c, config.beta1, config.beta2,
                        config.constraint_margin, config.frequency_weighting);
  const double upper = lambda_upper_bound(config.gamma, ctx.omega_max(), config.constraint_margin);
  const double lower = config.lambda_init_low - 5.0;
  if (!(upper > lower)) {
    throw Error(ErrorCode::InfeasibleLambdas, "cut-off constraint leaves no room inside the box");
  }

  const auto restarts = static_cast<std::size_t>(config.restarts);
  std::vector<RestartRecord> records(restarts);
  std::vector<LocalSolveResult> solutions(restarts);

  const auto run_restart = [&](std::size_t r) {
    Rng rng = make_rng(derive_seed(config.seed, "optimizer.restart", r));
    std::uniform_real_distribution<double> init(config.lambda_init_low, config.lambda_init_high);
    VectorXd start(config.n_modes);
    for (Index i = 0; i < start.size(); ++i) start(i) = init(rng);
    RestartRecord& rec = records[r];
    rec.init_lambdas = start;
    const VectorXd clamped = start.cwiseMax(lower).cwiseMin(upper);
    try {
      rec.initial_error = weighted_error(reduced_cost(clamped, ctx, false).parts);
      solutions[r] = solve_local(clamped, ctx, lower, upper, config.max_inner_iters,
                                 config.grad_tol);
      rec.final_lambdas = solutions[r].lambdas;
      rec.final_error = weighted_error(solutions[r].at_solution.parts);
      rec.final_cost = solutions[r].at_solution.parts.total;
      rec.converged = solutions[r].converged &&
                      feasible(rec.final_lambdas, config.gamma, ctx.omega_max(),
                               config.constraint_margin);
      rec.iterations = solutions[r].iterations;
    } catch (const Error&) {
      rec.converged = false;
      rec.final_lambdas = clamped;
      rec.final_error = std::numeric_limits<double>::infinity();
      rec.final_cost = std::numeric_limits<double>::infinity();
    }
  };

  const auto jobs = std::min<std::size_t>(static_cast<std::size_t>(config.jobs), restarts);
  if (jobs <= 1) {
    for (std::size_t r = 0; r < restarts; ++r) run_restart(r);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t r = t; r < restarts; r += jobs) run_restart(r);
      });
    }
    for (auto& th : pool) th.join();
  }

  OptimizationResult result;
  for (Index i = 0; i < c.size(); ++i) {
    if (std::abs(c(i)) < 1e-12) {
      result.warnings.push_back("ZeroMaskEntry: mode " + std::to_string(i) +
                                " has |c| < 1e-12 and cannot be driven");
    }
  }
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_index = restarts;
  for (std::size_t r = 0; r < restarts; ++r) {
    if (records[r].converged && records[r].final_error < best) {
      best = records[r].final_error;
      best_index = r;
    }
    records[r].best_error_so_far = best;
  }
  if (best_index == restarts) {
    throw Error(ErrorCode::AllRestartsFailed, "no restart converged");
  }
  const LocalSolveResult& win = solutions[best_index];
  result.lambdas = win.lambdas;
  result.kappa = win.at_solution.kappa;
  result.lowest_error = best;
  const FrequencyResponse resp =
      transfer_response(ModalReservoir(win.lambdas, c, config.gamma), u_signal.omegas());
  result.m = resp.magnitude;
  result.theta = resp.phase;
  result.restart_history = std::move(records);
  return result;
}

VectorXd perturb(const VectorXd& lambdas, double epsilon_s, std::uint64_t seed, double upper) {
  require(epsilon_s >= 0.0, "perturbation size must be >= 0");
  Rng rng = make_rng(seed);
  // U[-1, 0) excludes 0; -1 itself is redrawn so delta lies in (-1, 0).
  std::uniform_real_distribution<double> delta_dist(-1.0, 0.0);
  VectorXd out = lambdas;
  for (Index i = 0; i < out.size(); ++i) {
    double delta = delta_dist(rng);
    while (delta <= -1.0) delta = delta_dist(rng);
    out(i) = std::min(lambdas(i) + epsilon_s * delta, upper);
  }
  return out;
}

std::string optimization_result_to_json(const OptimizationResult& result) {
  nlohmann::json doc;
  doc["lambdas"] = to_std(result.lambdas);
  doc["kappa"] = to_std(result.kappa);
  doc["lowest_error"] = result.lowest_error;
  nlohmann::json m = nlohmann::json::array();
  nlohmann::json theta = nlohmann::json::array();
  for (Index k = 0; k < result.m.rows(); ++k) {
    m.push_back(to_std(result.m.row(k).transpose()));
    theta.push_back(to_std(result.theta.row(k).transpose()));
  }
  doc["m"] = m;
  doc["theta"] = theta;
  nlohmann::json restarts = nlohmann::json::array();
  for (const auto& rec : result.restart_history) {
    nlohmann::json r;
    r["init_lambdas"] = to_std(rec.init_lambdas);
    r["final_lambdas"] = to_std(rec.final_lambdas);
    r["initial_error"] = rec.initial_error;
    r["final_error"] = std::isfinite(rec.final_error) ? nlohmann::json(rec.final_error) : nlohmann::json();
    r["converged"] = rec.converged;
    r["iterations"] = rec.iterations;
    restarts.push_back(r);
  }
  doc["restarts"] = restarts;
  doc["warnings"] = result.warnings;
  return doc.dump(2);
}

}  // namespace lrc
