#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <tuple>
#include <type_traits>

#include "lrc/benchmarks.hpp"
#include "lrc/config.hpp"
#include "lrc/error.hpp"
#include "lrc/experiments.hpp"
#include "lrc/optimizer.hpp"
#include "lrc/regression.hpp"
#include "lrc/reservoir.hpp"
#include "lrc/signals.hpp"

namespace py = pybind11;
using namespace lrc;

namespace {

using Tone = std::tuple<double, double, double>;

MultiSineSignal make_signal(const std::vector<Tone>& tones) {
  std::vector<SineComponent> comps;
  comps.reserve(tones.size());
  for (const auto& [w, a, p] : tones) comps.push_back({w, a, p});
  return MultiSineSignal(std::move(comps));
}

std::vector<Tone> tones_of(const MultiSineSignal& s) {
  std::vector<Tone> out;
  for (const auto& c : s.components()) out.emplace_back(c.omega, c.amplitude, c.phase);
  return out;
}

OptimizerConfig optimizer_config(const py::kwargs& kw) {
  OptimizerConfig cfg;
  for (const auto& [key, value] : kw) {
    const auto k = key.cast<std::string>();
    if (k == "n_modes") cfg.n_modes = value.cast<int>();
    else if (k == "beta1") cfg.beta1 = value.cast<double>();
    else if (k == "beta2") cfg.beta2 = value.cast<double>();
    else if (k == "gamma") cfg.gamma = value.cast<double>();
    else if (k == "restarts") cfg.restarts = value.cast<int>();
    else if (k == "lambda_init_low") cfg.lambda_init_low = value.cast<double>();
    else if (k == "lambda_init_high") cfg.lambda_init_high = value.cast<double>();
    else if (k == "constraint_margin") cfg.constraint_margin = value.cast<double>();
    else if (k == "max_inner_iters") cfg.max_inner_iters = value.cast<int>();
    else if (k == "grad_tol") cfg.grad_tol = value.cast<double>();
    else if (k == "seed") cfg.seed = value.cast<std::uint64_t>();
    else if (k == "frequency_weighting") cfg.frequency_weighting = value.cast<bool>();
    else if (k == "jobs") cfg.jobs = value.cast<int>();
    else throw py::key_error("unknown optimizer option '" + k + "'");
  }
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_lrc, m) {
  m.doc() = "Linear reservoir computing core";

  py::register_exception<Error>(m, "LrcError", PyExc_RuntimeError);

  py::class_<MultiSineSignal>(m, "MultiSine")
      .def(py::init(&make_signal), py::arg("tones"),
           "tones: list of (omega, amplitude, phase)")
      .def_property_readonly("tones", &tones_of)
      .def_property_readonly("omegas", &MultiSineSignal::omegas)
      .def_property_readonly("max_omega", &MultiSineSignal::max_omega)
      .def("__call__", &MultiSineSignal::operator(), py::arg("t"))
      .def("__len__", &MultiSineSignal::size)
      .def("sample",
           [](const MultiSineSignal& s, std::size_t count, double tau, double t0) {
             return to_eigen(sample(s, count, tau, t0));
           },
           py::arg("count"), py::arg("tau") = 0.01, py::arg("t0") = 0.0);

  m.def("three_tone_task", [] {
    return std::make_pair(default_input_signal(), default_output_signal());
  }, "The default (u, y) multi-sine pair.");

  m.def("extract_common_frequencies",
        [](const std::vector<double>& u, const std::vector<double>& y, double tau, std::size_t k) {
          const auto c = extract_common_frequencies(SampledSeries(u, tau, 0.0),
                                                    SampledSeries(y, tau, 0.0), k);
          return std::make_pair(c.u_signal, c.y_signal);
        },
        py::arg("u"), py::arg("y"), py::arg("tau"), py::arg("k"));

  py::class_<ReservoirTopology>(m, "Topology")
      .def(py::init<Eigen::MatrixXd, Eigen::VectorXd, double>(), py::arg("adjacency"),
           py::arg("input_mask"), py::arg("gamma") = 6.0)
      .def_property_readonly("adjacency", &ReservoirTopology::adjacency)
      .def_property_readonly("input_mask", &ReservoirTopology::input_mask)
      .def_property_readonly("gamma", &ReservoirTopology::gamma)
      .def("to_json", &topology_to_json)
      .def_static("from_json", &topology_from_json, py::arg("text"));

  py::class_<ModalReservoir>(m, "ModalReservoir")
      .def(py::init<Eigen::VectorXd, Eigen::VectorXd, double>(), py::arg("lambdas"), py::arg("c"),
           py::arg("gamma") = 6.0)
      .def_readonly("lambdas", &ModalReservoir::lambdas)
      .def_readonly("c", &ModalReservoir::c)
      .def_readonly("gamma", &ModalReservoir::gamma);

  m.def("random_topology", &generate_random_topology, py::arg("n"), py::arg("edge_prob") = 0.5,
        py::arg("weighted") = false, py::arg("target_max_eig") = -0.1, py::arg("seed") = 0,
        py::arg("gamma") = 6.0);

  m.def("decouple",
        [](const ReservoirTopology& t) {
          Decomposition d = decouple(t);
          return std::make_pair(d.modal, d.v);
        },
        py::arg("topology"), "Returns (modal reservoir, V).");
  m.def("recouple", &recouple, py::arg("modal"), py::arg("seed") = 0);

  const auto bind_simulate = [&m](auto tag) {
    using System = typename decltype(tag)::type;
    m.def("simulate",
          [](const System& system, const MultiSineSignal& u, std::size_t steps, double tau,
             double t0, std::optional<Eigen::VectorXd> r0, const std::string& activation, bool bias) {
            SimulationOptions opt;
            opt.activation = parse_activation(activation);
            opt.bias_column = bias;
            const Eigen::VectorXd start = r0.value_or(Eigen::VectorXd::Zero(system.size()));
            return simulate(ReservoirSystem(system), u, steps, tau, t0, start, opt).states;
          },
          py::arg("system"), py::arg("u"), py::arg("steps"), py::arg("tau") = 0.01,
          py::arg("t0") = 0.0, py::arg("r0") = py::none(), py::arg("activation") = "identity",
          py::arg("bias") = false, "States at t0 + tau, ..., t0 + steps * tau (one row each).");
  };
  bind_simulate(std::type_identity<ReservoirTopology>{});
  bind_simulate(std::type_identity<ModalReservoir>{});

  m.def("steady_state",
        [](const ModalReservoir& modal, const MultiSineSignal& u, std::size_t steps, double tau,
           double t_first) { return steady_state_series(modal, u, steps, tau, t_first).states; },
        py::arg("modal"), py::arg("u"), py::arg("steps"), py::arg("tau") = 0.01,
        py::arg("t_first") = 0.0);

  m.def("transfer_response",
        [](const ModalReservoir& modal, const std::vector<double>& omegas) {
          const auto r = transfer_response(modal, omegas);
          return std::make_pair(r.magnitude, r.phase);
        },
        py::arg("modal"), py::arg("omegas"), "Returns (magnitude, phase lag), both K x N.");

  m.def("ridge_fit",
        [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double beta, bool min_norm) {
          return ridge_fit(x, y, beta, min_norm ? SingularPolicy::MinimumNorm : SingularPolicy::Throw)
              .kappa;
        },
        py::arg("design"), py::arg("target"), py::arg("beta"), py::arg("min_norm") = false);

  m.def("nrmse", &nrmse, py::arg("fit"), py::arg("target"));

  m.def("frequency_system",
        [](const ModalReservoir& modal, const MultiSineSignal& u, const MultiSineSignal& y) {
          const auto s = build_frequency_system(modal, u, y);
          return std::make_tuple(s.omega_tilde, s.b, s.weights_w);
        },
        py::arg("modal"), py::arg("u"), py::arg("y"), "Returns (omega_tilde, b, W).");

  m.def("frequency_fit",
        [](const ModalReservoir& modal, const MultiSineSignal& u, const MultiSineSignal& y,
           double beta) {
          return frequency_fit(build_frequency_system(modal, u, y), beta, SingularPolicy::MinimumNorm)
              .kappa;
        },
        py::arg("modal"), py::arg("u"), py::arg("y"), py::arg("beta"));

  m.def("reduced_cost",
        [](const Eigen::VectorXd& lambdas, const MultiSineSignal& u, const MultiSineSignal& y,
           const Eigen::VectorXd& c, double beta1, double beta2, double gamma) {
          const CostContext ctx(u, y, gamma, c, beta1, beta2);
          const auto r = reduced_cost(lambdas, ctx);
          return py::dict(py::arg("total") = r.parts.total,
                          py::arg("weighted_error_sq") = r.parts.weighted_error_sq,
                          py::arg("kappa_penalty") = r.parts.kappa_penalty,
                          py::arg("spread_penalty") = r.parts.spread_penalty,
                          py::arg("kappa") = r.kappa, py::arg("gradient") = r.gradient);
        },
        py::arg("lambdas"), py::arg("u"), py::arg("y"), py::arg("c"), py::arg("beta1") = 1e-7,
        py::arg("beta2") = 1e-1, py::arg("gamma") = 6.0);

  m.def("harmonic_spread", &harmonic_spread, py::arg("lambdas"));

  m.def("optimize",
        [](const MultiSineSignal& u, const MultiSineSignal& y, const Eigen::VectorXd& c,
           const py::kwargs& kw) {
          OptimizerConfig cfg = optimizer_config(kw);
          cfg.n_modes = static_cast<int>(c.size());
          const auto r = optimize(cfg, u, y, c);
          py::list history;
          for (const auto& rec : r.restart_history) {
            history.append(py::dict(py::arg("init_lambdas") = rec.init_lambdas,
                                    py::arg("final_lambdas") = rec.final_lambdas,
                                    py::arg("final_error") = rec.final_error,
                                    py::arg("converged") = rec.converged));
          }
          return py::dict(py::arg("lambdas") = r.lambdas, py::arg("kappa") = r.kappa,
                          py::arg("lowest_error") = r.lowest_error, py::arg("m") = r.m,
                          py::arg("theta") = r.theta, py::arg("restarts") = history,
                          py::arg("warnings") = r.warnings);
        },
        py::arg("u"), py::arg("y"), py::arg("c"),
        "Multi-start eigenvalue design; keyword arguments override optimizer settings.");

  m.def("run_method",
        [](const std::string& method, int n, const MultiSineSignal& u, const MultiSineSignal& y,
           std::uint64_t seed, int restarts) {
          PipelineConfig cfg;
          cfg.optimizer.restarts = restarts;
          const auto r = run_method(parse_method(method), n, u, y, seed, cfg);
          return std::make_pair(r.nrmse_train, r.nrmse_test);
        },
        py::arg("method"), py::arg("n"), py::arg("u"), py::arg("y"), py::arg("seed") = 0,
        py::arg("restarts") = 50, "Returns (train NRMSE, test NRMSE).");

  m.def("run_command",
        [](const std::string& command, const std::string& config_text,
           const std::vector<std::string>& overrides, const std::string& out_dir, bool force,
           int jobs) {
          const RunConfig cfg = parse_config(config_text, overrides);
          RunOptions opt;
          opt.out_dir = out_dir;
          opt.force = force;
          opt.jobs = jobs;
          std::ostringstream out, err;
          const int code = run_command(command, cfg, opt, out, err);
          return std::make_tuple(code, out.str(), err.str());
        },
        py::arg("command"), py::arg("config_text") = "", py::arg("overrides") = std::vector<std::string>{},
        py::arg("out_dir") = ".", py::arg("force") = false, py::arg("jobs") = 1,
        "Runs a CLI experiment; returns (exit code, stdout, stderr).");
}
