// Python bindings. Configuration crosses the boundary as JSON text; the
// Python package wraps that in dict-friendly helpers.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sdbench/commands.hpp"
#include "sdbench/config.hpp"
#include "sdbench/errors.hpp"
#include "sdbench/experiments.hpp"
#include "sdbench/landscape.hpp"
#include "sdbench/optimizers.hpp"
#include "sdbench/registry.hpp"
#include "sdbench/stats.hpp"

namespace py = pybind11;
using namespace sdbench;

namespace {

py::dict minimum_to_dict(const MinimumSpec& m) {
  py::dict d;
  d["label"] = m.label;
  d["location"] = m.location;
  d["value"] = m.value;
  d["kind"] = m.kind == MinimumKind::Global ? "global" : "local";
  d["sharpness"] = m.sharpness ? py::cast(*m.sharpness) : py::none();
  return d;
}

py::dict trajectory_to_dict(const Trajectory& t) {
  py::list samples;
  for (const auto& s : t.samples) {
    py::dict d;
    d["grad_evals"] = s.grad_evals;
    d["params"] = s.params;
    d["loss"] = s.loss;
    samples.append(d);
  }
  py::dict d;
  d["endpoint"] = t.endpoint;
  d["samples"] = samples;
  d["grad_evals"] = t.total_grad_evals;
  d["updates"] = t.updates;
  d["diverged"] = t.diverged;
  d["accepted_losses"] = t.accepted_losses;
  return d;
}

py::dict stat_to_dict(const stats::StatTestResult& r) {
  py::dict d;
  d["method"] = r.method_name();
  d["statistic"] = r.statistic;
  d["p_value"] = r.p_value;
  d["exact"] = r.exact;
  d["n1"] = r.n1;
  d["n2"] = r.n2;
  return d;
}

stats::MwuMode parse_mode(const std::string& mode) {
  if (mode == "auto") return stats::MwuMode::Auto;
  if (mode == "exact") return stats::MwuMode::Exact;
  if (mode == "approx") return stats::MwuMode::Approx;
  throw ArgumentError("mode must be auto, exact or approx, got '" + mode + "'");
}

// Landscape defaults for `algorithm`, then any overrides given as keywords.
OptimizerConfig optimizer_config(const Landscape& l, const std::string& algorithm, const py::kwargs& kw) {
  auto cfg = landscape_defaults(parse_algorithm(algorithm), l.domain());
  for (const auto& [key, value] : kw) {
    const auto k = py::cast<std::string>(key);
    if (k == "eta") cfg.eta = py::cast<double>(value);
    else if (k == "rho") cfg.rho = py::cast<double>(value);
    else if (k == "budget") cfg.budget = py::cast<std::size_t>(value);
    else if (k == "tau") cfg.tau = py::cast<std::size_t>(value);
    else if (k == "epsilon") cfg.epsilon = py::cast<double>(value);
    else if (k == "sam_restore") cfg.sam_restore = py::cast<bool>(value);
    else if (k == "normalize_gradient") cfg.normalize_gradient = py::cast<bool>(value);
    else throw ArgumentError("unknown optimizer option '" + k + "'");
  }
  cfg.validate();
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Stationary-distribution benchmark core";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);
  py::register_exception<BoundaryError>(m, "BoundaryError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_RuntimeError);

  m.def("landscape_names", &landscape_names);
  m.def("algorithm_names", [] {
    std::vector<std::string> out;
    for (Algorithm a : all_algorithms()) out.emplace_back(algorithm_name(a));
    return out;
  });

  m.def("evaluate", [](const std::string& name, const ParamVector& x) { return make_landscape(name).eval(x); },
        py::arg("landscape"), py::arg("x"));
  m.def("gradient", [](const std::string& name, const ParamVector& x) { return make_landscape(name).grad(x); },
        py::arg("landscape"), py::arg("x"));
  m.def("domain", [](const std::string& name) {
    std::vector<std::pair<double, double>> out;
    const auto l = make_landscape(name);
    for (const auto& b : l.domain().bounds()) out.emplace_back(b.lo, b.hi);
    return out;
  });
  m.def("registry", [](const std::string& name) {
    py::list out;
    const auto l = make_landscape(name);
    for (const auto& e : l.registry()) out.append(minimum_to_dict(e));
    return out;
  });
  m.def("classify", [](const std::string& name, const ParamVector& x, double radius) {
    return classify(make_landscape(name), x, radius).name();
  }, py::arg("landscape"), py::arg("x"), py::arg("radius") = 0.25);
  m.def("refine_registry", [](const std::string& name, std::size_t grid_n) {
    py::list out;
    const auto l = make_landscape(name);
    for (const auto& e : refine_registry(l, grid_n)) out.append(minimum_to_dict(e));
    return out;
  }, py::arg("landscape"), py::arg("grid_n") = 100);

  m.def("run_trajectory",
        [](const std::string& name, const std::string& algorithm, std::uint64_t seed, std::size_t record_every,
           std::optional<ParamVector> start, const py::kwargs& kw) {
          auto l = make_landscape(name);
          const auto cfg = optimizer_config(l, algorithm, kw);
          Rng rng(seed);
          auto w0 = start ? *start : sample_uniform(l, rng);
          Trajectory t;
          {
            py::gil_scoped_release release;
            t = run_trajectory(l, std::move(w0), cfg, rng, record_every);
          }
          return trajectory_to_dict(t);
        },
        py::arg("landscape"), py::arg("algorithm"), py::arg("seed") = 0, py::arg("record_every") = 0,
        py::arg("start") = py::none());

  m.def("stationary_distribution",
        [](const std::string& name, const std::string& algorithm, std::size_t restarts, std::uint64_t seed,
           std::size_t workers, const py::kwargs& kw) {
          const auto l = make_landscape(name);
          StationaryRunConfig rc;
          rc.landscape = name;
          rc.optimizer = optimizer_config(l, algorithm, kw);
          rc.restarts = restarts;
          rc.master_seed = seed;
          rc.workers = workers;
          BasinHistogram h;
          {
            py::gil_scoped_release release;
            h = stationary_distribution(l, rc);
          }
          py::dict counts;
          for (std::size_t i = 0; i < h.labels.size(); ++i) counts[py::str(h.labels[i])] = h.counts[i];
          py::dict pct;
          for (const auto& [label, p] : percentages(h)) pct[py::str(label)] = p;
          py::dict d;
          d["counts"] = counts;
          d["percentages"] = pct;
          d["total"] = h.total;
          d["diverged"] = h.diverged;
          return d;
        },
        py::arg("landscape"), py::arg("algorithm"), py::arg("restarts") = 500, py::arg("seed") = 0,
        py::arg("workers") = 0);

  m.def("mann_whitney_u",
        [](const std::vector<double>& a, const std::vector<double>& b, const std::string& mode) {
          return stat_to_dict(stats::mann_whitney_u(a, b, parse_mode(mode)));
        },
        py::arg("a"), py::arg("b"), py::arg("mode") = "auto");
  m.def("t_test",
        [](const std::vector<double>& a, const std::vector<double>& b, bool equal_variance) {
          return stat_to_dict(stats::t_test(a, b, equal_variance));
        },
        py::arg("a"), py::arg("b"), py::arg("equal_variance") = true);

  m.def("validate_config", [](const std::string& text) {
    return config::validate(nlohmann::json::parse(text), config::experiment_schema());
  });
  m.def("command_names", &cli::command_names);
  m.def("run_command", [](const std::string& name, const std::string& config_text) {
    const auto cfg = config::parse_config_text(config_text);
    cli::CommandResult r;
    {
      py::gil_scoped_release release;
      r = cli::run_command(name, cfg);
    }
    py::list tables;
    for (const auto& t : r.tables) tables.append(report::render_json(t));
    py::dict files;
    for (const auto& f : r.files) files[py::str(f.name)] = f.content;
    py::dict d;
    d["tables"] = tables;
    d["files"] = files;
    d["messages"] = r.messages;
    d["exit_code"] = r.exit_code;
    return d;
  }, py::arg("command"), py::arg("config_json"));
}
