#include "sdbench/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "sdbench/errors.hpp"
#include "sdbench/experiments.hpp"
#include "sdbench/registry.hpp"
#include "sdbench/stats.hpp"

namespace sdbench::cli {

using config::ExperimentConfig;
using report::CellFormat;
using report::ReportRow;
using report::ReportTable;

namespace {

std::string num(double v, const char* fmt = "%.12g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::string point_text(std::span<const double> p) {
  std::string s = "(";
  for (std::size_t i = 0; i < p.size(); ++i) s += (i ? ", " : "") + num(p[i], "%.6g");
  return s + ")";
}

OutputFile table_file(const std::string& stem, const ReportTable& t, const std::string& format) {
  if (format == "json") return {stem + ".json", report::render_json(t)};
  return {stem + ".csv", report::render_csv(t)};
}

/// File-name stems per optimizer; repeated algorithms get "-2", "-3", ...
std::vector<std::string> stems_of(const std::vector<OptimizerConfig>& opts) {
  std::map<std::string, int> seen;
  std::vector<std::string> out;
  for (const auto& o : opts) {
    std::string base(algorithm_name(o.algorithm));
    const int n = ++seen[base];
    out.push_back(n == 1 ? base : base + "-" + std::to_string(n));
  }
  return out;
}

Landscape landscape_of(const ExperimentConfig& cfg, const char* command) {
  if (!cfg.landscape) throw ConfigError(std::string(command) + " needs a \"landscape\" section");
  try {
    return config::build_landscape(*cfg.landscape);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("landscape: ") + e.what());
  }
}

std::vector<OptimizerConfig> optimizers_or(const ExperimentConfig& cfg,
                                           const std::vector<Algorithm>& fallback,
                                           const Landscape* landscape) {
  if (!cfg.optimizers.empty()) return cfg.optimizers;
  std::vector<OptimizerConfig> out;
  for (Algorithm a : fallback)
    out.push_back(landscape ? landscape_defaults(a, landscape->domain()) : task_defaults(a));
  return out;
}

const std::vector<Algorithm> kPopulationAlgorithms = {
    Algorithm::GD, Algorithm::NiG, Algorithm::NiM, Algorithm::SAM, Algorithm::NiGBH, Algorithm::NiMBH};

/// What population-style commands optimize.
struct Target {
  std::string name;         // row label, e.g. "toy blobs" or "himmelblau"
  std::string metric_name;  // "macro-F1", "accuracy" or "-loss"
  ObjectiveFactory factory;
  std::optional<Landscape> landscape;
};

Target target_of(const ExperimentConfig& cfg) {
  Target t;
  if (cfg.landscape) {
    t.landscape = landscape_of(cfg, "this command");
    t.name = t.landscape->name();
    t.metric_name = "-loss";
    t.factory = landscape_factory(*t.landscape);
    return t;
  }
  const toy::TaskSpec spec = cfg.task.value_or(toy::TaskSpec{});
  std::shared_ptr<const toy::ToyDataset> data;
  try {
    data = std::make_shared<const toy::ToyDataset>(toy::make_dataset(spec.dataset));
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("task dataset: ") + e.what());
  }
  if (data->train.empty() || data->test.empty())
    throw ConfigError("task dataset: both splits need at least one example");
  t.name = std::holds_alternative<toy::BlobsSpec>(spec.dataset.generator) ? "toy-blobs"
                                                                          : "toy-spirals";
  t.metric_name = spec.metric == toy::Metric::Accuracy ? "accuracy" : "macro-F1";
  t.factory = toy::task_factory(spec, data);
  return t;
}

struct Populations {
  ModelPopulation set_a;
  ModelPopulation set_b;
};

/// SetA and SetB come from the same Tr trajectories.
Populations populations_for(const Target& target, const OptimizerConfig& opt,
                            const ExperimentConfig& cfg) {
  if (cfg.trajectories * cfg.models_per_trajectory < 2)
    throw ConfigError("population needs trajectories * models_per_trajectory >= 2");
  auto trajectories = run_trajectories(target.factory, opt, cfg.trajectories, cfg.seed,
                                       cfg.record_every, cfg.workers);
  PopulationConfig pc{cfg.trajectories, cfg.models_per_trajectory, SelectionCriterion::LowestLoss};
  Populations p;
  p.set_a = select_population(trajectories, pc);
  pc.criterion = SelectionCriterion::HighestMetric;
  p.set_b = select_population(trajectories, pc);
  return p;
}

std::string population_csv(const Populations& p) {
  std::ostringstream os;
  os << "set,trajectory,grad_evals,loss,metric\n";
  auto emit = [&](const ModelPopulation& pop, const char* set) {
    for (const auto& r : pop.records)
      os << set << ',' << r.trajectory << ',' << r.grad_evals << ',' << num(r.loss) << ','
         << (r.metric ? num(*r.metric) : std::string("nan")) << '\n';
  };
  emit(p.set_a, "A");
  emit(p.set_b, "B");
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------

CommandResult cmd_stationary(const ExperimentConfig& cfg) {
  const Landscape land = landscape_of(cfg, "stationary");
  const auto opts = optimizers_or(cfg, all_algorithms(), &land);
  const auto stems = stems_of(opts);
  CommandResult res;

  ReportTable table;
  table.title = "Stationary distribution (%) on " + land.name() + ", R = " +
                std::to_string(cfg.restarts);
  table.format = CellFormat::Percent;
  for (const auto& m : land.registry()) table.columns.push_back(m.label);
  table.columns.push_back("Else");

  std::ostringstream endpoints;
  endpoints << "x,y,label,algorithm,seed\n";
  for (std::size_t i = 0; i < opts.size(); ++i) {
    StationaryRunConfig rc;
    rc.optimizer = opts[i];
    rc.restarts = cfg.restarts;
    rc.basin_radius = cfg.basin_radius;
    rc.master_seed = cfg.seed;
    rc.record_every = cfg.record_every;
    rc.workers = cfg.workers;
    const BasinHistogram h = stationary_distribution(land, rc);
    const auto pct = report::reconcile_percentages(h.counts);
    table.rows.push_back({stems[i], pct});

    std::ostringstream hist;
    hist << "label,count,percent\n";
    for (std::size_t k = 0; k < h.labels.size(); ++k)
      hist << h.labels[k] << ',' << h.counts[k] << ',' << report::format_value(pct[k], CellFormat::Percent)
           << '\n';
    res.files.push_back({"histogram_" + land.name() + "_" + stems[i] + ".csv", hist.str()});

    Rng pick(derive_seed(cfg.seed, 0x656e64706f696e74ULL + i));
    const std::size_t k = std::min(cfg.endpoints_k, h.endpoints.size());
    for (const auto& e : export_endpoints(h, k, pick)) {
      const double x = e.point.size() > 0 ? e.point[0] : 0.0;
      const double y = e.point.size() > 1 ? e.point[1] : 0.0;
      endpoints << num(x) << ',' << num(y) << ',' << e.label.name() << ',' << stems[i] << ','
                << e.seed << '\n';
    }
    if (h.diverged > 0)
      res.messages.push_back(stems[i] + ": " + std::to_string(h.diverged) + " of " +
                             std::to_string(h.total) + " trajectories diverged (counted as Else)");
  }
  res.files.push_back({"endpoints_" + land.name() + ".csv", endpoints.str()});
  res.files.push_back(table_file("stationary_" + land.name(), table, cfg.format));
  res.tables.push_back(std::move(table));
  return res;
}

CommandResult cmd_population(const ExperimentConfig& cfg) {
  const Target target = target_of(cfg);
  const auto opts = optimizers_or(cfg, kPopulationAlgorithms,
                                  target.landscape ? &*target.landscape : nullptr);
  const auto stems = stems_of(opts);
  CommandResult res;

  ReportTable on_metric, on_loss, summary;
  on_metric.title = "SetA vs SetB p-values on test " + target.metric_name + " (" + target.name +
                    ", Tr = " + std::to_string(cfg.trajectories) +
                    ", L = " + std::to_string(cfg.models_per_trajectory) + ")";
  on_loss.title = "SetA vs SetB p-values on training loss (" + target.name + ")";
  on_metric.columns = on_loss.columns = {"MWU", "t-test"};
  on_metric.format = on_loss.format = CellFormat::PValue;
  summary.title = "Population summaries, (median, std) of " + target.metric_name + " and loss";
  summary.columns = {"A metric median", "A metric std", "B metric median", "B metric std",
                     "A loss median",   "A loss std",   "B loss median",   "B loss std"};

  for (std::size_t i = 0; i < opts.size(); ++i) {
    const Populations p = populations_for(target, opts[i], cfg);
    const auto ma = p.set_a.metrics(), mb = p.set_b.metrics();
    const auto la = p.set_a.losses(), lb = p.set_b.losses();
    on_metric.rows.push_back({stems[i],
                              {stats::mann_whitney_u(ma, mb).p_value, stats::t_test(ma, mb).p_value}});
    on_loss.rows.push_back({stems[i],
                            {stats::mann_whitney_u(la, lb).p_value, stats::t_test(la, lb).p_value}});
    std::vector<double> cells;
    for (const auto* v : {&ma, &mb, &la, &lb}) {
      const auto s = stats::summarize(*v);
      cells.push_back(s.median);
      cells.push_back(s.std);
    }
    summary.rows.push_back({stems[i], std::move(cells)});
    res.files.push_back({"population_" + target.name + "_" + stems[i] + ".csv", population_csv(p)});
  }
  res.files.push_back(table_file("pvalues_metric_" + target.name, on_metric, cfg.format));
  res.files.push_back(table_file("pvalues_loss_" + target.name, on_loss, cfg.format));
  res.files.push_back(table_file("summary_" + target.name, summary, cfg.format));
  res.tables = {std::move(on_metric), std::move(on_loss), std::move(summary)};
  return res;
}

CommandResult cmd_compare(const ExperimentConfig& cfg) {
  const Target target = target_of(cfg);
  const auto opts = optimizers_or(cfg, kPopulationAlgorithms,
                                  target.landscape ? &*target.landscape : nullptr);
  if (opts.size() < 2) throw ConfigError("compare needs at least two optimizers");
  const auto stems = stems_of(opts);

  auto index_of = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < stems.size(); ++i)
      if (stems[i] == name) return i;
    Algorithm a;
    try {
      a = parse_algorithm(name);
    } catch (const ArgumentError& e) {
      throw ConfigError(std::string("pairs: ") + e.what());
    }
    for (std::size_t i = 0; i < opts.size(); ++i)
      if (opts[i].algorithm == a) return i;
    throw ConfigError("pairs: " + name + " is not among the configured optimizers");
  };
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  if (cfg.pairs.empty()) {
    for (std::size_t i = 0; i < opts.size(); ++i)
      for (std::size_t j = i + 1; j < opts.size(); ++j) pairs.emplace_back(i, j);
  } else {
    for (const auto& [a, b] : cfg.pairs) pairs.emplace_back(index_of(a), index_of(b));
  }

  std::vector<std::optional<std::vector<double>>> metric(opts.size());
  for (const auto& [i, j] : pairs)
    for (std::size_t k : {i, j})
      if (!metric[k]) metric[k] = populations_for(target, opts[k], cfg).set_a.metrics();

  ReportTable table;
  table.title = "Pairwise MWU p-values on SetA test " + target.metric_name;
  table.row_header = "task";
  table.format = CellFormat::PValue;
  ReportRow row{target.name, {}};
  for (const auto& [i, j] : pairs) {
    table.columns.push_back(stems[i] + " vs " + stems[j]);
    row.values.push_back(stats::mann_whitney_u(*metric[i], *metric[j]).p_value);
  }
  table.rows.push_back(std::move(row));
  CommandResult res;
  res.files.push_back(table_file("compare_" + target.name, table, cfg.format));
  res.tables.push_back(std::move(table));
  return res;
}

CommandResult cmd_curves(const ExperimentConfig& cfg) {
  const Target target = target_of(cfg);
  const auto opts = optimizers_or(cfg, kPopulationAlgorithms,
                                  target.landscape ? &*target.landscape : nullptr);
  const auto stems = stems_of(opts);
  // One sample per update unless the config asks otherwise.
  const std::size_t every = cfg.record_every == 0 ? 1 : cfg.record_every;

  ReportTable table;
  table.title = "Learning curves on " + target.name + " (trajectory 0, window " +
                std::to_string(cfg.window) + ")";
  table.columns = {"updates", "grad evals", "rows", "final loss", "final smoothed"};
  table.column_formats = {CellFormat::Integer, CellFormat::Integer, CellFormat::Integer,
                          CellFormat::Fixed4, CellFormat::Fixed4};
  CommandResult res;
  for (std::size_t i = 0; i < opts.size(); ++i) {
    auto trajs = run_trajectories(target.factory, opts[i], 1, cfg.seed, every, cfg.workers);
    const auto curve = learning_curve(trajs[0], cfg.window);
    std::ostringstream os;
    os << "grad_evals,loss,smoothed_loss\n";
    for (const auto& c : curve) os << c.grad_evals << ',' << num(c.loss) << ',' << num(c.smoothed) << '\n';
    res.files.push_back({"curve_" + target.name + "_" + stems[i] + ".csv", os.str()});
    table.rows.push_back({stems[i],
                          {static_cast<double>(trajs[0].updates),
                           static_cast<double>(trajs[0].total_grad_evals),
                           static_cast<double>(curve.size()), curve.back().loss,
                           curve.back().smoothed}});
    if (trajs[0].diverged) res.messages.push_back(stems[i] + ": trajectory 0 diverged");
  }
  res.files.push_back(table_file("curves_" + target.name, table, cfg.format));
  res.tables.push_back(std::move(table));
  return res;
}

// ---------------------------------------------------------------------------

GradcheckPoint check_gradient(const GradcheckSubject& s, std::span<const double> point,
                              double h) {
  ParamVector g(point.size());
  s.gradient(point, g);
  ParamVector x(point.begin(), point.end());
  GradcheckPoint worst;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double up = s.value(x);
    x[i] = orig - h;
    const double down = s.value(x);
    x[i] = orig;
    const double numeric = (up - down) / (2.0 * h);
    const double scale = std::max({1.0, std::abs(g[i]), std::abs(numeric)});
    double err = std::abs(g[i] - numeric) / scale;
    if (std::isnan(err)) err = std::numeric_limits<double>::infinity();
    if (err > worst.error || i == 0) worst = {err, i, g[i], numeric};
  }
  return worst;
}

namespace {

GradcheckSubject landscape_subject(const Landscape& l, double tol, double margin) {
  GradcheckSubject s;
  s.name = l.name();
  s.value = [l](std::span<const double> w) { return l.eval(w); };
  s.gradient = [l](std::span<const double> w, std::span<double> g) { l.evaluate(w, g); };
  std::vector<Bounds> inner;
  for (const auto& b : l.domain().bounds()) inner.push_back({b.lo + margin, b.hi - margin});
  const Domain shrunk(inner);
  s.sample = [shrunk](Rng& rng) { return sample_uniform(shrunk, rng); };
  s.tolerance = tol;
  return s;
}

GradcheckSubject mlp_subject(const config::GradcheckOptions& o, std::uint64_t seed) {
  toy::DatasetSpec ds;
  ds.generator = toy::BlobsSpec{3, {4, 4, 4}, 2.0, 0.5};
  ds.test_fraction = 0.0;
  ds.seed = seed;
  auto data = std::make_shared<const toy::ToyDataset>(toy::make_dataset(ds));
  const auto shape = toy::MlpShape::standard(3, o.mlp_hidden);
  GradcheckSubject s;
  s.name = "mlp-2-" + std::to_string(o.mlp_hidden) + "-" + std::to_string(o.mlp_hidden) + "-3";
  s.value = [data, shape](std::span<const double> w) { return toy::mlp_loss(shape, w, data->train); };
  s.gradient = [data, shape](std::span<const double> w, std::span<double> g) {
    toy::mlp_loss_grad(shape, w, data->train, g);
  };
  s.sample = [shape](Rng& rng) { return toy::init_params(shape, rng); };
  s.tolerance = o.mlp_tolerance;
  return s;
}

}  // namespace

CommandResult cmd_gradcheck(const ExperimentConfig& cfg, const std::vector<GradcheckSubject>& extra) {
  const auto& o = cfg.gradcheck;
  std::vector<std::pair<GradcheckSubject, std::size_t>> subjects;
  const double margin = 2.0 * o.step;
  if (cfg.landscape) {
    subjects.emplace_back(landscape_subject(landscape_of(cfg, "gradcheck"), o.tolerance, margin),
                          o.points);
  } else {
    for (const auto& name : landscape_names())
      subjects.emplace_back(landscape_subject(make_landscape(name), o.tolerance, margin), o.points);
  }
  if (o.mlp_points > 0) subjects.emplace_back(mlp_subject(o, cfg.seed), o.mlp_points);
  for (const auto& s : extra) subjects.emplace_back(s, o.points);

  CommandResult res;
  ReportTable table;
  table.title = "Gradient check, central differences with h = " + num(o.step, "%g");
  table.row_header = "objective";
  table.columns = {"points", "max error", "tolerance", "failures"};
  table.column_formats = {CellFormat::Integer, CellFormat::Scientific, CellFormat::Scientific,
                          CellFormat::Integer};
  for (std::size_t si = 0; si < subjects.size(); ++si) {
    const auto& [s, n] = subjects[si];
    Rng rng(derive_seed(cfg.seed, si));
    double worst = 0.0;
    std::size_t failures = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const ParamVector p = s.sample(rng);
      const auto r = check_gradient(s, p, o.step);
      worst = std::max(worst, r.error);
      if (!(r.error <= s.tolerance)) {
        ++failures;
        const std::string where = p.size() <= 4 ? point_text(p) : "#" + std::to_string(k);
        res.messages.push_back("FAIL " + s.name + " at point " + where + ", coordinate " +
                               std::to_string(r.coordinate) + ": analytic " + num(r.analytic) +
                               ", numeric " + num(r.numeric) + ", error " + num(r.error, "%.3e"));
      }
    }
    table.rows.push_back({s.name, {static_cast<double>(n), worst, s.tolerance,
                                   static_cast<double>(failures)}});
    if (failures > 0) res.exit_code = 1;
  }
  res.files.push_back(table_file("gradcheck", table, cfg.format));
  res.tables.push_back(std::move(table));
  return res;
}

CommandResult cmd_refine_minima(const ExperimentConfig& cfg) {
  const Landscape land = landscape_of(cfg, "refine-minima");
  std::vector<MinimumSpec> reference = land.registry();
  if (cfg.reference) {
    try {
      reference = load_registry(*cfg.reference);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("reference: ") + e.what());
    }
  }
  const auto refined = refine_registry(land, cfg.grid_n);

  CommandResult res;
  ReportTable table;
  table.title = "Refined minima of " + land.name() + " (grid " + std::to_string(cfg.grid_n) +
                ") against the reference registry";
  table.row_header = "reference";
  table.columns = {"distance", "listed value", "f at listed", "refined value", "refined sharpness"};
  table.column_formats = {CellFormat::Scientific, CellFormat::General, CellFormat::General,
                          CellFormat::General, CellFormat::General};
  constexpr double kPosTol = 1e-3, kValueTol = 1e-6;
  std::vector<bool> matched(refined.size(), false);
  for (const auto& ref : reference) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < refined.size(); ++i) {
      const double d = distance(ref.location, refined[i].location);
      if (d < best_d) best_d = d, best = i;
    }
    double at_listed = std::numeric_limits<double>::quiet_NaN();
    if (ref.location.size() == land.dimension()) at_listed = land.eval(ref.location);
    if (refined.empty()) {
      table.rows.push_back({ref.label, {best_d, ref.value, at_listed, NAN, NAN}});
      continue;
    }
    const auto& r = refined[best];
    if (best_d <= kPosTol) matched[best] = true;
    table.rows.push_back({ref.label, {best_d, ref.value, at_listed, r.value, r.sharpness.value_or(NAN)}});
    if (best_d > kPosTol)
      res.messages.push_back(ref.label + " listed at " + point_text(ref.location) +
                             ": nearest refined minimum " + r.label + " at " +
                             point_text(r.location) + " is " + num(best_d, "%.4g") + " away");
    if (!(std::abs(ref.value - at_listed) <= kValueTol))
      res.messages.push_back(ref.label + " listed value " + num(ref.value, "%.10g") +
                             " but f at the listed location is " + num(at_listed, "%.10g"));
  }
  for (std::size_t i = 0; i < refined.size(); ++i)
    if (!matched[i])
      res.messages.push_back("refined minimum " + refined[i].label + " at " +
                             point_text(refined[i].location) + " (f = " +
                             num(refined[i].value, "%.10g") + ") matches no reference entry");

  res.files.push_back({"registry_" + land.name() + ".json", registry_to_json(refined)});
  res.files.push_back(table_file("refine_" + land.name(), table, cfg.format));
  res.tables.push_back(std::move(table));
  return res;
}

std::vector<std::string> command_names() {
  return {"stationary", "population", "compare", "curves", "gradcheck", "refine-minima"};
}

CommandResult run_command(const std::string& name, const ExperimentConfig& cfg) {
  if (name == "stationary") return cmd_stationary(cfg);
  if (name == "population") return cmd_population(cfg);
  if (name == "compare") return cmd_compare(cfg);
  if (name == "curves") return cmd_curves(cfg);
  if (name == "gradcheck") return cmd_gradcheck(cfg);
  if (name == "refine-minima") return cmd_refine_minima(cfg);
  throw ConfigError("unknown command '" + name + "'");
}

void write_outputs(const CommandResult& result, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  for (const auto& f : result.files) {
    std::ofstream out(out_dir / f.name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (out_dir / f.name).string());
    out << f.content;
  }
}

}  // namespace sdbench::cli
