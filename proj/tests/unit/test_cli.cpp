#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <numeric>
#include <random>
#include <sstream>

#include "sdbench/commands.hpp"
#include "sdbench/errors.hpp"
#include "sdbench/registry.hpp"

using namespace sdbench;
using namespace sdbench::report;
using namespace sdbench::cli;
using nlohmann::json;

namespace {

config::ExperimentConfig cfg_from(const char* text) { return config::parse_config_text(text); }

const ReportTable& table_titled(const CommandResult& r, const std::string& prefix) {
  for (const auto& t : r.tables)
    if (t.title.rfind(prefix, 0) == 0) return t;
  FAIL("no table titled " << prefix);
  throw std::logic_error("unreachable");
}

const OutputFile& file_named(const CommandResult& r, const std::string& name) {
  for (const auto& f : r.files)
    if (f.name == name) return f;
  FAIL("no output file " << name);
  throw std::logic_error("unreachable");
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("percent reconciliation sums to exactly 100") {
  CHECK(reconcile_percentages({1, 1, 1}) == std::vector<double>{33.34, 33.33, 33.33});
  CHECK(reconcile_percentages({1, 0}) == std::vector<double>{100.0, 0.0});
  CHECK(reconcile_percentages({160, 175, 165, 0}) == std::vector<double>{32, 35, 33, 0});
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::size_t> d(0, 40);
  for (int k = 0; k < 200; ++k) {
    std::vector<std::size_t> c(2 + k % 6);
    for (auto& x : c) x = d(rng);
    c[0] += 1;
    const auto p = reconcile_percentages(c);
    long hundredths = 0;
    for (double v : p) hundredths += std::lround(v * 100);
    CHECK(hundredths == 10000);
    double sum = 0;
    for (double v : p) sum += std::stod(format_value(v, CellFormat::Percent));
    CHECK(std::abs(sum - 100.0) <= 0.01);
  }
  CHECK_THROWS_AS(reconcile_percentages({0, 0}), ArgumentError);
}

TEST_CASE("table rendering") {
  ReportTable t;
  t.title = "p";
  t.columns = {"MWU", "t-test"};
  t.format = CellFormat::PValue;
  t.rows = {{"GD", {0.01234, 0.5}}, {"SAM", {1.0, 0.049999}}};
  const auto text = render_text(t);
  CHECK(text.find("0.0123*") != std::string::npos);
  CHECK(text.find("0.0500*") != std::string::npos);
  CHECK(text.find("0.5000*") == std::string::npos);
  CHECK(text.find("* p < 0.05") != std::string::npos);
  CHECK(render_csv(t) == "algorithm,MWU,t-test\nGD,0.0123,0.5000\nSAM,1.0000,0.0500\n");
  const auto j = to_json(t);
  CHECK(j["title"] == "p");
  CHECK(j["columns"] == json::array({"MWU", "t-test"}));
  CHECK(j["rows"][0]["name"] == "GD");
  CHECK(j["rows"][0]["values"][0].get<double>() == 0.0123);
  CHECK(format_value(12.345, CellFormat::Percent) == "12.35");
  CHECK(format_value(INFINITY, CellFormat::Fixed4) == "inf");
  t.rows[0].values[0] = NAN;
  CHECK(to_json(t)["rows"][0]["values"][0] == "nan");
}

TEST_CASE("schema validator") {
  const json schema = json::parse(R"({
    "type": "object", "additionalProperties": false, "required": ["a"],
    "properties": {
      "a": {"type": "integer", "minimum": 1},
      "b": {"type": "array", "maxItems": 2, "items": {"$ref": "#/$defs/s"}},
      "c": {"enum": ["x", "y"]},
      "d": {"type": "number", "exclusiveMaximum": 1}
    },
    "$defs": {"s": {"type": "string", "minLength": 2}}})");
  CHECK(config::validate(json::parse(R"({"a": 3, "b": ["ab"], "c": "x", "d": 0.5})"), schema).empty());
  const auto errs = config::validate(
      json::parse(R"({"a": 0, "b": ["a", "bc", "cd"], "c": "z", "d": 1, "e": 1})"), schema);
  CHECK(errs.size() == 6);
  CHECK(std::find(errs.begin(), errs.end(), "/: unknown key \"e\"") != errs.end());
  CHECK(std::find(errs.begin(), errs.end(), "/b/0: string shorter than 2") != errs.end());
  CHECK(config::validate(json::parse(R"({})"), schema).front() == "/: missing required key \"a\"");
  CHECK(config::validate(json::parse(R"({"a": 1.5})"), schema).front() ==
        "/a: expected \"integer\", got number");
}

TEST_CASE("experiment configuration") {
  const auto c = cfg_from(R"({"seed": 4, "landscape": {"name": "six_hump_camel"},
                              "optimizers": [{"algorithm": "SAM"}, {"algorithm": "NiG-GD", "rho": 15,
                                              "normalize_gradient": false}],
                              "restarts": 40})");
  CHECK(c.seed == 4);
  CHECK(c.restarts == 40);
  REQUIRE(c.optimizers.size() == 2);
  CHECK(c.optimizers[0] == landscape_defaults(Algorithm::SAM, six_hump_camel().domain()));
  CHECK(c.optimizers[1].rho == 15.0);
  CHECK_FALSE(c.optimizers[1].normalize_gradient);

  const auto t = cfg_from(R"({"task": {"dataset": {"counts": [30, 10]}, "metric": "accuracy"},
                              "optimizers": [{"algorithm": "SGD"}]})");
  CHECK(t.optimizers[0] == task_defaults(Algorithm::GD));
  REQUIRE(t.task);
  CHECK(std::get<toy::BlobsSpec>(t.task->dataset.generator).classes == 2);
  CHECK(t.task->metric == toy::Metric::Accuracy);

  CHECK_THROWS_AS(cfg_from(R"({"restarts": 0})"), ConfigError);
  CHECK_THROWS_AS(cfg_from(R"({"restart": 10})"), ConfigError);
  CHECK_THROWS_AS(cfg_from(R"({"landscape": {"name": "rosenbrock"}})"), ConfigError);
  CHECK_THROWS_AS(cfg_from(R"({"landscape": {"name": "himmelblau"}, "task": {}})"), ConfigError);
  CHECK_THROWS_AS(cfg_from(R"({"optimizers": [{"algorithm": "GD", "tau": 50, "budget": 10}]})"),
                  ConfigError);
  CHECK_THROWS_AS(cfg_from(R"({"task": {"dataset": {"classes": 3, "counts": [1, 2]}}})"), ConfigError);
  CHECK_THROWS_AS(cfg_from("{not json"), ConfigError);
  try {
    cfg_from(R"({"seed": -1, "format": "xml"})");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("/seed") != std::string::npos);
    CHECK(msg.find("/format") != std::string::npos);
  }
}

TEST_CASE("embedded schema is strict and accepts the shipped examples") {
  const auto& s = config::experiment_schema();
  CHECK(s["additionalProperties"] == false);
  CHECK(s["$defs"].contains("optimizer"));

  const std::filesystem::path root = SDBENCH_SOURCE_DIR;
  std::size_t n = 0;
  for (const auto& dir : {root / "configs", root / "tests" / "golden"})
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (entry.path().extension() != ".json") continue;
      CAPTURE(entry.path().string());
      CHECK_NOTHROW(config::load_config(entry.path()));
      ++n;
    }
  CHECK(n >= 10);
  for (const char* bad : {"bad_unknown_key.json", "bad_tau.json", "bad_both_targets.json"})
    CHECK_THROWS_AS(config::load_config(root / "tests" / "data" / bad), ConfigError);
}

TEST_CASE("stationary command") {
  auto c = cfg_from(R"({"landscape": {"name": "himmelblau"}, "restarts": 12, "endpoints_k": 5})");
  for (auto& o : c.optimizers) o.budget = 300;
  const auto r = cmd_stationary(c);
  const auto& t = r.tables.at(0);
  CHECK(t.rows.size() == 8);
  CHECK(t.columns == std::vector<std::string>{"GM1", "GM2", "GM3", "GM4", "Else"});
  for (const auto& row : t.rows) {
    REQUIRE(row.values.size() == 5);
    CHECK(std::accumulate(row.values.begin(), row.values.end(), 0.0) == doctest::Approx(100.0));
  }
  const auto endpoints = lines_of(file_named(r, "endpoints_himmelblau.csv").content);
  CHECK(endpoints.front() == "x,y,label,algorithm,seed");
  CHECK(endpoints.size() == 1 + 8 * 5);
  CHECK(lines_of(file_named(r, "histogram_himmelblau_GD.csv").content).front() == "label,count,percent");

  const auto again = cmd_stationary(c);
  REQUIRE(again.files.size() == r.files.size());
  for (std::size_t i = 0; i < r.files.size(); ++i) CHECK(again.files[i].content == r.files[i].content);

  auto one = cfg_from(R"({"landscape": {"name": "three_hump_camel"}, "restarts": 1,
                          "optimizers": [{"algorithm": "GD"}]})");
  const auto r1 = cmd_stationary(one);
  const auto& row = r1.tables[0].rows.at(0).values;
  CHECK(std::count(row.begin(), row.end(), 100.0) == 1);
  CHECK(std::count(row.begin(), row.end(), 0.0) == 3);

  CHECK_THROWS_AS(cmd_stationary(cfg_from("{}")), ConfigError);
}

TEST_CASE("population command on a landscape: SetA equals SetB") {
  const auto c = cfg_from(R"({"landscape": {"name": "himmelblau"},
                              "optimizers": [{"algorithm": "GD", "budget": 400}]})");
  const auto r = cmd_population(c);
  const auto& t = table_titled(r, "SetA vs SetB p-values on test -loss");
  CHECK(t.rows.at(0).values.at(0) >= 0.99);
  const auto pop = lines_of(file_named(r, "population_himmelblau_GD.csv").content);
  CHECK(pop.front() == "set,trajectory,grad_evals,loss,metric");
  CHECK(pop.size() == 1 + 2 * 50);
}

TEST_CASE("population command on the toy task") {
  auto c = cfg_from(R"({"task": {"dataset": {"counts": [40, 40, 16, 8], "noise": 1.0}}, "format": "json",
                        "optimizers": [{"algorithm": "GD", "budget": 300}, {"algorithm": "NiG-GD", "budget": 300},
                                       {"algorithm": "NiM-GD", "budget": 300}, {"algorithm": "SAM", "budget": 300},
                                       {"algorithm": "NiG-BH", "budget": 300}, {"algorithm": "NiM-BH", "budget": 300}]})");
  c.record_every = 3;
  const auto r = cmd_population(c);
  for (const char* title : {"SetA vs SetB p-values on test", "SetA vs SetB p-values on training"}) {
    const auto& t = table_titled(r, title);
    CHECK(t.rows.size() == 6);
    CHECK(t.columns.size() == 2);
    for (const auto& row : t.rows)
      for (double p : row.values) CHECK((p >= 0.0 && p <= 1.0));
  }
  const auto j = json::parse(file_named(r, "pvalues_metric_toy-blobs.json").content);
  CHECK(j["rows"].size() == 6);
}

TEST_CASE("compare command") {
  auto c = cfg_from(R"({"landscape": {"name": "three_hump_camel"},
                        "optimizers": [{"algorithm": "GD", "budget": 300}, {"algorithm": "SAM", "budget": 300},
                                       {"algorithm": "NiM-BH", "budget": 300}]})");
  const auto all = cmd_compare(c);
  CHECK(all.tables[0].columns == std::vector<std::string>{"GD vs SAM", "GD vs NiM-BH", "SAM vs NiM-BH"});
  c.pairs = {{"GD", "GD"}, {"SAM", "GD"}, {"GD", "SAM"}};
  const auto r = cmd_compare(c);
  const auto& v = r.tables[0].rows[0].values;
  CHECK(v[0] >= 0.99);
  CHECK(v[1] == v[2]);
  c.pairs = {{"GD", "Adam"}};
  CHECK_THROWS_AS(cmd_compare(c), ConfigError);
  c.optimizers.resize(1);
  c.pairs.clear();
  CHECK_THROWS_AS(cmd_compare(c), ConfigError);
}

TEST_CASE("curves command") {
  auto c = cfg_from(R"({"landscape": {"name": "himmelblau"}, "window": 1,
                        "optimizers": [{"algorithm": "GD", "budget": 200}, {"algorithm": "SAM", "budget": 200}]})");
  const auto r = cmd_curves(c);
  const auto gd = lines_of(file_named(r, "curve_himmelblau_GD.csv").content);
  const auto sam = lines_of(file_named(r, "curve_himmelblau_SAM.csv").content);
  CHECK(gd.front() == "grad_evals,loss,smoothed_loss");
  CHECK(gd.size() - 1 == 200);
  CHECK(sam.size() - 1 == 100);
  long last = -1;
  for (std::size_t i = 1; i < gd.size(); ++i) {
    std::istringstream row(gd[i]);
    std::string e, l, s;
    std::getline(row, e, ',');
    std::getline(row, l, ',');
    std::getline(row, s, ',');
    CHECK(std::stol(e) > last);
    last = std::stol(e);
    CHECK(l == s);
  }
}

TEST_CASE("gradcheck command") {
  const auto ok = cmd_gradcheck(cfg_from("{}"));
  CHECK(ok.exit_code == 0);
  CHECK(ok.messages.empty());
  CHECK(ok.tables[0].rows.size() == 4);

  // fault injection: d/dy is off by 1e-3 everywhere
  GradcheckSubject bad;
  bad.name = "corrupted-bowl";
  bad.value = [](std::span<const double> w) { return w[0] * w[0] + w[1] * w[1]; };
  bad.gradient = [](std::span<const double> w, std::span<double> g) {
    g[0] = 2 * w[0];
    g[1] = 2 * w[1] + 1e-3;
  };
  bad.sample = [](Rng& rng) {
    std::uniform_real_distribution<double> u(-1, 1);
    return ParamVector{u(rng), u(rng)};
  };
  const auto r = cmd_gradcheck(cfg_from(R"({"gradcheck": {"points": 3, "mlp_points": 0}})"), {bad});
  CHECK(r.exit_code == 1);
  REQUIRE(r.messages.size() == 3);
  CHECK(r.messages[0].find("corrupted-bowl") != std::string::npos);
  CHECK(r.messages[0].find("coordinate 1") != std::string::npos);
  CHECK(r.messages[0].find("analytic") != std::string::npos);
}

TEST_CASE("refine-minima command") {
  const auto r = cmd_refine_minima(cfg_from(R"({"landscape": {"name": "three_hump_camel"}, "grid_n": 50})"));
  CHECK(r.messages.empty());
  const auto& t = r.tables[0];
  REQUIRE(t.rows.size() == 3);
  for (const auto& row : t.rows) CHECK(row.values[0] <= 1e-3);
  const auto refined = parse_registry(file_named(r, "registry_three_hump_camel.json").content);
  CHECK(refined.size() == 3);
}
