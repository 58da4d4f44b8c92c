#include "sdbench/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "embedded_data.hpp"
#include "sdbench/errors.hpp"
#include "sdbench/registry.hpp"

namespace sdbench::config {

using nlohmann::json;

namespace {

class Validator {
 public:
  explicit Validator(const json& root) : root_(root) {}

  void check(const json& doc, const json& schema, const std::string& path) {
    if (schema.contains("$ref")) {
      check(doc, resolve(schema["$ref"].get<std::string>()), path);
      return;
    }
    if (schema.contains("type") && !type_ok(doc, schema["type"])) {
      fail(path, "expected " + schema["type"].dump() + ", got " + type_name(doc));
      return;  // further keywords would only repeat the same problem
    }
    if (schema.contains("enum")) {
      bool found = false;
      for (const auto& v : schema["enum"]) found = found || v == doc;
      if (!found) fail(path, "value " + doc.dump() + " not in " + schema["enum"].dump());
    }
    if (doc.is_number()) numeric(doc.get<double>(), schema, path);
    if (doc.is_string() && schema.contains("minLength") &&
        doc.get_ref<const std::string&>().size() < schema["minLength"].get<std::size_t>())
      fail(path, "string shorter than " + schema["minLength"].dump());
    if (doc.is_array()) array(doc, schema, path);
    if (doc.is_object()) object(doc, schema, path);
  }

  std::vector<std::string> errors;

 private:
  const json& resolve(const std::string& ref) {
    if (ref.empty() || ref[0] != '#') throw ConfigError("schema: only local $ref supported: " + ref);
    return root_.at(json::json_pointer(ref.substr(1)));
  }

  static std::string type_name(const json& v) {
    if (v.is_number_integer()) return "integer";
    if (v.is_number()) return "number";
    return v.type_name();
  }

  static bool one_type_ok(const json& v, const std::string& t) {
    if (t == "object") return v.is_object();
    if (t == "array") return v.is_array();
    if (t == "string") return v.is_string();
    if (t == "boolean") return v.is_boolean();
    if (t == "null") return v.is_null();
    if (t == "number") return v.is_number();
    if (t == "integer") return v.is_number_integer();
    return false;
  }

  static bool type_ok(const json& v, const json& t) {
    if (t.is_string()) return one_type_ok(v, t.get<std::string>());
    for (const auto& one : t)
      if (one_type_ok(v, one.get<std::string>())) return true;
    return false;
  }

  void numeric(double x, const json& s, const std::string& path) {
    if (s.contains("minimum") && x < s["minimum"].get<double>())
      fail(path, "must be >= " + s["minimum"].dump());
    if (s.contains("maximum") && x > s["maximum"].get<double>())
      fail(path, "must be <= " + s["maximum"].dump());
    if (s.contains("exclusiveMinimum") && !(x > s["exclusiveMinimum"].get<double>()))
      fail(path, "must be > " + s["exclusiveMinimum"].dump());
    if (s.contains("exclusiveMaximum") && !(x < s["exclusiveMaximum"].get<double>()))
      fail(path, "must be < " + s["exclusiveMaximum"].dump());
  }

  void array(const json& doc, const json& s, const std::string& path) {
    if (s.contains("minItems") && doc.size() < s["minItems"].get<std::size_t>())
      fail(path, "needs at least " + s["minItems"].dump() + " items");
    if (s.contains("maxItems") && doc.size() > s["maxItems"].get<std::size_t>())
      fail(path, "allows at most " + s["maxItems"].dump() + " items");
    if (s.contains("items"))
      for (std::size_t i = 0; i < doc.size(); ++i)
        check(doc[i], s["items"], path + "/" + std::to_string(i));
  }

  void object(const json& doc, const json& s, const std::string& path) {
    if (s.contains("required"))
      for (const auto& key : s["required"])
        if (!doc.contains(key.get<std::string>()))
          fail(path, "missing required key \"" + key.get<std::string>() + "\"");
    const json empty = json::object();
    const json& props = s.contains("properties") ? s["properties"] : empty;
    const bool closed = s.contains("additionalProperties") && s["additionalProperties"] == false;
    for (const auto& [key, value] : doc.items()) {
      if (props.contains(key))
        check(value, props[key], path + "/" + key);
      else if (closed)
        fail(path, "unknown key \"" + key + "\"");
    }
  }

  void fail(const std::string& path, const std::string& msg) {
    errors.push_back((path.empty() ? "/" : path) + ": " + msg);
  }

  const json& root_;
};

template <class T>
void take(const json& obj, const char* key, T& field) {
  if (obj.contains(key)) field = obj[key].get<T>();
}

toy::DatasetSpec parse_dataset(const json& d, std::vector<std::string>& errs) {
  toy::DatasetSpec spec;
  take(d, "test_fraction", spec.test_fraction);
  take(d, "seed", spec.seed);
  const std::string kind = d.value("kind", "blobs");
  if (kind == "blobs") {
    toy::BlobsSpec b;
    take(d, "radius", b.radius);
    take(d, "noise", b.noise);
    if (d.contains("counts")) {
      b.counts = d["counts"].get<std::vector<std::size_t>>();
      b.classes = static_cast<int>(b.counts.size());
    }
    if (d.contains("classes")) {
      b.classes = d["classes"].get<int>();
      if (!d.contains("counts")) b.counts.assign(static_cast<std::size_t>(b.classes), 100);
    }
    if (b.counts.size() != static_cast<std::size_t>(b.classes))
      errs.push_back("/task/dataset: counts has " + std::to_string(b.counts.size()) +
                     " entries but classes is " + std::to_string(b.classes));
    if (d.contains("per_class") || d.contains("turns"))
      errs.push_back("/task/dataset: per_class and turns apply to spirals only");
    spec.generator = b;
  } else {
    toy::SpiralsSpec s;
    take(d, "classes", s.classes);
    take(d, "per_class", s.per_class);
    take(d, "turns", s.turns);
    take(d, "noise", s.noise);
    if (d.contains("counts") || d.contains("radius"))
      errs.push_back("/task/dataset: counts and radius apply to blobs only");
    spec.generator = s;
  }
  return spec;
}

}  // namespace

std::vector<std::string> validate(const json& doc, const json& schema) {
  Validator v(schema);
  v.check(doc, schema, "");
  return std::move(v.errors);
}

const json& experiment_schema() {
  static const json schema = json::parse(detail::kExperimentSchema);
  return schema;
}

Landscape build_landscape(const LandscapeSpec& spec) {
  Landscape l = spec.name == "three_hump_camel" ? three_hump_camel(spec.three_hump_quartic)
                                                 : make_landscape(spec.name);
  if (spec.registry) l.set_registry(load_registry(*spec.registry));
  return l;
}

ExperimentConfig parse_config(const json& doc) {
  auto errs = validate(doc, experiment_schema());
  auto bail = [&] {
    std::string msg = "invalid configuration:";
    for (const auto& e : errs) msg += "\n  " + e;
    throw ConfigError(msg);
  };
  if (!errs.empty()) bail();

  ExperimentConfig c;
  take(doc, "seed", c.seed);
  take(doc, "out_dir", c.out_dir);
  take(doc, "format", c.format);
  take(doc, "workers", c.workers);
  take(doc, "restarts", c.restarts);
  take(doc, "basin_radius", c.basin_radius);
  take(doc, "endpoints_k", c.endpoints_k);
  take(doc, "record_every", c.record_every);
  take(doc, "trajectories", c.trajectories);
  take(doc, "models_per_trajectory", c.models_per_trajectory);
  take(doc, "window", c.window);
  take(doc, "grid_n", c.grid_n);
  if (doc.contains("reference")) c.reference = doc["reference"].get<std::string>();
  if (doc.contains("pairs"))
    for (const auto& p : doc["pairs"])
      c.pairs.emplace_back(p[0].get<std::string>(), p[1].get<std::string>());

  if (doc.contains("landscape") && doc.contains("task"))
    errs.push_back("/: give either \"landscape\" or \"task\", not both");

  std::optional<Domain> domain;
  if (doc.contains("landscape")) {
    const auto& l = doc["landscape"];
    LandscapeSpec spec;
    spec.name = l["name"].get<std::string>();
    take(l, "three_hump_quartic", spec.three_hump_quartic);
    if (l.contains("registry")) spec.registry = l["registry"].get<std::string>();
    if (l.contains("three_hump_quartic") && spec.name != "three_hump_camel")
      errs.push_back("/landscape: three_hump_quartic applies to three_hump_camel only");
    domain = make_landscape(spec.name).domain();
    c.landscape = std::move(spec);
  }
  if (doc.contains("task")) {
    const auto& t = doc["task"];
    toy::TaskSpec spec;
    if (t.contains("dataset")) spec.dataset = parse_dataset(t["dataset"], errs);
    take(t, "hidden", spec.hidden);
    take(t, "batch_size", spec.batch_size);
    if (t.contains("metric"))
      spec.metric = t["metric"] == "accuracy" ? toy::Metric::Accuracy : toy::Metric::MacroF1;
    c.task = std::move(spec);
  }

  if (doc.contains("optimizers")) {
    for (std::size_t i = 0; i < doc["optimizers"].size(); ++i) {
      const auto& o = doc["optimizers"][i];
      const Algorithm a = parse_algorithm(o["algorithm"].get<std::string>());
      OptimizerConfig oc = domain ? landscape_defaults(a, *domain) : task_defaults(a);
      take(o, "eta", oc.eta);
      take(o, "rho", oc.rho);
      take(o, "budget", oc.budget);
      take(o, "tau", oc.tau);
      take(o, "epsilon", oc.epsilon);
      take(o, "sam_restore", oc.sam_restore);
      take(o, "normalize_gradient", oc.normalize_gradient);
      try {
        oc.validate();
      } catch (const ConfigError& e) {
        errs.push_back("/optimizers/" + std::to_string(i) + ": " + e.what());
      }
      c.optimizers.push_back(oc);
    }
  }

  if (doc.contains("gradcheck")) {
    const auto& g = doc["gradcheck"];
    take(g, "points", c.gradcheck.points);
    take(g, "tolerance", c.gradcheck.tolerance);
    take(g, "step", c.gradcheck.step);
    take(g, "mlp_points", c.gradcheck.mlp_points);
    take(g, "mlp_tolerance", c.gradcheck.mlp_tolerance);
    take(g, "mlp_hidden", c.gradcheck.mlp_hidden);
  }
  if (!errs.empty()) bail();
  return c;
}

ExperimentConfig parse_config_text(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("configuration is not valid JSON: ") + e.what());
  }
  return parse_config(doc);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace sdbench::config
