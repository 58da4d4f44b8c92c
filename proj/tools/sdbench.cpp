// Command-line front end. Exit codes: 0 success, 1 runtime failure
// (including failed gradient checks), 2 configuration error.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sdbench/commands.hpp"
#include "sdbench/errors.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> format;
  std::optional<std::size_t> workers;
  std::optional<std::string> landscape;
  std::optional<std::size_t> grid_n;
  std::optional<std::string> reference;
  bool quiet = false;
};

nlohmann::json load_document(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  std::ifstream in(path);
  if (!in) throw sdbench::ConfigError("cannot open configuration file " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw sdbench::ConfigError(path + " is not valid JSON: " + e.what());
  }
}

sdbench::config::ExperimentConfig build_config(const Overrides& o) {
  nlohmann::json doc = load_document(o.config_path);
  if (!doc.is_object()) throw sdbench::ConfigError("configuration must be a JSON object");
  // Flags act on the document so the schema sees the final values.
  if (o.seed) doc["seed"] = *o.seed;
  if (o.out_dir) doc["out_dir"] = *o.out_dir;
  if (o.format) doc["format"] = *o.format;
  if (o.workers) doc["workers"] = *o.workers;
  if (o.grid_n) doc["grid_n"] = *o.grid_n;
  if (o.reference) doc["reference"] = *o.reference;
  if (o.landscape) {
    if (doc.contains("landscape") && doc["landscape"].is_object())
      doc["landscape"]["name"] = *o.landscape;
    else
      doc["landscape"] = {{"name", *o.landscape}};
  }
  return sdbench::config::parse_config(doc);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stationary-distribution and model-population benchmarks for stochastic optimizers"};
  app.require_subcommand(1);
  Overrides o;

  const std::map<std::string, std::string> about = {
      {"stationary", "basin histogram of optimizer endpoints over uniform restarts"},
      {"population", "SetA vs SetB model populations with MWU and t-test p-values"},
      {"compare", "pairwise MWU between optimizers on SetA metric populations"},
      {"curves", "smoothed learning curve of one trajectory per optimizer"},
      {"gradcheck", "central-difference check of every analytic gradient"},
      {"refine-minima", "recover the minima registry from a dense multistart grid"},
  };
  for (const auto& name : sdbench::cli::command_names()) {
    const auto it = about.find(name);
    auto* sub = app.add_subcommand(name, it == about.end() ? std::string() : it->second);
    sub->add_option("-c,--config", o.config_path, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--out-dir", o.out_dir, "directory for CSV/JSON outputs");
    sub->add_option("--format", o.format, "table file format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--workers", o.workers, "worker threads (0 = hardware concurrency)");
    sub->add_option("--landscape", o.landscape, "himmelblau, three_hump_camel or six_hump_camel");
    sub->add_flag("-q,--quiet", o.quiet, "do not print tables");
    if (name == "refine-minima") {
      sub->add_option("--grid-n", o.grid_n, "grid points per dimension (>= 50)");
      sub->add_option("--reference", o.reference, "registry JSON to compare against");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  sdbench::config::ExperimentConfig cfg;
  try {
    cfg = build_config(o);
  } catch (const sdbench::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }

  try {
    const auto result = sdbench::cli::run_command(command, cfg);
    if (!o.quiet)
      for (const auto& t : result.tables) std::cout << sdbench::report::render_text(t) << '\n';
    for (const auto& m : result.messages) std::cerr << m << '\n';
    sdbench::cli::write_outputs(result, cfg.out_dir);
    std::cerr << "wrote " << result.files.size() << " file(s) to " << cfg.out_dir << '\n';
    return result.exit_code;
  } catch (const sdbench::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
