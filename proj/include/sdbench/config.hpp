#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdbench/landscape.hpp"
#include "sdbench/optimizers.hpp"
#include "sdbench/toytask.hpp"

namespace sdbench::config {

/// Validates `doc` against a JSON Schema subset: type, enum, minimum,
/// maximum, exclusiveMinimum, exclusiveMaximum, minLength, minItems,
/// maxItems, items, properties, required, additionalProperties (boolean) and
/// local "#/..." references. Returns one "<json pointer>: <problem>" line
/// per violation; empty means valid.
std::vector<std::string> validate(const nlohmann::json& doc, const nlohmann::json& schema);

/// The experiment schema compiled into the library.
const nlohmann::json& experiment_schema();

struct LandscapeSpec {
  std::string name = "himmelblau";
  double three_hump_quartic = 1.05;
  std::optional<std::string> registry;  ///< replaces the embedded registry
};

struct GradcheckOptions {
  std::size_t points = 100;
  double tolerance = 1e-6;
  double step = 1e-5;
  std::size_t mlp_points = 20;
  double mlp_tolerance = 1e-4;
  std::size_t mlp_hidden = 8;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  std::string format = "csv";
  std::size_t workers = 0;

  std::optional<LandscapeSpec> landscape;
  std::optional<toy::TaskSpec> task;
  /// Missing hyperparameters are filled from landscape_defaults (when a
  /// landscape is configured) or task_defaults.
  std::vector<OptimizerConfig> optimizers;

  std::size_t restarts = 500;
  double basin_radius = 0.25;
  std::size_t endpoints_k = 50;
  std::size_t record_every = 0;
  std::size_t trajectories = 5;
  std::size_t models_per_trajectory = 10;
  std::vector<std::pair<std::string, std::string>> pairs;
  std::size_t window = 20;
  std::size_t grid_n = 100;
  std::optional<std::string> reference;
  GradcheckOptions gradcheck;
};

/// Schema validation, then semantic checks. Throws ConfigError whose message
/// lists every diagnostic on its own line.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig parse_config_text(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Builds the configured landscape, loading a registry override if given.
Landscape build_landscape(const LandscapeSpec& spec);

}  // namespace sdbench::config
