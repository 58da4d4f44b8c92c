#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sdbench/landscape.hpp"
#include "sdbench/optimizers.hpp"

namespace sdbench {

// --- stationary distribution -------------------------------------------------

struct StationaryRunConfig {
  std::string landscape = "himmelblau";
  OptimizerConfig optimizer;
  std::size_t restarts = 500;
  double basin_radius = 0.25;
  std::uint64_t master_seed = 0;
  /// 0 picks budget / 200 so every trajectory keeps >= 200 samples.
  std::size_t record_every = 0;
  std::size_t workers = 0;
};

struct Endpoint {
  ParamVector point;
  BasinLabel label = BasinLabel::other();
  std::uint64_t seed = 0;
  bool diverged = false;
};

/// Endpoint counts per registry entry, Else last.
struct BasinHistogram {
  std::vector<std::string> labels;
  std::vector<std::size_t> counts;
  std::size_t total = 0;
  std::size_t diverged = 0;  ///< subset of the Else count
  std::vector<Endpoint> endpoints;

  std::size_t count(std::string_view label) const;
};

/// Restarts the optimizer from uniform starts; trajectory i uses the stream
/// derive_seed(master_seed, i).
BasinHistogram stationary_distribution(const StationaryRunConfig& cfg);
/// Same, on a caller-provided landscape (cfg.landscape is ignored).
BasinHistogram stationary_distribution(const Landscape& landscape, const StationaryRunConfig& cfg);

/// 100 * count / total per label, registry order, Else last.
std::vector<std::pair<std::string, double>> percentages(const BasinHistogram& h);

/// k endpoints sampled without replacement, kept in trajectory order.
std::vector<Endpoint> export_endpoints(const BasinHistogram& h, std::size_t k, Rng& rng);

// --- model populations -------------------------------------------------------

enum class SelectionCriterion { LowestLoss, HighestMetric };

struct PopulationConfig {
  std::size_t trajectories = 5;           ///< Tr
  std::size_t models_per_trajectory = 10; ///< L
  SelectionCriterion criterion = SelectionCriterion::LowestLoss;
};

struct ModelRecord {
  std::size_t trajectory = 0;
  std::size_t grad_evals = 0;
  double loss = 0.0;
  std::optional<double> metric;
};

struct ModelPopulation {
  PopulationConfig config;
  std::vector<ModelRecord> records;

  std::vector<double> losses() const;
  /// Throws ArgumentError if any record lacks a metric.
  std::vector<double> metrics() const;
};

/// Builds the objective a trajectory optimizes, given that trajectory's seed.
/// Stateful objectives (minibatch streams) must be fresh per call.
using ObjectiveFactory = std::function<std::unique_ptr<Objective>(std::uint64_t seed)>;

/// Landscape populations: uniform starts, metric(w) = -loss(w), so SetA and
/// SetB coincide.
ObjectiveFactory landscape_factory(const Landscape& landscape);

/// Tr trajectories; trajectory i uses seed derive_seed(master_seed, i) for
/// its start point, noise, and objective.
std::vector<Trajectory> run_trajectories(const ObjectiveFactory& factory,
                                         const OptimizerConfig& optimizer, std::size_t count,
                                         std::uint64_t master_seed, std::size_t record_every,
                                         std::size_t workers = 0);

/// L records per trajectory: smallest losses (SetA) or largest metrics
/// (SetB); ties go to the earlier capture.
ModelPopulation select_population(const std::vector<Trajectory>& trajectories,
                                  const PopulationConfig& cfg);

ModelPopulation sample_population(const ObjectiveFactory& factory,
                                  const OptimizerConfig& optimizer, const PopulationConfig& cfg,
                                  std::uint64_t master_seed, std::size_t record_every,
                                  std::size_t workers = 0);

// --- learning curves ---------------------------------------------------------

struct CurvePoint {
  std::size_t grad_evals = 0;
  double loss = 0.0;
  double smoothed = 0.0;
};

/// Trailing moving average; the first window-1 points average what exists.
std::vector<CurvePoint> learning_curve(const Trajectory& trajectory, std::size_t window);

}  // namespace sdbench
