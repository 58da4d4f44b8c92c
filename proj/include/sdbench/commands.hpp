#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "sdbench/config.hpp"
#include "sdbench/report.hpp"

namespace sdbench::cli {

struct OutputFile {
  std::string name;  ///< relative to the output directory
  std::string content;
};

/// Everything a command produces. Commands never touch the filesystem; the
/// caller writes `files` once the run is complete.
struct CommandResult {
  std::vector<report::ReportTable> tables;
  std::vector<OutputFile> files;
  std::vector<std::string> messages;  ///< diagnostics for stderr
  int exit_code = 0;
};

/// Stationary distribution per optimizer on one landscape. Without an
/// optimizer list all eight algorithms run at their landscape defaults.
CommandResult cmd_stationary(const config::ExperimentConfig& cfg);

/// SetA vs SetB per optimizer (toy task by default, or a landscape with
/// metric = -loss). Without an optimizer list: GD, NiG-GD, NiM-GD, SAM,
/// NiG-BH, NiM-BH.
CommandResult cmd_population(const config::ExperimentConfig& cfg);

/// Pairwise MWU on the SetA metric populations. Needs >= 2 optimizers.
CommandResult cmd_compare(const config::ExperimentConfig& cfg);

/// Smoothed learning curve of trajectory 0 per optimizer.
CommandResult cmd_curves(const config::ExperimentConfig& cfg);

/// A function to finite-difference check, for callers adding their own.
struct GradcheckSubject {
  std::string name;
  std::function<double(std::span<const double>)> value;
  std::function<void(std::span<const double>, std::span<double>)> gradient;
  std::function<ParamVector(Rng&)> sample;  ///< draws a check point
  double tolerance = 1e-6;
};

/// Largest error over the coordinates of one point, measured as
/// |a - n| / max(1, |a|, |n|), and the coordinate where it occurs.
struct GradcheckPoint {
  double error = 0.0;
  std::size_t coordinate = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};
GradcheckPoint check_gradient(const GradcheckSubject& subject, std::span<const double> point,
                              double h);

/// Central-difference check of the configured landscape (all three when none
/// is configured), the MLP, and any `extra` subjects. Exit code 1 on any
/// failure, each one listed in `messages`.
CommandResult cmd_gradcheck(const config::ExperimentConfig& cfg,
                            const std::vector<GradcheckSubject>& extra = {});

/// Dense-grid registry recovery, compared entry by entry with the reference
/// registry (cfg.reference, else the landscape's own). Discrepancies are
/// logged in `messages`; they do not fail the command.
CommandResult cmd_refine_minima(const config::ExperimentConfig& cfg);

/// Dispatch by subcommand name ("stationary", ..., "refine-minima").
CommandResult run_command(const std::string& name, const config::ExperimentConfig& cfg);
std::vector<std::string> command_names();

/// Writes every output file below `out_dir`, creating it if needed.
void write_outputs(const CommandResult& result, const std::filesystem::path& out_dir);

}  // namespace sdbench::cli
