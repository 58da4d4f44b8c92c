#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sdbench/landscape.hpp"
#include "sdbench/objective.hpp"
#include "sdbench/types.hpp"

namespace sdbench {

enum class Algorithm { GD, NiG, NiM, SAM, NiGBH, NiMBH, NiGMBH, NiMMBH };
enum class Perturbation { Gradient, Model };

/// Report name: "GD", "NiG-GD", "NiM-GD", "SAM", "NiG-BH", "NiM-BH",
/// "NiG-MBH", "NiM-MBH".
std::string_view algorithm_name(Algorithm a);
/// Accepts the report names, the SGD spellings ("SGD", "NiG-SGD", "NiM-SGD")
/// and enum-style names ("NiGBH"). Throws ArgumentError otherwise.
Algorithm parse_algorithm(std::string_view name);
std::vector<Algorithm> all_algorithms();

bool is_basin_hopping(Algorithm a);
bool is_monotonic(Algorithm a);
/// Only meaningful for basin-hopping variants.
Perturbation perturbation_of(Algorithm a);

struct OptimizerConfig {
  Algorithm algorithm = Algorithm::GD;
  double eta = 0.01;          ///< step size
  double rho = 0.0;           ///< noise / SAM radius
  std::size_t budget = 2000;  ///< total gradient evaluations T
  std::size_t tau = 100;      ///< LocalSearch cap, NiM patience
  double epsilon = 1e-6;      ///< flat-gradient threshold
  bool sam_restore = false;   ///< step SAM from w instead of w + zeta
  bool normalize_gradient = true;

  /// Throws ConfigError when a field is out of range.
  void validate() const;
  friend bool operator==(const OptimizerConfig&, const OptimizerConfig&) = default;
};

/// Base hyperparameters for the synthetic landscapes: eta 0.01,
/// rho = 0.01 * domain diagonal, T 2000, tau 100, eps 1e-6, normalized steps.
OptimizerConfig landscape_defaults(Algorithm a, const Domain& domain);
/// Minibatch defaults for the toy task (raw gradients, eta 0.05).
OptimizerConfig task_defaults(Algorithm a);

struct TrajectorySample {
  std::size_t grad_evals = 0;
  ParamVector params;
  double loss = 0.0;
  std::optional<double> metric;
};

struct HopRecord {
  std::size_t grad_evals = 0;  ///< counter after the hop's local search
  double candidate_loss = 0.0;
  bool accepted = false;
};

struct Trajectory {
  std::uint64_t seed = 0;
  OptimizerConfig config;
  std::vector<TrajectorySample> samples;
  ParamVector endpoint;
  std::size_t total_grad_evals = 0;
  std::size_t updates = 0;  ///< parameter updates performed
  bool diverged = false;
  /// Basin hopping only: f(Y0) followed by the loss after every accepted hop.
  std::vector<double> accepted_losses;
  std::vector<HopRecord> hops;
};

/// Gradient-evaluation accounting. A step may start while budget remains;
/// it is allowed to finish even if that overshoots the cap.
class BudgetCounter {
 public:
  explicit BudgetCounter(std::size_t cap) : cap_(cap) {}

  void charge(std::size_t evals = 1) noexcept { used_ += evals; }
  std::size_t used() const noexcept { return used_; }
  std::size_t cap() const noexcept { return cap_; }
  std::size_t remaining() const noexcept { return used_ >= cap_ ? 0 : cap_ - used_; }
  /// Whether a step costing `cost` evaluations still fits under the cap.
  bool fits(std::size_t cost) const noexcept { return used_ + cost <= cap_; }

 private:
  std::size_t used_ = 0;
  std::size_t cap_;
};

/// Uniform draw from the solid ball of radius rho in R^d.
ParamVector sample_ball(Rng& rng, double rho, std::size_t d);

// Single updates. Each mutates `w` in place and returns the number of
// gradient evaluations it used. Non-finite loss, gradient or iterate (or
// |w| > 1e6) throws DivergenceError.
std::size_t step_gd(Objective& f, ParamVector& w, const OptimizerConfig& cfg);
std::size_t step_nig(Objective& f, ParamVector& w, const OptimizerConfig& cfg, Rng& rng);
/// NiG with a caller-supplied noise vector.
std::size_t step_nig(Objective& f, ParamVector& w, const OptimizerConfig& cfg,
                     std::span<const double> noise);
/// `t` is the update index within the trajectory.
std::size_t step_nim(Objective& f, ParamVector& w, std::size_t t, const OptimizerConfig& cfg,
                     Rng& rng);
std::size_t step_sam(Objective& f, ParamVector& w, const OptimizerConfig& cfg);

/// Called once per gradient evaluation inside local_search with the current
/// iterate.
using EvalHook = std::function<void(const ParamVector& w)>;

/// Up to min(tau, max_evals) GD iterations, stopping early once |g| < eps.
/// Returns evaluations used (>= 1 unless max_evals == 0).
std::size_t local_search(Objective& f, ParamVector& w, const OptimizerConfig& cfg,
                         std::size_t max_evals = std::numeric_limits<std::size_t>::max(),
                         const EvalHook& hook = {});

void perturb_model(ParamVector& w, double rho, Rng& rng);
void perturb_gradient(ParamVector& g, double rho, Rng& rng);

/// Basin hopping (any of the four BH variants). Throws ConfigError for
/// other algorithms.
Trajectory run_bh(Objective& f, ParamVector w0, const OptimizerConfig& cfg, Rng& rng,
                  std::size_t record_every);

/// Runs one trajectory until the gradient budget is spent. A sample is
/// recorded whenever the counter crosses a multiple of `record_every`, and the
/// final state is always recorded. Divergence truncates the trajectory and
/// sets `diverged`.
Trajectory run_trajectory(Objective& f, ParamVector w0, const OptimizerConfig& cfg, Rng& rng,
                          std::size_t record_every);

}  // namespace sdbench
