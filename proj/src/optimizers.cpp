#include "sdbench/optimizers.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "sdbench/errors.hpp"

namespace sdbench {

namespace {

struct AlgorithmInfo {
  Algorithm algorithm;
  std::string_view name;
};

constexpr std::array<AlgorithmInfo, 8> kAlgorithms{{
    {Algorithm::GD, "GD"},
    {Algorithm::NiG, "NiG-GD"},
    {Algorithm::NiM, "NiM-GD"},
    {Algorithm::SAM, "SAM"},
    {Algorithm::NiGBH, "NiG-BH"},
    {Algorithm::NiMBH, "NiM-BH"},
    {Algorithm::NiGMBH, "NiG-MBH"},
    {Algorithm::NiMMBH, "NiM-MBH"},
}};

constexpr double kDivergenceNorm = 1e6;

std::string lowered(std::string_view s) {
  std::string out;
  for (char c : s)
    if (c != '-' && c != '_' && c != ' ')
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

[[noreturn]] void diverged(std::string_view what, std::span<const double> w) {
  throw DivergenceError(std::string(what), ParamVector(w.begin(), w.end()));
}

double evaluate_checked(Objective& f, std::span<const double> w, std::span<double> g) {
  const double loss = f.value_and_gradient(w, g);
  if (!std::isfinite(loss) || !all_finite(g)) diverged("non-finite loss or gradient", w);
  return loss;
}

void check_iterate(std::span<const double> w) {
  if (!all_finite(w) || norm2(w) > kDivergenceNorm) diverged("iterate left the finite region", w);
}

/// w <- w - eta * g, or along g/|g| when normalizing. Every algorithm goes
/// through here so that degenerate configurations match GD bit for bit.
void descend(ParamVector& w, std::span<const double> g, const OptimizerConfig& cfg) {
  double scale = cfg.eta;
  if (cfg.normalize_gradient) {
    const double n = norm2(g);
    if (n > 0.0) scale /= n;
  }
  axpy(-scale, g, w);
  check_iterate(w);
}

}  // namespace

std::string_view algorithm_name(Algorithm a) {
  for (const auto& info : kAlgorithms)
    if (info.algorithm == a) return info.name;
  return "?";
}

Algorithm parse_algorithm(std::string_view name) {
  const std::string key = lowered(name);
  for (const auto& info : kAlgorithms)
    if (lowered(info.name) == key) return info.algorithm;
  if (key == "sgd") return Algorithm::GD;
  if (key == "nigsgd" || key == "nig") return Algorithm::NiG;
  if (key == "nimsgd" || key == "nim") return Algorithm::NiM;
  throw ArgumentError("unknown algorithm '" + std::string(name) + "'");
}

std::vector<Algorithm> all_algorithms() {
  std::vector<Algorithm> out;
  for (const auto& info : kAlgorithms) out.push_back(info.algorithm);
  return out;
}

bool is_basin_hopping(Algorithm a) {
  return a == Algorithm::NiGBH || a == Algorithm::NiMBH || a == Algorithm::NiGMBH ||
         a == Algorithm::NiMMBH;
}

bool is_monotonic(Algorithm a) { return a == Algorithm::NiGMBH || a == Algorithm::NiMMBH; }

Perturbation perturbation_of(Algorithm a) {
  return (a == Algorithm::NiMBH || a == Algorithm::NiMMBH) ? Perturbation::Model
                                                           : Perturbation::Gradient;
}

void OptimizerConfig::validate() const {
  std::ostringstream err;
  if (!(eta > 0.0) || !std::isfinite(eta)) err << "eta must be > 0; ";
  if (!(rho >= 0.0) || !std::isfinite(rho)) err << "rho must be >= 0; ";
  if (budget == 0) err << "budget must be > 0; ";
  if (tau == 0) err << "tau must be > 0; ";
  if (tau > budget) err << "tau must not exceed budget; ";
  if (!(epsilon >= 0.0)) err << "epsilon must be >= 0; ";
  const auto msg = err.str();
  if (!msg.empty())
    throw ConfigError(std::string(algorithm_name(algorithm)) + ": " + msg.substr(0, msg.size() - 2));
}

OptimizerConfig landscape_defaults(Algorithm a, const Domain& domain) {
  OptimizerConfig cfg;
  cfg.algorithm = a;
  cfg.rho = 0.1 * (domain.diagonal() / 10.0);
  return cfg;
}

OptimizerConfig task_defaults(Algorithm a) {
  OptimizerConfig cfg;
  cfg.algorithm = a;
  cfg.eta = 0.05;
  cfg.rho = 0.05;
  cfg.budget = 3000;
  cfg.tau = 100;
  cfg.epsilon = 1e-3;
  cfg.normalize_gradient = false;
  return cfg;
}

// ---------------------------------------------------------------------------

ParamVector sample_ball(Rng& rng, double rho, std::size_t d) {
  ParamVector v(d, 0.0);
  if (rho == 0.0) return v;
  std::normal_distribution<double> normal(0.0, 1.0);
  double n = 0.0;
  do {
    for (double& x : v) x = normal(rng);
    n = norm2(v);
  } while (n == 0.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double radius = rho * std::pow(unit(rng), 1.0 / static_cast<double>(d));
  for (double& x : v) x *= radius / n;
  return v;
}

void perturb_model(ParamVector& w, double rho, Rng& rng) {
  if (rho == 0.0) return;
  axpy(1.0, sample_ball(rng, rho, w.size()), w);
}

void perturb_gradient(ParamVector& g, double rho, Rng& rng) {
  if (rho == 0.0) return;
  axpy(1.0, sample_ball(rng, rho, g.size()), g);
}

std::size_t step_gd(Objective& f, ParamVector& w, const OptimizerConfig& cfg) {
  ParamVector g(w.size());
  f.next_batch();
  evaluate_checked(f, w, g);
  descend(w, g, cfg);
  return 1;
}

std::size_t step_nig(Objective& f, ParamVector& w, const OptimizerConfig& cfg,
                     std::span<const double> noise) {
  if (noise.size() != w.size()) throw ArgumentError("step_nig: noise dimension mismatch");
  ParamVector g(w.size());
  f.next_batch();
  evaluate_checked(f, w, g);
  axpy(1.0, noise, g);
  descend(w, g, cfg);
  return 1;
}

std::size_t step_nig(Objective& f, ParamVector& w, const OptimizerConfig& cfg, Rng& rng) {
  ParamVector g(w.size());
  f.next_batch();
  evaluate_checked(f, w, g);
  perturb_gradient(g, cfg.rho, rng);
  descend(w, g, cfg);
  return 1;
}

std::size_t step_nim(Objective& f, ParamVector& w, std::size_t t, const OptimizerConfig& cfg,
                     Rng& rng) {
  ParamVector g(w.size());
  f.next_batch();
  evaluate_checked(f, w, g);
  std::size_t evals = 1;
  // rho = 0 makes the kick a no-op, so the re-evaluation is skipped too.
  if (cfg.rho > 0.0 && norm2(g) < cfg.epsilon && t > cfg.tau) {
    perturb_model(w, cfg.rho, rng);
    check_iterate(w);
    evaluate_checked(f, w, g);
    ++evals;
  }
  descend(w, g, cfg);
  return evals;
}

std::size_t step_sam(Objective& f, ParamVector& w, const OptimizerConfig& cfg) {
  ParamVector g(w.size());
  f.next_batch();
  evaluate_checked(f, w, g);
  const double n = norm2(g);
  ParamVector shifted = w;
  if (n > 0.0) axpy(cfg.rho / n, g, shifted);
  check_iterate(shifted);
  // Second evaluation stays on the same batch.
  evaluate_checked(f, shifted, g);
  if (cfg.sam_restore) {
    descend(w, g, cfg);
  } else {
    w = std::move(shifted);
    descend(w, g, cfg);
  }
  return 2;
}

std::size_t local_search(Objective& f, ParamVector& w, const OptimizerConfig& cfg,
                         std::size_t max_evals, const EvalHook& hook) {
  const std::size_t cap = std::min(cfg.tau, max_evals);
  ParamVector g(w.size());
  std::size_t evals = 0;
  while (evals < cap) {
    f.next_batch();
    evaluate_checked(f, w, g);
    ++evals;
    const bool flat = norm2(g) < cfg.epsilon;
    if (!flat) descend(w, g, cfg);
    if (hook) hook(w);
    if (flat) break;
  }
  return evals;
}

// ---------------------------------------------------------------------------

namespace {

class Recorder {
 public:
  Recorder(const Objective& f, Trajectory& traj, std::size_t every)
      : f_(f), traj_(traj), every_(std::max<std::size_t>(1, every)) {}

  /// Called after each update with the counter before and after it.
  void after(const ParamVector& w, std::size_t before, std::size_t after) {
    if (after / every_ > before / every_) traj_.samples.push_back(sample(w, after));
  }

  void finish(const ParamVector& endpoint, std::size_t used) {
    auto s = sample(endpoint, used);
    if (!traj_.samples.empty() && traj_.samples.back().grad_evals >= used)
      traj_.samples.back() = std::move(s);
    else
      traj_.samples.push_back(std::move(s));
  }

 private:
  TrajectorySample sample(const ParamVector& w, std::size_t evals) const {
    TrajectorySample s;
    s.grad_evals = evals;
    s.params = w;
    if (all_finite(w)) {
      s.loss = f_.loss(w);
      s.metric = f_.metric(w);
    } else {
      s.loss = std::numeric_limits<double>::quiet_NaN();
    }
    return s;
  }

  const Objective& f_;
  Trajectory& traj_;
  std::size_t every_;
};

/// Shared body of run_bh / run_trajectory for BH variants. `w` ends as the
/// accepted minimum.
void basin_hopping(Objective& f, ParamVector& w, const OptimizerConfig& cfg, Rng& rng,
                   BudgetCounter& counter, Recorder& rec, Trajectory& traj) {
  ParamVector work;
  auto hook = [&](const ParamVector& x) {
    const std::size_t before = counter.used();
    counter.charge(1);
    ++traj.updates;
    rec.after(x, before, counter.used());
  };

  local_search(f, w, cfg, counter.remaining(), hook);
  double current = f.loss(w);
  traj.accepted_losses.push_back(current);

  const bool monotonic = is_monotonic(cfg.algorithm);
  const auto kind = perturbation_of(cfg.algorithm);
  while (counter.remaining() > 0) {
    work = w;
    if (kind == Perturbation::Model) {
      perturb_model(work, cfg.rho, rng);
      check_iterate(work);
    } else {
      const std::size_t before = counter.used();
      counter.charge(step_nig(f, work, cfg, rng));
      ++traj.updates;
      rec.after(work, before, counter.used());
    }
    if (counter.remaining() > 0) local_search(f, work, cfg, counter.remaining(), hook);

    const double candidate = f.loss(work);
    const bool accept = !monotonic || candidate < current;
    traj.hops.push_back({counter.used(), candidate, accept});
    if (accept) {
      w.swap(work);
      current = candidate;
      traj.accepted_losses.push_back(current);
    }
  }
}

Trajectory run(Objective& f, ParamVector w, const OptimizerConfig& cfg, Rng& rng,
               std::size_t record_every) {
  cfg.validate();
  if (w.size() != f.dimension()) throw ArgumentError("start point has wrong dimension");

  Trajectory traj;
  traj.config = cfg;
  BudgetCounter counter(cfg.budget);
  Recorder rec(f, traj, record_every);

  auto single = [&](std::size_t min_cost, auto&& step) {
    while (counter.fits(min_cost)) {
      const std::size_t before = counter.used();
      counter.charge(step());
      ++traj.updates;
      rec.after(w, before, counter.used());
    }
  };

  try {
    check_iterate(w);
    switch (cfg.algorithm) {
      case Algorithm::GD:
        single(1, [&] { return step_gd(f, w, cfg); });
        break;
      case Algorithm::NiG:
        single(1, [&] { return step_nig(f, w, cfg, rng); });
        break;
      case Algorithm::NiM:
        single(1, [&] { return step_nim(f, w, traj.updates, cfg, rng); });
        break;
      case Algorithm::SAM:
        single(2, [&] { return step_sam(f, w, cfg); });
        break;
      default:
        basin_hopping(f, w, cfg, rng, counter, rec, traj);
        break;
    }
  } catch (const DivergenceError& e) {
    traj.diverged = true;
    w = e.where();
    counter.charge(1);
  }

  rec.finish(w, counter.used());
  traj.endpoint = std::move(w);
  traj.total_grad_evals = counter.used();
  return traj;
}

}  // namespace

Trajectory run_bh(Objective& f, ParamVector w0, const OptimizerConfig& cfg, Rng& rng,
                  std::size_t record_every) {
  if (!is_basin_hopping(cfg.algorithm))
    throw ConfigError("run_bh: " + std::string(algorithm_name(cfg.algorithm)) +
                      " is not a basin-hopping variant");
  return run(f, std::move(w0), cfg, rng, record_every);
}

Trajectory run_trajectory(Objective& f, ParamVector w0, const OptimizerConfig& cfg, Rng& rng,
                          std::size_t record_every) {
  return run(f, std::move(w0), cfg, rng, record_every);
}

}  // namespace sdbench
