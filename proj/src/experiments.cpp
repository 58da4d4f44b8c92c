#include "sdbench/experiments.hpp"

#include <algorithm>
#include <numeric>

#include "sdbench/errors.hpp"
#include "sdbench/parallel.hpp"

namespace sdbench {

std::size_t BasinHistogram::count(std::string_view label) const {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) return counts[i];
  throw ArgumentError("histogram has no bucket '" + std::string(label) + "'");
}

namespace {

std::size_t auto_record_every(const OptimizerConfig& opt, std::size_t requested) {
  if (requested != 0) return requested;
  return std::max<std::size_t>(1, opt.budget / 200);
}

}  // namespace

BasinHistogram stationary_distribution(const StationaryRunConfig& cfg) {
  return stationary_distribution(make_landscape(cfg.landscape), cfg);
}

BasinHistogram stationary_distribution(const Landscape& landscape,
                                       const StationaryRunConfig& cfg) {
  if (cfg.restarts == 0) throw ConfigError("restarts must be >= 1");
  if (!(cfg.basin_radius > 0.0)) throw ConfigError("basin radius must be positive");
  cfg.optimizer.validate();
  const std::size_t every = auto_record_every(cfg.optimizer, cfg.record_every);

  std::vector<Endpoint> ends(cfg.restarts);
  parallel_for(cfg.restarts, cfg.workers, [&](std::size_t i) {
    const std::uint64_t seed = derive_seed(cfg.master_seed, i);
    Rng rng(seed);
    Landscape local = landscape;  // Objective calls are non-const
    ParamVector w0 = sample_uniform(local, rng);
    Trajectory t = run_trajectory(local, std::move(w0), cfg.optimizer, rng, every);
    Endpoint e;
    e.seed = seed;
    e.diverged = t.diverged;
    e.label = t.diverged ? BasinLabel::other() : classify(local, t.endpoint, cfg.basin_radius);
    e.point = std::move(t.endpoint);
    ends[i] = std::move(e);
  });

  BasinHistogram h;
  for (const auto& m : landscape.registry()) h.labels.push_back(m.label);
  h.labels.push_back("Else");
  h.counts.assign(h.labels.size(), 0);
  for (const auto& e : ends) {
    std::size_t bucket = h.labels.size() - 1;
    if (!e.label.is_else()) {
      const auto name = e.label.name();
      bucket = static_cast<std::size_t>(
          std::find(h.labels.begin(), h.labels.end(), name) - h.labels.begin());
    }
    ++h.counts[bucket];
    if (e.diverged) ++h.diverged;
  }
  h.total = ends.size();
  h.endpoints = std::move(ends);
  return h;
}

std::vector<std::pair<std::string, double>> percentages(const BasinHistogram& h) {
  if (h.total == 0) throw ArgumentError("percentages: empty run");
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t i = 0; i < h.labels.size(); ++i)
    out.emplace_back(h.labels[i],
                     100.0 * static_cast<double>(h.counts[i]) / static_cast<double>(h.total));
  return out;
}

std::vector<Endpoint> export_endpoints(const BasinHistogram& h, std::size_t k, Rng& rng) {
  if (k > h.endpoints.size())
    throw ArgumentError("export_endpoints: k exceeds the number of endpoints");
  std::vector<Endpoint> out;
  out.reserve(k);
  // Selection sampling over a forward range keeps the input order.
  std::sample(h.endpoints.begin(), h.endpoints.end(), std::back_inserter(out), k, rng);
  return out;
}

// ---------------------------------------------------------------------------

std::vector<double> ModelPopulation::losses() const {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.loss);
  return out;
}

std::vector<double> ModelPopulation::metrics() const {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    if (!r.metric) throw ArgumentError("population record without a metric");
    out.push_back(*r.metric);
  }
  return out;
}

namespace {

class NegLossLandscape final : public Objective {
 public:
  explicit NegLossLandscape(Landscape l) : l_(std::move(l)) {}
  std::size_t dimension() const override { return l_.dimension(); }
  double value_and_gradient(std::span<const double> w, std::span<double> g) override {
    return l_.evaluate(w, g);
  }
  double loss(std::span<const double> w) const override { return l_.loss(w); }
  std::optional<double> metric(std::span<const double> w) const override { return -l_.loss(w); }
  ParamVector initial_point(Rng& rng) const override { return l_.initial_point(rng); }

 private:
  Landscape l_;
};

}  // namespace

ObjectiveFactory landscape_factory(const Landscape& landscape) {
  return [landscape](std::uint64_t) -> std::unique_ptr<Objective> {
    return std::make_unique<NegLossLandscape>(landscape);
  };
}

std::vector<Trajectory> run_trajectories(const ObjectiveFactory& factory,
                                         const OptimizerConfig& optimizer, std::size_t count,
                                         std::uint64_t master_seed, std::size_t record_every,
                                         std::size_t workers) {
  optimizer.validate();
  const std::size_t every = auto_record_every(optimizer, record_every);
  std::vector<Trajectory> out(count);
  parallel_for(count, workers, [&](std::size_t i) {
    const std::uint64_t seed = derive_seed(master_seed, i);
    auto objective = factory(seed);
    Rng rng(seed);
    ParamVector w0 = objective->initial_point(rng);
    out[i] = run_trajectory(*objective, std::move(w0), optimizer, rng, every);
    out[i].seed = seed;
  });
  return out;
}

ModelPopulation select_population(const std::vector<Trajectory>& trajectories,
                                  const PopulationConfig& cfg) {
  const std::size_t L = cfg.models_per_trajectory;
  if (L == 0) throw ConfigError("models_per_trajectory must be >= 1");
  ModelPopulation pop;
  pop.config = cfg;
  for (std::size_t t = 0; t < trajectories.size(); ++t) {
    const auto& samples = trajectories[t].samples;
    if (samples.size() < L)
      throw ConfigError("trajectory " + std::to_string(t) + " recorded " +
                        std::to_string(samples.size()) + " samples, fewer than L = " +
                        std::to_string(L));
    std::vector<std::size_t> idx(samples.size());
    std::iota(idx.begin(), idx.end(), 0);
    if (cfg.criterion == SelectionCriterion::LowestLoss) {
      std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return samples[a].loss < samples[b].loss;
      });
    } else {
      for (const auto& s : samples)
        if (!s.metric) throw ConfigError("HighestMetric selection needs a metric hook");
      std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return *samples[a].metric > *samples[b].metric;
      });
    }
    for (std::size_t k = 0; k < L; ++k) {
      const auto& s = samples[idx[k]];
      pop.records.push_back({t, s.grad_evals, s.loss, s.metric});
    }
  }
  return pop;
}

ModelPopulation sample_population(const ObjectiveFactory& factory,
                                  const OptimizerConfig& optimizer, const PopulationConfig& cfg,
                                  std::uint64_t master_seed, std::size_t record_every,
                                  std::size_t workers) {
  auto trajectories =
      run_trajectories(factory, optimizer, cfg.trajectories, master_seed, record_every, workers);
  return select_population(trajectories, cfg);
}

std::vector<CurvePoint> learning_curve(const Trajectory& trajectory, std::size_t window) {
  if (window == 0) throw ArgumentError("learning_curve: window must be >= 1");
  if (trajectory.samples.empty()) throw ArgumentError("learning_curve: empty trajectory");
  std::vector<CurvePoint> out;
  out.reserve(trajectory.samples.size());
  const auto& s = trajectory.samples;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const std::size_t first = i + 1 >= window ? i + 1 - window : 0;
    double sum = 0.0;
    for (std::size_t j = first; j <= i; ++j) sum += s[j].loss;
    out.push_back({s[i].grad_evals, s[i].loss, sum / static_cast<double>(i + 1 - first)});
  }
  return out;
}

}  // namespace sdbench
