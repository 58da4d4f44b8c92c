#include <doctest.h>

#include <cmath>

#include "sdbench/errors.hpp"
#include "sdbench/landscape.hpp"
#include "sdbench/optimizers.hpp"

using namespace sdbench;
using doctest::Approx;

namespace {

OptimizerConfig raw(Algorithm a, double eta, double rho = 0.0) {
  OptimizerConfig c;
  c.algorithm = a;
  c.eta = eta;
  c.rho = rho;
  c.normalize_gradient = false;
  return c;
}

// Counts value_and_gradient calls and next_batch boundaries.
class Probe final : public Objective {
 public:
  explicit Probe(Landscape l) : l_(std::move(l)) {}
  std::size_t dimension() const override { return l_.dimension(); }
  double value_and_gradient(std::span<const double> w, std::span<double> g) override {
    ++evals;
    return l_.evaluate(w, g);
  }
  double loss(std::span<const double> w) const override { return l_.loss(w); }
  void next_batch() override { ++batches; }
  ParamVector initial_point(Rng& rng) const override { return l_.initial_point(rng); }

  std::size_t evals = 0;
  std::size_t batches = 0;

 private:
  Landscape l_;
};

}  // namespace

TEST_CASE("algorithm names round-trip") {
  for (Algorithm a : all_algorithms()) CHECK(parse_algorithm(algorithm_name(a)) == a);
  CHECK(parse_algorithm("SGD") == Algorithm::GD);
  CHECK(parse_algorithm("NiG-SGD") == Algorithm::NiG);
  CHECK(parse_algorithm("NiM-SGD") == Algorithm::NiM);
  CHECK_THROWS_AS(parse_algorithm("Adam"), ArgumentError);
  CHECK(all_algorithms().size() == 8);
  CHECK(is_monotonic(Algorithm::NiMMBH));
  CHECK_FALSE(is_monotonic(Algorithm::NiMBH));
  CHECK(perturbation_of(Algorithm::NiGMBH) == Perturbation::Gradient);
  CHECK(perturbation_of(Algorithm::NiMBH) == Perturbation::Model);
}

TEST_CASE("config validation") {
  OptimizerConfig c;
  CHECK_NOTHROW(c.validate());
  c.tau = c.budget + 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.eta = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.rho = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.budget = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("defaults") {
  const auto d = landscape_defaults(Algorithm::SAM, himmelblau().domain());
  CHECK(d.eta == 0.01);
  CHECK(d.rho == Approx(0.01 * std::sqrt(200.0)));
  CHECK(d.budget == 2000);
  CHECK(d.tau == 100);
  CHECK(d.epsilon == 1e-6);
  CHECK_FALSE(d.sam_restore);
  CHECK_FALSE(task_defaults(Algorithm::GD).normalize_gradient);
}

TEST_CASE("sample_ball") {
  Rng rng(5);
  CHECK(sample_ball(rng, 0.0, 3) == ParamVector{0.0, 0.0, 0.0});
  std::size_t inner = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto z = sample_ball(rng, 0.5, 2);
    REQUIRE(norm2(z) <= 0.5);
    inner += norm2(sample_ball(rng, 1.0, 2)) <= 0.5;
  }
  CHECK(std::abs(inner / 10000.0 - 0.25) <= 0.03);
}

TEST_CASE("step_gd") {
  auto f = quadratic({1.0});
  ParamVector w{1.0};
  CHECK(step_gd(f, w, raw(Algorithm::GD, 0.5)) == 1);
  CHECK(w[0] == 0.0);
  ParamVector m{3.0, 2.0};
  auto h = himmelblau();
  step_gd(h, m, raw(Algorithm::GD, 0.1));
  CHECK(m == ParamVector{3.0, 2.0});

  // normalized: unit-length step of size eta
  ParamVector v{2.0};
  auto cfg = raw(Algorithm::GD, 0.5);
  cfg.normalize_gradient = true;
  step_gd(f, v, cfg);
  CHECK(v[0] == Approx(1.5));
}

TEST_CASE("step_nig") {
  auto f = quadratic({1.0});
  ParamVector w{1.0};
  const ParamVector noise{0.1};
  CHECK(step_nig(f, w, raw(Algorithm::NiG, 0.5), noise) == 1);
  CHECK(w[0] == Approx(-0.05));

  ParamVector a{0.7}, b{0.7};
  Rng r1(9), r2(9);
  step_nig(f, a, raw(Algorithm::NiG, 0.1, 0.0), r1);
  step_gd(f, b, raw(Algorithm::GD, 0.1));
  CHECK(a == b);

  // noise contributes at most rho to the gradient, so at most eta*rho to the step
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    ParamVector x{3.0, 2.0};  // zero gradient
    auto h = himmelblau();
    step_nig(h, x, raw(Algorithm::NiG, 1.0, 0.3), rng);
    CHECK(distance(x, ParamVector{3.0, 2.0}) <= 0.3 + 1e-15);
  }
}

TEST_CASE("step_nim") {
  auto f = quadratic({1.0});
  Rng rng(1);
  auto cfg = raw(Algorithm::NiM, 0.5, 0.2);
  cfg.tau = 10;
  cfg.epsilon = 1e-3;

  ParamVector w{1.0};  // |g| = 2 >= eps: plain GD step
  CHECK(step_nim(f, w, 50, cfg, rng) == 1);
  CHECK(w[0] == 0.0);

  ParamVector at_min{0.0};  // flat, but t <= tau
  CHECK(step_nim(f, at_min, 10, cfg, rng) == 1);
  CHECK(at_min[0] == 0.0);

  ParamVector kicked{0.0};
  auto cfg_small = cfg;
  cfg_small.eta = 0.1;
  CHECK(step_nim(f, kicked, 11, cfg_small, rng) == 2);
  // displaced by z with |z| <= rho, then w' = z - 0.1 * 2z = 0.8 z
  CHECK(kicked[0] != 0.0);
  CHECK(std::abs(kicked[0]) <= 0.8 * 0.2 + 1e-15);

  auto zero_eps = cfg;
  zero_eps.epsilon = 0.0;
  ParamVector z{0.0};
  CHECK(step_nim(f, z, 100, zero_eps, rng) == 1);
  CHECK(z[0] == 0.0);
}

TEST_CASE("step_sam") {
  auto f = quadratic({1.0});
  auto cfg = raw(Algorithm::SAM, 0.5, 0.1);
  cfg.sam_restore = true;
  ParamVector w{1.0};
  CHECK(step_sam(f, w, cfg) == 2);
  CHECK(w[0] == Approx(-0.1));

  cfg.sam_restore = false;  // step from w + zeta = 1.1: 1.1 - 0.5 * 2.2
  ParamVector v{1.0};
  step_sam(f, v, cfg);
  CHECK(v[0] == Approx(0.0));

  for (bool restore : {false, true}) {
    auto c0 = raw(Algorithm::SAM, 0.1, 0.0);
    c0.sam_restore = restore;
    ParamVector a{0.8}, b{0.8};
    step_sam(f, a, c0);
    step_gd(f, b, raw(Algorithm::GD, 0.1));
    CHECK(a == b);
  }
}

TEST_CASE("SAM reuses one batch for both evaluations") {
  Probe p(quadratic({1.0}));
  ParamVector w{1.0};
  step_sam(p, w, raw(Algorithm::SAM, 0.1, 0.05));
  CHECK(p.evals == 2);
  CHECK(p.batches == 1);
}

TEST_CASE("local_search") {
  auto f = quadratic({1.0});
  auto cfg = raw(Algorithm::GD, 0.5);
  cfg.epsilon = 1e-9;
  ParamVector at{0.0};
  CHECK(local_search(f, at, cfg) == 1);
  CHECK(at[0] == 0.0);

  ParamVector w{1.0};
  CHECK(local_search(f, w, cfg) == 2);
  CHECK(w[0] == 0.0);

  auto h = himmelblau();
  auto hc = raw(Algorithm::GD, 1e-4);
  hc.tau = 37;
  ParamVector x{0.0, 0.0};
  CHECK(local_search(h, x, hc) <= 37);
  CHECK(local_search(h, x, hc, 5) == 5);
}

TEST_CASE("perturbations") {
  Rng a(4), b(4), rng(8);
  ParamVector w{1.0, 2.0}, v{1.0, 2.0};
  perturb_model(w, 0.0, rng);
  CHECK(w == ParamVector{1.0, 2.0});
  perturb_model(w, 0.3, a);
  perturb_model(v, 0.3, b);
  CHECK(w == v);
  CHECK(distance(w, ParamVector{1.0, 2.0}) <= 0.3);
  ParamVector g{0.5, -0.5}, g2{0.5, -0.5};
  perturb_gradient(g, 0.0, rng);
  CHECK(g == ParamVector{0.5, -0.5});
  Rng c(4), d(4);
  perturb_gradient(g, 0.2, c);
  perturb_gradient(g2, 0.2, d);
  CHECK(g == g2);
  CHECK(distance(g, ParamVector{0.5, -0.5}) <= 0.2);
}

TEST_CASE("GD from (3.1, 2.1) with raw steps settles on GM1") {
  auto h = himmelblau();
  Rng rng(0);
  auto cfg = raw(Algorithm::GD, 0.01);
  cfg.budget = 2000;
  const auto t = run_trajectory(h, {3.1, 2.1}, cfg, rng, 10);
  CHECK(distance(t.endpoint, ParamVector{3.0, 2.0}) <= 1e-3);
  CHECK_FALSE(t.diverged);
}

TEST_CASE("budget accounting") {
  auto h = himmelblau();
  for (std::size_t T : {100u, 101u, 2000u}) {
    Rng rng(1);
    auto sam = landscape_defaults(Algorithm::SAM, h.domain());
    sam.budget = T;
    sam.tau = std::min<std::size_t>(sam.tau, T);
    const auto ts = run_trajectory(h, {1.0, 1.0}, sam, rng, 1);
    CHECK(ts.updates == T / 2);
    CHECK(ts.total_grad_evals == 2 * (T / 2));
    auto gd = sam;
    gd.algorithm = Algorithm::GD;
    const auto tg = run_trajectory(h, {1.0, 1.0}, gd, rng, 1);
    CHECK(tg.updates == T);
    CHECK(tg.total_grad_evals == T);
  }
}

TEST_CASE("trajectory contract holds for every algorithm") {
  for (const auto& name : landscape_names()) {
    const auto l = make_landscape(name);
    for (Algorithm a : all_algorithms()) {
      auto f = l;
      auto cfg = landscape_defaults(a, l.domain());
      cfg.budget = 500;
      Rng r1(11), r2(11);
      const ParamVector w0{0.3, -0.4};
      const auto t = run_trajectory(f, w0, cfg, r1, 7);
      INFO(name << " " << algorithm_name(a));
      REQUIRE_FALSE(t.samples.empty());
      for (std::size_t i = 1; i < t.samples.size(); ++i)
        CHECK(t.samples[i].grad_evals > t.samples[i - 1].grad_evals);
      CHECK(t.samples.back().params == t.endpoint);
      CHECK(t.total_grad_evals <= cfg.budget + 2);
      CHECK(t.total_grad_evals + 2 >= cfg.budget);
      const auto again = run_trajectory(f, w0, cfg, r2, 7);
      CHECK(again.endpoint == t.endpoint);
      CHECK(again.samples.size() == t.samples.size());
      for (std::size_t i = 0; i < t.samples.size(); ++i) {
        CHECK(again.samples[i].params == t.samples[i].params);
        CHECK(again.samples[i].loss == t.samples[i].loss);
      }
    }
  }
}

TEST_CASE("rho = 0 collapses noisy variants onto GD") {
  const auto l = three_hump_camel();
  auto base = landscape_defaults(Algorithm::GD, l.domain());
  base.rho = 0.0;
  base.budget = 600;
  auto f = l;
  Rng rg(3);
  const auto gd = run_trajectory(f, {2.2, -1.1}, base, rg, 1);
  for (Algorithm a : {Algorithm::NiG, Algorithm::NiM}) {
    auto cfg = base;
    cfg.algorithm = a;
    Rng r(3);
    const auto t = run_trajectory(f, {2.2, -1.1}, cfg, r, 1);
    REQUIRE(t.samples.size() == gd.samples.size());
    for (std::size_t i = 0; i < t.samples.size(); ++i) CHECK(t.samples[i].params == gd.samples[i].params);
  }
}

TEST_CASE("basin hopping") {
  const auto l = himmelblau();
  SUBCASE("monotonic accepted losses never increase") {
    for (Algorithm a : {Algorithm::NiGMBH, Algorithm::NiMMBH}) {
      auto f = l;
      auto cfg = landscape_defaults(a, l.domain());
      cfg.rho = 2.0;
      Rng rng(21);
      const auto t = run_bh(f, {0.0, 0.0}, cfg, rng, 10);
      REQUIRE(t.accepted_losses.size() >= 1);
      for (std::size_t i = 1; i < t.accepted_losses.size(); ++i)
        CHECK(t.accepted_losses[i] < t.accepted_losses[i - 1]);
      CHECK(f.loss(t.endpoint) == t.accepted_losses.back());
    }
  }
  SUBCASE("non-monotonic accepts every hop") {
    auto f = l;
    auto cfg = landscape_defaults(Algorithm::NiMBH, l.domain());
    cfg.rho = 2.0;
    Rng rng(22);
    const auto t = run_bh(f, {0.0, 0.0}, cfg, rng, 10);
    REQUIRE_FALSE(t.hops.empty());
    for (const auto& h : t.hops) CHECK(h.accepted);
    CHECK(t.accepted_losses.size() == t.hops.size() + 1);
  }
  SUBCASE("rho = 0 keeps the start basin") {
    auto f = l;
    auto cfg = landscape_defaults(Algorithm::NiMBH, l.domain());
    cfg.rho = 0.0;
    Rng rng(23);
    const auto t = run_bh(f, {2.5, 2.5}, cfg, rng, 10);
    CHECK(classify(l, t.endpoint).name() == "GM1");
  }
  SUBCASE("run_bh rejects non-BH algorithms") {
    auto f = l;
    Rng rng(1);
    CHECK_THROWS_AS(run_bh(f, {0.0, 0.0}, OptimizerConfig{}, rng, 10), ConfigError);
  }
}

TEST_CASE("NiM-MBH on Himmelblau lands in a global basin at least 90 times in 100") {
  const auto l = himmelblau();
  const auto cfg = landscape_defaults(Algorithm::NiMMBH, l.domain());
  int hits = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    Rng rng(derive_seed(2024, i));
    auto f = l;
    auto w0 = sample_uniform(l, rng);
    const auto t = run_trajectory(f, w0, cfg, rng, 100);
    hits += !classify(l, t.endpoint).is_else();
  }
  CHECK(hits >= 90);
}

TEST_CASE("divergence truncates and flags the trajectory") {
  auto h = himmelblau();
  auto cfg = raw(Algorithm::GD, 10.0);
  Rng rng(0);
  const auto t = run_trajectory(h, {4.0, 4.0}, cfg, rng, 1);
  CHECK(t.diverged);
  CHECK(t.total_grad_evals < cfg.budget);
  CHECK(t.samples.back().params == t.endpoint);
  ParamVector w{4.0, 4.0};
  CHECK_THROWS_AS(
      [&] {
        for (int i = 0; i < 100; ++i) step_gd(h, w, cfg);
      }(),
      DivergenceError);
}
