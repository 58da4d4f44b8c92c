#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "sdbench/errors.hpp"
#include "sdbench/stats.hpp"

using namespace sdbench;
using namespace sdbench::stats;
using doctest::Approx;

namespace {
using V = std::vector<double>;
}

TEST_CASE("rank_with_ties") {
  CHECK(rank_with_ties(V{10, 20, 30}) == V{1, 2, 3});
  CHECK(rank_with_ties(V{1, 1, 2}) == V{1.5, 1.5, 3});
  CHECK(rank_with_ties(V{3, 1, 3, 3}) == V{3, 1, 3, 3});
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> d(0, 5);
  for (int k = 0; k < 50; ++k) {
    V v(1 + k % 13);
    for (auto& x : v) x = d(rng);
    const auto r = rank_with_ties(v);
    const double n = static_cast<double>(v.size());
    double s = 0;
    for (double x : r) s += x;
    CHECK(s == n * (n + 1) / 2);
  }
  CHECK_THROWS_AS(rank_with_ties(V{1, NAN}), ArgumentError);
  CHECK_THROWS_AS(rank_with_ties(V{}), ArgumentError);
}

TEST_CASE("mann_whitney_u exact examples") {
  auto r = mann_whitney_u(V{1, 2, 3}, V{4, 5, 6}, MwuMode::Exact);
  CHECK(r.statistic == 0.0);
  CHECK(r.p_value == Approx(0.1).epsilon(1e-12));
  CHECK(r.exact);
  r = mann_whitney_u(V{1, 2}, V{3, 4}, MwuMode::Exact);
  CHECK(r.statistic == 0.0);
  CHECK(r.p_value == Approx(1.0 / 3.0).epsilon(1e-12));
  r = mann_whitney_u(V{4, 5, 6}, V{1, 2, 3}, MwuMode::Exact);
  CHECK(r.statistic == 9.0);
  CHECK(r.p_value == Approx(0.1).epsilon(1e-12));
}

TEST_CASE("identical samples give p close to 1 in every mode") {
  const V a{0.3, 0.1, 0.7, 0.5};
  for (auto m : {MwuMode::Auto, MwuMode::Exact, MwuMode::Approx})
    CHECK(mann_whitney_u(a, a, m).p_value >= 0.99);
  const V tied{1, 1, 1};
  CHECK(mann_whitney_u(tied, tied, MwuMode::Approx).p_value == 1.0);
  CHECK(mann_whitney_u(tied, tied, MwuMode::Exact).p_value == 1.0);
}

TEST_CASE("auto mode picks exact for small tie-free samples and reports both") {
  auto r = mann_whitney_u(V{1, 2, 3}, V{4, 5, 6});
  CHECK(r.exact);
  CHECK(r.p_exact == r.p_value);
  CHECK(r.p_approx >= 0.0);
  r = mann_whitney_u(V{1, 1, 3}, V{4, 5, 6});
  CHECK_FALSE(r.exact);
  V big(11);
  std::iota(big.begin(), big.end(), 0.0);
  CHECK_FALSE(mann_whitney_u(big, V{20, 21}).exact);
  CHECK_THROWS_AS(mann_whitney_u(V{}, V{1}), ArgumentError);
}

TEST_CASE("U_a + U_b = n1 n2 and p is symmetric") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 30; ++k) {
    V a(3 + k % 6), b(2 + k % 7);
    for (auto& x : a) x = nd(rng);
    for (auto& x : b) x = nd(rng) + 0.5;
    const auto ab = mann_whitney_u(a, b), ba = mann_whitney_u(b, a);
    CHECK(ab.statistic + ba.statistic == static_cast<double>(a.size() * b.size()));
    CHECK(ab.p_value == Approx(ba.p_value).epsilon(1e-12));
    CHECK((ab.p_value >= 0.0 && ab.p_value <= 1.0));
  }
}

TEST_CASE("exact and approximate MWU agree within 0.03 for n1 = n2 = 8") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd;
  double worst = 0;
  for (int k = 0; k < 200; ++k) {
    V a(8), b(8);
    const double shift = (k % 5) * 0.4;
    for (auto& x : a) x = nd(rng);
    for (auto& x : b) x = nd(rng) + shift;
    worst = std::max(worst, std::abs(mann_whitney_u(a, b, MwuMode::Exact).p_value -
                                     mann_whitney_u(a, b, MwuMode::Approx).p_value));
  }
  CHECK(worst <= 0.03);
}

TEST_CASE("MWU ignores strictly increasing transforms") {
  const V a{0.2, 1.5, 0.9, 3.1}, b{2.2, 0.1, 4.0, 2.8, 0.7};
  auto tr = [](V v) {
    for (auto& x : v) x = std::exp(x) * 3 + 1;
    return v;
  };
  const auto r0 = mann_whitney_u(a, b), r1 = mann_whitney_u(tr(a), tr(b));
  CHECK(r0.statistic == r1.statistic);
  CHECK(r0.p_value == r1.p_value);
}

TEST_CASE("t_test examples") {
  auto r = t_test(V{1, 2, 3}, V{1, 2, 3});
  CHECK(r.statistic == 0.0);
  CHECK(r.p_value == 1.0);
  r = t_test(V{1, 2, 3, 4}, V{3, 4, 5, 6});
  // pooled sd^2 = 5/3, se = sqrt(5/6), t = -2 / se
  CHECK(r.statistic == Approx(-2.0 / std::sqrt(5.0 / 6.0)).epsilon(1e-12));
  CHECK(std::abs(r.statistic + 2.19) <= 0.01);
  CHECK(std::abs(r.p_value - 0.071) <= 0.001);
  const auto s = t_test(V{3, 4, 5, 6}, V{1, 2, 3, 4});
  CHECK(s.statistic == -r.statistic);
  CHECK(s.p_value == r.p_value);
}

TEST_CASE("t_test against a closed-form t distribution") {
  const auto r = t_test(V{1, 2, 3, 4}, V{3, 4, 5, 6});
  // For even df the two-sided tail has a finite series in theta = atan(t/sqrt(df)):
  // P(|T| < t) = sin(theta) (1 + cos^2/2 + 3 cos^4/8) when df = 6.
  const double th = std::atan(std::abs(r.statistic) / std::sqrt(6.0));
  const double c = std::cos(th);
  const double inside = std::sin(th) * (1 + c * c / 2 + 3 * std::pow(c, 4) / 8);
  CHECK(r.p_value == Approx(1 - inside).epsilon(1e-10));

  const auto w = t_test(V{1, 2, 3, 4}, V{3, 4, 5, 6, 9, 1}, false);
  CHECK_FALSE(w.equal_variance);
  CHECK((w.p_value > 0 && w.p_value < 1));
}

TEST_CASE("t_test degenerate variances") {
  auto r = t_test(V{2, 2, 2}, V{2, 2});
  CHECK(r.statistic == 0.0);
  CHECK(r.p_value == 1.0);
  r = t_test(V{2, 2, 2}, V{3, 3});
  CHECK(std::isinf(r.statistic));
  CHECK(r.statistic < 0);
  CHECK(r.p_value == 0.0);
  r = t_test(V{5, 5}, V{3, 3}, false);
  CHECK(r.statistic > 0);
  CHECK(r.p_value == 0.0);
  CHECK_THROWS_AS(t_test(V{1}, V{1, 2}), ArgumentError);
}

TEST_CASE("t_test is invariant under affine maps") {
  const V a{0.3, 1.2, 0.8, 2.0, 1.1}, b{1.9, 2.5, 1.4, 3.3};
  auto aff = [](V v) {
    for (auto& x : v) x = 4.0 * x - 7.0;
    return v;
  };
  const auto r0 = t_test(a, b), r1 = t_test(aff(a), aff(b));
  CHECK(std::abs(r0.p_value - r1.p_value) <= 1e-12);
}

TEST_CASE("summarize") {
  auto s = summarize(V{1, 2, 3});
  CHECK(s.median == 2);
  CHECK(s.std == Approx(std::sqrt(2.0 / 3.0)));
  CHECK(s.n == 3);
  s = summarize(V{5});
  CHECK(s.median == 5);
  CHECK(s.std == 0);
  CHECK(summarize(V{3, 1}).median == 2);
  CHECK_THROWS_AS(summarize(V{}), ArgumentError);
}

TEST_CASE("accuracy and macro_f1") {
  using I = std::vector<int>;
  CHECK(accuracy(I{0, 1, 2}, I{0, 1, 2}) == 1.0);
  CHECK(accuracy(I{1, 0}, I{0, 1}) == 0.0);
  CHECK(accuracy(I{0, 1, 1, 0}, I{0, 1, 0, 0}) == 0.75);
  CHECK_THROWS_AS(accuracy(I{0}, I{0, 1}), ArgumentError);

  CHECK(macro_f1(I{0, 1, 2, 1}, I{0, 1, 2, 1}, 3) == 1.0);
  CHECK(macro_f1(I{0, 0, 0, 0}, I{0, 0, 1, 1}, 2) == Approx(1.0 / 3.0));
  CHECK(macro_f1(I{0, 0, 0, 0}, I{0, 0, 1, 1}, 2) == Approx((2.0 / 3.0 + 0.0) / 2.0));
  // a class absent from both labels and predictions still counts as 0
  CHECK(macro_f1(I{0, 1}, I{0, 1}, 3) == Approx(2.0 / 3.0));
  CHECK_THROWS_AS(macro_f1(I{0, 3}, I{0, 1}, 3), ArgumentError);
  CHECK_THROWS_AS(macro_f1(I{0, -1}, I{0, 1}, 3), ArgumentError);
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> d(0, 3);
  for (int k = 0; k < 100; ++k) {
    I p(10), l(10);
    for (auto& x : p) x = d(rng);
    for (auto& x : l) x = d(rng);
    const double f = macro_f1(p, l, 4);
    CHECK((f >= 0.0 && f <= 1.0));
  }
}

TEST_CASE("normal_cdf") {
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(normal_cdf(1.959963984540054) == Approx(0.975).epsilon(1e-12));
  CHECK(normal_cdf(-8.0) == Approx(6.22096057427178e-16).epsilon(1e-10));
}
