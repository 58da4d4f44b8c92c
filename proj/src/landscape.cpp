#include "sdbench/landscape.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sdbench/errors.hpp"
#include "sdbench/parallel.hpp"
#include "sdbench/registry.hpp"

namespace sdbench {

Domain::Domain(std::vector<Bounds> bounds) : bounds_(std::move(bounds)) {
  if (bounds_.empty()) throw ArgumentError("domain needs at least one dimension");
  for (const auto& b : bounds_)
    if (!(b.lo < b.hi)) throw ArgumentError("domain bounds require lo < hi");
}

bool Domain::contains(std::span<const double> p) const {
  if (p.size() != bounds_.size()) return false;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (!(p[i] >= bounds_[i].lo && p[i] <= bounds_[i].hi)) return false;
  return true;
}

bool Domain::interior(std::span<const double> p, double margin) const {
  if (p.size() != bounds_.size()) return false;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (!(p[i] - margin >= bounds_[i].lo && p[i] + margin <= bounds_[i].hi)) return false;
  return true;
}

double Domain::diagonal() const {
  double s = 0.0;
  for (const auto& b : bounds_) s += (b.hi - b.lo) * (b.hi - b.lo);
  return std::sqrt(s);
}

Landscape::Landscape(std::string name, Domain domain, LossFn loss, GradFn grad,
                     std::vector<MinimumSpec> registry)
    : name_(std::move(name)),
      domain_(std::move(domain)),
      loss_(std::move(loss)),
      grad_(std::move(grad)) {
  set_registry(std::move(registry));
}

void Landscape::set_registry(std::vector<MinimumSpec> registry) {
  for (const auto& m : registry) {
    if (m.location.size() != dimension())
      throw ArgumentError("registry entry " + m.label + " has wrong dimension");
    if (!domain_.contains(m.location))
      throw ArgumentError("registry entry " + m.label + " lies outside the domain");
  }
  registry_ = std::move(registry);
}

void Landscape::check_dimension(std::span<const double> point) const {
  if (point.size() != dimension()) {
    std::ostringstream os;
    os << name_ << ": expected dimension " << dimension() << ", got " << point.size();
    throw ArgumentError(os.str());
  }
}

double Landscape::eval(std::span<const double> point) const {
  check_dimension(point);
  return loss_(point);
}

ParamVector Landscape::grad(std::span<const double> point) const {
  check_dimension(point);
  ParamVector g(dimension());
  grad_(point, g);
  return g;
}

double Landscape::evaluate(std::span<const double> w, std::span<double> g) const {
  check_dimension(w);
  grad_(w, g);
  return loss_(w);
}

double Landscape::value_and_gradient(std::span<const double> w, std::span<double> g) {
  return evaluate(w, g);
}

double Landscape::loss(std::span<const double> w) const { return eval(w); }

ParamVector Landscape::initial_point(Rng& rng) const { return sample_uniform(domain_, rng); }

// ---------------------------------------------------------------------------

namespace {

std::vector<MinimumSpec> shipped_registry(std::string_view name) {
  return parse_registry(embedded_registry(name));
}

}  // namespace

Landscape himmelblau() {
  auto f = [](std::span<const double> w) {
    const double x = w[0], y = w[1];
    const double a = x * x + y - 11.0, b = x + y * y - 7.0;
    return a * a + b * b;
  };
  auto g = [](std::span<const double> w, std::span<double> out) {
    const double x = w[0], y = w[1];
    const double a = x * x + y - 11.0, b = x + y * y - 7.0;
    out[0] = 4.0 * x * a + 2.0 * b;
    out[1] = 2.0 * a + 4.0 * y * b;
  };
  return Landscape("himmelblau", Domain({{-5.0, 5.0}, {-5.0, 5.0}}), f, g,
                   shipped_registry("himmelblau"));
}

Landscape three_hump_camel(double quartic) {
  auto f = [quartic](std::span<const double> w) {
    const double x = w[0], y = w[1];
    const double x2 = x * x;
    return 2.0 * x2 - quartic * x2 * x2 + x2 * x2 * x2 / 6.0 + x * y + y * y;
  };
  auto g = [quartic](std::span<const double> w, std::span<double> out) {
    const double x = w[0], y = w[1];
    const double x2 = x * x;
    out[0] = 4.0 * x - 4.0 * quartic * x2 * x + x2 * x2 * x + y;
    out[1] = x + 2.0 * y;
  };
  // The shipped minima belong to the 1.05 variant.
  std::vector<MinimumSpec> reg;
  if (quartic == 1.05) reg = shipped_registry("three_hump_camel");
  return Landscape("three_hump_camel", Domain({{-5.0, 5.0}, {-5.0, 5.0}}), f, g,
                   std::move(reg));
}

Landscape six_hump_camel() {
  auto f = [](std::span<const double> w) {
    const double x = w[0], y = w[1];
    const double x2 = x * x, y2 = y * y;
    return (4.0 - 2.1 * x2 + x2 * x2 / 3.0) * x2 + x * y + (-4.0 + 4.0 * y2) * y2;
  };
  auto g = [](std::span<const double> w, std::span<double> out) {
    const double x = w[0], y = w[1];
    const double x2 = x * x, y2 = y * y;
    out[0] = 8.0 * x - 8.4 * x2 * x + 2.0 * x2 * x2 * x + y;
    out[1] = x - 8.0 * y + 16.0 * y2 * y;
  };
  return Landscape("six_hump_camel", Domain({{-3.0, 3.0}, {-2.0, 2.0}}), f, g,
                   shipped_registry("six_hump_camel"));
}

Landscape quadratic(std::vector<double> coeffs, double box) {
  if (coeffs.empty()) throw ArgumentError("quadratic needs at least one coefficient");
  const std::size_t d = coeffs.size();
  auto f = [coeffs](std::span<const double> w) {
    double s = 0.0;
    for (std::size_t i = 0; i < coeffs.size(); ++i) s += coeffs[i] * w[i] * w[i];
    return s;
  };
  auto g = [coeffs](std::span<const double> w, std::span<double> out) {
    for (std::size_t i = 0; i < coeffs.size(); ++i) out[i] = 2.0 * coeffs[i] * w[i];
  };
  MinimumSpec origin{"GM", ParamVector(d, 0.0), 0.0, MinimumKind::Global, std::nullopt};
  return Landscape("quadratic", Domain(std::vector<Bounds>(d, Bounds{-box, box})), f, g,
                   {origin});
}

std::vector<std::string> landscape_names() {
  return {"himmelblau", "three_hump_camel", "six_hump_camel"};
}

Landscape make_landscape(std::string_view name) {
  if (name == "himmelblau") return himmelblau();
  if (name == "three_hump_camel") return three_hump_camel();
  if (name == "six_hump_camel") return six_hump_camel();
  throw ArgumentError("unknown landscape '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------

Matrix hessian_fd(const Landscape& landscape, std::span<const double> point, double h) {
  if (!(h > 0.0)) throw ArgumentError("hessian_fd: step must be positive");
  if (point.size() != landscape.dimension())
    throw ArgumentError("hessian_fd: dimension mismatch");
  if (!landscape.domain().interior(point, h))
    throw BoundaryError("hessian_fd: point within h of the domain boundary");

  const std::size_t d = point.size();
  ParamVector p(point.begin(), point.end());
  auto f_at = [&](std::size_t i, double di, std::size_t j, double dj) {
    ParamVector q = p;
    q[i] += di;
    q[j] += dj;
    return landscape.eval(q);
  };
  const double f0 = landscape.eval(p);
  Matrix hm(d, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < d; ++i) {
    hm[i][i] = (f_at(i, h, i, 0.0) - 2.0 * f0 + f_at(i, -h, i, 0.0)) / (h * h);
    for (std::size_t j = i + 1; j < d; ++j) {
      const double v = (f_at(i, h, j, h) - f_at(i, h, j, -h) - f_at(i, -h, j, h) +
                        f_at(i, -h, j, -h)) /
                       (4.0 * h * h);
      hm[i][j] = v;
      hm[j][i] = v;
    }
  }
  // (H + H^T) / 2
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) {
      const double s = 0.5 * (hm[i][j] + hm[j][i]);
      hm[i][j] = s;
      hm[j][i] = s;
    }
  return hm;
}

double largest_eigenvalue(const Matrix& m) {
  const std::size_t d = m.size();
  for (const auto& row : m)
    for (double v : row)
      if (!std::isfinite(v)) throw NumericError("non-finite Hessian entry");
  if (d == 1) return m[0][0];
  if (d == 2) {
    const double a = m[0][0], b = m[0][1], c = m[1][1];
    const double half_diff = 0.5 * (a - c);
    return 0.5 * (a + c) + std::sqrt(half_diff * half_diff + b * b);
  }
  // Shift by the Gershgorin radius so the spectrum is non-negative and the
  // dominant eigenvalue is the algebraically largest one.
  double shift = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < d; ++j)
      if (j != i) r += std::abs(m[i][j]);
    shift = std::max(shift, r - m[i][i]);
  }
  ParamVector v(d, 1.0 / std::sqrt(static_cast<double>(d)));
  // Break exact orthogonality to the top eigenvector.
  for (std::size_t i = 0; i < d; ++i) v[i] += 1e-3 * static_cast<double>(i + 1);
  double lambda = 0.0;
  ParamVector mv(d);
  for (int it = 0; it < 200; ++it) {
    const double n = norm2(v);
    for (double& x : v) x /= n;
    for (std::size_t i = 0; i < d; ++i) {
      double s = shift * v[i];
      for (std::size_t j = 0; j < d; ++j) s += m[i][j] * v[j];
      mv[i] = s;
    }
    const double next = dot(v, mv);
    v = mv;
    if (std::abs(next - lambda) < 1e-10 * std::max(1.0, std::abs(next))) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return lambda - shift;
}

double sharpness(const Landscape& landscape, const MinimumSpec& minimum, double h) {
  return largest_eigenvalue(hessian_fd(landscape, minimum.location, h));
}

ParamVector sample_uniform(const Domain& domain, Rng& rng) {
  ParamVector p(domain.dimension());
  for (std::size_t i = 0; i < p.size(); ++i) {
    std::uniform_real_distribution<double> u(domain[i].lo, domain[i].hi);
    p[i] = u(rng);
  }
  return p;
}

BasinLabel classify(const Landscape& landscape, std::span<const double> point, double radius) {
  if (!(radius > 0.0)) throw ArgumentError("classify: radius must be positive");
  if (point.size() != landscape.dimension() || !all_finite(point)) return BasinLabel::other();
  const MinimumSpec* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& m : landscape.registry()) {
    const double d = distance(point, m.location);
    if (d < best_d) {
      best_d = d;
      best = &m;
    }
  }
  if (best != nullptr && best_d <= radius) return BasinLabel::minimum(best->label);
  return BasinLabel::other();
}

std::vector<MinimumSpec> order_registry(const Landscape& landscape,
                                        std::vector<MinimumSpec> entries) {
  for (auto& m : entries)
    if (!m.sharpness) m.sharpness = sharpness(landscape, m);
  std::stable_partition(entries.begin(), entries.end(),
                        [](const MinimumSpec& m) { return m.kind == MinimumKind::Global; });
  auto first_local = std::find_if(entries.begin(), entries.end(), [](const MinimumSpec& m) {
    return m.kind == MinimumKind::Local;
  });

  // Mirror-image minima have equal curvature up to finite-difference noise,
  // so sharpness values within a relative 1e-6 share a rank and keep their
  // incoming order.
  std::vector<double> sorted;
  for (auto it = first_local; it != entries.end(); ++it) sorted.push_back(*it->sharpness);
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> rank_floor;
  for (double s : sorted)
    if (rank_floor.empty() ||
        s - rank_floor.back() > 1e-6 * std::max(1.0, std::abs(rank_floor.back())))
      rank_floor.push_back(s);
  auto rank = [&](const MinimumSpec& m) {
    const auto it = std::upper_bound(rank_floor.begin(), rank_floor.end(), *m.sharpness);
    return it - rank_floor.begin();
  };
  std::stable_sort(first_local, entries.end(),
                   [&](const MinimumSpec& a, const MinimumSpec& b) { return rank(a) < rank(b); });
  return entries;
}

namespace {

bool positive_definite(const Matrix& m) {
  const auto d = static_cast<Eigen::Index>(m.size());
  Eigen::MatrixXd a(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) a(i, j) = m[i][j];
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  return llt.info() == Eigen::Success;
}

/// Plain GD to a stationary point; nullopt if it never flattens.
std::optional<ParamVector> descend(const Landscape& l, ParamVector w, const RefineOptions& o) {
  ParamVector g(w.size());
  for (std::size_t step = 0; step < o.max_steps; ++step) {
    l.evaluate(w, g);
    if (!all_finite(g) || !all_finite(w)) return std::nullopt;
    if (norm2(g) < o.grad_tol) return w;
    axpy(-o.eta, g, w);
  }
  return std::nullopt;
}

}  // namespace

std::vector<MinimumSpec> refine_registry(const Landscape& landscape, std::size_t grid_n,
                                         const RefineOptions& opts) {
  if (grid_n < 50) throw ArgumentError("refine_registry: grid_n must be >= 50");
  const std::size_t d = landscape.dimension();
  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) total *= grid_n;

  // Cell centres: never on a wall and never on an axis of symmetry.
  std::vector<std::optional<ParamVector>> ends(total);
  parallel_for(total, 0, [&](std::size_t idx) {
    ParamVector start(d);
    std::size_t rest = idx;
    for (std::size_t k = 0; k < d; ++k) {
      const auto& b = landscape.domain()[k];
      const double frac = (static_cast<double>(rest % grid_n) + 0.5) / static_cast<double>(grid_n);
      start[k] = b.lo + (b.hi - b.lo) * frac;
      rest /= grid_n;
    }
    ends[idx] = descend(landscape, std::move(start), opts);
  });

  struct Cluster {
    ParamVector sum;
    ParamVector first;
    std::size_t n = 0;
  };
  std::vector<Cluster> clusters;
  for (const auto& e : ends) {
    if (!e) continue;
    auto hit = std::find_if(clusters.begin(), clusters.end(), [&](const Cluster& c) {
      return distance(c.first, *e) <= opts.cluster_tol;
    });
    if (hit == clusters.end()) {
      clusters.push_back({*e, *e, 1});
    } else {
      axpy(1.0, *e, hit->sum);
      ++hit->n;
    }
  }

  std::vector<MinimumSpec> found;
  for (const auto& c : clusters) {
    ParamVector centre = c.sum;
    for (double& x : centre) x /= static_cast<double>(c.n);
    if (!landscape.domain().interior(centre, 1e-4)) continue;
    const Matrix h = hessian_fd(landscape, centre);
    if (!positive_definite(h)) continue;  // saddle or degenerate
    MinimumSpec m;
    m.location = centre;
    m.value = landscape.eval(centre);
    m.sharpness = largest_eigenvalue(h);
    found.push_back(std::move(m));
  }
  if (found.empty()) return found;

  double best = std::numeric_limits<double>::infinity();
  for (const auto& m : found) best = std::min(best, m.value);
  for (auto& m : found)
    m.kind = (m.value - best <= opts.global_tol) ? MinimumKind::Global : MinimumKind::Local;

  // Lexicographic pre-order so equal-sharpness minima come out the same
  // way every run.
  std::sort(found.begin(), found.end(),
            [](const MinimumSpec& a, const MinimumSpec& b) { return a.location < b.location; });
  found = order_registry(landscape, std::move(found));

  std::size_t n_global = 0, n_local = 0;
  for (auto& m : found) {
    if (m.kind == MinimumKind::Global)
      m.label = "GM" + std::to_string(++n_global);
    else
      m.label = "LM" + std::to_string(++n_local);
  }
  if (n_global == 1)
    for (auto& m : found)
      if (m.kind == MinimumKind::Global) m.label = "GM";
  return found;
}

}  // namespace sdbench
