#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sdbench/objective.hpp"
#include "sdbench/types.hpp"

namespace sdbench {

struct Bounds {
  double lo;
  double hi;
};

class Domain {
 public:
  Domain() = default;
  explicit Domain(std::vector<Bounds> bounds);

  std::size_t dimension() const noexcept { return bounds_.size(); }
  const std::vector<Bounds>& bounds() const noexcept { return bounds_; }
  const Bounds& operator[](std::size_t i) const { return bounds_[i]; }

  bool contains(std::span<const double> p) const;
  /// True when every coordinate is at least `margin` away from both walls.
  bool interior(std::span<const double> p, double margin) const;
  double diagonal() const;

 private:
  std::vector<Bounds> bounds_;
};

enum class MinimumKind { Global, Local };

struct MinimumSpec {
  std::string label;
  ParamVector location;
  double value = 0.0;
  MinimumKind kind = MinimumKind::Local;
  std::optional<double> sharpness;
};

/// Either a registry label or the catch-all "Else" bucket.
class BasinLabel {
 public:
  static BasinLabel minimum(std::string label) { return BasinLabel(std::move(label)); }
  static BasinLabel other() { return BasinLabel(); }

  bool is_else() const noexcept { return !label_.has_value(); }
  /// Registry label, or "Else".
  std::string name() const { return label_.value_or("Else"); }

  friend bool operator==(const BasinLabel&, const BasinLabel&) = default;

 private:
  BasinLabel() = default;
  explicit BasinLabel(std::string label) : label_(std::move(label)) {}
  std::optional<std::string> label_;
};

/// Closed-form objective over a box with a registry of known minima.
class Landscape final : public Objective {
 public:
  using LossFn = std::function<double(std::span<const double>)>;
  using GradFn = std::function<void(std::span<const double>, std::span<double>)>;

  Landscape(std::string name, Domain domain, LossFn loss, GradFn grad,
            std::vector<MinimumSpec> registry = {});

  const std::string& name() const noexcept { return name_; }
  const Domain& domain() const noexcept { return domain_; }
  const std::vector<MinimumSpec>& registry() const noexcept { return registry_; }

  /// Replaces the registry. Every location must lie inside the domain and
  /// have the landscape's dimension.
  void set_registry(std::vector<MinimumSpec> registry);

  /// Throws ArgumentError on dimension mismatch.
  double eval(std::span<const double> point) const;
  ParamVector grad(std::span<const double> point) const;
  /// Loss plus gradient into `g`, without touching any state.
  double evaluate(std::span<const double> point, std::span<double> g) const;

  std::size_t dimension() const override { return domain_.dimension(); }
  double value_and_gradient(std::span<const double> w, std::span<double> g) override;
  double loss(std::span<const double> w) const override;
  ParamVector initial_point(Rng& rng) const override;

 private:
  void check_dimension(std::span<const double> point) const;

  std::string name_;
  Domain domain_;
  LossFn loss_;
  GradFn grad_;
  std::vector<MinimumSpec> registry_;
};

// Shipped landscapes. Registries come from the embedded JSON files.
Landscape himmelblau();
Landscape three_hump_camel(double quartic = 1.05);
Landscape six_hump_camel();
/// sum_i c_i x_i^2 over [-box, box]^d with its single minimum at the origin.
Landscape quadratic(std::vector<double> coeffs, double box = 5.0);

/// "himmelblau", "three_hump_camel", "six_hump_camel".
std::vector<std::string> landscape_names();
Landscape make_landscape(std::string_view name);

/// d x d matrix of central second differences, symmetrized.
using Matrix = std::vector<std::vector<double>>;
Matrix hessian_fd(const Landscape& landscape, std::span<const double> point,
                  double h = 1e-4);

/// Largest Hessian eigenvalue: closed form for d <= 2, shifted power
/// iteration otherwise.
double sharpness(const Landscape& landscape, const MinimumSpec& minimum, double h = 1e-4);
double largest_eigenvalue(const Matrix& m);

ParamVector sample_uniform(const Domain& domain, Rng& rng);
inline ParamVector sample_uniform(const Landscape& l, Rng& rng) {
  return sample_uniform(l.domain(), rng);
}

/// Nearest registry entry within `radius`; ties go to the earlier entry.
BasinLabel classify(const Landscape& landscape, std::span<const double> point,
                    double radius = 0.25);

/// Globals keep their relative order; locals sorted flat-to-sharp.
/// Computes missing sharpness values.
std::vector<MinimumSpec> order_registry(const Landscape& landscape,
                                        std::vector<MinimumSpec> entries);

struct RefineOptions {
  double eta = 1e-3;
  std::size_t max_steps = 50'000;
  double grad_tol = 1e-8;
  double cluster_tol = 1e-3;
  double global_tol = 1e-9;
};

/// Dense-grid multistart gradient descent. Returns the distinct minima found
/// (positive-definite Hessian), ordered like a registry and labelled
/// GM1.., LM1...
std::vector<MinimumSpec> refine_registry(const Landscape& landscape, std::size_t grid_n,
                                         const RefineOptions& opts = {});

}  // namespace sdbench
