#pragma once

#include <optional>
#include <span>

#include "sdbench/types.hpp"

namespace sdbench {

/// What an optimizer sees of a problem. Synthetic landscapes are stateless;
/// the toy-task adapter keeps a minibatch cursor that advances on
/// next_batch(), so one instance belongs to exactly one trajectory.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual std::size_t dimension() const = 0;

  /// Loss and gradient on the current batch. Every call is one gradient
  /// evaluation for budget purposes.
  virtual double value_and_gradient(std::span<const double> w,
                                    std::span<double> grad) = 0;

  /// Full objective (whole training set for tasks). Not a gradient evaluation.
  virtual double loss(std::span<const double> w) const = 0;

  /// Generalization proxy for SetB selection; absent for synthetic landscapes.
  virtual std::optional<double> metric(std::span<const double>) const {
    return std::nullopt;
  }

  /// Marks an update boundary. Minibatch objectives move to the next batch.
  virtual void next_batch() {}

  /// Random starting point (uniform over the domain, or a fresh init).
  virtual ParamVector initial_point(Rng& rng) const = 0;
};

}  // namespace sdbench
