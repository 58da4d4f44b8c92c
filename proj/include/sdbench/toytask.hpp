#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sdbench/objective.hpp"
#include "sdbench/types.hpp"

namespace sdbench::toy {

/// Class means equally spaced on a circle, isotropic Gaussian noise.
struct BlobsSpec {
  int classes = 4;
  std::vector<std::size_t> counts{100, 100, 40, 20};  ///< one entry per class
  double radius = 3.0;
  double noise = 0.5;
};

/// `classes` interleaved spiral arms with `per_class` points each.
struct SpiralsSpec {
  int classes = 2;
  std::size_t per_class = 100;
  double turns = 1.5;
  double noise = 0.1;
};

struct DatasetSpec {
  std::variant<BlobsSpec, SpiralsSpec> generator = BlobsSpec{};
  double test_fraction = 0.25;  ///< taken per class, so the split is stratified
  std::uint64_t seed = 0;
};

struct Example {
  std::array<double, 2> x{};
  int label = 0;
};

struct ToyDataset {
  int classes = 2;
  std::vector<Example> train;
  std::vector<Example> test;
};

/// Deterministic in spec.seed. Throws ArgumentError for fewer than 2 classes,
/// a count list of the wrong length, or a test fraction outside [0, 1).
ToyDataset make_dataset(const DatasetSpec& spec);

/// CSV `x1,x2,label,split` with split in {train, test}.
void write_dataset_csv(const ToyDataset& data, std::ostream& out);
/// Inverse of write_dataset_csv. `classes` of 0 infers max label + 1.
ToyDataset read_dataset_csv(std::istream& in, int classes = 0);

/// Layer widths, input first. Weights of layer l are stored row-major
/// (out x in) followed by its biases.
struct MlpShape {
  std::vector<std::size_t> layers{2, 16, 16, 4};

  static MlpShape standard(int classes, std::size_t hidden = 16);
  std::size_t num_params() const;
  std::size_t num_classes() const { return layers.back(); }
};

struct MlpModel {
  MlpShape shape;
  ParamVector params;

  /// Weights N(0, 1/fan_in), biases zero.
  static MlpModel init(const MlpShape& shape, Rng& rng);
};

ParamVector init_params(const MlpShape& shape, Rng& rng);

/// Mean softmax cross-entropy over `batch` (indices into `examples`) and its
/// gradient, written into `grad`. Throws DivergenceError on non-finite
/// activations.
double mlp_loss_grad(const MlpShape& shape, std::span<const double> params,
                     std::span<const Example> examples, std::span<const std::size_t> batch,
                     std::span<double> grad);
/// Convenience overload over every example.
double mlp_loss_grad(const MlpShape& shape, std::span<const double> params,
                     std::span<const Example> examples, std::span<double> grad);
/// Loss only, over every example.
double mlp_loss(const MlpShape& shape, std::span<const double> params,
                std::span<const Example> examples);

/// Argmax class per example.
std::vector<int> predict(const MlpShape& shape, std::span<const double> params,
                         std::span<const Example> examples);

enum class Metric { Accuracy, MacroF1 };

/// Argmax predictions scored by accuracy or macro-F1.
double evaluate(const MlpShape& shape, std::span<const double> params,
                std::span<const Example> split, Metric metric, int classes);

/// Epoch-shuffled index batches. Positioned before the first batch until the
/// first advance(). A batch covering the whole set keeps the identity order.
class MinibatchStream {
 public:
  MinibatchStream(std::size_t n, std::size_t batch_size, std::uint64_t seed);

  void advance();
  std::span<const std::size_t> current() const;
  bool started() const noexcept { return end_ != 0; }
  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t batch_size() const noexcept { return batch_; }

 private:
  void reshuffle();

  std::size_t n_;
  std::size_t batch_;
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;  // start of the current batch
  std::size_t end_ = 0;     // one past its end; 0 before the first advance
  std::size_t epoch_ = 0;
};

struct TaskSpec {
  DatasetSpec dataset;
  std::size_t hidden = 16;
  std::size_t batch_size = 16;
  Metric metric = Metric::MacroF1;
};

/// The toy task as an optimizer objective. Gradient evaluations use the
/// current minibatch; loss() is the full training loss and metric() scores
/// the test split.
class TaskObjective final : public Objective {
 public:
  TaskObjective(std::shared_ptr<const ToyDataset> data, MlpShape shape, std::size_t batch_size,
                Metric metric, std::uint64_t stream_seed);

  std::size_t dimension() const override { return shape_.num_params(); }
  double value_and_gradient(std::span<const double> w, std::span<double> grad) override;
  double loss(std::span<const double> w) const override;
  std::optional<double> metric(std::span<const double> w) const override;
  void next_batch() override { stream_.advance(); }
  ParamVector initial_point(Rng& rng) const override;

  const MlpShape& shape() const noexcept { return shape_; }
  const MinibatchStream& stream() const noexcept { return stream_; }

 private:
  std::shared_ptr<const ToyDataset> data_;
  MlpShape shape_;
  Metric metric_;
  MinibatchStream stream_;
};

/// Factory for run_trajectories: one fresh objective per trajectory seed,
/// all sharing one dataset built from `spec.dataset`.
std::function<std::unique_ptr<Objective>(std::uint64_t)> task_factory(const TaskSpec& spec);
std::function<std::unique_ptr<Objective>(std::uint64_t)> task_factory(
    const TaskSpec& spec, std::shared_ptr<const ToyDataset> data);

}  // namespace sdbench::toy
