#include "sdbench/toytask.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

#include <Eigen/Dense>

#include "sdbench/errors.hpp"
#include "sdbench/stats.hpp"

namespace sdbench::toy {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatMap = Eigen::Map<const RowMat>;
using MatMap = Eigen::Map<RowMat>;

// Splits one class's points: the first round(n * frac) after a shuffle go to
// the test split.
void split_class(std::vector<Example>& pts, double test_fraction, Rng& rng, ToyDataset& out) {
  std::shuffle(pts.begin(), pts.end(), rng);
  const auto n_test =
      static_cast<std::size_t>(std::lround(test_fraction * static_cast<double>(pts.size())));
  for (std::size_t i = 0; i < pts.size(); ++i) (i < n_test ? out.test : out.train).push_back(pts[i]);
}

std::vector<Example> blob_class(const BlobsSpec& s, int k, Rng& rng) {
  const double angle = 2.0 * std::numbers::pi * k / s.classes;
  const double cx = s.radius * std::cos(angle), cy = s.radius * std::sin(angle);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<Example> pts(s.counts[static_cast<std::size_t>(k)]);
  for (auto& p : pts) {
    p.x = {cx + s.noise * noise(rng), cy + s.noise * noise(rng)};
    p.label = k;
  }
  return pts;
}

std::vector<Example> spiral_class(const SpiralsSpec& s, int k, Rng& rng) {
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<Example> pts(s.per_class);
  const double offset = 2.0 * std::numbers::pi * k / s.classes;
  for (std::size_t i = 0; i < s.per_class; ++i) {
    // radius grows linearly from 0.2 to 1 along the arm
    const double t = s.per_class > 1 ? static_cast<double>(i) / static_cast<double>(s.per_class - 1)
                                     : 0.0;
    const double r = 0.2 + 0.8 * t;
    const double a = offset + 2.0 * std::numbers::pi * s.turns * t;
    pts[i].x = {r * std::cos(a) + s.noise * noise(rng), r * std::sin(a) + s.noise * noise(rng)};
    pts[i].label = k;
  }
  return pts;
}

}  // namespace

ToyDataset make_dataset(const DatasetSpec& spec) {
  if (!(spec.test_fraction >= 0.0 && spec.test_fraction < 1.0))
    throw ArgumentError("test_fraction must lie in [0, 1)");
  Rng rng(spec.seed);
  ToyDataset out;
  if (const auto* b = std::get_if<BlobsSpec>(&spec.generator)) {
    if (b->classes < 2) throw ArgumentError("blobs: need at least 2 classes");
    if (b->counts.size() != static_cast<std::size_t>(b->classes))
      throw ArgumentError("blobs: counts must list one entry per class");
    if (!(b->noise >= 0.0) || !(b->radius > 0.0))
      throw ArgumentError("blobs: radius must be positive and noise non-negative");
    out.classes = b->classes;
    for (int k = 0; k < b->classes; ++k) {
      auto pts = blob_class(*b, k, rng);
      split_class(pts, spec.test_fraction, rng, out);
    }
  } else {
    const auto& s = std::get<SpiralsSpec>(spec.generator);
    if (s.classes < 2) throw ArgumentError("spirals: need at least 2 classes");
    if (s.per_class == 0) throw ArgumentError("spirals: per_class must be >= 1");
    if (!(s.noise >= 0.0)) throw ArgumentError("spirals: noise must be non-negative");
    out.classes = s.classes;
    for (int k = 0; k < s.classes; ++k) {
      auto pts = spiral_class(s, k, rng);
      split_class(pts, spec.test_fraction, rng, out);
    }
  }
  return out;
}

void write_dataset_csv(const ToyDataset& data, std::ostream& out) {
  out << "x1,x2,label,split\n";
  char buf[96];
  auto emit = [&](const std::vector<Example>& rows, const char* split) {
    for (const auto& e : rows) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d,%s\n", e.x[0], e.x[1], e.label, split);
      out << buf;
    }
  };
  emit(data.train, "train");
  emit(data.test, "test");
}

ToyDataset read_dataset_csv(std::istream& in, int classes) {
  std::string line;
  if (!std::getline(in, line) || line != "x1,x2,label,split")
    throw ArgumentError("dataset CSV: expected header x1,x2,label,split");
  ToyDataset d;
  int max_label = -1;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string f[4];
    for (int i = 0; i < 4; ++i)
      if (!std::getline(row, f[i], i < 3 ? ',' : '\n'))
        throw ArgumentError("dataset CSV line " + std::to_string(lineno) + ": too few fields");
    Example e;
    try {
      e.x = {std::stod(f[0]), std::stod(f[1])};
      e.label = std::stoi(f[2]);
    } catch (const std::exception&) {
      throw ArgumentError("dataset CSV line " + std::to_string(lineno) + ": bad number");
    }
    if (e.label < 0) throw ArgumentError("dataset CSV: negative label");
    max_label = std::max(max_label, e.label);
    if (f[3] == "train")
      d.train.push_back(e);
    else if (f[3] == "test")
      d.test.push_back(e);
    else
      throw ArgumentError("dataset CSV line " + std::to_string(lineno) + ": unknown split");
  }
  d.classes = classes > 0 ? classes : max_label + 1;
  if (max_label >= d.classes) throw ArgumentError("dataset CSV: label exceeds class count");
  if (d.classes < 2) throw ArgumentError("dataset CSV: need at least 2 classes");
  return d;
}

// ---------------------------------------------------------------------------

MlpShape MlpShape::standard(int classes, std::size_t hidden) {
  if (classes < 2) throw ArgumentError("MLP needs at least 2 output classes");
  return MlpShape{{2, hidden, hidden, static_cast<std::size_t>(classes)}};
}

std::size_t MlpShape::num_params() const {
  std::size_t n = 0;
  for (std::size_t l = 1; l < layers.size(); ++l) n += (layers[l - 1] + 1) * layers[l];
  return n;
}

ParamVector init_params(const MlpShape& shape, Rng& rng) {
  if (shape.layers.size() < 2) throw ArgumentError("MLP needs input and output layers");
  ParamVector w(shape.num_params(), 0.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::size_t off = 0;
  for (std::size_t l = 1; l < shape.layers.size(); ++l) {
    const std::size_t in = shape.layers[l - 1], out = shape.layers[l];
    const double scale = std::sqrt(1.0 / static_cast<double>(in));
    for (std::size_t i = 0; i < in * out; ++i) w[off + i] = scale * normal(rng);
    off += in * out + out;  // biases stay zero
  }
  return w;
}

MlpModel MlpModel::init(const MlpShape& shape, Rng& rng) {
  return MlpModel{shape, init_params(shape, rng)};
}

namespace {

void check_params(const MlpShape& shape, std::span<const double> params) {
  if (params.size() != shape.num_params())
    throw ArgumentError("MLP parameter vector has length " + std::to_string(params.size()) +
                        ", expected " + std::to_string(shape.num_params()));
}

RowMat gather(std::span<const Example> examples, std::span<const std::size_t> batch) {
  RowMat X(static_cast<Eigen::Index>(batch.size()), 2);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& e = examples[batch[i]];
    X(static_cast<Eigen::Index>(i), 0) = e.x[0];
    X(static_cast<Eigen::Index>(i), 1) = e.x[1];
  }
  return X;
}

/// Activations per layer; the last entry holds the logits.
std::vector<RowMat> forward(const MlpShape& shape, std::span<const double> params, RowMat X) {
  std::vector<RowMat> acts;
  acts.push_back(std::move(X));
  std::size_t off = 0;
  const std::size_t L = shape.layers.size() - 1;
  for (std::size_t l = 1; l <= L; ++l) {
    const auto in = static_cast<Eigen::Index>(shape.layers[l - 1]);
    const auto out = static_cast<Eigen::Index>(shape.layers[l]);
    ConstMatMap W(params.data() + off, out, in);
    Eigen::Map<const Eigen::RowVectorXd> b(params.data() + off + in * out, out);
    RowMat z = acts.back() * W.transpose();
    z.rowwise() += b;
    if (l < L) z = z.array().tanh().matrix();
    acts.push_back(std::move(z));
    off += static_cast<std::size_t>(in * out + out);
  }
  return acts;
}

/// Row-wise softmax probabilities (in place) and the mean cross-entropy.
double softmax_xent(RowMat& logits, std::span<const Example> examples,
                    std::span<const std::size_t> batch) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    auto row = logits.row(i);
    const double m = row.maxCoeff();
    row.array() -= m;
    const double lse = std::log(row.array().exp().sum());
    const int y = examples[batch[static_cast<std::size_t>(i)]].label;
    if (y < 0 || y >= logits.cols()) throw ArgumentError("example label out of range for MLP");
    total -= row(y) - lse;
    row = (row.array() - lse).exp().matrix();
  }
  return total / static_cast<double>(logits.rows());
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

}  // namespace

double mlp_loss_grad(const MlpShape& shape, std::span<const double> params,
                     std::span<const Example> examples, std::span<const std::size_t> batch,
                     std::span<double> grad) {
  check_params(shape, params);
  if (batch.empty()) throw ArgumentError("mlp_loss_grad: empty batch");
  if (grad.size() != params.size()) throw ArgumentError("mlp_loss_grad: gradient size mismatch");

  auto acts = forward(shape, params, gather(examples, batch));
  RowMat delta = std::move(acts.back());
  acts.pop_back();
  const double loss = softmax_xent(delta, examples, batch);
  if (!std::isfinite(loss)) throw DivergenceError("non-finite MLP loss", ParamVector(params.begin(), params.end()));

  // d(mean xent)/d(logits) = (p - onehot) / B
  for (std::size_t i = 0; i < batch.size(); ++i)
    delta(static_cast<Eigen::Index>(i), examples[batch[i]].label) -= 1.0;
  delta /= static_cast<double>(batch.size());

  std::size_t off = params.size();
  for (std::size_t l = shape.layers.size() - 1; l >= 1; --l) {
    const auto in = static_cast<Eigen::Index>(shape.layers[l - 1]);
    const auto out = static_cast<Eigen::Index>(shape.layers[l]);
    off -= static_cast<std::size_t>(in * out + out);
    const RowMat& a_prev = acts[l - 1];
    MatMap dW(grad.data() + off, out, in);
    Eigen::Map<Eigen::RowVectorXd> db(grad.data() + off + in * out, out);
    dW.noalias() = delta.transpose() * a_prev;
    db = delta.colwise().sum();
    if (l > 1) {
      ConstMatMap W(params.data() + off, out, in);
      RowMat back = delta * W;
      // tanh' = 1 - tanh^2, and a_prev already holds tanh values
      delta = back.array() * (1.0 - a_prev.array().square());
    }
  }
  for (double g : grad)
    if (!std::isfinite(g))
      throw DivergenceError("non-finite MLP gradient", ParamVector(params.begin(), params.end()));
  return loss;
}

double mlp_loss_grad(const MlpShape& shape, std::span<const double> params,
                     std::span<const Example> examples, std::span<double> grad) {
  const auto idx = all_indices(examples.size());
  return mlp_loss_grad(shape, params, examples, idx, grad);
}

double mlp_loss(const MlpShape& shape, std::span<const double> params,
                std::span<const Example> examples) {
  check_params(shape, params);
  if (examples.empty()) throw ArgumentError("mlp_loss: empty example set");
  const auto idx = all_indices(examples.size());
  auto acts = forward(shape, params, gather(examples, idx));
  return softmax_xent(acts.back(), examples, idx);
}

std::vector<int> predict(const MlpShape& shape, std::span<const double> params,
                         std::span<const Example> examples) {
  check_params(shape, params);
  const auto idx = all_indices(examples.size());
  auto acts = forward(shape, params, gather(examples, idx));
  const RowMat& logits = acts.back();
  std::vector<int> out(examples.size());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index arg = 0;
    logits.row(i).maxCoeff(&arg);
    out[static_cast<std::size_t>(i)] = static_cast<int>(arg);
  }
  return out;
}

double evaluate(const MlpShape& shape, std::span<const double> params,
                std::span<const Example> split, Metric metric, int classes) {
  if (split.empty()) throw ArgumentError("evaluate: empty split");
  const auto preds = predict(shape, params, split);
  std::vector<int> labels;
  labels.reserve(split.size());
  for (const auto& e : split) labels.push_back(e.label);
  return metric == Metric::Accuracy ? stats::accuracy(preds, labels)
                                    : stats::macro_f1(preds, labels, classes);
}

// ---------------------------------------------------------------------------

MinibatchStream::MinibatchStream(std::size_t n, std::size_t batch_size, std::uint64_t seed)
    : n_(n), batch_(batch_size), rng_(seed), order_(all_indices(n)) {
  if (n == 0) throw ArgumentError("MinibatchStream: empty training set");
  if (batch_size == 0) throw ArgumentError("MinibatchStream: batch size must be >= 1");
  batch_ = std::min(batch_, n_);
}

void MinibatchStream::reshuffle() {
  if (batch_ < n_) std::shuffle(order_.begin(), order_.end(), rng_);
}

void MinibatchStream::advance() {
  if (end_ == 0) {
    reshuffle();
  } else if (end_ >= n_) {
    ++epoch_;
    reshuffle();
    cursor_ = 0;
  } else {
    cursor_ = end_;
  }
  // A short final batch keeps every epoch an exact pass over the data.
  end_ = std::min(cursor_ + batch_, n_);
}

std::span<const std::size_t> MinibatchStream::current() const {
  if (end_ == 0) throw ArgumentError("MinibatchStream: advance() before reading a batch");
  return std::span<const std::size_t>(order_).subspan(cursor_, end_ - cursor_);
}

TaskObjective::TaskObjective(std::shared_ptr<const ToyDataset> data, MlpShape shape,
                             std::size_t batch_size, Metric metric, std::uint64_t stream_seed)
    : data_(std::move(data)),
      shape_(std::move(shape)),
      metric_(metric),
      stream_(data_ ? data_->train.size() : 0, batch_size, stream_seed) {
  if (!data_ || data_->test.empty()) throw ArgumentError("task objective: empty test split");
  if (shape_.num_classes() != static_cast<std::size_t>(data_->classes))
    throw ArgumentError("task objective: MLP output width differs from class count");
}

double TaskObjective::value_and_gradient(std::span<const double> w, std::span<double> grad) {
  if (!stream_.started()) stream_.advance();
  return mlp_loss_grad(shape_, w, data_->train, stream_.current(), grad);
}

double TaskObjective::loss(std::span<const double> w) const {
  return mlp_loss(shape_, w, data_->train);
}

std::optional<double> TaskObjective::metric(std::span<const double> w) const {
  return evaluate(shape_, w, data_->test, metric_, data_->classes);
}

ParamVector TaskObjective::initial_point(Rng& rng) const { return init_params(shape_, rng); }

std::function<std::unique_ptr<Objective>(std::uint64_t)> task_factory(
    const TaskSpec& spec, std::shared_ptr<const ToyDataset> data) {
  const MlpShape shape = MlpShape::standard(data->classes, spec.hidden);
  return [spec, data, shape](std::uint64_t seed) -> std::unique_ptr<Objective> {
    // Batch order depends only on the trajectory seed, so optimizers that
    // share a seed see the same batches.
    return std::make_unique<TaskObjective>(data, shape, spec.batch_size, spec.metric,
                                           derive_seed(seed, 0x6261746368ULL));
  };
}

std::function<std::unique_ptr<Objective>(std::uint64_t)> task_factory(const TaskSpec& spec) {
  return task_factory(spec, std::make_shared<const ToyDataset>(make_dataset(spec.dataset)));
}

}  // namespace sdbench::toy
