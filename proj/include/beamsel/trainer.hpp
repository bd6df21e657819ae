#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "beamsel/network.hpp"
#include "beamsel/optim.hpp"
#include "beamsel/tensor.hpp"

namespace beamsel::nn {

/// Read-only view of a labelled dataset. Samples may be materialized lazily.
class ClassificationSet {
 public:
  virtual ~ClassificationSet() = default;
  virtual std::size_t size() const = 0;
  virtual Tensor input(std::size_t i) const = 0;
  virtual std::size_t label(std::size_t i) const = 0;
};

/// In-memory dataset.
class TensorSet final : public ClassificationSet {
 public:
  TensorSet() = default;
  TensorSet(std::vector<Tensor> inputs, std::vector<std::size_t> labels);

  void add(Tensor input, std::size_t label);
  std::size_t size() const override { return inputs_.size(); }
  Tensor input(std::size_t i) const override { return inputs_.at(i); }
  std::size_t label(std::size_t i) const override { return labels_.at(i); }

 private:
  std::vector<Tensor> inputs_;
  std::vector<std::size_t> labels_;
};

struct TrainOptions {
  std::size_t batch_size = 256;
  std::size_t max_epochs = 20;
  /// Stop after this many epochs without a validation-accuracy improvement;
  /// 0 disables early stopping.
  std::size_t patience = 3;
  /// Reload the weights of the best validation epoch when training ends.
  bool restore_best = true;
  AdamConfig adam;
  std::uint64_t seed = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  bool early_stopped = false;

  friend bool operator==(const TrainHistory&, const TrainHistory&) = default;
};

inline bool operator==(const EpochRecord& a, const EpochRecord& b) {
  return a.epoch == b.epoch && a.train_loss == b.train_loss &&
         a.train_accuracy == b.train_accuracy && a.val_accuracy == b.val_accuracy;
}

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch Adam on mean cross-entropy. The network must end in Softmax.
/// `val` may be empty, in which case early stopping never triggers.
TrainHistory train_classifier(Network& net, const ClassificationSet& train,
                              const ClassificationSet& val, const TrainOptions& options,
                              const EpochCallback& on_epoch = {});

/// Argmax of infer() per sample, evaluated on up to `threads` workers.
std::vector<std::size_t> predict_classes(const Network& net, const ClassificationSet& set,
                                         std::size_t threads = 1);

/// Fraction of samples whose argmax matches the label; 0 for an empty set.
double accuracy(const Network& net, const ClassificationSet& set, std::size_t threads = 1);

/// Index of the largest entry; the first one wins on ties.
std::size_t argmax(const Tensor& t);

}  // namespace beamsel::nn
