#include "beamsel/trainer.hpp"

#include <algorithm>
#include <cstdlib>
#include <numeric>
#include <string>

#include "beamsel/errors.hpp"
#include "beamsel/parallel.hpp"

namespace beamsel {

std::size_t default_threads() {
  if (const char* env = std::getenv("BEAMSEL_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace beamsel

namespace beamsel::nn {

TensorSet::TensorSet(std::vector<Tensor> inputs, std::vector<std::size_t> labels)
    : inputs_(std::move(inputs)), labels_(std::move(labels)) {
  if (inputs_.size() != labels_.size()) {
    throw DimensionError("dataset has " + std::to_string(inputs_.size()) + " inputs but " +
                         std::to_string(labels_.size()) + " labels");
  }
}

void TensorSet::add(Tensor input, std::size_t label) {
  inputs_.push_back(std::move(input));
  labels_.push_back(label);
}

std::size_t argmax(const Tensor& t) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (t[i] > t[best]) best = i;
  }
  return best;
}

std::vector<std::size_t> predict_classes(const Network& net, const ClassificationSet& set,
                                         std::size_t threads) {
  std::vector<std::size_t> out(set.size());
  parallel_for(set.size(), threads, [&](std::size_t i) { out[i] = argmax(net.infer(set.input(i))); });
  return out;
}

double accuracy(const Network& net, const ClassificationSet& set, std::size_t threads) {
  if (set.size() == 0) return 0.0;
  const auto pred = predict_classes(net, set, threads);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == set.label(i);
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

TrainHistory train_classifier(Network& net, const ClassificationSet& train,
                              const ClassificationSet& val, const TrainOptions& options,
                              const EpochCallback& on_epoch) {
  if (train.size() == 0) throw ArgumentError("training set is empty");
  if (options.batch_size == 0) throw ArgumentError("batch size must be positive");
  if (net.layer_count() == 0 || net.layer(net.layer_count() - 1).kind() != LayerKind::Softmax) {
    throw ArgumentError("classifier training needs a softmax-terminated network");
  }
  const std::size_t classes = net.output_shape().back();

  const Rng root(options.seed);
  AdamState adam(net, options.adam);
  TrainHistory history;
  Network best = net;
  double best_val = -1.0;
  std::size_t stale = 0;

  std::vector<std::size_t> order(train.size());
  for (std::size_t epoch = 1; epoch <= options.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffler = root.split(2 * epoch);
    shuffler.shuffle(std::span<std::size_t>(order));

    net.set_mode(Mode::Train);
    net.set_dropout_enabled(true);
    net.set_dropout_rng(root.split(2 * epoch + 1));

    double loss_sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t stop = std::min(order.size(), start + options.batch_size);
      GradientSet grads = net.zero_gradients();
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t idx = order[k];
        const std::size_t label = train.label(idx);
        const Tensor target = one_hot(label, classes);
        const Tensor probs = net.forward(train.input(idx));
        loss_sum += cross_entropy(probs, target);
        hits += argmax(probs) == label;
        net.backward_accumulate(cross_entropy_grad(probs, target), grads);
      }
      const double scale = 1.0 / static_cast<double>(stop - start);
      for (Tensor& g : grads) {
        for (double& v : g.values()) v *= scale;
      }
      adam_step(adam, net.parameters(), grads);
    }
    net.set_mode(Mode::Eval);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(train.size());
    rec.train_accuracy = static_cast<double>(hits) / static_cast<double>(train.size());
    rec.val_accuracy = accuracy(net, val);
    history.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (val.size() == 0 || rec.val_accuracy > best_val) {
      best_val = rec.val_accuracy;
      history.best_epoch = epoch;
      if (options.restore_best) best = net;
      stale = 0;
    } else if (options.patience > 0 && val.size() > 0 && ++stale >= options.patience) {
      history.early_stopped = true;
      break;
    }
  }
  if (options.restore_best) net = std::move(best);
  net.set_mode(Mode::Eval);
  return history;
}

}  // namespace beamsel::nn
