#include "beamsel/network.hpp"

#include <utility>

#include "beamsel/errors.hpp"

namespace beamsel::nn {

Network::Network(Shape input_shape, const std::vector<LayerSpec>& specs, Rng init,
                 Topology topology)
    : input_shape_(std::move(input_shape)), topology_(topology) {
  Shape shape = input_shape_;
  for (const LayerSpec& spec : specs) {
    layers_.push_back(make_layer(spec, shape, init));
    shape = layers_.back()->output_shape(shape);
  }
  check_composition();
}

Network::Network(Shape input_shape, std::vector<std::unique_ptr<Layer>> layers, Topology topology)
    : input_shape_(std::move(input_shape)), topology_(topology), layers_(std::move(layers)) {
  check_composition();
}

Network::Network(const Network& other)
    : input_shape_(other.input_shape_),
      topology_(other.topology_),
      mode_(other.mode_),
      dropout_rng_(other.dropout_rng_) {
  layers_.reserve(other.layers_.size());
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

Network& Network::operator=(const Network& other) {
  if (this != &other) {
    Network copy(other);
    *this = std::move(copy);
  }
  return *this;
}

void Network::check_composition() const {
  if (input_shape_.empty()) throw DimensionError("network input shape must not be empty");
  for (std::size_t d : input_shape_) {
    if (d == 0) throw DimensionError("network input extents must be positive");
  }
  output_shape(input_shape_);
}

Shape Network::output_shape(const Shape& input) const {
  Shape shape = input;
  for (const auto& l : layers_) shape = l->output_shape(shape);
  return shape;
}

std::vector<LayerSpec> Network::specs() const {
  std::vector<LayerSpec> out;
  for (const auto& l : layers_) out.push_back(l->spec());
  return out;
}

void Network::validate_input(const Shape& input) const {
  if (topology_ == Topology::Cnn) {
    if (input != input_shape_) {
      throw DimensionError("network expects input " + shape_string(input_shape_) + ", got " +
                           shape_string(input));
    }
    return;
  }
  bool ok = input.size() == input_shape_.size() && input.back() == input_shape_.back();
  for (std::size_t i = 0; ok && i + 1 < input.size(); ++i) ok = input[i] >= input_shape_[i];
  if (!ok) {
    throw DimensionError("fully convolutional network needs at least " +
                         shape_string(input_shape_) + ", got " + shape_string(input));
  }
}

void Network::set_dropout_enabled(bool enabled) {
  for (auto& l : layers_) {
    if (auto* d = dynamic_cast<Dropout*>(l.get())) d->set_enabled(enabled);
  }
}

bool Network::has_active_dropout() const {
  if (mode_ != Mode::Train) return false;
  for (const auto& l : layers_) {
    if (auto* d = dynamic_cast<const Dropout*>(l.get()); d && d->enabled() && d->rate() > 0.0) {
      return true;
    }
  }
  return false;
}

Tensor Network::forward(const Tensor& input) {
  if (mode_ == Mode::Eval) {
    cached_ = false;
    return infer(input);
  }
  validate_input(input.shape());
  Tensor x = input;
  for (auto& l : layers_) x = l->forward_train(x, dropout_rng_);
  cached_ = true;
  return x;
}

Tensor Network::infer(const Tensor& input) const {
  validate_input(input.shape());
  Tensor x = layers_.empty() ? input : layers_.front()->infer(input);
  for (std::size_t i = 1; i < layers_.size(); ++i) x = layers_[i]->infer(x);
  return x;
}

GradientSet Network::backward(const Tensor& loss_grad) {
  GradientSet grads = zero_gradients();
  backward_accumulate(loss_grad, grads);
  return grads;
}

void Network::backward_accumulate(const Tensor& loss_grad, GradientSet& accum) {
  if (!cached_) throw StateError("backward requires a preceding forward pass in train mode");
  std::size_t n_params = 0;
  for (const auto& l : layers_) n_params += std::as_const(*l).parameters().size();
  if (accum.size() != n_params) {
    throw ArgumentError("gradient set has " + std::to_string(accum.size()) + " tensors, expected " +
                        std::to_string(n_params));
  }
  Tensor g = loss_grad;
  std::size_t offset = n_params;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    const std::size_t count = std::as_const(*layers_[i]).parameters().size();
    offset -= count;
    g = layers_[i]->backward(g, std::span<Tensor>(accum).subspan(offset, count));
  }
}

std::vector<Tensor*> Network::parameters() {
  std::vector<Tensor*> out;
  for (auto& l : layers_) {
    for (Tensor* p : l->parameters()) out.push_back(p);
  }
  return out;
}

std::vector<const Tensor*> Network::parameters() const {
  std::vector<const Tensor*> out;
  for (const auto& l : layers_) {
    for (const Tensor* p : std::as_const(*l).parameters()) out.push_back(p);
  }
  return out;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor* p : parameters()) n += p->size();
  return n;
}

GradientSet Network::zero_gradients() const {
  GradientSet grads;
  for (const Tensor* p : parameters()) grads.emplace_back(p->shape());
  return grads;
}

}  // namespace beamsel::nn
