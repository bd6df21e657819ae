#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "beamsel/layers.hpp"
#include "beamsel/rng.hpp"
#include "beamsel/tensor.hpp"

namespace beamsel::nn {

enum class Mode { Train, Eval };

/// Cnn networks accept exactly their declared input shape. Fcn networks
/// accept any spatial extent at least as large as the declared one.
enum class Topology { Cnn, Fcn };

/// One gradient tensor per parameter tensor, in Network::parameters() order.
using GradientSet = std::vector<Tensor>;

class Network {
 public:
  Network(Shape input_shape, const std::vector<LayerSpec>& specs, Rng init,
          Topology topology = Topology::Cnn);
  Network(Shape input_shape, std::vector<std::unique_ptr<Layer>> layers,
          Topology topology = Topology::Cnn);

  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  const Shape& input_shape() const noexcept { return input_shape_; }
  Topology topology() const noexcept { return topology_; }
  /// Output shape for the declared input shape.
  Shape output_shape() const { return output_shape(input_shape_); }
  Shape output_shape(const Shape& input) const;

  std::size_t layer_count() const noexcept { return layers_.size(); }
  const Layer& layer(std::size_t i) const { return *layers_.at(i); }
  std::vector<LayerSpec> specs() const;

  Mode mode() const noexcept { return mode_; }
  void set_mode(Mode mode) noexcept { mode_ = mode; }

  /// Switches every Dropout layer to identity (or back) without changing mode.
  void set_dropout_enabled(bool enabled);
  /// True when a forward pass in the current mode would apply random masks.
  bool has_active_dropout() const;
  /// Stream used for dropout masks in Train mode.
  void set_dropout_rng(Rng rng) noexcept { dropout_rng_ = rng; }

  /// Mode-dependent forward pass; in Train mode the intermediates are cached
  /// for backward().
  Tensor forward(const Tensor& input);
  /// Inference-semantics forward pass. Does not touch any cache, so it is
  /// safe to call concurrently on a shared network.
  Tensor infer(const Tensor& input) const;

  /// Gradients of the loss w.r.t. every parameter given dL/d(output).
  GradientSet backward(const Tensor& loss_grad);
  /// Adds this sample's parameter gradients into `accum`.
  void backward_accumulate(const Tensor& loss_grad, GradientSet& accum);

  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  std::size_t parameter_count() const;
  GradientSet zero_gradients() const;

 private:
  void validate_input(const Shape& input) const;
  void check_composition() const;

  Shape input_shape_;
  Topology topology_ = Topology::Cnn;
  std::vector<std::unique_ptr<Layer>> layers_;
  Mode mode_ = Mode::Eval;
  Rng dropout_rng_{0};
  bool cached_ = false;
};

}  // namespace beamsel::nn
