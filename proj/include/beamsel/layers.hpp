#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "beamsel/rng.hpp"
#include "beamsel/tensor.hpp"

namespace beamsel::nn {

enum class LayerKind { Conv2D, MaxPool2D, Flatten, Dense, Dropout, Softmax };

std::string to_string(LayerKind kind);

/// Declarative description of one layer. ReLU is a flag on Conv2D and Dense
/// rather than a layer of its own.
struct LayerSpec {
  LayerKind kind = LayerKind::Flatten;
  std::size_t units = 0;         // Conv2D filters / Dense outputs
  std::size_t kernel_rows = 0;   // Conv2D
  std::size_t kernel_cols = 0;   // Conv2D
  std::size_t pool = 0;          // MaxPool2D
  double rate = 0.0;             // Dropout
  bool relu = false;             // Conv2D, Dense

  static LayerSpec conv2d(std::size_t filters, std::size_t kernel, bool relu = true);
  static LayerSpec conv2d(std::size_t filters, std::size_t kernel_rows, std::size_t kernel_cols,
                          bool relu);
  static LayerSpec max_pool(std::size_t pool);
  static LayerSpec flatten();
  static LayerSpec dense(std::size_t units, bool relu = false);
  static LayerSpec dropout(double rate);
  static LayerSpec softmax();

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

class Layer {
 public:
  virtual ~Layer() = default;

  virtual LayerSpec spec() const = 0;
  LayerKind kind() const { return spec().kind; }

  /// Throws DimensionError when `input` is not accepted.
  virtual Shape output_shape(const Shape& input) const = 0;

  /// Stateless evaluation with inference semantics (dropout is identity).
  virtual Tensor infer(const Tensor& input) const = 0;

  /// Training evaluation; caches whatever backward() needs.
  virtual Tensor forward_train(const Tensor& input, Rng& rng) { (void)rng; return infer(input); }

  /// Returns dL/d(input) and adds parameter gradients into `grads`
  /// (one tensor per parameter, in parameters() order).
  virtual Tensor backward(const Tensor& grad_output, std::span<Tensor> grads) = 0;

  virtual std::vector<Tensor*> parameters() { return {}; }
  virtual std::vector<const Tensor*> parameters() const { return {}; }

  virtual std::unique_ptr<Layer> clone() const = 0;
};

/// Valid-padding, stride-1 convolution. Weight layout (kernel_rows,
/// kernel_cols, in_channels, filters); bias (filters).
class Conv2D final : public Layer {
 public:
  Conv2D(Tensor weight, Tensor bias, bool relu);

  LayerSpec spec() const override;
  Shape output_shape(const Shape& input) const override;
  Tensor infer(const Tensor& input) const override;
  Tensor forward_train(const Tensor& input, Rng& rng) override;
  Tensor backward(const Tensor& grad_output, std::span<Tensor> grads) override;
  std::vector<Tensor*> parameters() override { return {&weight_, &bias_}; }
  std::vector<const Tensor*> parameters() const override { return {&weight_, &bias_}; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv2D>(*this); }

  const Tensor& weight() const { return weight_; }
  const Tensor& bias() const { return bias_; }
  bool relu() const { return relu_; }

 private:
  Tensor weight_;
  Tensor bias_;
  bool relu_;
  Tensor input_;
  Tensor output_;
};

/// Non-overlapping max pooling; stride equals the pool extent and trailing
/// rows/cols that do not fill a window are dropped.
class MaxPool2D final : public Layer {
 public:
  explicit MaxPool2D(std::size_t pool);

  LayerSpec spec() const override { return LayerSpec::max_pool(pool_); }
  Shape output_shape(const Shape& input) const override;
  Tensor infer(const Tensor& input) const override;
  Tensor forward_train(const Tensor& input, Rng& rng) override;
  Tensor backward(const Tensor& grad_output, std::span<Tensor> grads) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<MaxPool2D>(*this); }

  std::size_t pool() const { return pool_; }

 private:
  Tensor pool_impl(const Tensor& input, std::vector<std::size_t>* argmax) const;

  std::size_t pool_;
  Shape input_shape_;
  std::vector<std::size_t> argmax_;
};

/// Row-major (row, col, channel) flattening.
class Flatten final : public Layer {
 public:
  LayerSpec spec() const override { return LayerSpec::flatten(); }
  Shape output_shape(const Shape& input) const override;
  Tensor infer(const Tensor& input) const override;
  Tensor forward_train(const Tensor& input, Rng& rng) override;
  Tensor backward(const Tensor& grad_output, std::span<Tensor> grads) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Flatten>(*this); }

 private:
  Shape input_shape_;
};

/// Fully connected layer on rank-1 input. Weight layout (inputs, outputs).
class Dense final : public Layer {
 public:
  Dense(Tensor weight, Tensor bias, bool relu);

  LayerSpec spec() const override;
  Shape output_shape(const Shape& input) const override;
  Tensor infer(const Tensor& input) const override;
  Tensor forward_train(const Tensor& input, Rng& rng) override;
  Tensor backward(const Tensor& grad_output, std::span<Tensor> grads) override;
  std::vector<Tensor*> parameters() override { return {&weight_, &bias_}; }
  std::vector<const Tensor*> parameters() const override { return {&weight_, &bias_}; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Dense>(*this); }

  const Tensor& weight() const { return weight_; }
  const Tensor& bias() const { return bias_; }
  bool relu() const { return relu_; }

 private:
  Tensor weight_;
  Tensor bias_;
  bool relu_;
  Tensor input_;
  Tensor output_;
};

/// Inverted dropout: kept units are scaled by 1/(1-rate) during training so
/// inference is the identity.
class Dropout final : public Layer {
 public:
  explicit Dropout(double rate);

  LayerSpec spec() const override { return LayerSpec::dropout(rate_); }
  Shape output_shape(const Shape& input) const override { return input; }
  Tensor infer(const Tensor& input) const override { return input; }
  Tensor forward_train(const Tensor& input, Rng& rng) override;
  Tensor backward(const Tensor& grad_output, std::span<Tensor> grads) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Dropout>(*this); }

  double rate() const { return rate_; }
  void set_enabled(bool enabled) { enabled_ = enabled; }
  bool enabled() const { return enabled_; }

 private:
  double rate_;
  bool enabled_ = true;
  std::vector<double> mask_;
};

/// Softmax over the last axis, so a (rows, cols, classes) map is normalized
/// per cell.
class Softmax final : public Layer {
 public:
  LayerSpec spec() const override { return LayerSpec::softmax(); }
  Shape output_shape(const Shape& input) const override { return input; }
  Tensor infer(const Tensor& input) const override;
  Tensor forward_train(const Tensor& input, Rng& rng) override;
  Tensor backward(const Tensor& grad_output, std::span<Tensor> grads) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Softmax>(*this); }

 private:
  Tensor output_;
};

/// Builds a layer for `input`, drawing Glorot-uniform weights from `init`.
std::unique_ptr<Layer> make_layer(const LayerSpec& spec, const Shape& input, Rng& init);

}  // namespace beamsel::nn
