#include "beamsel/layers.hpp"

#include <algorithm>
#include <cmath>

#include "beamsel/errors.hpp"

namespace beamsel::nn {

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv2D: return "conv2d";
    case LayerKind::MaxPool2D: return "maxpool2d";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Dense: return "dense";
    case LayerKind::Dropout: return "dropout";
    case LayerKind::Softmax: return "softmax";
  }
  return "unknown";
}

LayerSpec LayerSpec::conv2d(std::size_t filters, std::size_t kernel, bool relu) {
  return conv2d(filters, kernel, kernel, relu);
}

LayerSpec LayerSpec::conv2d(std::size_t filters, std::size_t kernel_rows,
                            std::size_t kernel_cols, bool relu) {
  LayerSpec s;
  s.kind = LayerKind::Conv2D;
  s.units = filters;
  s.kernel_rows = kernel_rows;
  s.kernel_cols = kernel_cols;
  s.relu = relu;
  return s;
}

LayerSpec LayerSpec::max_pool(std::size_t pool) {
  LayerSpec s;
  s.kind = LayerKind::MaxPool2D;
  s.pool = pool;
  return s;
}

LayerSpec LayerSpec::flatten() { return LayerSpec{}; }

LayerSpec LayerSpec::dense(std::size_t units, bool relu) {
  LayerSpec s;
  s.kind = LayerKind::Dense;
  s.units = units;
  s.relu = relu;
  return s;
}

LayerSpec LayerSpec::dropout(double rate) {
  LayerSpec s;
  s.kind = LayerKind::Dropout;
  s.rate = rate;
  return s;
}

LayerSpec LayerSpec::softmax() {
  LayerSpec s;
  s.kind = LayerKind::Softmax;
  return s;
}

namespace {

void require_shape(const Tensor& t, const Shape& expected, const char* where) {
  if (t.shape() != expected) {
    throw DimensionError(std::string(where) + ": expected " + shape_string(expected) + ", got " +
                         shape_string(t.shape()));
  }
}

void require_grads(std::span<Tensor> grads, std::size_t n, const char* where) {
  if (grads.size() != n) {
    throw ArgumentError(std::string(where) + ": expected " + std::to_string(n) +
                        " gradient tensors, got " + std::to_string(grads.size()));
  }
}

}  // namespace

// ---------------------------------------------------------------- Conv2D

Conv2D::Conv2D(Tensor weight, Tensor bias, bool relu)
    : weight_(std::move(weight)), bias_(std::move(bias)), relu_(relu) {
  if (weight_.rank() != 4) throw DimensionError("conv2d weight must be rank 4");
  if (bias_.shape() != Shape{weight_.dim(3)}) {
    throw DimensionError("conv2d bias must have shape " + shape_string({weight_.dim(3)}));
  }
}

LayerSpec Conv2D::spec() const {
  return LayerSpec::conv2d(weight_.dim(3), weight_.dim(0), weight_.dim(1), relu_);
}

Shape Conv2D::output_shape(const Shape& input) const {
  if (input.size() != 3) {
    throw DimensionError("conv2d expects (rows, cols, channels) input, got " + shape_string(input));
  }
  std::size_t kr = weight_.dim(0), kc = weight_.dim(1);
  if (input[2] != weight_.dim(2)) {
    throw DimensionError("conv2d expects " + std::to_string(weight_.dim(2)) +
                         " input channels, got " + std::to_string(input[2]));
  }
  if (input[0] < kr || input[1] < kc) {
    throw DimensionError("conv2d kernel (" + std::to_string(kr) + "," + std::to_string(kc) +
                         ") exceeds input " + shape_string(input));
  }
  return {input[0] - kr + 1, input[1] - kc + 1, weight_.dim(3)};
}

Tensor Conv2D::infer(const Tensor& input) const {
  Tensor out(output_shape(input.shape()));
  const std::size_t kr = weight_.dim(0), kc = weight_.dim(1), cin = weight_.dim(2),
                    cout = weight_.dim(3);
  const std::size_t in_cols = input.dim(1);
  const std::size_t out_rows = out.dim(0), out_cols = out.dim(1);
  const double* w = weight_.data();
  const double* b = bias_.data();
  const double* x = input.data();
  double* y = out.data();

  for (std::size_t r = 0; r < out_rows; ++r) {
    for (std::size_t c = 0; c < out_cols; ++c) {
      double* yp = y + (r * out_cols + c) * cout;
      std::copy(b, b + cout, yp);
      for (std::size_t kr_i = 0; kr_i < kr; ++kr_i) {
        const double* xrow = x + ((r + kr_i) * in_cols + c) * cin;
        const double* wrow = w + kr_i * kc * cin * cout;
        // A kernel row touches kc*cin contiguous input values.
        for (std::size_t k = 0; k < kc * cin; ++k) {
          const double v = xrow[k];
          const double* wk = wrow + k * cout;
          for (std::size_t o = 0; o < cout; ++o) yp[o] += v * wk[o];
        }
      }
      if (relu_) {
        for (std::size_t o = 0; o < cout; ++o) yp[o] = yp[o] > 0.0 ? yp[o] : 0.0;
      }
    }
  }
  return out;
}

Tensor Conv2D::forward_train(const Tensor& input, Rng&) {
  input_ = input;
  output_ = infer(input);
  return output_;
}

Tensor Conv2D::backward(const Tensor& grad_output, std::span<Tensor> grads) {
  if (input_.empty()) throw StateError("conv2d backward called before forward");
  require_shape(grad_output, output_.shape(), "conv2d backward");
  require_grads(grads, 2, "conv2d backward");

  const std::size_t kr = weight_.dim(0), kc = weight_.dim(1), cin = weight_.dim(2),
                    cout = weight_.dim(3);
  const std::size_t in_cols = input_.dim(1);
  const std::size_t out_rows = output_.dim(0), out_cols = output_.dim(1);
  Tensor grad_input(input_.shape());
  std::vector<double> g(cout);

  const double* w = weight_.data();
  const double* x = input_.data();
  double* gw = grads[0].data();
  double* gb = grads[1].data();
  double* gx = grad_input.data();

  for (std::size_t r = 0; r < out_rows; ++r) {
    for (std::size_t c = 0; c < out_cols; ++c) {
      const std::size_t base = (r * out_cols + c) * cout;
      bool any = false;
      for (std::size_t o = 0; o < cout; ++o) {
        double v = grad_output[base + o];
        if (relu_ && output_[base + o] <= 0.0) v = 0.0;
        g[o] = v;
        any = any || v != 0.0;
      }
      if (!any) continue;
      for (std::size_t o = 0; o < cout; ++o) gb[o] += g[o];
      for (std::size_t kr_i = 0; kr_i < kr; ++kr_i) {
        const std::size_t xoff = ((r + kr_i) * in_cols + c) * cin;
        const std::size_t woff = kr_i * kc * cin * cout;
        for (std::size_t k = 0; k < kc * cin; ++k) {
          const double v = x[xoff + k];
          const double* wk = w + woff + k * cout;
          double* gwk = gw + woff + k * cout;
          double acc = 0.0;
          for (std::size_t o = 0; o < cout; ++o) {
            gwk[o] += v * g[o];
            acc += wk[o] * g[o];
          }
          gx[xoff + k] += acc;
        }
      }
    }
  }
  return grad_input;
}

// ---------------------------------------------------------------- MaxPool2D

MaxPool2D::MaxPool2D(std::size_t pool) : pool_(pool) {
  if (pool_ == 0) throw ArgumentError("pool extent must be positive");
}

Shape MaxPool2D::output_shape(const Shape& input) const {
  if (input.size() != 3) {
    throw DimensionError("maxpool2d expects (rows, cols, channels) input, got " +
                         shape_string(input));
  }
  if (input[0] < pool_ || input[1] < pool_) {
    throw DimensionError("maxpool2d extent " + std::to_string(pool_) + " exceeds input " +
                         shape_string(input));
  }
  return {input[0] / pool_, input[1] / pool_, input[2]};
}

Tensor MaxPool2D::pool_impl(const Tensor& input, std::vector<std::size_t>* argmax) const {
  Tensor out(output_shape(input.shape()));
  const std::size_t in_cols = input.dim(1), ch = input.dim(2);
  const std::size_t out_rows = out.dim(0), out_cols = out.dim(1);
  if (argmax) argmax->assign(out.size(), 0);
  for (std::size_t r = 0; r < out_rows; ++r) {
    for (std::size_t c = 0; c < out_cols; ++c) {
      for (std::size_t k = 0; k < ch; ++k) {
        std::size_t best_idx = ((r * pool_) * in_cols + c * pool_) * ch + k;
        double best = input[best_idx];
        for (std::size_t dr = 0; dr < pool_; ++dr) {
          for (std::size_t dc = 0; dc < pool_; ++dc) {
            std::size_t idx = ((r * pool_ + dr) * in_cols + c * pool_ + dc) * ch + k;
            if (input[idx] > best) {
              best = input[idx];
              best_idx = idx;
            }
          }
        }
        std::size_t o = (r * out_cols + c) * ch + k;
        out[o] = best;
        if (argmax) (*argmax)[o] = best_idx;
      }
    }
  }
  return out;
}

Tensor MaxPool2D::infer(const Tensor& input) const { return pool_impl(input, nullptr); }

Tensor MaxPool2D::forward_train(const Tensor& input, Rng&) {
  input_shape_ = input.shape();
  return pool_impl(input, &argmax_);
}

Tensor MaxPool2D::backward(const Tensor& grad_output, std::span<Tensor> grads) {
  if (input_shape_.empty()) throw StateError("maxpool2d backward called before forward");
  require_grads(grads, 0, "maxpool2d backward");
  if (grad_output.size() != argmax_.size()) {
    throw DimensionError("maxpool2d backward: gradient size mismatch");
  }
  Tensor grad_input(input_shape_);
  for (std::size_t o = 0; o < argmax_.size(); ++o) grad_input[argmax_[o]] += grad_output[o];
  return grad_input;
}

// ---------------------------------------------------------------- Flatten

Shape Flatten::output_shape(const Shape& input) const { return {shape_product(input)}; }

Tensor Flatten::infer(const Tensor& input) const {
  Tensor out = input;
  out.reshape({input.size()});
  return out;
}

Tensor Flatten::forward_train(const Tensor& input, Rng&) {
  input_shape_ = input.shape();
  return infer(input);
}

Tensor Flatten::backward(const Tensor& grad_output, std::span<Tensor> grads) {
  if (input_shape_.empty()) throw StateError("flatten backward called before forward");
  require_grads(grads, 0, "flatten backward");
  Tensor g = grad_output;
  g.reshape(input_shape_);
  return g;
}

// ---------------------------------------------------------------- Dense

Dense::Dense(Tensor weight, Tensor bias, bool relu)
    : weight_(std::move(weight)), bias_(std::move(bias)), relu_(relu) {
  if (weight_.rank() != 2) throw DimensionError("dense weight must be rank 2");
  if (bias_.shape() != Shape{weight_.dim(1)}) {
    throw DimensionError("dense bias must have shape " + shape_string({weight_.dim(1)}));
  }
}

LayerSpec Dense::spec() const { return LayerSpec::dense(weight_.dim(1), relu_); }

Shape Dense::output_shape(const Shape& input) const {
  if (input.size() != 1 || input[0] != weight_.dim(0)) {
    throw DimensionError("dense expects input " + shape_string({weight_.dim(0)}) + ", got " +
                         shape_string(input));
  }
  return {weight_.dim(1)};
}

Tensor Dense::infer(const Tensor& input) const {
  Tensor out(output_shape(input.shape()));
  const std::size_t n_in = weight_.dim(0), n_out = weight_.dim(1);
  const double* w = weight_.data();
  double* y = out.data();
  std::copy(bias_.data(), bias_.data() + n_out, y);
  for (std::size_t i = 0; i < n_in; ++i) {
    const double v = input[i];
    if (v == 0.0) continue;
    const double* wi = w + i * n_out;
    for (std::size_t o = 0; o < n_out; ++o) y[o] += v * wi[o];
  }
  if (relu_) {
    for (std::size_t o = 0; o < n_out; ++o) y[o] = y[o] > 0.0 ? y[o] : 0.0;
  }
  return out;
}

Tensor Dense::forward_train(const Tensor& input, Rng&) {
  input_ = input;
  output_ = infer(input);
  return output_;
}

Tensor Dense::backward(const Tensor& grad_output, std::span<Tensor> grads) {
  if (input_.empty()) throw StateError("dense backward called before forward");
  require_shape(grad_output, output_.shape(), "dense backward");
  require_grads(grads, 2, "dense backward");
  const std::size_t n_in = weight_.dim(0), n_out = weight_.dim(1);
  std::vector<double> g(grad_output.values().begin(), grad_output.values().end());
  if (relu_) {
    for (std::size_t o = 0; o < n_out; ++o) {
      if (output_[o] <= 0.0) g[o] = 0.0;
    }
  }
  Tensor grad_input(input_.shape());
  const double* w = weight_.data();
  double* gw = grads[0].data();
  double* gb = grads[1].data();
  for (std::size_t o = 0; o < n_out; ++o) gb[o] += g[o];
  for (std::size_t i = 0; i < n_in; ++i) {
    const double v = input_[i];
    const double* wi = w + i * n_out;
    double* gwi = gw + i * n_out;
    double acc = 0.0;
    for (std::size_t o = 0; o < n_out; ++o) {
      gwi[o] += v * g[o];
      acc += wi[o] * g[o];
    }
    grad_input[i] = acc;
  }
  return grad_input;
}

// ---------------------------------------------------------------- Dropout

Dropout::Dropout(double rate) : rate_(rate) {
  if (!(rate_ >= 0.0 && rate_ < 1.0)) {
    throw RangeError("dropout rate must lie in [0,1), got " + std::to_string(rate_));
  }
}

Tensor Dropout::forward_train(const Tensor& input, Rng& rng) {
  if (!enabled_ || rate_ == 0.0) {
    mask_.assign(input.size(), 1.0);
    return input;
  }
  const double scale = 1.0 / (1.0 - rate_);
  mask_.resize(input.size());
  Tensor out = input;
  for (std::size_t i = 0; i < out.size(); ++i) {
    mask_[i] = rng.uniform() < rate_ ? 0.0 : scale;
    out[i] *= mask_[i];
  }
  return out;
}

Tensor Dropout::backward(const Tensor& grad_output, std::span<Tensor> grads) {
  require_grads(grads, 0, "dropout backward");
  if (mask_.size() != grad_output.size()) {
    throw StateError("dropout backward called before forward");
  }
  Tensor g = grad_output;
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= mask_[i];
  return g;
}

// ---------------------------------------------------------------- Softmax

Tensor Softmax::infer(const Tensor& input) const {
  if (input.rank() == 0) throw DimensionError("softmax needs a non-empty input");
  Tensor out = input;
  const std::size_t n = input.shape().back();
  for (std::size_t base = 0; base < out.size(); base += n) {
    double* p = out.data() + base;
    double mx = *std::max_element(p, p + n);
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      p[k] = std::exp(p[k] - mx);
      sum += p[k];
    }
    for (std::size_t k = 0; k < n; ++k) p[k] /= sum;
  }
  return out;
}

Tensor Softmax::forward_train(const Tensor& input, Rng&) {
  output_ = infer(input);
  return output_;
}

Tensor Softmax::backward(const Tensor& grad_output, std::span<Tensor> grads) {
  if (output_.empty()) throw StateError("softmax backward called before forward");
  require_shape(grad_output, output_.shape(), "softmax backward");
  require_grads(grads, 0, "softmax backward");
  Tensor g(output_.shape());
  const std::size_t n = output_.shape().back();
  for (std::size_t base = 0; base < g.size(); base += n) {
    double dot = 0.0;
    for (std::size_t k = 0; k < n; ++k) dot += grad_output[base + k] * output_[base + k];
    for (std::size_t k = 0; k < n; ++k) {
      g[base + k] = output_[base + k] * (grad_output[base + k] - dot);
    }
  }
  return g;
}

// ---------------------------------------------------------------- factory

namespace {

Tensor glorot(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  Tensor t(std::move(shape));
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : t.values()) v = rng.uniform(-limit, limit);
  return t;
}

}  // namespace

std::unique_ptr<Layer> make_layer(const LayerSpec& spec, const Shape& input, Rng& init) {
  switch (spec.kind) {
    case LayerKind::Conv2D: {
      if (input.size() != 3) {
        throw DimensionError("conv2d expects (rows, cols, channels) input, got " +
                             shape_string(input));
      }
      if (spec.units == 0 || spec.kernel_rows == 0 || spec.kernel_cols == 0) {
        throw ArgumentError("conv2d needs positive filters and kernel extents");
      }
      const std::size_t cin = input[2];
      const std::size_t area = spec.kernel_rows * spec.kernel_cols;
      auto layer = std::make_unique<Conv2D>(
          glorot({spec.kernel_rows, spec.kernel_cols, cin, spec.units}, area * cin,
                 area * spec.units, init),
          Tensor({spec.units}), spec.relu);
      layer->output_shape(input);
      return layer;
    }
    case LayerKind::MaxPool2D: {
      auto layer = std::make_unique<MaxPool2D>(spec.pool);
      layer->output_shape(input);
      return layer;
    }
    case LayerKind::Flatten:
      return std::make_unique<Flatten>();
    case LayerKind::Dense: {
      if (input.size() != 1) {
        throw DimensionError("dense expects rank-1 input, got " + shape_string(input));
      }
      if (spec.units == 0) throw ArgumentError("dense needs a positive unit count");
      return std::make_unique<Dense>(glorot({input[0], spec.units}, input[0], spec.units, init),
                                     Tensor({spec.units}), spec.relu);
    }
    case LayerKind::Dropout:
      return std::make_unique<Dropout>(spec.rate);
    case LayerKind::Softmax:
      return std::make_unique<Softmax>();
  }
  throw ArgumentError("unknown layer kind");
}

}  // namespace beamsel::nn
