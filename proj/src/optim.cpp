#include "beamsel/optim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "beamsel/errors.hpp"

namespace beamsel::nn {

Tensor one_hot(std::size_t cls, std::size_t classes) {
  if (cls >= classes) {
    throw RangeError("class " + std::to_string(cls) + " outside [0," + std::to_string(classes) + ")");
  }
  Tensor t({classes});
  t[cls] = 1.0;
  return t;
}

namespace {

std::size_t target_index(const Tensor& probabilities, const Tensor& target) {
  if (probabilities.size() != target.size()) {
    throw DimensionError("cross entropy: " + std::to_string(probabilities.size()) +
                         " probabilities vs " + std::to_string(target.size()) + " targets");
  }
  std::size_t idx = target.size();
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (target[i] == 1.0 && idx == target.size()) {
      idx = i;
    } else if (target[i] != 0.0) {
      throw ArgumentError("cross entropy target is not one-hot");
    }
  }
  if (idx == target.size()) throw ArgumentError("cross entropy target is not one-hot");
  return idx;
}

}  // namespace

double cross_entropy(const Tensor& probabilities, const Tensor& one_hot_target) {
  const std::size_t k = target_index(probabilities, one_hot_target);
  return -std::log(std::max(probabilities[k], kCrossEntropyEpsilon));
}

Tensor cross_entropy_grad(const Tensor& probabilities, const Tensor& one_hot_target) {
  const std::size_t k = target_index(probabilities, one_hot_target);
  Tensor g(probabilities.shape());
  if (probabilities[k] > kCrossEntropyEpsilon) g[k] = -1.0 / probabilities[k];
  return g;
}

// ---------------------------------------------------------------- Adam

AdamState::AdamState(const Network& net, AdamConfig config)
    : AdamState(net.parameters(), config) {}

AdamState::AdamState(const std::vector<const Tensor*>& params, AdamConfig config)
    : config_(config) {
  for (const Tensor* p : params) {
    m_.emplace_back(p->shape());
    v_.emplace_back(p->shape());
  }
}

void adam_step(AdamState& state, const std::vector<Tensor*>& params, const GradientSet& grads) {
  if (params.size() != state.m_.size() || grads.size() != params.size()) {
    throw DimensionError("adam: parameter/gradient/state counts differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->shape() != state.m_[i].shape() || grads[i].shape() != params[i]->shape()) {
      throw DimensionError("adam: shape mismatch for parameter " + std::to_string(i));
    }
    if (!grads[i].all_finite()) {
      throw NumericError("adam: non-finite gradient for parameter " + std::to_string(i));
    }
  }
  const AdamConfig& c = state.config_;
  ++state.steps_;
  const double t = static_cast<double>(state.steps_);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    double* p = params[i]->data();
    double* m = state.m_[i].data();
    double* v = state.v_[i].data();
    const double* g = grads[i].data();
    for (std::size_t k = 0; k < params[i]->size(); ++k) {
      m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g[k];
      v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g[k] * g[k];
      const double m_hat = m[k] / correction1;
      const double v_hat = v[k] / correction2;
      p[k] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

// ---------------------------------------------------------------- gradient check

namespace {

bool ends_in_softmax(const Network& net) {
  return net.layer_count() > 0 && net.layer(net.layer_count() - 1).kind() == LayerKind::Softmax;
}

double loss_value(const Network& net, const Tensor& out, const Tensor& target) {
  if (ends_in_softmax(net)) return cross_entropy(out, target);
  if (out.size() != target.size()) throw DimensionError("grad_check: target size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) s += 0.5 * (out[i] - target[i]) * (out[i] - target[i]);
  return s;
}

Tensor loss_grad(const Network& net, const Tensor& out, const Tensor& target) {
  if (ends_in_softmax(net)) return cross_entropy_grad(out, target);
  Tensor g(out.shape());
  for (std::size_t i = 0; i < out.size(); ++i) g[i] = out[i] - target[i];
  return g;
}

}  // namespace

namespace {

// Which linear piece the network is on for `input`: the active set of every
// ReLU and the winning cell of every pooling window.
std::vector<std::uint32_t> region_signature(const Network& net, const Tensor& input) {
  std::vector<std::uint32_t> sig;
  Tensor x = input;
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    const Layer& layer = net.layer(i);
    const LayerSpec spec = layer.spec();
    if (spec.kind == LayerKind::MaxPool2D) {
      const std::size_t H = x.dim(0), W = x.dim(1), C = x.dim(2), p = spec.pool;
      for (std::size_t r = 0; r + p <= H; r += p)
        for (std::size_t c = 0; c + p <= W; c += p)
          for (std::size_t ch = 0; ch < C; ++ch) {
            std::uint32_t best = 0;
            double v = x.at(r, c, ch);
            for (std::size_t dr = 0; dr < p; ++dr)
              for (std::size_t dc = 0; dc < p; ++dc)
                if (x.at(r + dr, c + dc, ch) > v) {
                  v = x.at(r + dr, c + dc, ch);
                  best = static_cast<std::uint32_t>(dr * p + dc);
                }
            sig.push_back(best);
          }
    }
    x = layer.infer(x);
    if (spec.relu)
      for (double v : x.values()) sig.push_back(v > 0.0 ? 1u : 0u);
  }
  return sig;
}

}  // namespace

GradCheckReport grad_check_report(Network& net, const Tensor& input, const Tensor& target, double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1e-2)) {
    throw RangeError("grad_check epsilon must lie in (0, 1e-2]");
  }
  if (net.mode() != Mode::Train) throw PreconditionError("grad_check needs a network in train mode");
  if (net.has_active_dropout()) {
    throw PreconditionError("grad_check needs dropout disabled (random masks break differencing)");
  }

  Tensor out = net.forward(input);
  GradientSet analytic = net.backward(loss_grad(net, out, target));
  const std::vector<std::uint32_t> base = region_signature(net, input);

  GradCheckReport report;
  std::vector<Tensor*> params = net.parameters();
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& param = *params[p];
    for (std::size_t k = 0; k < param.size(); ++k) {
      const double saved = param[k];
      param[k] = saved + epsilon;
      const double plus = loss_value(net, net.infer(input), target);
      const bool kink_plus = region_signature(net, input) != base;
      param[k] = saved - epsilon;
      const double minus = loss_value(net, net.infer(input), target);
      const bool kink_minus = region_signature(net, input) != base;
      param[k] = saved;
      if (kink_plus || kink_minus) {
        ++report.skipped;
        continue;
      }
      const double numeric = (plus - minus) / (2.0 * epsilon);
      const double a = analytic[p][k];
      const double rel = std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), 1e-6);
      report.worst = std::max(report.worst, rel);
      ++report.checked;
    }
  }
  return report;
}

double grad_check(Network& net, const Tensor& input, const Tensor& target, double epsilon) {
  return grad_check_report(net, input, target, epsilon).worst;
}

}  // namespace beamsel::nn
