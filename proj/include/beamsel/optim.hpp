#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "beamsel/network.hpp"
#include "beamsel/tensor.hpp"

namespace beamsel::nn {

/// Probability floor applied before the log.
inline constexpr double kCrossEntropyEpsilon = 1e-12;

Tensor one_hot(std::size_t cls, std::size_t classes);

/// -log(max(p[target], 1e-12)). `one_hot_target` must be a valid one-hot
/// vector with the same element count as `probabilities`.
double cross_entropy(const Tensor& probabilities, const Tensor& one_hot_target);
/// d(cross_entropy)/d(probabilities).
Tensor cross_entropy_grad(const Tensor& probabilities, const Tensor& one_hot_target);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
};

class AdamState {
 public:
  AdamState(const Network& net, AdamConfig config = {});
  AdamState(const std::vector<const Tensor*>& params, AdamConfig config = {});

  const AdamConfig& config() const noexcept { return config_; }
  std::uint64_t steps() const noexcept { return steps_; }
  const std::vector<Tensor>& first_moments() const noexcept { return m_; }
  const std::vector<Tensor>& second_moments() const noexcept { return v_; }

 private:
  friend void adam_step(AdamState&, const std::vector<Tensor*>&, const GradientSet&);

  AdamConfig config_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::uint64_t steps_ = 0;
};

/// One bias-corrected Adam update. Rejects the whole step (parameters left
/// untouched) if any gradient is non-finite.
void adam_step(AdamState& state, const std::vector<Tensor*>& params, const GradientSet& grads);

struct GradCheckReport {
  double worst = 0.0;        // max relative error over checked parameters
  std::size_t checked = 0;
  std::size_t skipped = 0;   // +-epsilon moved a ReLU or max-pool boundary
};

/// Central-difference check of backward() over every parameter. The loss is
/// cross-entropy when the network ends in Softmax and 0.5*||y - target||^2
/// otherwise. Relative error is |a - n| / max(|a| + |n|, 1e-6). A parameter
/// whose +-epsilon nudge changes any ReLU active set or max-pool winner is
/// skipped: the central difference is not a derivative there.
GradCheckReport grad_check_report(Network& net, const Tensor& input, const Tensor& target, double epsilon);
/// grad_check_report(...).worst
double grad_check(Network& net, const Tensor& input, const Tensor& target, double epsilon);

}  // namespace beamsel::nn
