#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "motionnet/nn/tensor.hpp"

namespace motionnet::nn {

/// A trainable tensor with a unique, position-encoding name such as "stc2.conv1.weight".
struct Parameter {
  std::string name;
  Tensor tensor;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. A step with any non-finite gradient is skipped
/// entirely and counted.
class Adam {
 public:
  Adam(std::vector<Parameter> params, AdamConfig config = {});

  /// Returns false when the step was skipped.
  bool step();
  void zero_grad();

  std::size_t skipped_steps() const { return skipped_; }
  std::size_t steps() const { return step_count_; }
  const AdamConfig& config() const { return config_; }
  void set_lr(double lr) { config_.lr = lr; }

 private:
  std::vector<Parameter> params_;
  AdamConfig config_;
  std::vector<std::vector<double>> m_, v_;
  std::size_t step_count_ = 0;
  std::size_t skipped_ = 0;
};

}  // namespace motionnet::nn
