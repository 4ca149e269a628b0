#include "motionnet/nn/optim.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "motionnet/log.hpp"

namespace motionnet::nn {

Adam::Adam(std::vector<Parameter> params, AdamConfig config) : params_(std::move(params)), config_(config) {
  std::unordered_set<std::string> names;
  for (const auto& p : params_) {
    if (!names.insert(p.name).second) throw std::invalid_argument("duplicate parameter name: " + p.name);
    m_.emplace_back(p.tensor.numel(), 0.0);
    v_.emplace_back(p.tensor.numel(), 0.0);
  }
}

bool Adam::step() {
  for (const auto& p : params_) {
    if (!p.tensor.has_grad()) continue;
    for (double g : p.tensor.grad()) {
      if (!std::isfinite(g)) {
        ++skipped_;
        log::warn("optimizer: non-finite gradient in " + p.name + ", step skipped (" + std::to_string(skipped_) +
                  " so far)");
        return false;
      }
    }
  }
  ++step_count_;
  const double t = static_cast<double>(step_count_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto& p = params_[k];
    if (!p.tensor.has_grad()) continue;
    const auto g = p.tensor.grad();
    auto w = p.tensor.mutable_data();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
      w[i] -= config_.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.eps);
    }
  }
  return true;
}

void Adam::zero_grad() {
  for (auto& p : params_)
    if (p.tensor.has_grad()) p.tensor.zero_grad();
}

}  // namespace motionnet::nn
