#include "motionnet/stpn/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "motionnet/nn/ops.hpp"

namespace motionnet::stpn {

using nn::Tensor;

namespace {

// Kernel of every temporal conv in order, for a frame count and a number of
// temporal slots. A slot reduces T by k_t - 1, except the last one, which
// collapses whatever remains; slots reached with T = 1 are skipped (kernel 0).
std::vector<std::size_t> temporal_kernels(std::size_t frames, std::size_t slots, std::size_t k_t) {
  std::vector<std::size_t> kernels(slots, 0);
  std::size_t t = frames;
  for (std::size_t i = 0; i < slots; ++i) {
    if (t <= 1) break;
    kernels[i] = i + 1 == slots ? t : std::min(k_t, t);
    t -= kernels[i] - 1;
  }
  return kernels;
}

struct Schedule {
  std::vector<std::size_t> early;        // kernels of the full-resolution prelude blocks
  std::array<std::size_t, 4> kernels{};  // per pyramid block, 0 = no temporal conv
  std::array<std::size_t, 4> lengths{};  // frames entering each pyramid block
};

Schedule make_schedule(const StpnConfig& c) {
  Schedule s;
  std::size_t t = c.frames;
  if (c.fusion == Fusion::early) {
    s.early = temporal_kernels(t, 2, c.temporal_kernel);
    for (auto k : s.early)
      if (k) t -= k - 1;
  } else {
    const std::size_t first = c.fusion == Fusion::middle ? 0 : 2;
    const auto k = temporal_kernels(t, 2, c.temporal_kernel);
    s.kernels[first] = k[0];
    s.kernels[first + 1] = k[1];
  }
  for (std::size_t i = 0; i < 4; ++i) {
    s.lengths[i] = t;
    if (s.kernels[i]) t -= s.kernels[i] - 1;
  }
  return s;
}

}  // namespace

Fusion parse_fusion(std::string_view text) {
  if (text == "early") return Fusion::early;
  if (text == "middle") return Fusion::middle;
  if (text == "late") return Fusion::late;
  throw std::invalid_argument("unknown fusion mode '" + std::string(text) + "' (expected early, middle or late)");
}

std::string_view to_string(Fusion fusion) {
  switch (fusion) {
    case Fusion::early: return "early";
    case Fusion::middle: return "middle";
    case Fusion::late: return "late";
  }
  return "middle";
}

void StpnConfig::validate() const {
  if (input_channels < 1) throw std::invalid_argument("stpn: input_channels must be >= 1");
  if (frames < 1) throw std::invalid_argument("stpn: frames must be >= 1");
  if (temporal_kernel < 2) throw std::invalid_argument("stpn: temporal_kernel must be >= 2");
  if (lift_channels < 1 || head_channels < 1) throw std::invalid_argument("stpn: channel widths must be >= 1");
  for (auto w : widths)
    if (w < 1) throw std::invalid_argument("stpn: pyramid widths must be >= 1");
  if (steps < 1) throw std::invalid_argument("stpn: steps must be >= 1");
  if (!(step_seconds > 0)) throw std::invalid_argument("stpn: step_seconds must be positive");
  if (categories < 2) throw std::invalid_argument("stpn: categories must be >= 2");
}

std::array<std::size_t, 4> StpnConfig::temporal_lengths() const { return make_schedule(*this).lengths; }

Stpn::Stpn(StpnConfig config, std::uint64_t seed) : config_(std::move(config)), rng_(seed) {
  config_.validate();
  const Schedule s = make_schedule(config_);
  const auto& w = config_.widths;

  lift_.push_back(make_unit("lift.0", config_.input_channels, config_.lift_channels, 3, 1, false));
  lift_.push_back(make_unit("lift.1", config_.lift_channels, config_.lift_channels, 3, 1, false));
  for (std::size_t i = 0; i < s.early.size(); ++i)
    early_.push_back(make_block("early" + std::to_string(i + 1), config_.lift_channels, config_.lift_channels, 1,
                                0, s.early[i]));
  std::size_t in = config_.lift_channels;
  for (std::size_t i = 0; i < 4; ++i) {
    blocks_[i] = make_block("stc" + std::to_string(i + 1), in, w[i], i == 0 ? 1 : 2, s.lengths[i], s.kernels[i]);
    in = w[i];
  }
  decoder_[0] = make_unit("dec3", w[3] + w[2], w[2], 3, 1, false);
  decoder_[1] = make_unit("dec2", w[2] + w[1], w[1], 3, 1, false);
  decoder_[2] = make_unit("dec1", w[1] + w[0], w[0], 3, 1, false);

  const std::size_t c = config_.decoder_channels();
  cls_ = make_head("head.cls", c, config_.categories);
  motion_ = make_head("head.motion", c, 2 * config_.steps);
  if (config_.state_head) state_ = make_head("head.state", c, 1);
}

Stpn::Conv Stpn::make_conv(const std::string& name, std::size_t in, std::size_t out, std::size_t k, int stride,
                           bool temporal, bool zero) {
  Conv conv;
  conv.name = name;
  conv.stride = stride;
  conv.temporal = temporal;
  conv.padding = temporal ? 0 : static_cast<int>(k / 2);
  const nn::Shape shape = temporal ? nn::Shape{out, in, k} : nn::Shape{out, in, k, k};
  std::vector<double> data(nn::shape_numel(shape), 0.0);
  if (!zero) {
    const double fan_in = static_cast<double>(temporal ? in * k : in * k * k);
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
    for (auto& v : data) v = dist(rng_);
  }
  conv.weight = Tensor::from_data(shape, std::move(data), true);
  conv.bias = Tensor::zeros({out}, true);
  return conv;
}

Stpn::Unit Stpn::make_unit(const std::string& name, std::size_t in, std::size_t out, std::size_t k, int stride,
                           bool temporal) {
  Unit u;
  u.conv = make_conv(name + ".conv", in, out, k, stride, temporal, false);
  if (config_.batch_norm) {
    u.norm.name = name + ".bn";
    u.norm.gamma = Tensor::full({out}, 1.0, true);
    u.norm.beta = Tensor::zeros({out}, true);
    u.norm.running_mean = Tensor::zeros({out});
    u.norm.running_var = Tensor::full({out}, 1.0);
  }
  return u;
}

Stpn::Block Stpn::make_block(const std::string& name, std::size_t in, std::size_t out, int stride, std::size_t,
                             std::size_t temporal_kernel) {
  Block b;
  b.spatial.push_back(make_unit(name + ".conv1", in, out, 3, stride, false));
  b.spatial.push_back(make_unit(name + ".conv2", out, out, 3, 1, false));
  if (temporal_kernel > 0) {
    b.has_temporal = true;
    b.temporal = make_unit(name + ".temporal", out, out, temporal_kernel, 1, true);
  }
  return b;
}

Stpn::Head Stpn::make_head(const std::string& name, std::size_t in, std::size_t out) {
  Head h;
  h.hidden = make_unit(name + ".hidden", in, config_.head_channels, 3, 1, false);
  h.out = make_conv(name + ".out", config_.head_channels, out, 1, 1, false, true);
  return h;
}

Tensor Stpn::apply_unit(Unit& unit, const Tensor& x, bool training) {
  Tensor y = unit.conv.temporal ? nn::conv_temporal(x, unit.conv.weight, unit.conv.bias)
                                : nn::conv2d(x, unit.conv.weight, unit.conv.bias, unit.conv.stride, unit.conv.padding);
  if (!unit.norm.gamma.defined()) return nn::relu(y);
  if (unit.conv.temporal) {
    const nn::Shape s = y.shape();
    Tensor flat = nn::reshape(y, {s[0] * s[1], s[2], s[3], s[4]});
    flat = nn::batch_norm2d(flat, unit.norm.gamma, unit.norm.beta, unit.norm.running_mean, unit.norm.running_var,
                            training);
    return nn::reshape(nn::relu(flat), s);
  }
  y = nn::batch_norm2d(y, unit.norm.gamma, unit.norm.beta, unit.norm.running_mean, unit.norm.running_var, training);
  return nn::relu(y);
}

Tensor Stpn::apply_frames(Unit& unit, const Tensor& x5, bool training) {
  const nn::Shape s = x5.shape();
  Tensor y = apply_unit(unit, nn::reshape(x5, {s[0] * s[1], s[2], s[3], s[4]}), training);
  return nn::reshape(y, {s[0], s[1], y.dim(1), y.dim(2), y.dim(3)});
}

Tensor Stpn::apply_block(Block& block, const Tensor& x5, bool training) {
  Tensor y = x5;
  for (auto& u : block.spatial) y = apply_frames(u, y, training);
  if (block.has_temporal) y = apply_unit(block.temporal, y, training);
  return y;
}

Tensor Stpn::apply_head(Head& head, const Tensor& x, bool training) {
  return nn::conv2d(apply_unit(head.hidden, x, training), head.out.weight, head.out.bias, 1, 0);
}

Tensor Stpn::stc_block(const Tensor& input, std::size_t level, bool training) {
  if (level >= 4) throw std::invalid_argument("stc_block: level must be 0..3");
  if (input.rank() != 5) throw std::invalid_argument("stc_block: expected a [B,T,C,H,W] input");
  const std::size_t expected_t = config_.temporal_lengths()[level];
  if (input.dim(1) != expected_t)
    throw std::invalid_argument("stc_block: level " + std::to_string(level + 1) + " expects T=" +
                                std::to_string(expected_t) + ", got T=" + std::to_string(input.dim(1)));
  return apply_block(blocks_[level], input, training);
}

Tensor Stpn::features(const Tensor& input, bool training) {
  if (input.rank() != 5) throw std::invalid_argument("stpn: expected a [B,T,C_z,H,W] input");
  if (input.dim(1) != config_.frames)
    throw std::invalid_argument("stpn: input has T=" + std::to_string(input.dim(1)) + ", model expects " +
                                std::to_string(config_.frames));
  if (input.dim(2) != config_.input_channels)
    throw std::invalid_argument("stpn: input has C_z=" + std::to_string(input.dim(2)) + ", model expects " +
                                std::to_string(config_.input_channels));
  if (input.dim(3) % 8 != 0 || input.dim(4) % 8 != 0)
    throw std::invalid_argument("stpn: H and W must be divisible by 8, got " + std::to_string(input.dim(3)) + "x" +
                                std::to_string(input.dim(4)));

  Tensor x = input;
  for (auto& u : lift_) x = apply_frames(u, x, training);
  for (auto& b : early_) x = apply_block(b, x, training);

  std::array<Tensor, 4> lateral;
  for (std::size_t i = 0; i < 4; ++i) {
    x = apply_block(blocks_[i], x, training);
    Tensor pooled = nn::temporal_max_pool(x);
    lateral[i] = nn::reshape(pooled, {x.dim(0), x.dim(2), x.dim(3), x.dim(4)});
  }
  Tensor y = lateral[3];
  for (std::size_t i = 0; i < 3; ++i)
    y = apply_unit(decoder_[i], nn::concat_channels(nn::upsample2x(y), lateral[2 - i]), training);
  return y;
}

Prediction Stpn::heads(const Tensor& features, bool training) {
  if (features.rank() != 4 || features.dim(1) != config_.decoder_channels())
    throw std::invalid_argument("stpn heads: expected [B," + std::to_string(config_.decoder_channels()) +
                                ",H,W] features, got " + nn::shape_string(features.shape()));
  Prediction p;
  p.relative = config_.relative_offset;
  p.class_logits = apply_head(cls_, features, training);
  p.motion = apply_head(motion_, features, training);
  if (config_.state_head) p.static_logit = apply_head(state_, features, training);
  return p;
}

void Stpn::collect(const Conv& conv, std::vector<nn::Parameter>& out) const {
  out.push_back({conv.name + ".weight", conv.weight});
  out.push_back({conv.name + ".bias", conv.bias});
}

void Stpn::collect(const Unit& unit, std::vector<nn::Parameter>& out) const {
  collect(unit.conv, out);
  if (unit.norm.gamma.defined()) {
    out.push_back({unit.norm.name + ".gamma", unit.norm.gamma});
    out.push_back({unit.norm.name + ".beta", unit.norm.beta});
  }
}

void Stpn::collect_norms(const Unit& unit, std::vector<nn::NamedTensor>& out) const {
  if (!unit.norm.gamma.defined()) return;
  out.push_back({unit.norm.name + ".running_mean", unit.norm.running_mean});
  out.push_back({unit.norm.name + ".running_var", unit.norm.running_var});
}

std::vector<const Stpn::Unit*> Stpn::units() const {
  std::vector<const Unit*> all;
  for (const auto& u : lift_) all.push_back(&u);
  auto add_block = [&](const Block& b) {
    for (const auto& u : b.spatial) all.push_back(&u);
    if (b.has_temporal) all.push_back(&b.temporal);
  };
  for (const auto& b : early_) add_block(b);
  for (const auto& b : blocks_) add_block(b);
  for (const auto& u : decoder_) all.push_back(&u);
  return all;
}

std::vector<nn::Parameter> Stpn::shared_parameters() const {
  std::vector<nn::Parameter> out;
  for (const Unit* u : units()) collect(*u, out);
  return out;
}

std::vector<nn::Parameter> Stpn::parameters() const {
  std::vector<nn::Parameter> out = shared_parameters();
  auto add_head = [&](const Head& h) {
    collect(h.hidden, out);
    collect(h.out, out);
  };
  add_head(cls_);
  add_head(motion_);
  if (config_.state_head) add_head(state_);
  return out;
}

std::size_t Stpn::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters()) n += p.tensor.numel();
  return n;
}

std::vector<nn::NamedTensor> Stpn::state() const {
  std::vector<nn::NamedTensor> out;
  for (const auto& p : parameters()) out.push_back({p.name, p.tensor});
  for (const Unit* u : units()) collect_norms(*u, out);
  collect_norms(cls_.hidden, out);
  collect_norms(motion_.hidden, out);
  if (config_.state_head) collect_norms(state_.hidden, out);
  return out;
}

void Stpn::load_state(std::span<const nn::NamedTensor> entries) {
  auto targets = state();
  if (entries.size() != targets.size())
    throw std::runtime_error("stpn: checkpoint holds " + std::to_string(entries.size()) + " tensors, model has " +
                                std::to_string(targets.size()));
  nn::restore_into(entries, targets);
}

void Stpn::save(const std::string& path) const { nn::save_checkpoint(path, state()); }

void Stpn::load(const std::string& path) {
  const auto entries = nn::load_checkpoint(path);
  load_state(entries);
}

}  // namespace motionnet::stpn
