#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "motionnet/nn/checkpoint.hpp"
#include "motionnet/nn/optim.hpp"
#include "motionnet/nn/tensor.hpp"

namespace motionnet::stpn {

enum class Fusion { early, middle, late };
Fusion parse_fusion(std::string_view text);
std::string_view to_string(Fusion fusion);

struct StpnConfig {
  std::size_t input_channels = 13;  // C_z
  std::size_t frames = 5;
  std::size_t lift_channels = 32;
  std::array<std::size_t, 4> widths{32, 64, 128, 256};
  std::size_t temporal_kernel = 3;
  Fusion fusion = Fusion::middle;
  std::size_t head_channels = 32;
  std::size_t steps = 4;
  double step_seconds = 0.25;
  std::size_t categories = 5;
  bool state_head = true;
  bool relative_offset = true;  // motion head emits per-step increments rather than absolute displacement
  bool batch_norm = true;

  void validate() const;
  /// Number of frames entering each of the four pyramid blocks.
  std::array<std::size_t, 4> temporal_lengths() const;
  /// Decoder output width (equals the first pyramid width).
  std::size_t decoder_channels() const { return widths[0]; }
};

/// Raw head outputs in NCHW layout.
struct Prediction {
  nn::Tensor class_logits;  // [B, C, H, W]
  nn::Tensor motion;        // [B, 2N, H, W], channel 2n + k is component k of step n
  nn::Tensor static_logit;  // [B, 1, H, W]; undefined when the state head is disabled
  bool relative = true;     // motion holds increments between adjacent steps
};

class Stpn {
 public:
  Stpn(StpnConfig config, std::uint64_t seed);

  const StpnConfig& config() const { return config_; }

  /// [B, T, C_z, H, W] -> [B, C_dec, H, W].
  nn::Tensor features(const nn::Tensor& input, bool training);
  Prediction heads(const nn::Tensor& features, bool training);
  Prediction forward(const nn::Tensor& input, bool training) { return heads(features(input, training), training); }

  /// One pyramid block (level 0..3) on [B, T, C, H, W] with T = temporal_lengths()[level].
  nn::Tensor stc_block(const nn::Tensor& input, std::size_t level, bool training);

  std::vector<nn::Parameter> parameters() const;
  /// Parameters below the heads, the ones shared by every task.
  std::vector<nn::Parameter> shared_parameters() const;
  std::size_t parameter_count() const;

  /// Parameters plus batch-norm running statistics.
  std::vector<nn::NamedTensor> state() const;
  void load_state(std::span<const nn::NamedTensor> entries);

  void save(const std::string& path) const;
  void load(const std::string& path);

 private:
  struct Conv {
    std::string name;
    nn::Tensor weight, bias;
    int stride = 1, padding = 1;
    bool temporal = false;
  };
  struct Norm {
    std::string name;
    nn::Tensor gamma, beta, running_mean, running_var;
  };
  // conv -> [batch norm] -> relu
  struct Unit {
    Conv conv;
    Norm norm;
  };
  struct Block {
    std::vector<Unit> spatial;
    bool has_temporal = false;
    Unit temporal;
  };
  struct Head {
    Unit hidden;
    Conv out;
  };

  Unit make_unit(const std::string& name, std::size_t in, std::size_t out, std::size_t k, int stride, bool temporal);
  Conv make_conv(const std::string& name, std::size_t in, std::size_t out, std::size_t k, int stride, bool temporal,
                 bool zero);
  Block make_block(const std::string& name, std::size_t in, std::size_t out, int stride, std::size_t frames_in,
                   std::size_t temporal_kernel);
  Head make_head(const std::string& name, std::size_t in, std::size_t out);

  nn::Tensor apply_unit(Unit& unit, const nn::Tensor& x, bool training);
  nn::Tensor apply_frames(Unit& unit, const nn::Tensor& x5, bool training);
  nn::Tensor apply_block(Block& block, const nn::Tensor& x5, bool training);
  nn::Tensor apply_head(Head& head, const nn::Tensor& x, bool training);

  void collect(const Unit& unit, std::vector<nn::Parameter>& out) const;
  void collect(const Conv& conv, std::vector<nn::Parameter>& out) const;
  void collect_norms(const Unit& unit, std::vector<nn::NamedTensor>& out) const;
  std::vector<const Unit*> units() const;

  StpnConfig config_;
  std::mt19937_64 rng_;
  std::vector<Unit> lift_;
  std::vector<Block> early_;
  std::array<Block, 4> blocks_;
  std::array<Unit, 3> decoder_;  // fusion convs at 1/4, 1/2 and full resolution
  Head cls_, motion_, state_;
};

}  // namespace motionnet::stpn
