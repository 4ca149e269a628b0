#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "motionnet/bev/bev.hpp"
#include "motionnet/stpn/network.hpp"

namespace motionnet::pipeline {

/// Per-cell outputs of one clip. Displacement is absolute (metres from the keyframe), [N][H][W][2].
struct InferenceOutput {
  std::size_t rows = 0, cols = 0, steps = 0, categories = 0;
  std::vector<std::uint8_t> category;  // argmax class, [H][W]
  std::vector<double> static_prob;     // [H][W]; 0 when the model has no state head
  std::vector<double> displacement;    // [N][H][W][2]

  std::size_t cells() const { return rows * cols; }
  double at(std::size_t step, std::size_t cell, int component) const {
    return displacement[(step * cells() + cell) * 2 + component];
  }
};

struct InferenceOptions {
  double static_threshold = 0.5;
  bool suppress_background = true;
  bool suppress_static = true;
};

/// Prefix sum along the step axis of an [N][H][W][2] field.
std::vector<double> accumulate_displacement(std::span<const double> relative, std::size_t steps);

/// Converts raw head outputs for batch item b: argmax, sigmoid, accumulation (when the motion head
/// predicts increments) and jitter suppression.
InferenceOutput decode_prediction(const stpn::Prediction& prediction, std::size_t b, const InferenceOptions& options);

/// Zeroes displacement of cells classified as background and, when enabled, of cells whose
/// static probability exceeds the threshold. Classification is left untouched.
void suppress_jitter(InferenceOutput& output, const InferenceOptions& options);

/// Worker threads for parallel inference: MN_THREADS when set to a positive integer, else the core count.
std::size_t worker_count();

/// Inference-mode forward pass over many sequences, batched and spread over worker_count() threads.
std::vector<InferenceOutput> infer(stpn::Stpn& model, std::span<const bev::BEVSequence* const> inputs,
                                   const InferenceOptions& options, std::size_t batch_size = 8);

InferenceOutput infer(stpn::Stpn& model, const bev::BEVSequence& input, const InferenceOptions& options);

// "MNOUT001", little-endian: u32 H, W, N, C; u8 category[H*W]; f32 static_prob[H*W];
// f32 displacement[N*H*W*2].
std::vector<std::uint8_t> encode_output(const InferenceOutput& output);
InferenceOutput decode_output(std::span<const std::uint8_t> bytes);
void save_output(const std::filesystem::path& path, const InferenceOutput& output);
InferenceOutput load_output(const std::filesystem::path& path);

/// Small per-clip summary: one row per category with cell count and mean horizon displacement.
std::string output_summary_csv(const InferenceOutput& output);

}  // namespace motionnet::pipeline
