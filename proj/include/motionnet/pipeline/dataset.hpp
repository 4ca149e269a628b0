#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "motionnet/bev/bev.hpp"
#include "motionnet/geometry.hpp"
#include "motionnet/sim/clip.hpp"
#include "motionnet/sim/labels.hpp"

namespace motionnet::pipeline {

/// Network input and labels of one keyframe clip, with its optional (t + offset) partner.
struct Sample {
  bev::BEVSequence input;
  sim::LabelGrids labels;
  std::vector<std::uint8_t> turning;  // [H][W], cells of actors that turn over the horizon
  std::vector<double> flow;           // [H][W][2], ground-truth motion over the last input interval
  double flow_interval = 0.0;

  bool has_pair = false;
  bev::BEVSequence pair_input;
  sim::LabelGrids pair_labels;
  geometry::Planar relative;  // current keyframe -> shifted keyframe coordinates
};

struct SampleOptions {
  bev::GridSpec grid;
  bev::SyncMode sync = bev::SyncMode::gt;
  double turn_rate_threshold = 0.25;  // rad/s of heading change over the horizon
};

Sample make_sample(const sim::Clip& clip, const sim::Clip* shifted, const SampleOptions& options);

struct ClipSource {
  sim::ScenarioConfig scenario;
  sim::ClipSpec clip;
  sim::LidarConfig lidar;
  double pair_offset = 0.05;
};

/// Seed of item `index` in stream `stream` derived from a base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index);

/// Clip pairs for `count` independent scenarios; the keyframe sits at scenario time 0.
std::vector<sim::ClipPair> generate_clip_pairs(const ClipSource& source, std::size_t count, std::uint64_t seed);

std::vector<Sample> make_samples(std::span<const sim::ClipPair> pairs, const SampleOptions& options,
                                 bool with_pairs);

/// Writes clip_NNNNN.mnclip and clip_NNNNN.pair.mnclip into `dir`.
void write_clip_pairs(const std::filesystem::path& dir, std::span<const sim::ClipPair> pairs);

/// Loads every clip_*.mnclip in `dir` (sorted by name), attaching pair files where present.
std::vector<Sample> load_samples(const std::filesystem::path& dir, const SampleOptions& options);

}  // namespace motionnet::pipeline
