#include "motionnet/pipeline/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "motionnet/sim/clip_io.hpp"
#include "motionnet/pipeline/baselines.hpp"

namespace motionnet::pipeline {

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::vector<std::uint8_t> turning_cells(const sim::Clip& clip, const sim::LabelGrids& labels, double threshold) {
  std::vector<std::uint8_t> mask(labels.cells(), 0);
  const double horizon = static_cast<double>(labels.steps) * labels.step_seconds;
  if (labels.steps == 0) return mask;
  for (const auto& tr : sim::clip_tracks(clip)) {
    const double rate = std::abs(geometry::wrap_angle(tr.future.back().yaw - tr.current.yaw)) / horizon;
    if (rate <= threshold) continue;
    for (std::size_t c = 0; c < mask.size(); ++c)
      if (labels.instance[c] == tr.id) mask[c] = 1;
  }
  return mask;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index) {
  return mix(mix(base ^ mix(stream + 0x51ed27ULL)) + index);
}

Sample make_sample(const sim::Clip& clip, const sim::Clip* shifted, const SampleOptions& options) {
  Sample s;
  s.input = bev::build_input(clip, options.grid, options.sync);
  const auto nonempty = s.input.keyframe_nonempty();
  s.labels = sim::derive_cell_gt(clip, options.grid, nonempty);
  s.turning = turning_cells(clip, s.labels, options.turn_rate_threshold);
  if (clip.input_frame_count() > 1) s.flow = last_interval_flow(clip, s.labels, options.grid, &s.flow_interval);
  if (shifted) {
    s.has_pair = true;
    s.pair_input = bev::build_input(*shifted, options.grid, options.sync);
    s.pair_labels = sim::derive_cell_gt(*shifted, options.grid, s.pair_input.keyframe_nonempty());
    s.relative = geometry::to_planar(sim::relative_ego_transform(clip, *shifted));
  }
  return s;
}

std::vector<sim::ClipPair> generate_clip_pairs(const ClipSource& source, std::size_t count, std::uint64_t seed) {
  std::vector<sim::ClipPair> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const sim::Scenario scenario = sim::generate_scenario(source.scenario, derive_seed(seed, 1, i));
    out.push_back(sim::make_clip_pair(scenario, 0.0, source.clip, source.lidar, derive_seed(seed, 2, i),
                                      source.pair_offset));
  }
  return out;
}

std::vector<Sample> make_samples(std::span<const sim::ClipPair> pairs, const SampleOptions& options,
                                 bool with_pairs) {
  std::vector<Sample> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(make_sample(p.current, with_pairs ? &p.shifted : nullptr, options));
  return out;
}

namespace {
std::string clip_name(std::size_t i, bool pair) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "clip_%05zu%s.mnclip", i, pair ? ".pair" : "");
  return buf;
}
}  // namespace

void write_clip_pairs(const std::filesystem::path& dir, std::span<const sim::ClipPair> pairs) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    sim::save_clip(dir / clip_name(i, false), pairs[i].current);
    sim::save_clip(dir / clip_name(i, true), pairs[i].shifted);
  }
}

std::vector<Sample> load_samples(const std::filesystem::path& dir, const SampleOptions& options) {
  if (!std::filesystem::is_directory(dir)) throw std::runtime_error("data directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.ends_with(".mnclip") && !name.ends_with(".pair.mnclip")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Sample> out;
  auto load = [](const std::filesystem::path& p) {
    try {
      return sim::load_clip(p);
    } catch (const std::exception& e) {
      throw std::runtime_error(p.string() + ": " + e.what());
    }
  };
  for (const auto& f : files) {
    const sim::Clip clip = load(f);
    std::filesystem::path pair_path = f;
    pair_path.replace_extension(".pair.mnclip");
    if (std::filesystem::exists(pair_path)) {
      const sim::Clip shifted = load(pair_path);
      out.push_back(make_sample(clip, &shifted, options));
    } else {
      out.push_back(make_sample(clip, nullptr, options));
    }
  }
  return out;
}

}  // namespace motionnet::pipeline
