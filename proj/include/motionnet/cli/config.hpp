#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "motionnet/bev/bev.hpp"
#include "motionnet/losses/losses.hpp"
#include "motionnet/pipeline/dataset.hpp"
#include "motionnet/pipeline/evaluate.hpp"
#include "motionnet/pipeline/inference.hpp"
#include "motionnet/pipeline/train.hpp"
#include "motionnet/stpn/network.hpp"

namespace motionnet::cli {

struct DataCounts {
  std::size_t train_clips = 200;
  std::size_t val_clips = 20;
  std::size_t test_clips = 50;
};

/// Every tunable of an experiment. Model fields that follow from the grid and the clip layout
/// (input channels, frames, steps, step length) are filled in by resolve().
struct Config {
  bev::GridSpec grid;
  bev::SyncMode sync = bev::SyncMode::gt;
  pipeline::ClipSource source;
  stpn::StpnConfig model;
  losses::LossWeights loss;
  pipeline::TrainOptions train;
  pipeline::InferenceOptions inference;
  pipeline::EvalOptions eval;
  DataCounts data;
  std::uint64_t seed = 1;

  /// Copies derived values into the model config and validates everything.
  void resolve();
  stpn::StpnConfig model_config() const;
  pipeline::SampleOptions sample_options() const;
};

struct KeyInfo {
  std::string key;
  std::string doc;
};

/// Keys in serialisation order with their documentation.
std::vector<KeyInfo> config_keys();

/// Sets one key; throws std::invalid_argument for unknown keys or malformed values.
void set_value(Config& config, std::string_view key, std::string_view value);
std::string get_value(const Config& config, std::string_view key);

/// Flat `key = value` lines; '#' starts a comment. Errors name the line number.
Config parse_config(std::string_view text);
Config load_config(const std::filesystem::path& path);

/// Every key with its current value and a trailing documentation comment.
std::string serialize_config(const Config& config);
void save_config(const std::filesystem::path& path, const Config& config);

}  // namespace motionnet::cli
