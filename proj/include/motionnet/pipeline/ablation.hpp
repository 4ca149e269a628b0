#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "motionnet/cli/config.hpp"
#include "motionnet/pipeline/evaluate.hpp"

namespace motionnet::pipeline {

/// One swept config key with its alternatives.
struct AblationAxis {
  std::string key;
  std::vector<std::string> values;
};

/// Matrix file: one `key = v1, v2, ...` line per axis, '#' comments. Keys are validated against
/// the config registry.
std::vector<AblationAxis> parse_matrix(std::string_view text);

/// Every combination of axis values, each as (key, value) assignments in axis order.
std::vector<std::vector<std::pair<std::string, std::string>>> expand_matrix(const std::vector<AblationAxis>& axes);

/// Trains and evaluates the base config with every combination applied; data is regenerated per
/// cell from the base seed so all cells see the same scenarios. Rows are named "k1=v1;k2=v2".
std::vector<EvalReport> ablation_run(const cli::Config& base, const std::vector<AblationAxis>& axes,
                                     const std::function<void(const EvalReport&)>& on_row = {});

/// Generates the train/val/test samples a config describes.
struct Splits {
  std::vector<Sample> train, val, test;
};
Splits make_splits(const cli::Config& config);

}  // namespace motionnet::pipeline
