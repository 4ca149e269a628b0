#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "motionnet/pipeline/inference.hpp"
#include "motionnet/sim/labels.hpp"

namespace motionnet::pipeline {

enum class SpeedGroup { static_cells = 0, slow = 1, fast = 2 };
inline constexpr double kSlowSpeedLimit = 5.0;  // m/s

struct GroupStats {
  std::optional<double> mean, median;  // absent when the group has no cells
  std::size_t count = 0;
};

struct EvalReport {
  std::string name;
  std::array<GroupStats, 3> groups;  // static, slow, fast
  std::array<std::optional<double>, sim::kNumCategories> category_accuracy;
  std::optional<double> mca;
  std::optional<double> oa;
  std::size_t nonempty_count = 0;

  const GroupStats& group(SpeedGroup g) const { return groups[static_cast<int>(g)]; }
};

struct EvalOptions {
  bool all_steps = false;  // average L2 error over every step instead of the final one
  double static_speed = sim::kStaticSpeed;
};

SpeedGroup speed_group(double speed, double static_speed = sim::kStaticSpeed);

/// Accumulates per-cell errors over many clips. An optional cell mask restricts which non-empty
/// cells contribute to the motion groups (classification always uses every non-empty cell).
class Evaluator {
 public:
  explicit Evaluator(EvalOptions options = {}) : options_(options) {}
  void add(const InferenceOutput& output, const sim::LabelGrids& labels, std::span<const std::uint8_t> mask = {});
  EvalReport report(std::string name = {}) const;

 private:
  EvalOptions options_;
  std::array<std::vector<double>, 3> errors_;
  std::array<std::size_t, sim::kNumCategories> seen_{}, correct_{};
  std::size_t nonempty_ = 0;
};

EvalReport evaluate(std::span<const InferenceOutput> outputs, std::span<const sim::LabelGrids> labels,
                    const EvalOptions& options = {}, std::string name = {});

std::string eval_csv_header();
std::string eval_csv_row(const EvalReport& report);
/// Header plus one row per report.
std::string eval_csv(std::span<const EvalReport> reports);

}  // namespace motionnet::pipeline
