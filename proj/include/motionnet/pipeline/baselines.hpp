#pragma once

#include <span>
#include <vector>

#include "motionnet/pipeline/inference.hpp"
#include "motionnet/sim/clip.hpp"
#include "motionnet/sim/labels.hpp"

namespace motionnet::pipeline {

/// Assumes a static world: zero displacement everywhere. Categories are copied from `labels`.
InferenceOutput baseline_static(const sim::LabelGrids& labels);

/// Linear extrapolation: `flow` is a per-cell displacement [H][W][2] observed over `interval` seconds;
/// the prediction at step n is flow * (n * step_seconds / interval). Categories are copied from `labels`.
InferenceOutput baseline_const_velocity(const sim::LabelGrids& labels, std::span<const double> flow,
                                        double interval);

/// Ground-truth displacement of each labelled cell over the last input interval (previous input
/// frame -> keyframe), in keyframe coordinates; zero for background. Returns [H][W][2].
std::vector<double> last_interval_flow(const sim::Clip& clip, const sim::LabelGrids& labels,
                                       const bev::GridSpec& grid, double* interval = nullptr);

}  // namespace motionnet::pipeline
