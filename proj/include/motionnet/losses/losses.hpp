#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "motionnet/bev/grid.hpp"
#include "motionnet/geometry.hpp"
#include "motionnet/nn/tensor.hpp"
#include "motionnet/sim/labels.hpp"

namespace motionnet::losses {

/// Labels of a batch laid out to match the network outputs.
struct LabelBatch {
  std::size_t batch = 0, rows = 0, cols = 0, steps = 0;
  std::vector<std::uint8_t> category;  // [B][H][W]
  std::vector<std::int32_t> instance;  // [B][H][W]
  std::vector<std::uint8_t> state;     // [B][H][W], sim::MotionState
  std::vector<std::uint8_t> nonempty;  // [B][H][W]
  std::vector<double> motion;          // [B][2N][H][W] regression target

  std::size_t cells() const { return rows * cols; }
};

/// `relative` selects per-step increments as the motion target instead of absolute displacement.
LabelBatch make_label_batch(std::span<const sim::LabelGrids* const> labels, bool relative);

struct LossWeights {
  double alpha = 15.0;
  double beta = 2.5;
  double gamma = 0.1;
  std::vector<double> class_weights = std::vector<double>(sim::kNumCategories, 1.0);
  std::vector<double> motion_weights = std::vector<double>(sim::kNumCategories, 1.0);
  std::array<double, 2> state_weights{1.0, 1.0};  // indexed by sim::MotionState
};

/// Inverse-frequency weights over the non-empty cells, normalised so the mean weight over those
/// cells is 1, then clipped to [0.05, 50]; classes that never occur get 1.
std::vector<double> inverse_frequency_weights(std::span<const std::size_t> counts);

/// Fills class, motion and state weights from label statistics.
void fit_weights(LossWeights& weights, std::span<const sim::LabelGrids* const> labels);

double smooth_l1(double e);
double smooth_l1_grad(double e);

/// Weighted cross-entropy over non-empty cells, sum_i w(y_i) CE_i / n_nonempty. Logits [B,C,H,W].
nn::Tensor loss_cls(const nn::Tensor& logits, const LabelBatch& labels, std::span<const double> class_weights);

/// Weighted binary cross-entropy of P(static) over non-empty cells. Logit [B,1,H,W].
nn::Tensor loss_state(const nn::Tensor& static_logit, const LabelBatch& labels, std::array<double, 2> state_weights);

/// Category-weighted smooth L1, averaged over non-empty cells, steps and both components. Motion [B,2N,H,W].
nn::Tensor loss_motion(const nn::Tensor& motion, const LabelBatch& labels, std::span<const double> category_weights);

/// Smooth L1 of motion differences between right/down neighbours of the same instance, summed over
/// pairs, steps and components, averaged over the batch.
nn::Tensor loss_spatial(const nn::Tensor& motion, const LabelBatch& labels);

struct TemporalDiagnostics {
  std::size_t matched_objects = 0;
  std::size_t unmatched_objects = 0;
  std::size_t overlap_cells = 0;
};

/// Instance-averaged motions of each object in both clips of a pair; the shifted clip's vectors are
/// rotated into the current frame. Smooth L1 summed over objects, steps and components, averaged over
/// the batch. `relative[b]` maps current-frame coordinates to shifted-frame coordinates.
nn::Tensor loss_fg_temporal(const nn::Tensor& motion_current, const nn::Tensor& motion_shifted,
                            const LabelBatch& current, const LabelBatch& shifted,
                            std::span<const geometry::Planar> relative, TemporalDiagnostics* diagnostics = nullptr);

/// The shifted clip's motion grid resampled bilinearly at the current cell centres (mapped through
/// `relative`) and rotated into the current frame, compared with smooth L1 on cells where the current
/// cell and every contributing shifted cell are non-empty. Summed over cells, steps and components,
/// averaged over the batch.
nn::Tensor loss_bg_temporal(const nn::Tensor& motion_current, const nn::Tensor& motion_shifted,
                            const LabelBatch& current, const LabelBatch& shifted,
                            std::span<const geometry::Planar> relative, const bev::GridSpec& grid,
                            TemporalDiagnostics* diagnostics = nullptr);

/// Loss terms of one step. Undefined tensors count as zero.
struct LossTerms {
  nn::Tensor cls, motion, state, spatial, fg_temporal, bg_temporal;
};

struct LossReport {
  double cls = 0, motion = 0, state = 0, spatial = 0, fg_temporal = 0, bg_temporal = 0, total = 0;
  std::array<double, 3> task_weights{1.0, 1.0, 1.0};
};

/// L_cls + L_motion + L_state + alpha L_s + beta L_ft + gamma L_bt.
nn::Tensor total_loss(const LossTerms& terms, const LossWeights& weights);

/// Task grouping used for multi-objective weighting:
///   0: L_cls; 1: L_motion + alpha L_s + beta L_ft + gamma L_bt; 2: L_state.
std::array<nn::Tensor, 3> task_losses(const LossTerms& terms, const LossWeights& weights);

LossReport report(const LossTerms& terms, const LossWeights& weights);

}  // namespace motionnet::losses
