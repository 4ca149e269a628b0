#pragma once

#include <array>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "motionnet/losses/losses.hpp"
#include "motionnet/pipeline/dataset.hpp"
#include "motionnet/pipeline/evaluate.hpp"
#include "motionnet/pipeline/inference.hpp"
#include "motionnet/stpn/network.hpp"

namespace motionnet::pipeline {

struct TrainOptions {
  std::size_t epochs = 8;
  std::size_t batch_size = 4;
  double lr = 1e-3;
  bool mgda = false;
  std::size_t max_steps = 0;  // 0 = no limit
  bool fit_class_weights = true;
  bool use_pairs = true;  // feed the shifted clips when beta or gamma is positive
};

struct EpochLog {
  std::size_t epoch = 0;
  losses::LossReport mean;   // averaged over the epoch's batches
  std::optional<double> validation_score;
};

struct MgdaStep {
  std::vector<double> weights;
  double norm = 0.0;          // combined shared-gradient norm with the chosen weights
  double uniform_norm = 0.0;  // same with uniform weights
};

struct TrainResult {
  std::vector<EpochLog> epochs;
  std::vector<double> step_losses;  // total (or MGDA-weighted) loss per step, before the update
  std::vector<MgdaStep> mgda_steps;
  std::size_t steps = 0;
  std::size_t skipped_steps = 0;
  std::size_t best_epoch = 0;
  std::optional<double> best_score;
  losses::LossWeights weights;  // the weights actually used (after fitting class weights)
};

/// Sum of the three speed-group mean errors; absent groups contribute nothing.
double selection_score(const EvalReport& report);

std::string training_log_header();
std::string training_log_row(const EpochLog& log);

/// Mini-batch Adam on the total loss (or MGDA-weighted task losses). Deterministic given the model's
/// initial state and `seed`. When `val` is non-empty the model ends holding the best-validation
/// weights. Throws std::runtime_error naming the batch on a non-finite loss.
TrainResult train(stpn::Stpn& model, std::span<const Sample> train_set, std::span<const Sample> val,
                  const TrainOptions& options, losses::LossWeights weights, const InferenceOptions& inference,
                  std::uint64_t seed, std::ostream* log_csv = nullptr);

/// Loss terms of the model in inference mode over a dataset, averaged over batches of `batch_size`.
losses::LossReport evaluate_losses(stpn::Stpn& model, std::span<const Sample> samples,
                                   const losses::LossWeights& weights, std::size_t batch_size, bool use_pairs);

/// Runs inference on every sample and evaluates against its labels (optionally restricted by a mask
/// selector).
EvalReport evaluate_model(stpn::Stpn& model, std::span<const Sample> samples, const InferenceOptions& inference,
                          const EvalOptions& eval, std::string name = {}, bool turning_only = false);

}  // namespace motionnet::pipeline
