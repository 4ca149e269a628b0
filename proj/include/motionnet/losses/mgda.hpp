#pragma once

#include <span>
#include <vector>

namespace motionnet::losses {

struct MgdaOptions {
  int max_iterations = 100;
  double tolerance = 1e-6;  // Frank-Wolfe duality gap
};

struct MgdaResult {
  std::vector<double> weights;  // on the probability simplex
  double norm = 0.0;            // || sum_i w_i g_i ||
  int iterations = 0;
};

/// Minimum-norm point of the convex hull of the task gradients, found by Frank-Wolfe with exact line
/// search. The start is the best of the uniform point, the vertices and every pairwise min-norm
/// solution, so the result is never worse than uniform weighting. All-zero gradients give uniform weights.
MgdaResult mgda_weights(std::span<const std::vector<double>> gradients, const MgdaOptions& options = {});

/// || sum_i w_i g_i ||.
double combined_norm(std::span<const std::vector<double>> gradients, std::span<const double> weights);

}  // namespace motionnet::losses
