#pragma once

#include "motionnet/nn/tensor.hpp"

namespace motionnet::nn {

/// 2D cross-correlation over [B,C_in,H,W] with a [C_out,C_in,k,k] kernel.
/// Output size per axis is floor((H + 2*padding - k) / stride) + 1.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride = 1, int padding = 0);

/// Pseudo-1D convolution along time: [B,T,C,H,W] * [C_out,C,k_t] -> [B,T-k_t+1,C_out,H,W].
/// No temporal padding.
Tensor conv_temporal(const Tensor& input, const Tensor& weight, const Tensor& bias);

/// Max over the temporal axis, [B,T,C,H,W] -> [B,1,C,H,W]. Ties go to the earliest frame.
Tensor temporal_max_pool(const Tensor& input);

/// Nearest-neighbour 2x upsampling of [B,C,H,W].
Tensor upsample2x(const Tensor& input);

Tensor relu(const Tensor& input);

/// Per-channel normalisation of [B,C,H,W] over (B,H,W). In training mode the batch
/// statistics are used and the running buffers are updated in place.
Tensor batch_norm2d(const Tensor& input, const Tensor& gamma, const Tensor& beta, Tensor& running_mean,
                    Tensor& running_var, bool training, double momentum = 0.1, double eps = 1e-5);

/// Stacks [B,C1,H,W] and [B,C2,H,W] into [B,C1+C2,H,W].
Tensor concat_channels(const Tensor& a, const Tensor& b);

/// 1x1 channel projection with a [C_out,C_in] matrix.
Tensor linear_lift(const Tensor& input, const Tensor& weight, const Tensor& bias);

Tensor reshape(const Tensor& input, Shape shape);

/// Rows [begin, end) of the leading axis.
Tensor slice_batch(const Tensor& input, std::size_t begin, std::size_t end);

Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& input, double factor);
Tensor sum(const Tensor& input);

/// sum_i factors[i] * terms[i] for scalar terms.
Tensor weighted_sum(const std::vector<Tensor>& terms, const std::vector<double>& factors);

}  // namespace motionnet::nn
