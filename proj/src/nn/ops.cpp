#include "motionnet/nn/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace motionnet::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

[[noreturn]] void shape_error(const std::string& op, const std::string& what) {
  throw std::invalid_argument(op + ": " + what);
}

void expect_rank(const std::string& op, const std::string& name, const Tensor& t, std::size_t rank) {
  if (!t.defined()) shape_error(op, name + " is undefined");
  if (t.rank() != rank)
    shape_error(op, name + " must have rank " + std::to_string(rank) + ", got " + shape_string(t.shape()));
}

void expect_dim(const std::string& op, const std::string& what, std::size_t got, std::size_t want) {
  if (got != want)
    shape_error(op, what + " is " + std::to_string(got) + " but " + std::to_string(want) + " was expected");
}

// Sequential sum; Eigen reductions over unaligned maps peel by address, which makes the last bit
// depend on where the buffer happens to live.
double row_sum(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

struct ConvGeometry {
  std::size_t channels, height, width, kernel, stride, padding, out_h, out_w;
};

// Rows are (c, ki, kj), columns are output pixels.
void im2col(const double* x, const ConvGeometry& g, double* col) {
  const std::size_t hw = g.out_h * g.out_w;
  const long pad = static_cast<long>(g.padding);
  for (std::size_t c = 0; c < g.channels; ++c) {
    const double* plane = x + c * g.height * g.width;
    for (std::size_t ki = 0; ki < g.kernel; ++ki) {
      for (std::size_t kj = 0; kj < g.kernel; ++kj) {
        double* row = col + ((c * g.kernel + ki) * g.kernel + kj) * hw;
        for (std::size_t oh = 0; oh < g.out_h; ++oh) {
          const long ih = static_cast<long>(oh * g.stride + ki) - pad;
          double* dst = row + oh * g.out_w;
          if (ih < 0 || ih >= static_cast<long>(g.height)) {
            std::fill(dst, dst + g.out_w, 0.0);
            continue;
          }
          const double* src = plane + ih * g.width;
          for (std::size_t ow = 0; ow < g.out_w; ++ow) {
            const long iw = static_cast<long>(ow * g.stride + kj) - pad;
            dst[ow] = (iw < 0 || iw >= static_cast<long>(g.width)) ? 0.0 : src[iw];
          }
        }
      }
    }
  }
}

void col2im_add(const double* col, const ConvGeometry& g, double* x) {
  const std::size_t hw = g.out_h * g.out_w;
  const long pad = static_cast<long>(g.padding);
  for (std::size_t c = 0; c < g.channels; ++c) {
    double* plane = x + c * g.height * g.width;
    for (std::size_t ki = 0; ki < g.kernel; ++ki) {
      for (std::size_t kj = 0; kj < g.kernel; ++kj) {
        const double* row = col + ((c * g.kernel + ki) * g.kernel + kj) * hw;
        for (std::size_t oh = 0; oh < g.out_h; ++oh) {
          const long ih = static_cast<long>(oh * g.stride + ki) - pad;
          if (ih < 0 || ih >= static_cast<long>(g.height)) continue;
          const double* src = row + oh * g.out_w;
          double* dst = plane + ih * g.width;
          for (std::size_t ow = 0; ow < g.out_w; ++ow) {
            const long iw = static_cast<long>(ow * g.stride + kj) - pad;
            if (iw >= 0 && iw < static_cast<long>(g.width)) dst[iw] += src[ow];
          }
        }
      }
    }
  }
}

Tensor make_view(const Tensor& input, Shape shape, const char* op) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = input.node()->value;
  node->op = op;
  if (grad_enabled() && input.requires_grad()) {
    node->requires_grad = true;
    node->inputs.push_back(input.node());
    node->backward = [](Node& self) {
      auto g = self.inputs[0]->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    };
  }
  return Tensor(std::move(node));
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride, int padding) {
  const std::string op = "conv2d";
  expect_rank(op, "input", input, 4);
  expect_rank(op, "weight", weight, 4);
  if (stride < 1 || padding < 0) shape_error(op, "stride must be >= 1 and padding >= 0");
  const std::size_t batch = input.dim(0), channels = input.dim(1), height = input.dim(2), width = input.dim(3);
  const std::size_t out_c = weight.dim(0), k = weight.dim(2);
  expect_dim(op, "input channels (dim 1)", channels, weight.dim(1));
  if (weight.dim(3) != k) shape_error(op, "kernel must be square, got " + shape_string(weight.shape()));
  if (k % 2 == 0) shape_error(op, "kernel size must be odd, got " + std::to_string(k));
  if (bias.defined()) {
    expect_rank(op, "bias", bias, 1);
    expect_dim(op, "bias length (dim 0)", bias.dim(0), out_c);
  }
  if (height + 2 * padding < k) shape_error(op, "input height (dim 2) smaller than the kernel");
  if (width + 2 * padding < k) shape_error(op, "input width (dim 3) smaller than the kernel");

  ConvGeometry g{channels,
                 height,
                 width,
                 k,
                 static_cast<std::size_t>(stride),
                 static_cast<std::size_t>(padding),
                 (height + 2 * padding - k) / stride + 1,
                 (width + 2 * padding - k) / stride + 1};
  const std::size_t hw = g.out_h * g.out_w;
  const std::size_t rows = channels * k * k;
  const bool pointwise = (k == 1 && stride == 1 && padding == 0);

  std::vector<double> out(batch * out_c * hw);
  std::vector<double> col(pointwise ? 0 : rows * hw);
  ConstMatMap wmat(weight.data().data(), out_c, rows);
  const double* x = input.data().data();
  for (std::size_t n = 0; n < batch; ++n) {
    const double* src = x + n * channels * height * width;
    if (!pointwise) im2col(src, g, col.data());
    ConstMatMap cmat(pointwise ? src : col.data(), rows, hw);
    MatMap y(out.data() + n * out_c * hw, out_c, hw);
    y.noalias() = wmat * cmat;
    if (bias.defined()) {
      const auto b = bias.data();
      for (std::size_t o = 0; o < out_c; ++o) y.row(o).array() += b[o];
    }
  }

  std::vector<Tensor> inputs{input, weight};
  if (bias.defined()) inputs.push_back(bias);
  return make_result({batch, out_c, g.out_h, g.out_w}, std::move(out), inputs, "conv2d",
                     [g, batch, out_c, rows, hw, pointwise](Node& self) {
                       Node& xin = *self.inputs[0];
                       Node& win = *self.inputs[1];
                       Node* bin = self.inputs.size() > 2 ? self.inputs[2].get() : nullptr;
                       const std::size_t in_size = g.channels * g.height * g.width;
                       std::vector<double> col(pointwise ? 0 : rows * hw);
                       std::vector<double> dcol(pointwise ? 0 : rows * hw);
                       ConstMatMap wmat(win.value->data(), out_c, rows);
                       for (std::size_t n = 0; n < batch; ++n) {
                         ConstMatMap dy(self.grad.data() + n * out_c * hw, out_c, hw);
                         const double* src = xin.value->data() + n * in_size;
                         if (win.requires_grad) {
                           if (!pointwise) im2col(src, g, col.data());
                           ConstMatMap cmat(pointwise ? src : col.data(), rows, hw);
                           MatMap dw(win.ensure_grad().data(), out_c, rows);
                           dw.noalias() += dy * cmat.transpose();
                         }
                         if (bin && bin->requires_grad) {
                           auto db = bin->ensure_grad();
                           for (std::size_t o = 0; o < out_c; ++o) db[o] += row_sum(dy.row(o).data(), dy.cols());
                         }
                         if (xin.requires_grad) {
                           double* dx = xin.ensure_grad().data() + n * in_size;
                           if (pointwise) {
                             MatMap dxm(dx, rows, hw);
                             dxm.noalias() += wmat.transpose() * dy;
                           } else {
                             MatMap dc(dcol.data(), rows, hw);
                             dc.noalias() = wmat.transpose() * dy;
                             col2im_add(dcol.data(), g, dx);
                           }
                         }
                       }
                     });
}

Tensor conv_temporal(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  const std::string op = "conv_temporal";
  expect_rank(op, "input", input, 5);
  expect_rank(op, "weight", weight, 3);
  const std::size_t batch = input.dim(0), frames = input.dim(1), channels = input.dim(2);
  const std::size_t hw = input.dim(3) * input.dim(4);
  const std::size_t out_c = weight.dim(0), kt = weight.dim(2);
  expect_dim(op, "input channels (dim 2)", channels, weight.dim(1));
  if (frames < kt)
    shape_error(op, "temporal length (dim 1) " + std::to_string(frames) + " is shorter than kernel " +
                        std::to_string(kt));
  if (bias.defined()) {
    expect_rank(op, "bias", bias, 1);
    expect_dim(op, "bias length (dim 0)", bias.dim(0), out_c);
  }
  const std::size_t out_t = frames - kt + 1;

  // Repack [O,C,K] into K matrices of O x C.
  std::vector<RowMat> taps(kt, RowMat(out_c, channels));
  const auto w = weight.data();
  for (std::size_t o = 0; o < out_c; ++o)
    for (std::size_t c = 0; c < channels; ++c)
      for (std::size_t j = 0; j < kt; ++j) taps[j](o, c) = w[(o * channels + c) * kt + j];

  std::vector<double> out(batch * out_t * out_c * hw, 0.0);
  const double* x = input.data().data();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < out_t; ++t) {
      MatMap y(out.data() + (b * out_t + t) * out_c * hw, out_c, hw);
      for (std::size_t j = 0; j < kt; ++j) {
        ConstMatMap xm(x + (b * frames + t + j) * channels * hw, channels, hw);
        y.noalias() += taps[j] * xm;
      }
      if (bias.defined()) {
        const auto bv = bias.data();
        for (std::size_t o = 0; o < out_c; ++o) y.row(o).array() += bv[o];
      }
    }
  }

  std::vector<Tensor> inputs{input, weight};
  if (bias.defined()) inputs.push_back(bias);
  return make_result(
      {batch, out_t, out_c, input.dim(3), input.dim(4)}, std::move(out), inputs, "conv_temporal",
      [taps = std::move(taps), batch, frames, channels, hw, out_c, kt, out_t](Node& self) {
        Node& xin = *self.inputs[0];
        Node& win = *self.inputs[1];
        Node* bin = self.inputs.size() > 2 ? self.inputs[2].get() : nullptr;
        const double* x = xin.value->data();
        std::vector<RowMat> dtaps;
        if (win.requires_grad) dtaps.assign(kt, RowMat::Zero(out_c, channels));
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t t = 0; t < out_t; ++t) {
            ConstMatMap dy(self.grad.data() + (b * out_t + t) * out_c * hw, out_c, hw);
            if (bin && bin->requires_grad) {
              auto db = bin->ensure_grad();
              for (std::size_t o = 0; o < out_c; ++o) db[o] += row_sum(dy.row(o).data(), dy.cols());
            }
            for (std::size_t j = 0; j < kt; ++j) {
              const std::size_t offset = (b * frames + t + j) * channels * hw;
              if (win.requires_grad) {
                ConstMatMap xm(x + offset, channels, hw);
                dtaps[j].noalias() += dy * xm.transpose();
              }
              if (xin.requires_grad) {
                MatMap dx(xin.ensure_grad().data() + offset, channels, hw);
                dx.noalias() += taps[j].transpose() * dy;
              }
            }
          }
        }
        if (win.requires_grad) {
          auto dw = win.ensure_grad();
          for (std::size_t o = 0; o < out_c; ++o)
            for (std::size_t c = 0; c < channels; ++c)
              for (std::size_t j = 0; j < kt; ++j) dw[(o * channels + c) * kt + j] += dtaps[j](o, c);
        }
      });
}

Tensor temporal_max_pool(const Tensor& input) {
  const std::string op = "temporal_max_pool";
  expect_rank(op, "input", input, 5);
  const std::size_t batch = input.dim(0), frames = input.dim(1);
  const std::size_t frame_size = input.dim(2) * input.dim(3) * input.dim(4);
  std::vector<double> out(batch * frame_size);
  std::vector<std::uint32_t> argmax(batch * frame_size, 0);
  const double* x = input.data().data();
  for (std::size_t b = 0; b < batch; ++b) {
    const double* base = x + b * frames * frame_size;
    double* dst = out.data() + b * frame_size;
    std::uint32_t* arg = argmax.data() + b * frame_size;
    std::copy(base, base + frame_size, dst);
    for (std::size_t t = 1; t < frames; ++t) {
      const double* src = base + t * frame_size;
      for (std::size_t i = 0; i < frame_size; ++i) {
        if (src[i] > dst[i]) {
          dst[i] = src[i];
          arg[i] = static_cast<std::uint32_t>(t);
        }
      }
    }
  }
  return make_result({batch, 1, input.dim(2), input.dim(3), input.dim(4)}, std::move(out), {input},
                     "temporal_max_pool", [argmax = std::move(argmax), batch, frames, frame_size](Node& self) {
                       auto dx = self.inputs[0]->ensure_grad();
                       for (std::size_t b = 0; b < batch; ++b)
                         for (std::size_t i = 0; i < frame_size; ++i) {
                           const std::size_t idx = b * frame_size + i;
                           dx[(b * frames + argmax[idx]) * frame_size + i] += self.grad[idx];
                         }
                     });
}

Tensor upsample2x(const Tensor& input) {
  expect_rank("upsample2x", "input", input, 4);
  const std::size_t planes = input.dim(0) * input.dim(1), h = input.dim(2), w = input.dim(3);
  std::vector<double> out(planes * 4 * h * w);
  const double* x = input.data().data();
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t i = 0; i < 2 * h; ++i)
      for (std::size_t j = 0; j < 2 * w; ++j) out[(p * 2 * h + i) * 2 * w + j] = x[(p * h + i / 2) * w + j / 2];
  return make_result({input.dim(0), input.dim(1), 2 * h, 2 * w}, std::move(out), {input}, "upsample2x",
                     [planes, h, w](Node& self) {
                       auto dx = self.inputs[0]->ensure_grad();
                       for (std::size_t p = 0; p < planes; ++p)
                         for (std::size_t i = 0; i < 2 * h; ++i)
                           for (std::size_t j = 0; j < 2 * w; ++j)
                             dx[(p * h + i / 2) * w + j / 2] += self.grad[(p * 2 * h + i) * 2 * w + j];
                     });
}

Tensor relu(const Tensor& input) {
  const auto x = input.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
  return make_result(input.shape(), std::move(out), {input}, "relu", [](Node& self) {
    auto dx = self.inputs[0]->ensure_grad();
    const auto& x = *self.inputs[0]->value;
    for (std::size_t i = 0; i < dx.size(); ++i)
      if (x[i] > 0.0) dx[i] += self.grad[i];
  });
}

Tensor batch_norm2d(const Tensor& input, const Tensor& gamma, const Tensor& beta, Tensor& running_mean,
                    Tensor& running_var, bool training, double momentum, double eps) {
  const std::string op = "batch_norm2d";
  expect_rank(op, "input", input, 4);
  const std::size_t batch = input.dim(0), channels = input.dim(1), hw = input.dim(2) * input.dim(3);
  for (const Tensor* t : std::initializer_list<const Tensor*>{&gamma, &beta, &running_mean, &running_var}) {
    expect_rank(op, "parameter", *t, 1);
    expect_dim(op, "parameter length (dim 0)", t->dim(0), channels);
  }
  const double m = static_cast<double>(batch * hw);
  const double* x = input.data().data();
  std::vector<double> mean(channels, 0.0), inv_std(channels, 0.0);
  if (training) {
    auto rm = running_mean.mutable_data();
    auto rv = running_var.mutable_data();
    for (std::size_t c = 0; c < channels; ++c) {
      double s = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        const double* p = x + (b * channels + c) * hw;
        for (std::size_t i = 0; i < hw; ++i) s += p[i];
      }
      const double mu = s / m;
      double v = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        const double* p = x + (b * channels + c) * hw;
        for (std::size_t i = 0; i < hw; ++i) v += (p[i] - mu) * (p[i] - mu);
      }
      v /= m;
      mean[c] = mu;
      inv_std[c] = 1.0 / std::sqrt(v + eps);
      const double unbiased = m > 1.0 ? v * m / (m - 1.0) : v;
      rm[c] = (1.0 - momentum) * rm[c] + momentum * mu;
      rv[c] = (1.0 - momentum) * rv[c] + momentum * unbiased;
    }
  } else {
    const auto rm = running_mean.data();
    const auto rv = running_var.data();
    for (std::size_t c = 0; c < channels; ++c) {
      mean[c] = rm[c];
      inv_std[c] = 1.0 / std::sqrt(rv[c] + eps);
    }
  }

  const auto g = gamma.data();
  const auto bt = beta.data();
  std::vector<double> out(input.numel());
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t c = 0; c < channels; ++c) {
      const double* p = x + (b * channels + c) * hw;
      double* q = out.data() + (b * channels + c) * hw;
      const double a = g[c] * inv_std[c];
      const double shift = bt[c] - a * mean[c];
      for (std::size_t i = 0; i < hw; ++i) q[i] = a * p[i] + shift;
    }

  return make_result(input.shape(), std::move(out), {input, gamma, beta}, "batch_norm2d",
                     [mean = std::move(mean), inv_std = std::move(inv_std), training, batch, channels, hw,
                      m](Node& self) {
                       Node& xin = *self.inputs[0];
                       Node& gin = *self.inputs[1];
                       Node& bin = *self.inputs[2];
                       const double* x = xin.value->data();
                       const auto& gv = *gin.value;
                       for (std::size_t c = 0; c < channels; ++c) {
                         double sum_dy = 0.0, sum_dy_xhat = 0.0;
                         for (std::size_t b = 0; b < batch; ++b) {
                           const double* p = x + (b * channels + c) * hw;
                           const double* dy = self.grad.data() + (b * channels + c) * hw;
                           for (std::size_t i = 0; i < hw; ++i) {
                             sum_dy += dy[i];
                             sum_dy_xhat += dy[i] * (p[i] - mean[c]) * inv_std[c];
                           }
                         }
                         if (gin.requires_grad) gin.ensure_grad()[c] += sum_dy_xhat;
                         if (bin.requires_grad) bin.ensure_grad()[c] += sum_dy;
                         if (!xin.requires_grad) continue;
                         auto dx = xin.ensure_grad();
                         const double a = gv[c] * inv_std[c];
                         for (std::size_t b = 0; b < batch; ++b) {
                           const std::size_t off = (b * channels + c) * hw;
                           const double* p = x + off;
                           const double* dy = self.grad.data() + off;
                           if (training) {
                             for (std::size_t i = 0; i < hw; ++i) {
                               const double xhat = (p[i] - mean[c]) * inv_std[c];
                               dx[off + i] += a * (dy[i] - sum_dy / m - xhat * sum_dy_xhat / m);
                             }
                           } else {
                             for (std::size_t i = 0; i < hw; ++i) dx[off + i] += a * dy[i];
                           }
                         }
                       }
                     });
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  const std::string op = "concat_channels";
  expect_rank(op, "first input", a, 4);
  expect_rank(op, "second input", b, 4);
  expect_dim(op, "batch (dim 0)", b.dim(0), a.dim(0));
  expect_dim(op, "height (dim 2)", b.dim(2), a.dim(2));
  expect_dim(op, "width (dim 3)", b.dim(3), a.dim(3));
  const std::size_t batch = a.dim(0), ca = a.dim(1), cb = b.dim(1), hw = a.dim(2) * a.dim(3);
  std::vector<double> out(batch * (ca + cb) * hw);
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  for (std::size_t n = 0; n < batch; ++n) {
    std::copy(pa + n * ca * hw, pa + (n + 1) * ca * hw, out.data() + n * (ca + cb) * hw);
    std::copy(pb + n * cb * hw, pb + (n + 1) * cb * hw, out.data() + (n * (ca + cb) + ca) * hw);
  }
  return make_result({batch, ca + cb, a.dim(2), a.dim(3)}, std::move(out), {a, b}, "concat_channels",
                     [batch, ca, cb, hw](Node& self) {
                       Node& na = *self.inputs[0];
                       Node& nb = *self.inputs[1];
                       for (std::size_t n = 0; n < batch; ++n) {
                         const double* g = self.grad.data() + n * (ca + cb) * hw;
                         if (na.requires_grad) {
                           double* d = na.ensure_grad().data() + n * ca * hw;
                           for (std::size_t i = 0; i < ca * hw; ++i) d[i] += g[i];
                         }
                         if (nb.requires_grad) {
                           double* d = nb.ensure_grad().data() + n * cb * hw;
                           for (std::size_t i = 0; i < cb * hw; ++i) d[i] += g[ca * hw + i];
                         }
                       }
                     });
}

Tensor linear_lift(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  expect_rank("linear_lift", "weight", weight, 2);
  return conv2d(input, reshape(weight, {weight.dim(0), weight.dim(1), 1, 1}), bias, 1, 0);
}

Tensor reshape(const Tensor& input, Shape shape) {
  if (shape_numel(shape) != input.numel())
    shape_error("reshape", "cannot view " + shape_string(input.shape()) + " as " + shape_string(shape));
  return make_view(input, std::move(shape), "reshape");
}

Tensor slice_batch(const Tensor& input, std::size_t begin, std::size_t end) {
  if (input.rank() < 1 || begin >= end || end > input.dim(0))
    shape_error("slice_batch", "invalid range [" + std::to_string(begin) + "," + std::to_string(end) +
                                   ") for shape " + shape_string(input.shape()));
  const std::size_t row = input.numel() / input.dim(0);
  const auto x = input.data();
  std::vector<double> out(x.begin() + begin * row, x.begin() + end * row);
  Shape shape = input.shape();
  shape[0] = end - begin;
  return make_result(std::move(shape), std::move(out), {input}, "slice_batch", [begin, row](Node& self) {
    auto dx = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) dx[begin * row + i] += self.grad[i];
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    shape_error("add", "shapes " + shape_string(a.shape()) + " and " + shape_string(b.shape()) + " differ");
  const auto x = a.data();
  const auto y = b.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + y[i];
  return make_result(a.shape(), std::move(out), {a, b}, "add", [](Node& self) {
    for (auto& in : self.inputs) {
      if (!in->requires_grad) continue;
      auto d = in->ensure_grad();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    shape_error("mul", "shapes " + shape_string(a.shape()) + " and " + shape_string(b.shape()) + " differ");
  const auto x = a.data();
  const auto y = b.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * y[i];
  return make_result(a.shape(), std::move(out), {a, b}, "mul", [](Node& self) {
    Node& na = *self.inputs[0];
    Node& nb = *self.inputs[1];
    if (na.requires_grad) {
      auto d = na.ensure_grad();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += self.grad[i] * (*nb.value)[i];
    }
    if (nb.requires_grad) {
      auto d = nb.ensure_grad();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += self.grad[i] * (*na.value)[i];
    }
  });
}

Tensor scale(const Tensor& input, double factor) {
  const auto x = input.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = factor * x[i];
  return make_result(input.shape(), std::move(out), {input}, "scale", [factor](Node& self) {
    auto d = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += factor * self.grad[i];
  });
}

Tensor sum(const Tensor& input) {
  double s = 0.0;
  for (double v : input.data()) s += v;
  return make_result({1}, {s}, {input}, "sum", [](Node& self) {
    auto d = self.inputs[0]->ensure_grad();
    for (auto& v : d) v += self.grad[0];
  });
}

Tensor weighted_sum(const std::vector<Tensor>& terms, const std::vector<double>& factors) {
  if (terms.size() != factors.size() || terms.empty())
    throw std::invalid_argument("weighted_sum: need one factor per term");
  double s = 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (terms[i].numel() != 1) shape_error("weighted_sum", "terms must be scalars");
    s += factors[i] * terms[i].item();
  }
  return make_result({1}, {s}, terms, "weighted_sum", [factors](Node& self) {
    for (std::size_t i = 0; i < self.inputs.size(); ++i)
      if (self.inputs[i]->requires_grad) self.inputs[i]->ensure_grad()[0] += factors[i] * self.grad[0];
  });
}

}  // namespace motionnet::nn
