#include "motionnet/losses/losses.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include "motionnet/log.hpp"
#include "motionnet/nn/ops.hpp"

namespace motionnet::losses {

using nn::Node;
using nn::Tensor;

namespace {

void expect_grid(const char* op, const Tensor& t, const LabelBatch& labels, std::size_t channels) {
  const nn::Shape want{labels.batch, channels, labels.rows, labels.cols};
  if (t.shape() != want)
    throw std::invalid_argument(std::string(op) + ": prediction shape " + nn::shape_string(t.shape()) +
                                " does not match labels " + nn::shape_string(want));
}

void expect_same_layout(const char* op, const LabelBatch& a, const LabelBatch& b) {
  if (a.batch != b.batch || a.rows != b.rows || a.cols != b.cols || a.steps != b.steps)
    throw std::invalid_argument(std::string(op) + ": paired label batches differ in layout");
}

std::size_t count_nonempty(const LabelBatch& labels) {
  return static_cast<std::size_t>(std::count(labels.nonempty.begin(), labels.nonempty.end(), std::uint8_t{1}));
}

Tensor zero_loss(const char* op, const std::string& why) {
  log::warn(std::string(op) + ": " + why + "; loss defined as 0");
  return Tensor::scalar(0.0);
}

// Rotation of a 2-vector by yaw.
inline void rotate(double yaw, double x, double y, double& ox, double& oy) {
  const double c = std::cos(yaw), s = std::sin(yaw);
  ox = c * x - s * y;
  oy = s * x + c * y;
}

}  // namespace

LabelBatch make_label_batch(std::span<const sim::LabelGrids* const> labels, bool relative) {
  if (labels.empty()) throw std::invalid_argument("make_label_batch: empty batch");
  LabelBatch out;
  out.batch = labels.size();
  out.rows = labels[0]->rows;
  out.cols = labels[0]->cols;
  out.steps = labels[0]->steps;
  const std::size_t cells = out.cells(), n = out.steps;
  out.motion.assign(out.batch * 2 * n * cells, 0.0);
  for (std::size_t b = 0; b < out.batch; ++b) {
    const sim::LabelGrids& g = *labels[b];
    if (g.rows != out.rows || g.cols != out.cols || g.steps != out.steps)
      throw std::invalid_argument("make_label_batch: label grid " + std::to_string(b) + " differs in shape");
    out.category.insert(out.category.end(), g.category.begin(), g.category.end());
    out.instance.insert(out.instance.end(), g.instance.begin(), g.instance.end());
    out.state.insert(out.state.end(), g.state.begin(), g.state.end());
    out.nonempty.insert(out.nonempty.end(), g.nonempty.begin(), g.nonempty.end());
    const std::vector<double> src = relative ? g.relative_motion() : g.motion;
    double* dst = out.motion.data() + b * 2 * n * cells;
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t c = 0; c < cells; ++c)
        for (int k = 0; k < 2; ++k) dst[(2 * s + k) * cells + c] = src[(s * cells + c) * 2 + k];
  }
  return out;
}

std::vector<double> inverse_frequency_weights(std::span<const std::size_t> counts) {
  std::vector<double> w(counts.size(), 1.0);
  std::size_t total = 0, present = 0;
  for (auto c : counts) {
    total += c;
    present += c > 0;
  }
  if (present == 0) return w;
  // w_i = 1 / (present * f_i), so that sum_i f_i w_i = 1 before clipping.
  for (std::size_t i = 0; i < counts.size(); ++i)
    if (counts[i] > 0)
      w[i] = std::clamp(static_cast<double>(total) / (static_cast<double>(present) * static_cast<double>(counts[i])),
                        0.05, 50.0);
  return w;
}

void fit_weights(LossWeights& weights, std::span<const sim::LabelGrids* const> labels) {
  std::vector<std::size_t> cat(sim::kNumCategories, 0);
  std::array<std::size_t, 2> state{0, 0};
  for (const auto* g : labels)
    for (std::size_t c = 0; c < g->cells(); ++c) {
      if (!g->nonempty[c]) continue;
      ++cat.at(g->category[c]);
      ++state.at(g->state[c]);
    }
  weights.class_weights = inverse_frequency_weights(cat);
  weights.motion_weights = weights.class_weights;
  const auto sw = inverse_frequency_weights(state);
  weights.state_weights = {sw[0], sw[1]};
}

double smooth_l1(double e) {
  const double a = std::abs(e);
  return a < 1.0 ? 0.5 * e * e : a - 0.5;
}

double smooth_l1_grad(double e) {
  if (e >= 1.0) return 1.0;
  if (e <= -1.0) return -1.0;
  return e;
}

Tensor loss_cls(const Tensor& logits, const LabelBatch& labels, std::span<const double> class_weights) {
  const std::size_t classes = logits.rank() == 4 ? logits.dim(1) : 0;
  expect_grid("loss_cls", logits, labels, classes);
  if (class_weights.size() != classes)
    throw std::invalid_argument("loss_cls: " + std::to_string(class_weights.size()) + " class weights for " +
                                std::to_string(classes) + " classes");
  const std::size_t n = count_nonempty(labels);
  if (n == 0) return zero_loss("loss_cls", "no non-empty cells");
  const std::size_t cells = labels.cells();
  const auto x = logits.data();
  // Softmax probabilities are kept for the backward pass.
  auto prob = std::make_shared<std::vector<double>>(x.size(), 0.0);
  double total = 0.0;
  for (std::size_t b = 0; b < labels.batch; ++b)
    for (std::size_t c = 0; c < cells; ++c) {
      const std::size_t idx = b * cells + c;
      if (!labels.nonempty[idx]) continue;
      const std::size_t base = b * classes * cells + c;
      double mx = -INFINITY;
      for (std::size_t k = 0; k < classes; ++k) mx = std::max(mx, x[base + k * cells]);
      double z = 0.0;
      for (std::size_t k = 0; k < classes; ++k) z += std::exp(x[base + k * cells] - mx);
      const std::size_t y = labels.category[idx];
      if (y >= classes) throw std::invalid_argument("loss_cls: label " + std::to_string(y) + " out of range");
      for (std::size_t k = 0; k < classes; ++k) (*prob)[base + k * cells] = std::exp(x[base + k * cells] - mx) / z;
      total += class_weights[y] * (std::log(z) + mx - x[base + y * cells]);
    }
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> w(class_weights.begin(), class_weights.end());
  return nn::make_result({1}, {total * inv_n}, {logits}, "loss_cls",
                         [prob, w = std::move(w), cells, classes, inv_n,
                          category = labels.category, nonempty = labels.nonempty,
                          batch = labels.batch](Node& self) {
                           auto dx = self.inputs[0]->ensure_grad();
                           const double g = self.grad[0] * inv_n;
                           for (std::size_t b = 0; b < batch; ++b)
                             for (std::size_t c = 0; c < cells; ++c) {
                               const std::size_t idx = b * cells + c;
                               if (!nonempty[idx]) continue;
                               const std::size_t base = b * classes * cells + c;
                               const std::size_t y = category[idx];
                               const double wy = w[y] * g;
                               for (std::size_t k = 0; k < classes; ++k)
                                 dx[base + k * cells] += wy * ((*prob)[base + k * cells] - (k == y ? 1.0 : 0.0));
                             }
                         });
}

Tensor loss_state(const Tensor& static_logit, const LabelBatch& labels, std::array<double, 2> state_weights) {
  expect_grid("loss_state", static_logit, labels, 1);
  const std::size_t n = count_nonempty(labels);
  if (n == 0) return zero_loss("loss_state", "no non-empty cells");
  const auto x = static_logit.data();
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!labels.nonempty[i]) continue;
    const bool is_static = labels.state[i] == static_cast<std::uint8_t>(sim::MotionState::stationary);
    // -log sigmoid(z) = softplus(-z); -log(1 - sigmoid(z)) = softplus(z)
    const double z = is_static ? -x[i] : x[i];
    const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    total += state_weights[labels.state[i]] * softplus;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  return nn::make_result({1}, {total * inv_n}, {static_logit}, "loss_state",
                         [inv_n, state_weights, state = labels.state, nonempty = labels.nonempty](Node& self) {
                           auto dx = self.inputs[0]->ensure_grad();
                           const auto& x = *self.inputs[0]->value;
                           const double g = self.grad[0] * inv_n;
                           for (std::size_t i = 0; i < x.size(); ++i) {
                             if (!nonempty[i]) continue;
                             const double p = 1.0 / (1.0 + std::exp(-x[i]));
                             const double target =
                                 state[i] == static_cast<std::uint8_t>(sim::MotionState::stationary) ? 1.0 : 0.0;
                             dx[i] += g * state_weights[state[i]] * (p - target);
                           }
                         });
}

Tensor loss_motion(const Tensor& motion, const LabelBatch& labels, std::span<const double> category_weights) {
  expect_grid("loss_motion", motion, labels, 2 * labels.steps);
  if (category_weights.size() != static_cast<std::size_t>(sim::kNumCategories))
    throw std::invalid_argument("loss_motion: expected " + std::to_string(sim::kNumCategories) + " category weights");
  const std::size_t n = count_nonempty(labels);
  if (n == 0) return zero_loss("loss_motion", "no non-empty cells");
  const std::size_t cells = labels.cells(), ch = 2 * labels.steps;
  const auto x = motion.data();
  double total = 0.0;
  for (std::size_t b = 0; b < labels.batch; ++b)
    for (std::size_t c = 0; c < cells; ++c) {
      const std::size_t idx = b * cells + c;
      if (!labels.nonempty[idx]) continue;
      const double w = category_weights[labels.category[idx]];
      for (std::size_t k = 0; k < ch; ++k) {
        const std::size_t at = (b * ch + k) * cells + c;
        total += w * smooth_l1(x[at] - labels.motion[at]);
      }
    }
  const double inv = 1.0 / static_cast<double>(n * ch);
  std::vector<double> w(category_weights.begin(), category_weights.end());
  return nn::make_result({1}, {total * inv}, {motion}, "loss_motion",
                         [inv, w = std::move(w), cells, ch, batch = labels.batch, category = labels.category,
                          nonempty = labels.nonempty, target = labels.motion](Node& self) {
                           auto dx = self.inputs[0]->ensure_grad();
                           const auto& x = *self.inputs[0]->value;
                           const double g = self.grad[0] * inv;
                           for (std::size_t b = 0; b < batch; ++b)
                             for (std::size_t c = 0; c < cells; ++c) {
                               const std::size_t idx = b * cells + c;
                               if (!nonempty[idx]) continue;
                               const double wc = w[category[idx]] * g;
                               for (std::size_t k = 0; k < ch; ++k) {
                                 const std::size_t at = (b * ch + k) * cells + c;
                                 dx[at] += wc * smooth_l1_grad(x[at] - target[at]);
                               }
                             }
                         });
}

Tensor loss_spatial(const Tensor& motion, const LabelBatch& labels) {
  expect_grid("loss_spatial", motion, labels, 2 * labels.steps);
  const std::size_t rows = labels.rows, cols = labels.cols, cells = labels.cells(), ch = 2 * labels.steps;
  // Adjacent same-instance pairs (flat cell indices within one batch item).
  std::vector<std::array<std::size_t, 3>> pairs;  // b, cell a, cell b
  for (std::size_t b = 0; b < labels.batch; ++b)
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) {
        const std::size_t cell = r * cols + c;
        const std::int32_t id = labels.instance[b * cells + cell];
        if (id <= 0) continue;
        if (c + 1 < cols && labels.instance[b * cells + cell + 1] == id) pairs.push_back({b, cell, cell + 1});
        if (r + 1 < rows && labels.instance[b * cells + cell + cols] == id) pairs.push_back({b, cell, cell + cols});
      }
  const auto x = motion.data();
  double total = 0.0;
  for (const auto& [b, p, q] : pairs)
    for (std::size_t k = 0; k < ch; ++k) {
      const std::size_t base = (b * ch + k) * cells;
      total += smooth_l1(x[base + p] - x[base + q]);
    }
  const double inv_b = 1.0 / static_cast<double>(labels.batch);
  return nn::make_result({1}, {total * inv_b}, {motion}, "loss_spatial",
                         [pairs = std::move(pairs), inv_b, ch, cells](Node& self) {
                           auto dx = self.inputs[0]->ensure_grad();
                           const auto& x = *self.inputs[0]->value;
                           const double g = self.grad[0] * inv_b;
                           for (const auto& [b, p, q] : pairs)
                             for (std::size_t k = 0; k < ch; ++k) {
                               const std::size_t base = (b * ch + k) * cells;
                               const double d = g * smooth_l1_grad(x[base + p] - x[base + q]);
                               dx[base + p] += d;
                               dx[base + q] -= d;
                             }
                         });
}

namespace {

// Non-empty cells of each instance in one batch item.
std::map<std::int32_t, std::vector<std::size_t>> instance_cells(const LabelBatch& labels, std::size_t b) {
  std::map<std::int32_t, std::vector<std::size_t>> out;
  const std::size_t cells = labels.cells();
  for (std::size_t c = 0; c < cells; ++c) {
    const std::size_t idx = b * cells + c;
    if (labels.instance[idx] > 0 && labels.nonempty[idx]) out[labels.instance[idx]].push_back(c);
  }
  return out;
}

}  // namespace

Tensor loss_fg_temporal(const Tensor& motion_current, const Tensor& motion_shifted, const LabelBatch& current,
                        const LabelBatch& shifted, std::span<const geometry::Planar> relative,
                        TemporalDiagnostics* diagnostics) {
  expect_same_layout("loss_fg_temporal", current, shifted);
  expect_grid("loss_fg_temporal", motion_current, current, 2 * current.steps);
  expect_grid("loss_fg_temporal", motion_shifted, shifted, 2 * shifted.steps);
  if (relative.size() != current.batch) throw std::invalid_argument("loss_fg_temporal: one transform per pair needed");

  struct Match {
    std::size_t b;
    double yaw;
    std::vector<std::size_t> a, s;
  };
  std::vector<Match> matches;
  TemporalDiagnostics diag;
  for (std::size_t b = 0; b < current.batch; ++b) {
    auto ca = instance_cells(current, b);
    auto cs = instance_cells(shifted, b);
    for (auto& [id, cells_a] : ca) {
      auto it = cs.find(id);
      if (it == cs.end()) {
        ++diag.unmatched_objects;
        continue;
      }
      ++diag.matched_objects;
      matches.push_back({b, relative[b].yaw, std::move(cells_a), std::move(it->second)});
      cs.erase(it);
    }
    diag.unmatched_objects += cs.size();
  }
  if (diagnostics) *diagnostics = diag;

  const std::size_t cells = current.cells(), steps = current.steps, ch = 2 * steps;
  const auto xa = motion_current.data();
  const auto xs = motion_shifted.data();
  // Residual e = mean_a - R^-1 mean_s per (match, step, component).
  std::vector<double> resid(matches.size() * ch, 0.0);
  double total = 0.0;
  for (std::size_t m = 0; m < matches.size(); ++m) {
    const Match& mt = matches[m];
    for (std::size_t s = 0; s < steps; ++s) {
      double ma[2] = {0, 0}, ms[2] = {0, 0};
      for (int k = 0; k < 2; ++k) {
        const std::size_t base = (mt.b * ch + 2 * s + k) * cells;
        for (auto c : mt.a) ma[k] += xa[base + c];
        for (auto c : mt.s) ms[k] += xs[base + c];
        ma[k] /= static_cast<double>(mt.a.size());
        ms[k] /= static_cast<double>(mt.s.size());
      }
      double rx, ry;
      rotate(-mt.yaw, ms[0], ms[1], rx, ry);
      resid[m * ch + 2 * s] = ma[0] - rx;
      resid[m * ch + 2 * s + 1] = ma[1] - ry;
      total += smooth_l1(ma[0] - rx) + smooth_l1(ma[1] - ry);
    }
  }
  const double inv_b = 1.0 / static_cast<double>(current.batch);
  return nn::make_result(
      {1}, {total * inv_b}, {motion_current, motion_shifted}, "loss_fg_temporal",
      [matches = std::move(matches), resid = std::move(resid), inv_b, cells, steps, ch](Node& self) {
        Node& na = *self.inputs[0];
        Node& ns = *self.inputs[1];
        const double g = self.grad[0] * inv_b;
        for (std::size_t m = 0; m < matches.size(); ++m) {
          const auto& mt = matches[m];
          for (std::size_t s = 0; s < steps; ++s) {
            const double gx = g * smooth_l1_grad(resid[m * ch + 2 * s]);
            const double gy = g * smooth_l1_grad(resid[m * ch + 2 * s + 1]);
            if (na.requires_grad) {
              auto da = na.ensure_grad();
              const double inv = 1.0 / static_cast<double>(mt.a.size());
              for (auto c : mt.a) {
                da[(mt.b * ch + 2 * s) * cells + c] += gx * inv;
                da[(mt.b * ch + 2 * s + 1) * cells + c] += gy * inv;
              }
            }
            if (ns.requires_grad) {
              // d/dms of -(R^-1 ms) is -(R^-1)^T = -R.
              double rx, ry;
              rotate(mt.yaw, gx, gy, rx, ry);
              auto ds = ns.ensure_grad();
              const double inv = 1.0 / static_cast<double>(mt.s.size());
              for (auto c : mt.s) {
                ds[(mt.b * ch + 2 * s) * cells + c] -= rx * inv;
                ds[(mt.b * ch + 2 * s + 1) * cells + c] -= ry * inv;
              }
            }
          }
        }
      });
}

Tensor loss_bg_temporal(const Tensor& motion_current, const Tensor& motion_shifted, const LabelBatch& current,
                        const LabelBatch& shifted, std::span<const geometry::Planar> relative,
                        const bev::GridSpec& grid, TemporalDiagnostics* diagnostics) {
  expect_same_layout("loss_bg_temporal", current, shifted);
  expect_grid("loss_bg_temporal", motion_current, current, 2 * current.steps);
  expect_grid("loss_bg_temporal", motion_shifted, shifted, 2 * shifted.steps);
  if (relative.size() != current.batch) throw std::invalid_argument("loss_bg_temporal: one transform per pair needed");
  if (grid.rows() != current.rows || grid.cols() != current.cols)
    throw std::invalid_argument("loss_bg_temporal: grid does not match the label layout");

  struct Sample {
    std::size_t b, cell;
    double yaw;
    std::array<std::size_t, 4> corner;
    std::array<double, 4> weight;
    int count;
  };
  const std::size_t rows = current.rows, cols = current.cols, cells = current.cells();
  std::vector<Sample> samples;
  for (std::size_t b = 0; b < current.batch; ++b) {
    const geometry::Planar& tr = relative[b];
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) {
        const std::size_t cell = r * cols + c;
        if (!current.nonempty[b * cells + cell]) continue;
        const geometry::Vec2 p = tr.apply(geometry::Vec2(grid.cell_center_x(r), grid.cell_center_y(c)));
        const double u = (p.x() - grid.x_min) / grid.dx - 0.5;
        const double v = (p.y() - grid.y_min) / grid.dy - 0.5;
        const double fu0 = std::floor(u), fv0 = std::floor(v);
        const double fu = u - fu0, fv = v - fv0;
        Sample s{b, cell, tr.yaw, {}, {}, 0};
        bool ok = true;
        const double wts[4] = {(1 - fu) * (1 - fv), fu * (1 - fv), (1 - fu) * fv, fu * fv};
        const double di[4] = {0, 1, 0, 1}, dj[4] = {0, 0, 1, 1};
        for (int k = 0; k < 4 && ok; ++k) {
          if (wts[k] == 0.0) continue;
          const double ri = fu0 + di[k], cj = fv0 + dj[k];
          if (ri < 0 || cj < 0 || ri >= static_cast<double>(rows) || cj >= static_cast<double>(cols)) {
            ok = false;
            break;
          }
          const std::size_t q = static_cast<std::size_t>(ri) * cols + static_cast<std::size_t>(cj);
          if (!shifted.nonempty[b * cells + q]) {
            ok = false;
            break;
          }
          s.corner[s.count] = q;
          s.weight[s.count] = wts[k];
          ++s.count;
        }
        if (ok && s.count > 0) samples.push_back(s);
      }
  }
  if (diagnostics) {
    *diagnostics = {};
    diagnostics->overlap_cells = samples.size();
  }
  if (samples.empty()) return zero_loss("loss_bg_temporal", "no overlapping non-empty cells");

  const std::size_t steps = current.steps, ch = 2 * steps;
  const auto xa = motion_current.data();
  const auto xs = motion_shifted.data();
  std::vector<double> resid(samples.size() * ch);
  double total = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    for (std::size_t st = 0; st < steps; ++st) {
      double w[2] = {0, 0};
      for (int k = 0; k < 2; ++k) {
        const std::size_t base = (s.b * ch + 2 * st + k) * cells;
        for (int j = 0; j < s.count; ++j) w[k] += s.weight[j] * xs[base + s.corner[j]];
      }
      double rx, ry;
      rotate(-s.yaw, w[0], w[1], rx, ry);
      const double ex = xa[(s.b * ch + 2 * st) * cells + s.cell] - rx;
      const double ey = xa[(s.b * ch + 2 * st + 1) * cells + s.cell] - ry;
      resid[i * ch + 2 * st] = ex;
      resid[i * ch + 2 * st + 1] = ey;
      total += smooth_l1(ex) + smooth_l1(ey);
    }
  }
  const double inv_b = 1.0 / static_cast<double>(current.batch);
  return nn::make_result(
      {1}, {total * inv_b}, {motion_current, motion_shifted}, "loss_bg_temporal",
      [samples = std::move(samples), resid = std::move(resid), inv_b, cells, steps, ch](Node& self) {
        Node& na = *self.inputs[0];
        Node& ns = *self.inputs[1];
        const double g = self.grad[0] * inv_b;
        for (std::size_t i = 0; i < samples.size(); ++i) {
          const Sample& s = samples[i];
          for (std::size_t st = 0; st < steps; ++st) {
            const double gx = g * smooth_l1_grad(resid[i * ch + 2 * st]);
            const double gy = g * smooth_l1_grad(resid[i * ch + 2 * st + 1]);
            if (na.requires_grad) {
              auto da = na.ensure_grad();
              da[(s.b * ch + 2 * st) * cells + s.cell] += gx;
              da[(s.b * ch + 2 * st + 1) * cells + s.cell] += gy;
            }
            if (ns.requires_grad) {
              double rx, ry;
              rotate(s.yaw, gx, gy, rx, ry);
              auto ds = ns.ensure_grad();
              for (int j = 0; j < s.count; ++j) {
                ds[(s.b * ch + 2 * st) * cells + s.corner[j]] -= s.weight[j] * rx;
                ds[(s.b * ch + 2 * st + 1) * cells + s.corner[j]] -= s.weight[j] * ry;
              }
            }
          }
        }
      });
}

namespace {

void push(std::vector<Tensor>& terms, std::vector<double>& factors, const Tensor& t, double f) {
  if (t.defined()) {
    terms.push_back(t);
    factors.push_back(f);
  }
}

double value_of(const Tensor& t) { return t.defined() ? t.item() : 0.0; }

Tensor combine(std::vector<Tensor> terms, std::vector<double> factors) {
  if (terms.empty()) return Tensor::scalar(0.0);
  return nn::weighted_sum(terms, factors);
}

}  // namespace

Tensor total_loss(const LossTerms& t, const LossWeights& w) {
  std::vector<Tensor> terms;
  std::vector<double> factors;
  push(terms, factors, t.cls, 1.0);
  push(terms, factors, t.motion, 1.0);
  push(terms, factors, t.state, 1.0);
  push(terms, factors, t.spatial, w.alpha);
  push(terms, factors, t.fg_temporal, w.beta);
  push(terms, factors, t.bg_temporal, w.gamma);
  return combine(std::move(terms), std::move(factors));
}

std::array<Tensor, 3> task_losses(const LossTerms& t, const LossWeights& w) {
  std::array<Tensor, 3> out;
  {
    std::vector<Tensor> terms;
    std::vector<double> factors;
    push(terms, factors, t.cls, 1.0);
    out[0] = combine(std::move(terms), std::move(factors));
  }
  {
    std::vector<Tensor> terms;
    std::vector<double> factors;
    push(terms, factors, t.motion, 1.0);
    push(terms, factors, t.spatial, w.alpha);
    push(terms, factors, t.fg_temporal, w.beta);
    push(terms, factors, t.bg_temporal, w.gamma);
    out[1] = combine(std::move(terms), std::move(factors));
  }
  {
    std::vector<Tensor> terms;
    std::vector<double> factors;
    push(terms, factors, t.state, 1.0);
    out[2] = combine(std::move(terms), std::move(factors));
  }
  return out;
}

LossReport report(const LossTerms& t, const LossWeights& w) {
  LossReport r;
  r.cls = value_of(t.cls);
  r.motion = value_of(t.motion);
  r.state = value_of(t.state);
  r.spatial = value_of(t.spatial);
  r.fg_temporal = value_of(t.fg_temporal);
  r.bg_temporal = value_of(t.bg_temporal);
  r.total = r.cls + r.motion + r.state + w.alpha * r.spatial + w.beta * r.fg_temporal + w.gamma * r.bg_temporal;
  return r;
}

}  // namespace motionnet::losses
