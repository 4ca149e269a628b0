// Acceptance suite: one PASS/FAIL line per criterion. Usage: acceptance [--work DIR] [N ...]
// With no numbers every criterion runs. Exit status is non-zero when any selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "motionnet/bev/bev.hpp"
#include "motionnet/cli/config.hpp"
#include "motionnet/log.hpp"
#include "motionnet/losses/losses.hpp"
#include "motionnet/losses/mgda.hpp"
#include "motionnet/nn/binary_io.hpp"
#include "motionnet/nn/checkpoint.hpp"
#include "motionnet/nn/ops.hpp"
#include "motionnet/pipeline/ablation.hpp"
#include "motionnet/pipeline/baselines.hpp"
#include "motionnet/pipeline/dataset.hpp"
#include "motionnet/pipeline/evaluate.hpp"
#include "motionnet/pipeline/inference.hpp"
#include "motionnet/pipeline/train.hpp"
#include "motionnet/sim/clip_io.hpp"
#include "motionnet/sim/labels.hpp"
#include "motionnet/stpn/network.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace motionnet;
using nn::Tensor;

namespace {

fs::path g_work = "acceptance_work";

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    notes.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void say(const std::string& line) {
  std::printf("  %s\n", line.c_str());
  std::fflush(stdout);
}

cli::Config make_config(const std::vector<std::pair<std::string, std::string>>& overrides) {
  cli::Config c;
  for (const auto& [k, v] : overrides) cli::set_value(c, k, v);
  c.resolve();
  return c;
}

double value_or(const std::optional<double>& v, double fallback = NAN) { return v ? *v : fallback; }

// ---------------------------------------------------------------------------------------------
// 1. Oracle equivalence

Outcome criterion_oracles() {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  auto dim = [&](std::size_t lo, std::size_t hi) { return lo + rng() % (hi - lo + 1); };
  constexpr int kInstances = 50;

  double conv = 0.0, temporal = 0.0, pool = 0.0;
  for (int i = 0; i < kInstances; ++i) {
    const std::size_t B = dim(1, 2), C = dim(1, 4), O = dim(1, 4), k = 1 + 2 * dim(0, 1), H = dim(k, 9), W = dim(k, 9);
    const int stride = static_cast<int>(dim(1, 2)), pad = static_cast<int>(dim(0, k / 2 + 1));
    const auto x = oracle::random_tensor(rng, {B, C, H, W}, false);
    const auto w = oracle::random_tensor(rng, {O, C, k, k}, false);
    const auto b = oracle::random_tensor(rng, {O}, false);
    const std::vector<double> xv(x.data().begin(), x.data().end()), wv(w.data().begin(), w.data().end()),
        bv(b.data().begin(), b.data().end());
    const auto y = nn::conv2d(x, w, b, stride, pad);
    conv = std::max(conv, oracle::max_abs_diff(y.data(), oracle::conv2d(xv, B, C, H, W, wv, O, k, &bv, stride, pad)));

    const std::size_t T = dim(2, 6), kt = dim(2, T), HW = dim(1, 12);
    const auto xt = oracle::random_tensor(rng, {B, T, C, 1, HW}, false);
    const auto wt = oracle::random_tensor(rng, {O, C, kt}, false);
    const std::vector<double> xtv(xt.data().begin(), xt.data().end()), wtv(wt.data().begin(), wt.data().end());
    const auto yt = nn::conv_temporal(xt, wt, b);
    temporal =
        std::max(temporal, oracle::max_abs_diff(yt.data(), oracle::conv_temporal(xtv, B, T, C, HW, wtv, O, kt, &bv)));

    const auto yp = nn::temporal_max_pool(xt);
    pool = std::max(pool, oracle::max_abs_diff(yp.data(), oracle::temporal_max_pool(xtv, B, T, C * HW)));
  }
  out.check(conv <= 1e-12, "conv2d max abs deviation " + fmt("%.3g", conv));
  out.check(temporal <= 1e-12, "conv_temporal max abs deviation " + fmt("%.3g", temporal));
  out.check(pool <= 1e-12, "temporal_max_pool max abs deviation " + fmt("%.3g", pool));

  std::size_t voxel_mismatch = 0;
  for (int i = 0; i < kInstances; ++i) {
    // Dyadic extents keep bin edges exactly representable, so edge points have one right answer.
    auto u = [&] { return 0.25 * static_cast<double>(static_cast<int>(rng() % 5) - 2); };
    bev::GridSpec g{-2 + u(), 2 + u(), -1.5 + u(), 1.5 + u(), -1, 1 + u(),
                    0.25 + 0.25 * (rng() % 3), 0.25 + 0.25 * (rng() % 3), 0.25 + 0.25 * (rng() % 2)};
    std::uniform_real_distribution<double> px(g.x_min - 1, g.x_max + 1), py(g.y_min - 1, g.y_max + 1),
        pz(g.z_min - 0.5, g.z_max + 0.5);
    std::vector<geometry::Vec3> pts;
    for (int p = 0; p < 80; ++p) pts.emplace_back(px(rng), py(rng), pz(rng));
    // Points exactly on bin edges exercise the half-open rule.
    pts.emplace_back(g.x_min, g.y_min, g.z_min);
    pts.emplace_back(g.x_min + g.dx, g.y_min + 2 * g.dy, g.z_min + g.dz);
    voxel_mismatch += bev::voxelize(pts, g) != oracle::voxelize(pts, g);
  }
  out.check(voxel_mismatch == 0, "voxelize mismatching instances " + std::to_string(voxel_mismatch) + "/50");

  std::map<std::string, double> worst;
  int bg_nonzero = 0;
  for (int i = 0; i < kInstances; ++i) {
    const std::size_t B = dim(1, 2), H = dim(4, 8), W = dim(4, 8), N = dim(1, 3);
    const auto L = oracle::random_labels(rng, B, H, W, N);
    auto S = L;
    for (auto& v : S.nonempty)
      if (rng() % 10 == 0) v = !v;
    const double hx = 0.25 * static_cast<double>(H), hy = 0.25 * static_cast<double>(W);
    const bev::GridSpec lg{-hx, hx, -hy, hy, -1, 1, 0.5, 0.5, 1.0};
    const auto w = oracle::random_values(rng, 5, 0.2, 3.0);
    const std::array<double, 2> sw{0.2 + (rng() % 100) / 50.0, 0.2 + (rng() % 100) / 50.0};
    const auto logits = oracle::random_tensor(rng, {B, 5, H, W}, false);
    const auto logit = oracle::random_tensor(rng, {B, 1, H, W}, false);
    auto m = oracle::random_tensor(rng, {B, 2 * N, H, W}, false);
    auto ms = oracle::random_tensor(rng, {B, 2 * N, H, W}, false);
    for (auto& v : m.mutable_data()) v *= 2.0;
    for (auto& v : ms.mutable_data()) v *= 2.0;
    std::vector<geometry::Planar> rel;
    std::uniform_real_distribution<double> yaw(-0.1, 0.1), shift(-0.3, 0.3);
    for (std::size_t b = 0; b < B; ++b) rel.push_back({yaw(rng), geometry::Vec2(shift(rng), shift(rng))});
    auto track = [&](const std::string& name, double a, double b) {
      worst[name] = std::max(worst[name], std::abs(a - b));
    };
    track("loss_cls", losses::loss_cls(logits, L, w).item(), oracle::loss_cls(logits.data(), L, w));
    track("loss_state", losses::loss_state(logit, L, sw).item(), oracle::loss_state(logit.data(), L, sw));
    track("loss_motion", losses::loss_motion(m, L, w).item(), oracle::loss_motion(m.data(), L, w));
    track("loss_spatial", losses::loss_spatial(m, L).item(), oracle::loss_spatial(m.data(), L));
    track("loss_fg_temporal", losses::loss_fg_temporal(m, ms, L, S, rel).item(),
          oracle::loss_fg_temporal(m.data(), ms.data(), L, S, rel));
    const double bg = losses::loss_bg_temporal(m, ms, L, S, rel, lg).item();
    bg_nonzero += bg != 0.0;
    track("loss_bg_temporal", bg, oracle::loss_bg_temporal(m.data(), ms.data(), L, S, rel, lg));
  }
  out.check(bg_nonzero >= 40, "background temporal loss non-trivial on " + std::to_string(bg_nonzero) + "/50 instances");
  for (const auto& [name, dev] : worst) out.check(dev <= 1e-9, name + " max abs deviation " + fmt("%.3g", dev));

  const double secs = seconds_since(t0);
  out.check(secs < 60.0, "runtime " + fmt("%.1f", secs) + " s (< 60 s)");
  return out;
}

// ---------------------------------------------------------------------------------------------
// 2. Gradient suite

// Directional and sampled-coordinate finite differences for a function of many parameters. The
// directional part compares g.v with (f(x+hv) - f(x-hv)) / 2h along random unit directions v.
double sampled_gradient_error(const std::function<Tensor()>& f, const std::vector<Tensor>& leaves, int directions,
                              int coordinates, std::uint64_t seed, double h = 1e-6) {
  for (auto t : leaves) t.zero_grad();
  nn::backward(f());
  std::vector<std::vector<double>> grads;
  std::size_t total = 0;
  for (const auto& t : leaves) {
    grads.emplace_back(t.grad().begin(), t.grad().end());
    total += t.numel();
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> analytic, numeric;

  auto shift = [&](const std::vector<std::vector<double>>& v, double step) {
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      auto x = Tensor(leaves[i]).mutable_data();
      for (std::size_t j = 0; j < x.size(); ++j) x[j] += step * v[i][j];
    }
  };
  for (int d = 0; d < directions; ++d) {
    std::vector<std::vector<double>> v(leaves.size());
    double norm = 0.0;
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      v[i].resize(leaves[i].numel());
      for (auto& e : v[i]) {
        e = normal(rng);
        norm += e * e;
      }
    }
    norm = std::sqrt(norm);
    double dot = 0.0;
    for (std::size_t i = 0; i < leaves.size(); ++i)
      for (std::size_t j = 0; j < v[i].size(); ++j) {
        v[i][j] /= norm;
        dot += v[i][j] * grads[i][j];
      }
    // Keep a copy so the parameters return exactly to their starting values.
    std::vector<std::vector<double>> keep;
    for (const auto& t : leaves) keep.emplace_back(t.data().begin(), t.data().end());
    shift(v, h);
    const double fp = f().item();
    for (std::size_t i = 0; i < leaves.size(); ++i) std::copy(keep[i].begin(), keep[i].end(), Tensor(leaves[i]).mutable_data().begin());
    shift(v, -h);
    const double fm = f().item();
    for (std::size_t i = 0; i < leaves.size(); ++i) std::copy(keep[i].begin(), keep[i].end(), Tensor(leaves[i]).mutable_data().begin());
    analytic.push_back(dot);
    numeric.push_back((fp - fm) / (2 * h));
  }
  for (int c = 0; c < coordinates; ++c) {
    std::size_t flat = rng() % total, i = 0;
    while (flat >= leaves[i].numel()) flat -= leaves[i++].numel();
    auto x = Tensor(leaves[i]).mutable_data();
    const double keep = x[flat];
    x[flat] = keep + h;
    const double fp = f().item();
    x[flat] = keep - h;
    const double fm = f().item();
    x[flat] = keep;
    analytic.push_back(grads[i][flat]);
    numeric.push_back((fp - fm) / (2 * h));
  }
  double diff = 0.0, na = 0.0, nn_ = 0.0;
  for (std::size_t k = 0; k < analytic.size(); ++k) {
    diff += (analytic[k] - numeric[k]) * (analytic[k] - numeric[k]);
    na += analytic[k] * analytic[k];
    nn_ += numeric[k] * numeric[k];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn_), 1e-300});
}

Outcome criterion_gradients() {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(202);
  std::map<std::string, double> worst;
  auto record = [&](const std::string& name, double e) { worst[name] = std::max(worst[name], e); };

  for (int trial = 0; trial < 3; ++trial) {
    const auto x = oracle::random_tensor(rng, {2, 3, 6, 5});
    const auto w = oracle::random_tensor(rng, {4, 3, 3, 3});
    const auto b = oracle::random_tensor(rng, {4});
    record("conv2d", oracle::gradient_rel_error([&] { return oracle::probe(nn::conv2d(x, w, b, 1, 1), 1); }, {x, w, b}));
    record("conv2d stride 2",
           oracle::gradient_rel_error([&] { return oracle::probe(nn::conv2d(x, w, b, 2, 1), 2); }, {x, w, b}));

    const auto xt = oracle::random_tensor(rng, {2, 5, 3, 2, 3});
    const auto wt = oracle::random_tensor(rng, {4, 3, 3});
    record("conv_temporal",
           oracle::gradient_rel_error([&] { return oracle::probe(nn::conv_temporal(xt, wt, b), 3); }, {xt, wt, b}));
    record("temporal_max_pool",
           oracle::gradient_rel_error([&] { return oracle::probe(nn::temporal_max_pool(xt), 4); }, {xt}));

    const auto y = oracle::random_tensor(rng, {2, 3, 4, 4});
    const auto z = oracle::random_tensor(rng, {2, 2, 4, 4});
    record("upsample2x", oracle::gradient_rel_error([&] { return oracle::probe(nn::upsample2x(y), 5); }, {y}));
    record("relu", oracle::gradient_rel_error([&] { return oracle::probe(nn::relu(y), 6); }, {y}));
    record("concat_channels",
           oracle::gradient_rel_error([&] { return oracle::probe(nn::concat_channels(y, z), 7); }, {y, z}));
    const auto lw = oracle::random_tensor(rng, {5, 3});
    const auto lb = oracle::random_tensor(rng, {5});
    record("linear_lift",
           oracle::gradient_rel_error([&] { return oracle::probe(nn::linear_lift(y, lw, lb), 8); }, {y, lw, lb}));
    const auto gamma = oracle::random_tensor(rng, {3});
    const auto beta = oracle::random_tensor(rng, {3});
    Tensor rm = Tensor::zeros({3}), rv = Tensor::full({3}, 1.0);
    record("batch_norm2d (training)", oracle::gradient_rel_error(
                                          [&] { return oracle::probe(nn::batch_norm2d(y, gamma, beta, rm, rv, true), 9); },
                                          {y, gamma, beta}));
    record("batch_norm2d (inference)",
           oracle::gradient_rel_error([&] { return oracle::probe(nn::batch_norm2d(y, gamma, beta, rm, rv, false), 10); },
                                      {y, gamma, beta}));
    record("reshape", oracle::gradient_rel_error([&] { return oracle::probe(nn::reshape(y, {2, 48}), 11); }, {y}));
    record("slice_batch", oracle::gradient_rel_error([&] { return oracle::probe(nn::slice_batch(y, 1, 2), 12); }, {y}));
    const auto y2 = oracle::random_tensor(rng, {2, 3, 4, 4});
    record("add", oracle::gradient_rel_error([&] { return oracle::probe(nn::add(y, y2), 13); }, {y, y2}));
    record("mul", oracle::gradient_rel_error([&] { return oracle::probe(nn::mul(y, y2), 14); }, {y, y2}));
    record("scale", oracle::gradient_rel_error([&] { return oracle::probe(nn::scale(y, -1.7), 15); }, {y}));
    record("sum", oracle::gradient_rel_error([&] { return nn::sum(nn::mul(y, y)); }, {y}));
    const auto s1 = oracle::random_tensor(rng, {1}), s2 = oracle::random_tensor(rng, {1});
    record("weighted_sum", oracle::gradient_rel_error(
                               [&] { return nn::weighted_sum({nn::sum(nn::mul(s1, s2)), nn::sum(s2)}, {0.3, -2.0}); },
                               {s1, s2}));

    const std::size_t B = 2, H = 5, W = 6, N = 2;
    const auto L = oracle::random_labels(rng, B, H, W, N);
    auto S = L;
    for (auto& v : S.nonempty)
      if (rng() % 5 == 0) v = !v;
    const bev::GridSpec g{-1.25, 1.25, -1.5, 1.5, -1, 1, 0.5, 0.5, 1.0};
    const std::vector<geometry::Planar> rel{{0.1, geometry::Vec2(0.3, -0.2)}, {-0.15, geometry::Vec2(-0.4, 0.1)}};
    const auto cw = oracle::random_values(rng, 5, 0.2, 3.0);
    const auto logits = oracle::random_tensor(rng, {B, 5, H, W});
    const auto logit = oracle::random_tensor(rng, {B, 1, H, W});
    auto m = oracle::random_tensor(rng, {B, 2 * N, H, W});
    auto ms = oracle::random_tensor(rng, {B, 2 * N, H, W});
    for (auto& v : m.mutable_data()) v *= 2.5;
    for (auto& v : ms.mutable_data()) v *= 2.5;
    record("loss_cls", oracle::gradient_rel_error([&] { return losses::loss_cls(logits, L, cw); }, {logits}));
    record("loss_state", oracle::gradient_rel_error([&] { return losses::loss_state(logit, L, {0.6, 1.4}); }, {logit}));
    record("loss_motion", oracle::gradient_rel_error([&] { return losses::loss_motion(m, L, cw); }, {m}));
    record("loss_spatial", oracle::gradient_rel_error([&] { return losses::loss_spatial(m, L); }, {m}));
    record("loss_fg_temporal",
           oracle::gradient_rel_error([&] { return losses::loss_fg_temporal(m, ms, L, S, rel); }, {m, ms}));
    record("loss_bg_temporal",
           oracle::gradient_rel_error([&] { return losses::loss_bg_temporal(m, ms, L, S, rel, g); }, {m, ms}));
  }
  for (const auto& [name, e] : worst) out.check(e < 1e-6, name + " rel err " + fmt("%.2e", e));

  // Desk-scale network (default widths) on a 5x13x32x32 input, batch of two.
  stpn::StpnConfig config;
  stpn::Stpn model(config, 203);
  std::mt19937_64 prng(204);
  std::normal_distribution<double> noise(0.0, 0.05);
  // Output convolutions start at zero; perturb them so every path carries gradient.
  for (auto& p : model.parameters())
    if (p.name.find(".out.") != std::string::npos)
      for (auto& v : p.tensor.mutable_data()) v = noise(prng);
  Tensor input = oracle::random_tensor(prng, {2, 5, 13, 32, 32});
  for (auto& v : input.mutable_data()) v = v > 0.4 ? 1.0 : 0.0;
  std::vector<Tensor> leaves{input};
  std::size_t count = input.numel();
  for (const auto& p : model.parameters()) {
    leaves.push_back(p.tensor);
    count += p.tensor.numel();
  }
  auto f = [&] {
    const auto p = model.forward(input, true);
    return nn::weighted_sum({oracle::probe(p.class_logits, 21), oracle::probe(p.motion, 22), oracle::probe(p.static_logit, 23)},
                            {1.0, 1.0, 1.0});
  };
  const double net = sampled_gradient_error(f, leaves, 16, 48, 205);
  out.check(net < 1e-4, "full network (" + std::to_string(count) + " inputs+parameters, 16 random directions + 48 coordinates) rel err " +
                            fmt("%.2e", net));

  const double secs = seconds_since(t0);
  out.check(secs < 300.0, "runtime " + fmt("%.1f", secs) + " s (< 300 s)");
  return out;
}

// ---------------------------------------------------------------------------------------------
// 3. Shape and schedule contract

Outcome criterion_shapes() {
  Outcome out;
  stpn::StpnConfig desk;
  const auto t = desk.temporal_lengths();
  out.check(t == std::array<std::size_t, 4>{5, 3, 1, 1},
            "middle fusion T = (" + std::to_string(t[0]) + "," + std::to_string(t[1]) + "," + std::to_string(t[2]) +
                "," + std::to_string(t[3]) + ")");

  stpn::StpnConfig full_scale = desk;
  full_scale.steps = 20;
  full_scale.step_seconds = 0.05;
  stpn::Stpn model(full_scale, 301);
  nn::NoGradGuard guard;
  const Tensor input = Tensor::zeros({1, 5, 13, 256, 256});
  const auto p = model.forward(input, false);
  const auto decoded = pipeline::decode_prediction(p, 0, pipeline::InferenceOptions{});
  out.check(p.class_logits.shape() == nn::Shape{1, 5, 256, 256} && decoded.category.size() == 256u * 256u,
            "class head " + nn::shape_string(p.class_logits.shape()) + " -> (256,256,5)");
  out.check(p.motion.shape() == nn::Shape{1, 40, 256, 256} && decoded.steps == 20 &&
                decoded.displacement.size() == 20u * 256u * 256u * 2u,
            "motion head " + nn::shape_string(p.motion.shape()) + " -> (20,256,256,2)");
  out.check(p.static_logit.shape() == nn::Shape{1, 1, 256, 256} && decoded.static_prob.size() == 256u * 256u,
            "state head " + nn::shape_string(p.static_logit.shape()) + " -> (256,256)");
  return out;
}

// ---------------------------------------------------------------------------------------------
// 4. Ground-truth formula

sim::BoxTrack single_track(sim::BoxPose current, std::vector<sim::BoxPose> future, sim::BoxSize size) {
  sim::BoxTrack t;
  t.id = 1;
  t.size = size;
  t.current = current;
  t.future = std::move(future);
  return t;
}

double distance_to_box(double px, double py, const sim::BoxPose& b, const sim::BoxSize& s) {
  const double dx = px - b.x, dy = py - b.y;
  const double u = std::cos(b.yaw) * dx + std::sin(b.yaw) * dy;
  const double v = -std::sin(b.yaw) * dx + std::cos(b.yaw) * dy;
  return std::hypot(std::max(0.0, std::abs(u) - s.length / 2), std::max(0.0, std::abs(v) - s.width / 2));
}

Outcome criterion_ground_truth() {
  Outcome out;
  const bev::GridSpec grid;
  const sim::BoxSize size{3.0, 3.0, 1.5};
  // The cell centre (1.125, 0.125) sits at offset x = (1, 0) from the box centre (0.125, 0.125).
  const std::size_t cell = 36 * grid.cols() + 32;
  const sim::BoxPose c{0.125, 0.125, 0.0, 0.0};
  auto motion = [&](const sim::BoxPose& future) {
    const auto g = sim::derive_cell_gt(std::vector{single_track(c, {future}, size)}, 1, 1.0, grid, {});
    return std::pair{g.motion_at(0, cell, 0), g.motion_at(0, cell, 1)};
  };
  auto near = [](std::pair<double, double> a, double x, double y) {
    return std::abs(a.first - x) < 1e-12 && std::abs(a.second - y) < 1e-12;
  };
  const auto yaw90 = motion({0.625, 0.125, 0, std::numbers::pi / 2});
  out.check(near(yaw90, -0.5, 1.0), "yaw 90 deg, shift (0.5,0): motion (" + fmt("%.15g", yaw90.first) + ", " +
                                        fmt("%.15g", yaw90.second) + "), expected (-0.5, 1)");
  out.check(near(motion({0.625, -0.875, 0, 0}), 0.5, -1.0), "pure translation (0.5,-1)");
  out.check(near(motion(c), 0.0, 0.0), "stationary box gives zero motion");
  const double a = 0.3;
  const auto turned = motion({0.125, 0.125, 0, a});
  out.check(near(turned, std::cos(a) - 1.0, std::sin(a)), "rotation in place by 0.3 rad: R x - x");

  const double half_diag = 0.5 * std::hypot(grid.dx, grid.dy);
  std::mt19937_64 rng(401);
  std::uniform_real_distribution<double> pos(-5, 5), yaw(-3, 3), dpos(-3, 3), dyaw(-1, 1), len(0.6, 5);
  double worst = 0.0;
  std::size_t cells = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const sim::BoxPose cur{pos(rng), pos(rng), 0, yaw(rng)};
    std::vector<sim::BoxPose> future;
    for (int n = 1; n <= 4; ++n)
      future.push_back({cur.x + dpos(rng) * n / 4, cur.y + dpos(rng) * n / 4, 0, cur.yaw + dyaw(rng) * n / 4});
    const sim::BoxSize s{len(rng), len(rng), 1.5};
    const auto g = sim::derive_cell_gt(std::vector{single_track(cur, future, s)}, 4, 0.25, grid, {});
    for (std::size_t r = 0; r < g.rows; ++r)
      for (std::size_t col = 0; col < g.cols; ++col) {
        const std::size_t k = r * g.cols + col;
        if (g.instance[k] != 1) continue;
        ++cells;
        const double x = grid.cell_center_x(r) + g.motion_at(3, k, 0);
        const double y = grid.cell_center_y(col) + g.motion_at(3, k, 1);
        worst = std::max(worst, distance_to_box(x, y, future.back(), s));
      }
  }
  out.check(worst <= half_diag && cells > 0, "100 random actors (" + std::to_string(cells) +
                                                 " cells): worst distance to the horizon box " + fmt("%.3g", worst) +
                                                 " m (limit " + fmt("%.4f", half_diag) + ")");
  return out;
}

// ---------------------------------------------------------------------------------------------
// 5 and 7. End-to-end learning and jitter suppression

cli::Config learning_config() {
  return make_config({{"model.widths", "16,32,64,128"},
                      {"model.lift_channels", "16"},
                      {"model.head_channels", "16"},
                      {"loss.alpha", "0"},
                      {"loss.beta", "0"},
                      {"loss.gamma", "0"},
                      {"train.mgda", "true"},
                      {"train.lr", "0.003"},
                      {"train.batch_size", "4"},
                      {"train.epochs", "15"}});
}

struct LearnedModel {
  cli::Config config;
  pipeline::Splits splits;
  std::unique_ptr<stpn::Stpn> model;
  double train_seconds = 0.0;
  bool from_cache = false;
};

// Criterion 5 always trains; criterion 7 reuses its checkpoint when the config matches.
LearnedModel& learned_model(bool reuse) {
  static std::unique_ptr<LearnedModel> cached;
  if (cached) return *cached;
  cached = std::make_unique<LearnedModel>();
  auto& m = *cached;
  m.config = learning_config();
  const auto t0 = std::chrono::steady_clock::now();
  m.splits = pipeline::make_splits(m.config);
  say("generated " + std::to_string(m.splits.train.size()) + "/" + std::to_string(m.splits.val.size()) + "/" +
      std::to_string(m.splits.test.size()) + " clips in " + fmt("%.0f", seconds_since(t0)) + " s");
  m.model = std::make_unique<stpn::Stpn>(m.config.model_config(), pipeline::derive_seed(m.config.seed, 200, 0));

  const fs::path ckpt = g_work / "learning.ckpt", cfg = g_work / "learning.cfg", secs = g_work / "learning.seconds";
  const std::string text = cli::serialize_config(m.config);
  std::ifstream cfg_in(cfg);
  std::stringstream cfg_text;
  cfg_text << cfg_in.rdbuf();
  if (reuse && fs::exists(ckpt) && fs::exists(secs) && cfg_text.str() == text) {
    m.model->load(ckpt.string());
    std::ifstream(secs) >> m.train_seconds;
    m.from_cache = true;
    say("reusing the model trained by criterion 5 (" + ckpt.string() + ")");
    return m;
  }
  const auto t1 = std::chrono::steady_clock::now();
  std::ofstream log(g_work / "learning.log.csv");
  log << pipeline::training_log_header() << '\n';
  const auto result = pipeline::train(*m.model, m.splits.train, m.splits.val, m.config.train, m.config.loss,
                                      m.config.inference, pipeline::derive_seed(m.config.seed, 300, 0), &log);
  m.train_seconds = seconds_since(t1);
  say("trained " + std::to_string(result.steps) + " steps in " + fmt("%.0f", m.train_seconds) + " s, best epoch " +
      std::to_string(result.best_epoch));
  m.model->save(ckpt.string());
  std::ofstream(cfg) << text;
  std::ofstream(secs) << m.train_seconds;
  return m;
}

std::string group_text(const pipeline::EvalReport& r) {
  return "static " + fmt("%.3f", value_or(r.groups[0].mean)) + " slow " + fmt("%.3f", value_or(r.groups[1].mean)) +
         " fast " + fmt("%.3f", value_or(r.groups[2].mean));
}

Outcome criterion_learning() {
  Outcome out;
  auto& m = learned_model(false);
  const auto& test = m.splits.test;
  const auto report = pipeline::evaluate_model(*m.model, test, m.config.inference, m.config.eval, "motionnet");
  const auto turning = pipeline::evaluate_model(*m.model, test, m.config.inference, m.config.eval, "turning", true);
  pipeline::Evaluator stat, cv, cv_turn;
  for (const auto& s : test) {
    stat.add(pipeline::baseline_static(s.labels), s.labels);
    const auto lin = pipeline::baseline_const_velocity(s.labels, s.flow, s.flow_interval);
    cv.add(lin, s.labels);
    cv_turn.add(lin, s.labels, s.turning);
  }
  const auto rs = stat.report("static"), rc = cv.report("const_velocity"), rct = cv_turn.report("cv_turning");
  say("model:          " + group_text(report) + " OA " + fmt("%.4f", value_or(report.oa)) + " MCA " +
      fmt("%.4f", value_or(report.mca)));
  say("static model:   " + group_text(rs));
  say("const velocity: " + group_text(rc));
  std::ofstream(g_work / "learning_eval.csv") << pipeline::eval_csv(std::vector{report, turning, rs, rc, rct});

  out.check(test.size() == 50 && m.splits.train.size() == 200 && m.config.grid.rows() == 64 && m.config.grid.cols() == 64 &&
                m.config.model.steps == 4 && m.config.model.step_seconds == 0.25,
            "setup: 200 training clips, 50 held-out clips, 64x64 grid, N=4, 0.25 s steps");
  out.check(m.train_seconds <= 1800.0, "training time " + fmt("%.0f", m.train_seconds) + " s (<= 1800 s)");
  out.check(value_or(report.oa, 0.0) >= 0.9, "OA " + fmt("%.4f", value_or(report.oa, 0.0)) + " (>= 0.9)");
  const double fast = value_or(report.groups[2].mean), fast_static = value_or(rs.groups[2].mean);
  out.check(fast < fast_static, "fast-group mean error " + fmt("%.3f", fast) + " m vs static baseline " +
                                    fmt("%.3f", fast_static) + " m");
  const double turn = value_or(turning.groups[2].mean), turn_cv = value_or(rct.groups[2].mean);
  out.check(turn < turn_cv, "constant-turn actors, fast group at 1 s: " + fmt("%.3f", turn) +
                                " m vs constant-velocity baseline " + fmt("%.3f", turn_cv) + " m (" +
                                std::to_string(turning.groups[2].count) + " cells)");
  return out;
}

Outcome criterion_suppression() {
  Outcome out;
  auto& m = learned_model(true);
  pipeline::InferenceOptions on = m.config.inference, off = on;
  on.suppress_background = on.suppress_static = true;
  off.suppress_background = off.suppress_static = false;
  const auto r_on = pipeline::evaluate_model(*m.model, m.splits.test, on, m.config.eval, "suppressed");
  const auto r_off = pipeline::evaluate_model(*m.model, m.splits.test, off, m.config.eval, "raw");
  say("suppression on:  " + group_text(r_on));
  say("suppression off: " + group_text(r_off));
  const double s_on = value_or(r_on.groups[0].mean), s_off = value_or(r_off.groups[0].mean);
  out.check(s_on <= 0.5 * s_off, "static-group error " + fmt("%.4f", s_off) + " -> " + fmt("%.4f", s_on) + " (" +
                                     fmt("%.1f", 100.0 * (1.0 - s_on / s_off)) + "% reduction, need >= 50%)");
  for (int g : {1, 2}) {
    const double a = value_or(r_on.groups[g].mean), b = value_or(r_off.groups[g].mean);
    const double change = std::abs(a - b) / b;
    out.check(change < 0.10, std::string(g == 1 ? "slow" : "fast") + "-group error " + fmt("%.4f", b) + " -> " +
                                 fmt("%.4f", a) + " (" + fmt("%.1f", 100.0 * change) + "% change, need < 10%)");
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// 6. Spatial consistency

std::vector<std::pair<std::string, std::string>> small_setup() {
  return {{"grid.dx", "0.5"},          {"grid.dy", "0.5"},           {"model.widths", "8,16,32,64"},
          {"model.lift_channels", "8"}, {"model.head_channels", "8"}, {"train.batch_size", "8"},
          {"train.lr", "0.003"},        {"train.mgda", "true"},       {"loss.beta", "0"},
          {"loss.gamma", "0"},          {"data.val_clips", "0"}};
}

// Mean over object instances of the spread of predicted horizon displacement across the instance's
// non-empty cells: sqrt(mean ||d - mean d||^2).
double within_instance_std(stpn::Stpn& model, const std::vector<pipeline::Sample>& samples) {
  pipeline::InferenceOptions raw;
  raw.suppress_background = raw.suppress_static = false;
  std::vector<const bev::BEVSequence*> inputs;
  for (const auto& s : samples) inputs.push_back(&s.input);
  const auto outputs = pipeline::infer(model, inputs, raw);
  double total = 0.0;
  std::size_t instances = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& L = samples[i].labels;
    const auto& o = outputs[i];
    std::map<int, std::vector<std::size_t>> cells;
    for (std::size_t c = 0; c < L.cells(); ++c)
      if (L.nonempty[c] && L.instance[c] > 0) cells[L.instance[c]].push_back(c);
    for (const auto& [id, cs] : cells) {
      if (cs.size() < 2) continue;
      double mx = 0, my = 0;
      for (auto c : cs) {
        mx += o.at(o.steps - 1, c, 0);
        my += o.at(o.steps - 1, c, 1);
      }
      mx /= static_cast<double>(cs.size());
      my /= static_cast<double>(cs.size());
      double var = 0.0;
      for (auto c : cs) {
        const double dx = o.at(o.steps - 1, c, 0) - mx, dy = o.at(o.steps - 1, c, 1) - my;
        var += dx * dx + dy * dy;
      }
      total += std::sqrt(var / static_cast<double>(cs.size()));
      ++instances;
    }
  }
  return instances ? total / static_cast<double>(instances) : NAN;
}

Outcome criterion_spatial_consistency() {
  Outcome out;
  auto setup = small_setup();
  setup.insert(setup.end(), {{"data.train_clips", "60"}, {"data.test_clips", "20"}, {"train.epochs", "6"}, {"seed", "61"}});
  std::map<std::string, double> spread;
  for (const char* alpha : {"0", "15"}) {
    auto s = setup;
    s.emplace_back("loss.alpha", alpha);
    const auto config = make_config(s);
    const auto t0 = std::chrono::steady_clock::now();
    const auto splits = pipeline::make_splits(config);
    stpn::Stpn model(config.model_config(), pipeline::derive_seed(config.seed, 200, 0));
    pipeline::train(model, splits.train, splits.val, config.train, config.loss, config.inference,
                    pipeline::derive_seed(config.seed, 300, 0), nullptr);
    spread[alpha] = within_instance_std(model, splits.test);
    const auto r = pipeline::evaluate_model(model, splits.test, config.inference, config.eval);
    say("alpha=" + std::string(alpha) + ": mean within-instance std " + fmt("%.4f", spread[alpha]) + " m, " +
        group_text(r) + " (" + fmt("%.0f", seconds_since(t0)) + " s)");
  }
  const double reduction = 1.0 - spread["15"] / spread["0"];
  out.check(reduction >= 0.2, "alpha=15 vs alpha=0: within-instance std " + fmt("%.4f", spread["0"]) + " -> " +
                                  fmt("%.4f", spread["15"]) + " (" + fmt("%.1f", 100.0 * reduction) +
                                  "% reduction, need >= 20%)");
  return out;
}

// ---------------------------------------------------------------------------------------------
// 8. Synchronisation ablation

Outcome criterion_sync() {
  Outcome out;
  int worse = 0;
  for (int seed = 1; seed <= 10; ++seed) {
    std::map<std::string, double> fast;
    for (const char* sync : {"gt", "none"}) {
      auto s = small_setup();
      s.insert(s.end(), {{"data.train_clips", "64"},
                         {"data.test_clips", "24"},
                         {"train.epochs", "12"},
                         {"loss.alpha", "0"},
                         {"scenario.ego_speed_min", "6"},
                         {"scenario.ego_speed_max", "12"},
                         {"scenario.ego_yaw_rate_max", "0.3"},
                         {"sync", sync},
                         {"seed", std::to_string(800 + seed)}});
      const auto config = make_config(s);
      const auto splits = pipeline::make_splits(config);
      stpn::Stpn model(config.model_config(), pipeline::derive_seed(config.seed, 200, 0));
      pipeline::train(model, splits.train, splits.val, config.train, config.loss, config.inference,
                      pipeline::derive_seed(config.seed, 300, 0), nullptr);
      fast[sync] = value_or(pipeline::evaluate_model(model, splits.test, config.inference, config.eval).groups[2].mean);
    }
    const bool w = fast["none"] > fast["gt"];
    worse += w;
    say("seed " + std::to_string(seed) + ": fast error GT Synch " + fmt("%.3f", fast["gt"]) + ", No Synch " +
        fmt("%.3f", fast["none"]) + (w ? "" : "  (not worse)"));
  }
  out.check(worse >= 9, "No Synch worse in " + std::to_string(worse) + "/10 seeds (need >= 9)");
  return out;
}

// ---------------------------------------------------------------------------------------------
// 9. Multiple-gradient descent

Outcome criterion_mgda() {
  Outcome out;
  const auto config = make_config({{"grid.x_min", "-4"},
                                   {"grid.x_max", "4"},
                                   {"grid.y_min", "-4"},
                                   {"grid.y_max", "4"},
                                   {"grid.dx", "0.5"},
                                   {"grid.dy", "0.5"},
                                   {"scenario.region", "7"},
                                   {"model.widths", "4,4,8,8"},
                                   {"model.lift_channels", "4"},
                                   {"model.head_channels", "4"},
                                   {"data.train_clips", "20"},
                                   {"data.val_clips", "0"},
                                   {"data.test_clips", "0"},
                                   {"train.batch_size", "2"},
                                   {"train.epochs", "10"},
                                   {"train.max_steps", "100"},
                                   {"train.mgda", "true"},
                                   {"seed", "91"}});
  const auto splits = pipeline::make_splits(config);
  stpn::Stpn model(config.model_config(), 92);
  const auto result =
      pipeline::train(model, splits.train, splits.val, config.train, config.loss, config.inference, 93, nullptr);
  std::size_t off_simplex = 0, above_uniform = 0;
  double worst_margin = -INFINITY;
  for (const auto& step : result.mgda_steps) {
    double sum = 0.0;
    bool negative = false;
    for (double w : step.weights) {
      sum += w;
      negative |= w < 0.0;
    }
    off_simplex += negative || std::abs(sum - 1.0) > 1e-9;
    above_uniform += step.norm > step.uniform_norm;
    worst_margin = std::max(worst_margin, step.norm - step.uniform_norm);
  }
  out.check(result.mgda_steps.size() == 100, std::to_string(result.mgda_steps.size()) + " weighted training steps");
  out.check(off_simplex == 0, "weights off the simplex on " + std::to_string(off_simplex) + " steps");
  out.check(above_uniform == 0, "combined norm above the uniform-weight norm on " + std::to_string(above_uniform) +
                                    " steps (largest norm - uniform " + fmt("%.3g", worst_margin) + ")");

  std::mt19937_64 rng(94);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<double>> g(3);
    const std::size_t d = 2 + rng() % 30;
    for (auto& v : g) v = oracle::random_values(rng, d);
    const auto r = losses::mgda_weights(g);
    double best = INFINITY;
    for (int i = 0; i <= 100; ++i)
      for (int j = 0; i + j <= 100; ++j)
        best = std::min(best, losses::combined_norm(g, std::vector<double>{i / 100.0, j / 100.0, (100 - i - j) / 100.0}));
    worst = std::max(worst, std::abs(r.norm - best));
  }
  out.check(worst <= 1e-3, "min-norm vs 0.01 simplex grid on 20 cases: worst |difference| " + fmt("%.2e", worst));
  return out;
}

// ---------------------------------------------------------------------------------------------
// 10. Determinism and formats

std::vector<std::uint8_t> file_bytes(const fs::path& p) { return io::read_file(p); }

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MOTIONNET_CLI_PATH) + " " + args;
  return std::system(cmd.c_str());
}

Outcome criterion_determinism() {
  Outcome out;
  const std::string tiny =
      " --set grid.x_min=-4 --set grid.x_max=4 --set grid.y_min=-4 --set grid.y_max=4 --set grid.dx=0.5"
      " --set grid.dy=0.5 --set scenario.region=7 --set model.widths=4,4,8,8 --set model.lift_channels=4"
      " --set model.head_channels=4 --set data.train_clips=6 --set data.val_clips=2 --set data.test_clips=3"
      " --set train.epochs=2 --set train.batch_size=2 --set loss.beta=2.5 --set loss.gamma=0.1 --quiet";
  std::map<std::string, std::vector<std::uint8_t>> first;
  bool all_equal = true;
  for (const char* run : {"a", "b"}) {
    const fs::path dir = g_work / "determinism" / run;
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string d = dir.string();
    int rc = run_cli("gen-data --out " + d + "/data --seed 17" + tiny);
    rc |= run_cli("train --data " + d + "/data --out " + d + "/model.ckpt --quiet");
    rc |= run_cli("infer --ckpt " + d + "/model.ckpt --clip " + d + "/data/test/clip_00000.mnclip --out " + d +
                  "/out.mnout --quiet");
    rc |= run_cli("eval --ckpt " + d + "/model.ckpt --data " + d + "/data --report " + d + "/eval.csv --name tiny --quiet");
    out.check(rc == 0, std::string("run ") + run + ": command-line pipeline exit status");
    if (rc != 0) return out;
    for (const char* f : {"model.ckpt", "out.mnout", "eval.csv", "model.ckpt.log.csv", "data/test/clip_00000.mnclip"}) {
      const auto bytes = file_bytes(dir / f);
      if (std::string(run) == "a")
        first[f] = bytes;
      else {
        const bool same = bytes == first[f];
        all_equal = all_equal && same;
        out.check(same, std::string(f) + " bit-identical across runs (" + std::to_string(bytes.size()) + " bytes)");
      }
    }
  }

  const fs::path a = g_work / "determinism" / "a";
  // Checkpoint: load, re-save, compare; corrupted payload must be rejected by the checksum.
  const auto ckpt = file_bytes(a / "model.ckpt");
  const auto entries = nn::load_checkpoint((a / "model.ckpt").string());
  nn::save_checkpoint((a / "resaved.ckpt").string(), entries);
  out.check(file_bytes(a / "resaved.ckpt") == ckpt, "checkpoint round trip is byte-exact");
  auto corrupt = ckpt;
  corrupt[corrupt.size() / 2] ^= 0x01;
  io::write_file(a / "corrupt.ckpt", corrupt);
  bool rejected = false;
  try {
    nn::load_checkpoint((a / "corrupt.ckpt").string());
  } catch (const std::exception&) {
    rejected = true;
  }
  out.check(rejected, "checkpoint with one flipped bit is rejected by its checksum");

  const auto clip = file_bytes(a / "data/test/clip_00000.mnclip");
  const auto clip_again = sim::encode_clip(sim::decode_clip(clip));
  out.check(io::fnv1a64(clip_again) == io::fnv1a64(clip) && clip_again == clip,
            "clip round trip: FNV-1a " + std::to_string(io::fnv1a64(clip)) + " reproduced");
  const auto dump = file_bytes(a / "out.mnout");
  const auto dump_again = pipeline::encode_output(pipeline::decode_output(dump));
  out.check(io::fnv1a64(dump_again) == io::fnv1a64(dump) && dump_again == dump,
            "inference dump round trip: FNV-1a " + std::to_string(io::fnv1a64(dump)) + " reproduced");
  return out;
}

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--work" && i + 1 < argc)
      g_work = argv[++i];
    else
      selected.push_back(std::atoi(a.c_str()));
  }
  fs::create_directories(g_work);
  // Degenerate random loss instances legitimately warn; keep the report readable.
  log::set_level(log::Level::error);

  const std::vector<Criterion> criteria{
      {1, "oracle equivalence", criterion_oracles},
      {2, "gradient suite", criterion_gradients},
      {3, "shape/schedule contract", criterion_shapes},
      {4, "ground-truth formula", criterion_ground_truth},
      {5, "end-to-end learning", criterion_learning},
      {6, "consistency-loss effect", criterion_spatial_consistency},
      {7, "jitter suppression", criterion_suppression},
      {8, "sync ablation", criterion_sync},
      {9, "MGDA", criterion_mgda},
      {10, "determinism and formats", criterion_determinism},
  };
  bool all = true;
  for (const auto& c : criteria) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
    std::printf("criterion %d (%s)\n", c.id, c.title);
    std::fflush(stdout);
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    for (const auto& n : o.notes) say(n);
    std::printf("criterion %d: %s (%.1f s)\n", c.id, o.pass ? "PASS" : "FAIL", seconds_since(t0));
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
