#include "motionnet/pipeline/inference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <thread>
#include <sstream>
#include <stdexcept>

#include "motionnet/nn/binary_io.hpp"
#include "motionnet/nn/ops.hpp"
#include "motionnet/sim/scenario.hpp"

namespace motionnet::pipeline {

std::vector<double> accumulate_displacement(std::span<const double> relative, std::size_t steps) {
  if (steps == 0 || relative.size() % steps != 0)
    throw std::invalid_argument("accumulate_displacement: size is not a multiple of the step count");
  const std::size_t plane = relative.size() / steps;
  std::vector<double> out(relative.begin(), relative.end());
  for (std::size_t n = 1; n < steps; ++n)
    for (std::size_t i = 0; i < plane; ++i) out[n * plane + i] += out[(n - 1) * plane + i];
  return out;
}

void suppress_jitter(InferenceOutput& out, const InferenceOptions& options) {
  const std::size_t cells = out.cells();
  for (std::size_t c = 0; c < cells; ++c) {
    const bool bg = options.suppress_background && out.category[c] == 0;
    const bool still = options.suppress_static && out.static_prob[c] > options.static_threshold;
    if (!bg && !still) continue;
    for (std::size_t n = 0; n < out.steps; ++n) {
      out.displacement[(n * cells + c) * 2] = 0.0;
      out.displacement[(n * cells + c) * 2 + 1] = 0.0;
    }
  }
}

InferenceOutput decode_prediction(const stpn::Prediction& p, std::size_t b, const InferenceOptions& options) {
  const nn::Tensor& logits = p.class_logits;
  if (b >= logits.dim(0)) throw std::out_of_range("decode_prediction: batch index out of range");
  InferenceOutput out;
  out.categories = logits.dim(1);
  out.rows = logits.dim(2);
  out.cols = logits.dim(3);
  out.steps = p.motion.dim(1) / 2;
  const std::size_t cells = out.cells(), classes = out.categories, n = out.steps;

  const double* x = logits.data().data() + b * classes * cells;
  out.category.resize(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < classes; ++k)
      if (x[k * cells + c] > x[best * cells + c]) best = k;
    out.category[c] = static_cast<std::uint8_t>(best);
  }

  out.static_prob.assign(cells, 0.0);
  if (p.static_logit.defined()) {
    const double* s = p.static_logit.data().data() + b * cells;
    for (std::size_t c = 0; c < cells; ++c) out.static_prob[c] = 1.0 / (1.0 + std::exp(-s[c]));
  }

  const double* m = p.motion.data().data() + b * 2 * n * cells;
  std::vector<double> raw(n * cells * 2);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t c = 0; c < cells; ++c)
      for (int k = 0; k < 2; ++k) raw[(s * cells + c) * 2 + k] = m[(2 * s + k) * cells + c];
  out.displacement = p.relative ? accumulate_displacement(raw, n) : std::move(raw);
  suppress_jitter(out, options);
  return out;
}

std::size_t worker_count() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("MN_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) n = static_cast<std::size_t>(v);
  }
  return n;
}

std::vector<InferenceOutput> infer(stpn::Stpn& model, std::span<const bev::BEVSequence* const> inputs,
                                   const InferenceOptions& options, std::size_t batch_size) {
  if (batch_size == 0) throw std::invalid_argument("infer: batch size must be positive");
  std::vector<InferenceOutput> outputs(inputs.size());
  const std::size_t batches = (inputs.size() + batch_size - 1) / batch_size;
  auto run = [&](std::size_t first, std::size_t stride) {
    nn::NoGradGuard guard;
    for (std::size_t k = first; k < batches; k += stride) {
      const std::size_t begin = k * batch_size, end = std::min(inputs.size(), begin + batch_size);
      const nn::Tensor x = bev::to_tensor(inputs.subspan(begin, end - begin));
      const stpn::Prediction p = model.forward(x, false);
      for (std::size_t b = 0; b < end - begin; ++b) outputs[begin + b] = decode_prediction(p, b, options);
    }
  };
  const std::size_t workers = std::min(worker_count(), batches);
  if (workers <= 1) {
    run(0, 1);
    return outputs;
  }
  // Batches are disjoint and the model is read-only in inference mode, so the result does not
  // depend on the worker count.
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        run(w, workers);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return outputs;
}

InferenceOutput infer(stpn::Stpn& model, const bev::BEVSequence& input, const InferenceOptions& options) {
  const bev::BEVSequence* one[] = {&input};
  return std::move(infer(model, one, options, 1).front());
}

namespace {
constexpr std::string_view kMagic = "MNOUT001";
}

std::vector<std::uint8_t> encode_output(const InferenceOutput& out) {
  io::ByteWriter w;
  w.bytes(kMagic);
  w.u32(static_cast<std::uint32_t>(out.rows));
  w.u32(static_cast<std::uint32_t>(out.cols));
  w.u32(static_cast<std::uint32_t>(out.steps));
  w.u32(static_cast<std::uint32_t>(out.categories));
  for (auto c : out.category) w.u8(c);
  for (double p : out.static_prob) w.f32(static_cast<float>(p));
  for (double d : out.displacement) w.f32(static_cast<float>(d));
  return std::move(w.buffer());
}

InferenceOutput decode_output(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  r.expect_magic(kMagic, "inference output");
  InferenceOutput out;
  out.rows = r.u32();
  out.cols = r.u32();
  out.steps = r.u32();
  out.categories = r.u32();
  const std::size_t cells = out.cells();
  r.require(cells + cells * 4 + out.steps * cells * 8, "inference output grids");
  out.category.resize(cells);
  for (auto& c : out.category) {
    const std::size_t at = r.offset();
    c = r.u8();
    if (c >= out.categories) throw io::FormatError("inference output: category out of range", at);
  }
  out.static_prob.resize(cells);
  for (auto& p : out.static_prob) p = r.f32();
  out.displacement.resize(out.steps * cells * 2);
  for (auto& d : out.displacement) d = r.f32();
  if (r.remaining() != 0) throw io::FormatError("inference output: trailing bytes", r.offset());
  return out;
}

void save_output(const std::filesystem::path& path, const InferenceOutput& output) {
  io::write_file(path, encode_output(output));
}

InferenceOutput load_output(const std::filesystem::path& path) { return decode_output(io::read_file(path)); }

std::string output_summary_csv(const InferenceOutput& out) {
  std::ostringstream os;
  os << "category,cells,moving_cells,mean_horizon_displacement\n";
  const std::size_t cells = out.cells();
  for (std::size_t k = 0; k < out.categories; ++k) {
    std::size_t count = 0, moving = 0;
    double sum = 0.0;
    for (std::size_t c = 0; c < cells; ++c) {
      if (out.category[c] != k) continue;
      ++count;
      const double d = out.steps ? std::hypot(out.at(out.steps - 1, c, 0), out.at(out.steps - 1, c, 1)) : 0.0;
      sum += d;
      moving += d > 0.0;
    }
    os << (k < static_cast<std::size_t>(sim::kNumCategories) ? std::string(sim::category_name(static_cast<sim::Category>(k)))
                                                              : std::to_string(k))
       << ',' << count << ',' << moving << ',' << (count ? sum / static_cast<double>(count) : 0.0) << '\n';
  }
  return os.str();
}

}  // namespace motionnet::pipeline
