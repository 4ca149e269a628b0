#include "motionnet/pipeline/ablation.hpp"

#include <stdexcept>

#include "motionnet/pipeline/train.hpp"

namespace motionnet::pipeline {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::vector<AblationAxis> parse_matrix(std::string_view text) {
  std::vector<AblationAxis> axes;
  std::size_t start = 0, line_no = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    std::string_view line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("matrix line " + std::to_string(line_no) + ": expected key = v1, v2, ...");
    AblationAxis axis;
    axis.key = trim(std::string_view(t).substr(0, eq));
    std::string_view rest = std::string_view(t).substr(eq + 1);
    std::size_t s = 0;
    while (true) {
      const auto comma = rest.find(',', s);
      const std::string v = trim(rest.substr(s, comma == std::string_view::npos ? std::string_view::npos : comma - s));
      if (v.empty()) throw std::invalid_argument("matrix line " + std::to_string(line_no) + ": empty value");
      axis.values.push_back(v);
      if (comma == std::string_view::npos) break;
      s = comma + 1;
    }
    // Reject unknown keys and malformed values up front.
    cli::Config probe;
    for (const auto& v : axis.values) {
      try {
        cli::set_value(probe, axis.key, v);
      } catch (const std::invalid_argument& e) {
        throw std::invalid_argument("matrix line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    axes.push_back(std::move(axis));
  }
  if (axes.empty()) throw std::invalid_argument("matrix: no axes");
  return axes;
}

std::vector<std::vector<std::pair<std::string, std::string>>> expand_matrix(const std::vector<AblationAxis>& axes) {
  std::vector<std::vector<std::pair<std::string, std::string>>> cells{{}};
  for (const auto& axis : axes) {
    std::vector<std::vector<std::pair<std::string, std::string>>> next;
    for (const auto& c : cells)
      for (const auto& v : axis.values) {
        auto e = c;
        e.emplace_back(axis.key, v);
        next.push_back(std::move(e));
      }
    cells = std::move(next);
  }
  return cells;
}

Splits make_splits(const cli::Config& config) {
  const auto options = config.sample_options();
  const bool pairs = config.train.use_pairs && (config.loss.beta > 0 || config.loss.gamma > 0);
  Splits s;
  auto make = [&](std::size_t count, std::uint64_t stream, bool with_pairs) {
    const auto clips = generate_clip_pairs(config.source, count, derive_seed(config.seed, 100, stream));
    return make_samples(clips, options, with_pairs);
  };
  s.train = make(config.data.train_clips, 0, pairs);
  s.val = make(config.data.val_clips, 1, false);
  s.test = make(config.data.test_clips, 2, false);
  return s;
}

std::vector<EvalReport> ablation_run(const cli::Config& base, const std::vector<AblationAxis>& axes,
                                     const std::function<void(const EvalReport&)>& on_row) {
  std::vector<EvalReport> rows;
  for (const auto& cell : expand_matrix(axes)) {
    cli::Config config = base;
    std::string name;
    for (const auto& [k, v] : cell) {
      cli::set_value(config, k, v);
      name += (name.empty() ? "" : ";") + k + "=" + v;
    }
    config.resolve();
    const Splits data = make_splits(config);
    stpn::Stpn model(config.model_config(), derive_seed(config.seed, 200, 0));
    train(model, data.train, data.val, config.train, config.loss, config.inference, derive_seed(config.seed, 300, 0));
    rows.push_back(evaluate_model(model, data.test, config.inference, config.eval, name));
    if (on_row) on_row(rows.back());
  }
  return rows;
}

}  // namespace motionnet::pipeline
