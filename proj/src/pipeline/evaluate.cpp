#include "motionnet/pipeline/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace motionnet::pipeline {

SpeedGroup speed_group(double speed, double static_speed) {
  if (speed < static_speed) return SpeedGroup::static_cells;
  return speed <= kSlowSpeedLimit ? SpeedGroup::slow : SpeedGroup::fast;
}

void Evaluator::add(const InferenceOutput& out, const sim::LabelGrids& labels, std::span<const std::uint8_t> mask) {
  if (out.rows != labels.rows || out.cols != labels.cols || out.steps != labels.steps)
    throw std::invalid_argument("evaluate: output grid " + std::to_string(out.steps) + "x" + std::to_string(out.rows) +
                                "x" + std::to_string(out.cols) + " does not match labels " +
                                std::to_string(labels.steps) + "x" + std::to_string(labels.rows) + "x" +
                                std::to_string(labels.cols));
  if (labels.steps == 0) throw std::invalid_argument("evaluate: labels have no prediction steps");
  const std::size_t cells = labels.cells();
  if (!mask.empty() && mask.size() != cells) throw std::invalid_argument("evaluate: mask does not match the grid");
  const std::size_t last = labels.steps - 1;
  const double horizon = static_cast<double>(labels.steps) * labels.step_seconds;
  for (std::size_t c = 0; c < cells; ++c) {
    if (!labels.nonempty[c]) continue;
    ++nonempty_;
    const std::uint8_t gt = labels.category[c];
    ++seen_.at(gt);
    correct_[gt] += out.category[c] == gt;
    if (!mask.empty() && !mask[c]) continue;

    const double speed = std::hypot(labels.motion_at(last, c, 0), labels.motion_at(last, c, 1)) / horizon;
    double err = 0.0;
    if (options_.all_steps) {
      for (std::size_t n = 0; n <= last; ++n)
        err += std::hypot(out.at(n, c, 0) - labels.motion_at(n, c, 0), out.at(n, c, 1) - labels.motion_at(n, c, 1));
      err /= static_cast<double>(labels.steps);
    } else {
      err = std::hypot(out.at(last, c, 0) - labels.motion_at(last, c, 0),
                       out.at(last, c, 1) - labels.motion_at(last, c, 1));
    }
    errors_[static_cast<int>(speed_group(speed, options_.static_speed))].push_back(err);
  }
}

EvalReport Evaluator::report(std::string name) const {
  EvalReport r;
  r.name = std::move(name);
  for (int g = 0; g < 3; ++g) {
    std::vector<double> e = errors_[g];
    r.groups[g].count = e.size();
    if (e.empty()) continue;
    double sum = 0.0;
    for (double v : e) sum += v;
    r.groups[g].mean = sum / static_cast<double>(e.size());
    std::sort(e.begin(), e.end());
    const std::size_t m = e.size() / 2;
    r.groups[g].median = e.size() % 2 ? e[m] : 0.5 * (e[m - 1] + e[m]);
  }
  std::size_t correct = 0, seen = 0, present = 0;
  double acc_sum = 0.0;
  for (int k = 0; k < sim::kNumCategories; ++k) {
    correct += correct_[k];
    seen += seen_[k];
    if (seen_[k] == 0) continue;
    r.category_accuracy[k] = static_cast<double>(correct_[k]) / static_cast<double>(seen_[k]);
    acc_sum += *r.category_accuracy[k];
    ++present;
  }
  if (present) r.mca = acc_sum / static_cast<double>(present);
  if (seen) r.oa = static_cast<double>(correct) / static_cast<double>(seen);
  r.nonempty_count = nonempty_;
  return r;
}

EvalReport evaluate(std::span<const InferenceOutput> outputs, std::span<const sim::LabelGrids> labels,
                    const EvalOptions& options, std::string name) {
  if (outputs.size() != labels.size()) throw std::invalid_argument("evaluate: one label set per output required");
  Evaluator ev(options);
  for (std::size_t i = 0; i < outputs.size(); ++i) ev.add(outputs[i], labels[i]);
  return ev.report(std::move(name));
}

namespace {

std::string num(const std::optional<double>& v) {
  if (!v) return {};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", *v);
  return buf;
}

std::string quoted(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string eval_csv_header() {
  return "name,static_mean,static_median,static_count,slow_mean,slow_median,slow_count,fast_mean,fast_median,"
         "fast_count,acc_background,acc_vehicle,acc_pedestrian,acc_bicycle,acc_others,mca,oa,nonempty_count";
}

std::string eval_csv_row(const EvalReport& r) {
  std::string row = quoted(r.name);
  for (const auto& g : r.groups) row += ',' + num(g.mean) + ',' + num(g.median) + ',' + std::to_string(g.count);
  for (const auto& a : r.category_accuracy) row += ',' + num(a);
  row += ',' + num(r.mca) + ',' + num(r.oa) + ',' + std::to_string(r.nonempty_count);
  return row;
}

std::string eval_csv(std::span<const EvalReport> reports) {
  std::string out = eval_csv_header() + '\n';
  for (const auto& r : reports) out += eval_csv_row(r) + '\n';
  return out;
}

}  // namespace motionnet::pipeline
