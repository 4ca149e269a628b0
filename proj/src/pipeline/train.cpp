#include "motionnet/pipeline/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <stdexcept>

#include "motionnet/log.hpp"
#include "motionnet/losses/mgda.hpp"
#include "motionnet/nn/ops.hpp"

namespace motionnet::pipeline {

namespace {

struct Batch {
  std::size_t size = 0;
  bool paired = false;
  nn::Tensor input;  // keyframe clips first, then their partners when paired
  losses::LabelBatch current, shifted;
  std::vector<geometry::Planar> relative;
  bev::GridSpec grid;
};

Batch make_batch(std::span<const Sample> samples, std::span<const std::size_t> idx, bool relative, bool paired) {
  Batch b;
  b.size = idx.size();
  b.paired = paired;
  b.grid = samples[idx[0]].input.grid;
  std::vector<const bev::BEVSequence*> seqs;
  std::vector<const sim::LabelGrids*> cur, nxt;
  for (auto i : idx) {
    seqs.push_back(&samples[i].input);
    cur.push_back(&samples[i].labels);
  }
  if (paired)
    for (auto i : idx) {
      seqs.push_back(&samples[i].pair_input);
      nxt.push_back(&samples[i].pair_labels);
      b.relative.push_back(samples[i].relative);
    }
  b.input = bev::to_tensor(seqs);
  b.current = losses::make_label_batch(cur, relative);
  if (paired) b.shifted = losses::make_label_batch(nxt, relative);
  return b;
}

losses::LossTerms compute_terms(const stpn::Prediction& p, const Batch& b, const losses::LossWeights& w) {
  losses::LossTerms t;
  const std::size_t n = b.size;
  const bool split = b.paired;
  const nn::Tensor logits = split ? nn::slice_batch(p.class_logits, 0, n) : p.class_logits;
  const nn::Tensor motion = split ? nn::slice_batch(p.motion, 0, n) : p.motion;
  t.cls = losses::loss_cls(logits, b.current, w.class_weights);
  t.motion = losses::loss_motion(motion, b.current, w.motion_weights);
  if (p.static_logit.defined())
    t.state = losses::loss_state(split ? nn::slice_batch(p.static_logit, 0, n) : p.static_logit, b.current,
                                 w.state_weights);
  if (w.alpha > 0) t.spatial = losses::loss_spatial(motion, b.current);
  if (split) {
    const nn::Tensor motion_next = nn::slice_batch(p.motion, n, 2 * n);
    if (w.beta > 0) t.fg_temporal = losses::loss_fg_temporal(motion, motion_next, b.current, b.shifted, b.relative);
    if (w.gamma > 0)
      t.bg_temporal = losses::loss_bg_temporal(motion, motion_next, b.current, b.shifted, b.relative, b.grid);
  }
  return t;
}

bool all_finite(const losses::LossReport& r) {
  for (double v : {r.cls, r.motion, r.state, r.spatial, r.fg_temporal, r.bg_temporal, r.total})
    if (!std::isfinite(v)) return false;
  return true;
}

std::vector<nn::NamedTensor> snapshot(const stpn::Stpn& model) {
  auto s = model.state();
  for (auto& e : s) e.tensor = e.tensor.clone();
  return s;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void accumulate(losses::LossReport& sum, const losses::LossReport& r) {
  sum.cls += r.cls;
  sum.motion += r.motion;
  sum.state += r.state;
  sum.spatial += r.spatial;
  sum.fg_temporal += r.fg_temporal;
  sum.bg_temporal += r.bg_temporal;
  sum.total += r.total;
  for (int k = 0; k < 3; ++k) sum.task_weights[k] += r.task_weights[k];
}

losses::LossReport scaled(losses::LossReport r, double f) {
  r.cls *= f;
  r.motion *= f;
  r.state *= f;
  r.spatial *= f;
  r.fg_temporal *= f;
  r.bg_temporal *= f;
  r.total *= f;
  for (auto& w : r.task_weights) w *= f;
  return r;
}

}  // namespace

double selection_score(const EvalReport& report) {
  double s = 0.0;
  for (const auto& g : report.groups)
    if (g.mean) s += *g.mean;
  return s;
}

std::string training_log_header() { return "epoch,L_cls,L_motion,L_state,L_s,L_ft,L_bt,total,w1,w2,w3"; }

std::string training_log_row(const EpochLog& log) {
  const auto& r = log.mean;
  return std::to_string(log.epoch) + ',' + fmt(r.cls) + ',' + fmt(r.motion) + ',' + fmt(r.state) + ',' +
         fmt(r.spatial) + ',' + fmt(r.fg_temporal) + ',' + fmt(r.bg_temporal) + ',' + fmt(r.total) + ',' +
         fmt(r.task_weights[0]) + ',' + fmt(r.task_weights[1]) + ',' + fmt(r.task_weights[2]);
}

EvalReport evaluate_model(stpn::Stpn& model, std::span<const Sample> samples, const InferenceOptions& inference,
                          const EvalOptions& eval, std::string name, bool turning_only) {
  std::vector<const bev::BEVSequence*> inputs;
  for (const auto& s : samples) inputs.push_back(&s.input);
  const auto outputs = infer(model, inputs, inference);
  Evaluator ev(eval);
  for (std::size_t i = 0; i < samples.size(); ++i)
    ev.add(outputs[i], samples[i].labels, turning_only ? std::span<const std::uint8_t>(samples[i].turning)
                                                       : std::span<const std::uint8_t>());
  return ev.report(std::move(name));
}

losses::LossReport evaluate_losses(stpn::Stpn& model, std::span<const Sample> samples,
                                   const losses::LossWeights& weights, std::size_t batch_size, bool use_pairs) {
  if (samples.empty()) throw std::invalid_argument("evaluate_losses: no samples");
  nn::NoGradGuard guard;
  const bool paired = use_pairs && (weights.beta > 0 || weights.gamma > 0) &&
                      std::all_of(samples.begin(), samples.end(), [](const Sample& s) { return s.has_pair; });
  losses::LossReport sum;
  sum.task_weights = {0, 0, 0};
  std::size_t batches = 0;
  std::vector<std::size_t> idx(samples.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t begin = 0; begin < idx.size(); begin += batch_size) {
    const std::size_t end = std::min(idx.size(), begin + batch_size);
    const Batch b = make_batch(samples, std::span(idx).subspan(begin, end - begin), model.config().relative_offset,
                               paired);
    const auto terms = compute_terms(model.forward(b.input, false), b, weights);
    accumulate(sum, losses::report(terms, weights));
    ++batches;
  }
  return scaled(sum, 1.0 / static_cast<double>(batches));
}

TrainResult train(stpn::Stpn& model, std::span<const Sample> train_set, std::span<const Sample> val,
                  const TrainOptions& options, losses::LossWeights weights, const InferenceOptions& inference,
                  std::uint64_t seed, std::ostream* log_csv) {
  if (train_set.empty()) throw std::invalid_argument("train: no training samples");
  if (options.batch_size == 0) throw std::invalid_argument("train: batch size must be positive");
  TrainResult result;
  if (options.fit_class_weights) {
    std::vector<const sim::LabelGrids*> labels;
    for (const auto& s : train_set) labels.push_back(&s.labels);
    losses::fit_weights(weights, labels);
  }
  result.weights = weights;

  const bool want_pairs = options.use_pairs && (weights.beta > 0 || weights.gamma > 0);
  const bool paired =
      want_pairs && std::all_of(train_set.begin(), train_set.end(), [](const Sample& s) { return s.has_pair; });
  if (want_pairs && !paired) log::warn("train: temporal losses requested but some clips have no partner; disabled");

  const auto params = model.parameters();
  const auto shared = model.shared_parameters();
  nn::Adam adam(params, nn::AdamConfig{options.lr});
  std::mt19937_64 rng(seed);
  std::vector<nn::NamedTensor> best;

  std::size_t shared_size = 0;
  for (const auto& p : shared) shared_size += p.tensor.numel();

  bool stop = false;
  for (std::size_t epoch = 1; epoch <= options.epochs && !stop; ++epoch) {
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    losses::LossReport sum;
    sum.task_weights = {0, 0, 0};
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += options.batch_size) {
      if (options.max_steps && result.steps >= options.max_steps) {
        stop = true;
        break;
      }
      const std::size_t end = std::min(order.size(), begin + options.batch_size);
      const Batch b = make_batch(train_set, std::span(order).subspan(begin, end - begin),
                                 model.config().relative_offset, paired);
      const stpn::Prediction pred = model.forward(b.input, true);
      const losses::LossTerms terms = compute_terms(pred, b, weights);
      losses::LossReport rep = losses::report(terms, weights);
      if (!all_finite(rep))
        throw std::runtime_error("non-finite loss in epoch " + std::to_string(epoch) + ", batch " +
                                 std::to_string(batches) + " (step " + std::to_string(result.steps) + ")");

      adam.zero_grad();
      if (options.mgda) {
        auto tasks = losses::task_losses(terms, weights);
        std::vector<std::size_t> active;
        for (std::size_t k = 0; k < 3; ++k)
          if (tasks[k].requires_grad()) active.push_back(k);
        std::vector<std::vector<double>> full(active.size()), shared_grads(active.size());
        for (std::size_t a = 0; a < active.size(); ++a) {
          adam.zero_grad();
          nn::backward(tasks[active[a]]);
          for (const auto& p : params) {
            const auto g = p.tensor.has_grad() ? p.tensor.grad() : std::span<const double>();
            if (g.empty())
              full[a].insert(full[a].end(), p.tensor.numel(), 0.0);
            else
              full[a].insert(full[a].end(), g.begin(), g.end());
          }
          shared_grads[a].assign(full[a].begin(), full[a].begin() + static_cast<std::ptrdiff_t>(shared_size));
        }
        losses::MgdaResult m = losses::mgda_weights(shared_grads);
        const std::vector<double> uniform(active.size(), 1.0 / static_cast<double>(active.size()));
        const double uniform_norm = losses::combined_norm(shared_grads, uniform);
        double chosen_norm = losses::combined_norm(shared_grads, m.weights);
        if (chosen_norm > uniform_norm) {  // Gram-matrix round-off near a uniform optimum
          m.weights = uniform;
          chosen_norm = uniform_norm;
        }
        result.mgda_steps.push_back({m.weights, chosen_norm, uniform_norm});
        // Parameter gradients of sum_k w_k L_k.
        std::size_t off = 0;
        for (const auto& p : params) {
          nn::Tensor t = p.tensor;
          auto g = t.mutable_grad();
          for (std::size_t i = 0; i < g.size(); ++i) {
            double v = 0.0;
            for (std::size_t a = 0; a < active.size(); ++a) v += m.weights[a] * full[a][off + i];
            g[i] = v;
          }
          off += g.size();
        }
        rep.task_weights = {0, 0, 0};
        double weighted = 0.0;
        for (std::size_t a = 0; a < active.size(); ++a) {
          rep.task_weights[active[a]] = m.weights[a];
          weighted += m.weights[a] * tasks[active[a]].item();
        }
        result.step_losses.push_back(weighted);
      } else {
        nn::Tensor total = losses::total_loss(terms, weights);
        nn::backward(total);
        result.step_losses.push_back(total.item());
      }
      if (!adam.step()) ++result.skipped_steps;
      ++result.steps;
      accumulate(sum, rep);
      ++batches;
    }
    if (batches == 0) break;

    EpochLog log;
    log.epoch = epoch;
    log.mean = scaled(sum, 1.0 / static_cast<double>(batches));
    if (!val.empty()) {
      const double score = selection_score(evaluate_model(model, val, inference, EvalOptions{}));
      log.validation_score = score;
      if (!result.best_score || score < *result.best_score) {
        result.best_score = score;
        result.best_epoch = epoch;
        best = snapshot(model);
      }
    }
    if (log_csv) *log_csv << training_log_row(log) << '\n' << std::flush;
    result.epochs.push_back(log);
  }
  if (!best.empty()) model.load_state(best);
  return result;
}

}  // namespace motionnet::pipeline
