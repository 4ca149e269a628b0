#include "motionnet/losses/mgda.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Core>

namespace motionnet::losses {

namespace {

double quad(const Eigen::MatrixXd& gram, const Eigen::VectorXd& w) { return std::max(0.0, w.dot(gram * w)); }

}  // namespace

double combined_norm(std::span<const std::vector<double>> gradients, std::span<const double> weights) {
  if (gradients.size() != weights.size()) throw std::invalid_argument("combined_norm: one weight per gradient");
  if (gradients.empty()) return 0.0;
  std::vector<double> v(gradients[0].size(), 0.0);
  for (std::size_t i = 0; i < gradients.size(); ++i)
    for (std::size_t k = 0; k < v.size(); ++k) v[k] += weights[i] * gradients[i][k];
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

MgdaResult mgda_weights(std::span<const std::vector<double>> gradients, const MgdaOptions& options) {
  const std::size_t k = gradients.size();
  if (k == 0) throw std::invalid_argument("mgda_weights: no gradients");
  const std::size_t dim = gradients[0].size();
  for (const auto& g : gradients)
    if (g.size() != dim) throw std::invalid_argument("mgda_weights: gradients differ in length");

  Eigen::MatrixXd gram(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i; j < k; ++j) {
      const Eigen::Map<const Eigen::VectorXd> a(gradients[i].data(), static_cast<Eigen::Index>(dim));
      const Eigen::Map<const Eigen::VectorXd> b(gradients[j].data(), static_cast<Eigen::Index>(dim));
      gram(i, j) = gram(j, i) = a.dot(b);
    }

  MgdaResult result;
  Eigen::VectorXd w = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(k), 1.0 / static_cast<double>(k));
  if (gram.diagonal().maxCoeff() == 0.0) {
    result.weights.assign(w.data(), w.data() + k);
    return result;
  }

  double best = quad(gram, w);
  auto consider = [&](const Eigen::VectorXd& cand) {
    const double q = quad(gram, cand);
    if (q < best) {
      best = q;
      w = cand;
    }
  };
  for (std::size_t i = 0; i < k; ++i) consider(Eigen::VectorXd::Unit(static_cast<Eigen::Index>(k), i));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) {
      const double denom = gram(i, i) + gram(j, j) - 2.0 * gram(i, j);
      if (denom <= 0.0) continue;
      const double gamma = std::clamp((gram(j, j) - gram(i, j)) / denom, 0.0, 1.0);
      Eigen::VectorXd cand = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
      cand(i) = gamma;
      cand(j) = 1.0 - gamma;
      consider(cand);
    }

  int it = 0;
  for (; it < options.max_iterations; ++it) {
    const Eigen::VectorXd mw = gram * w;
    Eigen::Index t = 0;
    mw.minCoeff(&t);
    const double a = w.dot(mw);  // |v|^2
    const double b = mw(t);      // v . g_t
    const double c = gram(t, t);
    if (a - b < options.tolerance) break;
    const double denom = a + c - 2.0 * b;
    const double gamma = denom > 0.0 ? std::clamp((a - b) / denom, 0.0, 1.0) : 1.0;
    Eigen::VectorXd next = (1.0 - gamma) * w;
    next(t) += gamma;
    if (quad(gram, next) > a) break;  // guards against round-off
    w = next;
  }

  // Project away round-off so the weights sit exactly on the simplex.
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = std::max(0.0, w(i));
  w /= w.sum();
  result.weights.assign(w.data(), w.data() + k);
  result.norm = std::sqrt(quad(gram, w));
  result.iterations = it;
  return result;
}

}  // namespace motionnet::losses
