#include "motionnet/nn/tensor.hpp"

#include <algorithm>
#ifdef __GLIBC__
#include <malloc.h>
#endif
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace motionnet::nn {

namespace {
thread_local bool g_grad_enabled = true;

#ifdef __GLIBC__
// Activation buffers run to tens of megabytes; serving them from the heap instead of fresh mmaps
// avoids paying page faults on every step.
const bool g_malloc_tuned = [] {
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  return true;
}();
#endif

void require_defined(const std::shared_ptr<Node>& node) {
  if (!node) throw std::logic_error("operation on an undefined tensor");
}
}  // namespace

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ',';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

std::span<double> Node::ensure_grad() {
  if (grad.size() != value->size()) grad.assign(value->size(), 0.0);
  return grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const auto n = shape_numel(shape);
  return from_data(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
  for (auto d : shape)
    if (d == 0) throw std::invalid_argument("tensor dimensions must be positive, got " + shape_string(shape));
  if (shape_numel(shape) != data.size())
    throw std::invalid_argument("tensor shape " + shape_string(shape) + " does not match " +
                                std::to_string(data.size()) + " values");
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::make_shared<std::vector<double>>(std::move(data));
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from_data({1}, {value}, requires_grad); }

const Shape& Tensor::shape() const {
  require_defined(node_);
  return node_->shape;
}

std::size_t Tensor::dim(std::size_t i) const {
  const auto& s = shape();
  if (i >= s.size()) throw std::out_of_range("dimension index out of range");
  return s[i];
}

std::size_t Tensor::numel() const {
  require_defined(node_);
  return node_->value->size();
}

std::span<const double> Tensor::data() const {
  require_defined(node_);
  return *node_->value;
}

std::span<double> Tensor::mutable_data() {
  require_defined(node_);
  return *node_->value;
}

std::span<const double> Tensor::grad() const {
  require_defined(node_);
  return node_->grad;
}

std::span<double> Tensor::mutable_grad() {
  require_defined(node_);
  return node_->ensure_grad();
}

bool Tensor::has_grad() const { return node_ && node_->grad.size() == node_->value->size(); }

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

void Tensor::set_requires_grad(bool flag) {
  require_defined(node_);
  node_->requires_grad = flag;
}

void Tensor::zero_grad() {
  require_defined(node_);
  std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

double Tensor::item() const {
  if (numel() != 1) throw std::logic_error("item() on a tensor of shape " + shape_string(shape()));
  return (*node_->value)[0];
}

Tensor Tensor::detach() const {
  require_defined(node_);
  auto node = std::make_shared<Node>();
  node->shape = node_->shape;
  node->value = node_->value;
  return Tensor(std::move(node));
}

Tensor Tensor::clone() const {
  require_defined(node_);
  return from_data(node_->shape, *node_->value, node_->requires_grad);
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Tensor make_result(Shape shape, std::vector<double> value, const std::vector<Tensor>& inputs, const char* op,
                   std::function<void(Node&)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::make_shared<std::vector<double>>(std::move(value));
  node->op = op;
  if (shape_numel(node->shape) != node->value->size())
    throw std::logic_error(std::string(op) + ": result size mismatch");
  bool needs = false;
  if (g_grad_enabled)
    for (const auto& t : inputs) needs = needs || t.requires_grad();
  if (needs) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (const auto& t : inputs) node->inputs.push_back(t.node());
    node->backward = std::move(backward_fn);
  }
  return Tensor(std::move(node));
}

Tensor make_result(Shape shape, std::vector<double> value, std::initializer_list<Tensor> inputs, const char* op,
                   std::function<void(Node&)> backward_fn) {
  return make_result(std::move(shape), std::move(value), std::vector<Tensor>(inputs), op, std::move(backward_fn));
}

void backward(const Tensor& loss) {
  if (!loss.defined()) throw std::invalid_argument("backward on an undefined tensor");
  if (loss.numel() != 1)
    throw std::invalid_argument("backward requires a scalar loss, got shape " + shape_string(loss.shape()));
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{loss.node().get(), 0}};
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && !visited.count(child)) {
        visited.insert(child);
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* n : order)
    if (n->backward) n->grad.clear();
  loss.node()->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (!n->backward) continue;
    n->ensure_grad();  // a node no path reached still has a zero gradient
    n->backward(*n);
    std::vector<double>().swap(n->grad);
  }
}

}  // namespace motionnet::nn
