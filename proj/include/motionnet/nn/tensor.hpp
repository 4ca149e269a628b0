#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace motionnet::nn {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

// One vertex of the reverse-mode graph. The value buffer is shared so that
// reshapes are free; gradients are owned per node.
struct Node {
  Shape shape;
  std::shared_ptr<std::vector<double>> value;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads this node's grad and accumulates into inputs' grads.
  std::function<void(Node&)> backward;
  const char* op = "leaf";

  std::span<double> ensure_grad();
  std::span<const double> data() const { return *value; }
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<double> data, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t i) const;
  std::size_t numel() const;

  std::span<const double> data() const;
  // Intended for leaves (parameters, inputs); graph tensors are immutable.
  std::span<double> mutable_data();
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  bool has_grad() const;

  bool requires_grad() const;
  void set_requires_grad(bool flag);
  void zero_grad();

  double item() const;
  Tensor detach() const;
  Tensor clone() const;

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Reverse-mode sweep from a scalar. Leaf gradients accumulate; gradients of
// intermediate nodes are released once propagated, so every call starts them from zero.
void backward(const Tensor& loss);

bool grad_enabled();

// Disables graph recording on the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Builds an op result. The backward closure is only attached when some input
// requires a gradient and recording is enabled.
Tensor make_result(Shape shape, std::vector<double> value, std::initializer_list<Tensor> inputs,
                   const char* op, std::function<void(Node&)> backward_fn);
Tensor make_result(Shape shape, std::vector<double> value, const std::vector<Tensor>& inputs,
                   const char* op, std::function<void(Node&)> backward_fn);

}  // namespace motionnet::nn
