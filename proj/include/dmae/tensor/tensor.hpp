#pragma once

// Dense row-major tensor with reverse-mode automatic differentiation.
//
// A Tensor is a cheap handle to a shared node. Ops record their inputs and a
// backward closure on the output node when any input requires grad and grad
// recording is enabled (see NoGradGuard). Calling backward() on a scalar
// seeds d(out)/d(out) = 1 and walks the recorded graph in reverse
// topological order, accumulating into every reachable node's grad.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace dmae::tensor {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

template <class T>
struct Node {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  std::vector<T>& grad_buffer() {
    if (grad.empty()) grad.assign(data.size(), T(0));
    return grad;
  }
};

// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

template <class T>
class Tensor {
 public:
  using value_type = T;
  using NodePtr = std::shared_ptr<Node<T>>;

  Tensor() = default;
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<T> values, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t numel() const { return node_->data.size(); }

  std::span<const T> data() const { return node_->data; }
  // Mutation is reserved for parameter initialization and optimizer updates.
  std::span<T> mutable_data() { return node_->data; }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool value) { node_->requires_grad = value; }
  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() { return node_->grad_buffer(); }
  void zero_grad() { node_->grad.clear(); }

  T item() const;
  T at(std::size_t flat_index) const { return node_->data.at(flat_index); }

  // Runs reverse-mode accumulation from this scalar.
  void backward() const;

  // Same values, no graph history, no grad.
  Tensor detach() const;
  Tensor clone() const;

  Node<T>& node() const { return *node_; }
  const NodePtr& node_ptr() const { return node_; }

 private:
  NodePtr node_;
};

// Builds the output node of an op. Graph edges are only attached when
// recording is enabled and at least one parent requires grad.
template <class T>
Tensor<T> make_result(Shape shape, std::vector<T> data, std::vector<Tensor<T>> parents,
                      std::function<void(Node<T>&)> backward);

// Throws NumericError naming `what` when any value is NaN/Inf.
template <class T>
void check_finite(std::span<const T> values, const std::string& what);

// Copies between precisions (used for gradient checks).
template <class To, class From>
Tensor<To> cast(const Tensor<From>& x, bool requires_grad);

}  // namespace dmae::tensor
