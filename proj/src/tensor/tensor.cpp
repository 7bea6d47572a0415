#include "dmae/tensor/tensor.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>

#include "dmae/errors.hpp"

namespace dmae::tensor {

namespace {
thread_local bool g_grad_enabled = true;
}

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? ", " : "") << shape[i];
  os << ']';
  return os.str();
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

template <class T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T(0), requires_grad);
}

template <class T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
  auto node = std::make_shared<Node<T>>();
  node->data.assign(tensor::numel(shape), value);
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  return Tensor(node);
}

template <class T>
Tensor<T> Tensor<T>::from(Shape shape, std::vector<T> values, bool requires_grad) {
  if (tensor::numel(shape) != values.size()) {
    throw DimensionError("tensor shape " + shape_str(shape) + " does not match " + std::to_string(values.size()) +
                         " values");
  }
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->data = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(node);
}

template <class T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return from(Shape{}, std::vector<T>{value}, requires_grad);
}

template <class T>
T Tensor<T>::item() const {
  if (numel() != 1) throw DimensionError("item() on tensor of shape " + shape_str(shape()));
  return node_->data[0];
}

template <class T>
void Tensor<T>::backward() const {
  if (numel() != 1) throw DimensionError("backward() requires a scalar, got " + shape_str(shape()));

  // Iterative post-order DFS gives a topological order of the recorded graph.
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> visited;
  std::vector<std::pair<Node<T>*, std::size_t>> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  node_->grad_buffer()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* node = *it;
    if (node->backward && !node->grad.empty()) node->backward(*node);
  }
}

template <class T>
Tensor<T> Tensor<T>::detach() const {
  return from(shape(), node_->data, false);
}

template <class T>
Tensor<T> Tensor<T>::clone() const {
  return from(shape(), node_->data, requires_grad());
}

template <class T>
Tensor<T> make_result(Shape shape, std::vector<T> data, std::vector<Tensor<T>> parents,
                      std::function<void(Node<T>&)> backward) {
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  if (g_grad_enabled) {
    bool any = false;
    for (const auto& p : parents) any = any || p.requires_grad();
    if (any) {
      node->requires_grad = true;
      node->parents.reserve(parents.size());
      for (const auto& p : parents) node->parents.push_back(p.node_ptr());
      node->backward = std::move(backward);
    }
  }
  return Tensor<T>(node);
}

template <class T>
void check_finite(std::span<const T> values, const std::string& what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      std::ostringstream os;
      os << "non-finite value " << values[i] << " at index " << i << " in " << what;
      throw NumericError(os.str());
    }
  }
}

template <class To, class From>
Tensor<To> cast(const Tensor<From>& x, bool requires_grad) {
  std::vector<To> values(x.data().begin(), x.data().end());
  return Tensor<To>::from(x.shape(), std::move(values), requires_grad);
}

template class Tensor<float>;
template class Tensor<double>;
template Tensor<float> make_result(Shape, std::vector<float>, std::vector<Tensor<float>>,
                                   std::function<void(Node<float>&)>);
template Tensor<double> make_result(Shape, std::vector<double>, std::vector<Tensor<double>>,
                                    std::function<void(Node<double>&)>);
template void check_finite<float>(std::span<const float>, const std::string&);
template void check_finite<double>(std::span<const double>, const std::string&);
template Tensor<float> cast<float, double>(const Tensor<double>&, bool);
template Tensor<double> cast<double, float>(const Tensor<float>&, bool);
template Tensor<float> cast<float, float>(const Tensor<float>&, bool);
template Tensor<double> cast<double, double>(const Tensor<double>&, bool);

}  // namespace dmae::tensor
