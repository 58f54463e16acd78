#include "core/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <sstream>
#include <unordered_set>

namespace tscnet::core {

std::size_t numel_of(const Dims& dims) {
  std::size_t n = 1;
  for (int d : dims) {
    if (d <= 0) throw ShapeError("non-positive dimension in " + dims_to_string(dims));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string dims_to_string(const Dims& dims) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < dims.size(); ++i) os << (i ? "x" : "") << dims[i];
  os << ']';
  return os.str();
}

std::uint64_t next_sequence_number() {
  static std::atomic<std::uint64_t> counter{0};
  return ++counter;
}

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

template <typename T>
Tensor<T> Tensor<T>::zeros(Dims dims, bool requires_grad) {
  return full(std::move(dims), T(0), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(Dims dims, T value, bool requires_grad) {
  const std::size_t n = numel_of(dims);
  return from_values(std::move(dims), std::vector<T>(n, value), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::from_values(Dims dims, std::vector<T> values, bool requires_grad) {
  if (dims.empty() || dims.size() > 4) {
    throw ShapeError("tensor rank must be 1..4, got " + std::to_string(dims.size()));
  }
  if (numel_of(dims) != values.size()) {
    throw ShapeError("value count " + std::to_string(values.size()) + " does not match dims " +
                     dims_to_string(dims));
  }
  auto node = std::make_shared<Node<T>>();
  node->dims = std::move(dims);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  node->seq = next_sequence_number();
  return Tensor(std::move(node));
}

template <typename T>
int Tensor<T>::dim(int axis) const {
  if (axis < 0) axis += rank();
  if (axis < 0 || axis >= rank()) throw ContractError("axis out of range");
  return node_->dims[static_cast<std::size_t>(axis)];
}

template <typename T>
std::span<T> Tensor<T>::mutable_values() {
  if (!node_->is_leaf()) throw ContractError("only leaf tensors can be modified in place");
  return node_->value;
}

template <typename T>
void Tensor<T>::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), T(0));
}

template <typename T>
void Tensor<T>::set_requires_grad(bool flag) {
  if (!node_->is_leaf()) throw ContractError("requires_grad can only be set on leaves");
  node_->requires_grad = flag;
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) throw ContractError("item() on tensor with dims " + dims_to_string(dims()));
  return node_->value[0];
}

template <typename T>
T Tensor<T>::at(std::initializer_list<int> index) const {
  if (static_cast<int>(index.size()) != rank()) throw ContractError("index rank mismatch");
  std::size_t offset = 0;
  int axis = 0;
  for (int i : index) {
    const int extent = node_->dims[static_cast<std::size_t>(axis++)];
    if (i < 0 || i >= extent) throw ContractError("index out of range");
    offset = offset * static_cast<std::size_t>(extent) + static_cast<std::size_t>(i);
  }
  return node_->value[offset];
}

template <typename T>
void backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ContractError("backward() needs a scalar loss, got " +
                        (loss.defined() ? dims_to_string(loss.dims()) : std::string("undefined")));
  }
  if (!loss.requires_grad()) throw ContractError("loss does not depend on any parameter");

  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<Node<T>*> stack{loss.node().get()};
  seen.insert(stack.back());
  while (!stack.empty()) {
    Node<T>* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (const auto& in : n->inputs) {
      if (in->requires_grad && seen.insert(in.get()).second) stack.push_back(in.get());
    }
  }
  std::sort(order.begin(), order.end(),
            [](const Node<T>* a, const Node<T>* b) { return a->seq > b->seq; });

  for (Node<T>* n : order) {
    if (!n->is_leaf()) n->grad.assign(n->value.size(), T(0));
  }
  loss.node()->grad_buffer()[0] += T(1);

  for (Node<T>* n : order) {
    if (n->is_leaf()) continue;
    n->backward(*n);
    // Interior grads are dead once propagated.
    std::vector<T>().swap(n->grad);
  }
}

template class Tensor<float>;
template class Tensor<double>;
template void backward<float>(const Tensor<float>&);
template void backward<double>(const Tensor<double>&);

}  // namespace tscnet::core
