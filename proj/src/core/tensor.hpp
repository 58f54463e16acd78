#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "core/error.hpp"

namespace tscnet::core {

// Feature maps are channel-major C x H x W; rank never exceeds 4.
using Dims = std::vector<int>;

std::size_t numel_of(const Dims& dims);
std::string dims_to_string(const Dims& dims);

template <typename T>
struct Node;

// Reads self.grad and accumulates into self.inputs[*]->grad.
template <typename T>
using BackwardFn = std::function<void(Node<T>& self)>;

template <typename T>
struct Node {
  Dims dims;
  std::vector<T> value;
  std::vector<T> grad;
  bool requires_grad = false;
  std::uint64_t seq = 0;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  BackwardFn<T> backward;

  bool is_leaf() const { return !backward; }

  // Grad accumulator, zero-initialised on first use.
  std::span<T> grad_buffer() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
    return grad;
  }
};

std::uint64_t next_sequence_number();

// Graph recording switch. Thread-local, scoped by NoGradGuard.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  static Tensor zeros(Dims dims, bool requires_grad = false);
  static Tensor full(Dims dims, T value, bool requires_grad = false);
  static Tensor from_values(Dims dims, std::vector<T> values, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(node_); }
  const Dims& dims() const { return node_->dims; }
  int rank() const { return static_cast<int>(node_->dims.size()); }
  int dim(int axis) const;
  std::size_t numel() const { return node_->value.size(); }

  std::span<const T> values() const { return node_->value; }
  // Only leaves may be written in place (parameter updates, test fixtures).
  std::span<T> mutable_values();
  std::span<const T> grad() const { return node_->grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  void zero_grad();

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool flag);
  bool is_leaf() const { return node_->is_leaf(); }

  T item() const;
  // Row-major element access for tests and small utilities.
  T at(std::initializer_list<int> index) const;

  const std::shared_ptr<Node<T>>& node() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

// Reverse-mode sweep from a scalar. Visits every op reachable from `loss`
// exactly once in reverse creation order. Leaf grads accumulate across calls;
// the recorded graph stays alive as long as `loss` does, so a second call on
// the same loss adds the same gradient again.
template <typename T>
void backward(const Tensor<T>& loss);

extern template class Tensor<float>;
extern template class Tensor<double>;
extern template void backward<float>(const Tensor<float>&);
extern template void backward<double>(const Tensor<double>&);

}  // namespace tscnet::core
