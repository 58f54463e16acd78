#pragma once

// Internal helpers shared by the op implementation files.

#include <cmath>
#include <string>

#include "core/kink.hpp"
#include "core/tensor.hpp"

namespace tscnet::core::detail {

template <typename T>
void check_finite(std::span<const T> values, const char* op) {
  for (T v : values) {
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite value produced by ") + op);
  }
}

template <typename T>
Tensor<T> record(const char* op, Dims dims, std::vector<T> values,
                 std::initializer_list<const Tensor<T>*> inputs, BackwardFn<T> fn) {
  check_finite<T>(values, op);
  auto node = std::make_shared<Node<T>>();
  node->dims = std::move(dims);
  node->value = std::move(values);
  node->op = op;
  node->seq = next_sequence_number();
  bool needs = false;
  if (grad_enabled()) {
    for (const Tensor<T>* in : inputs) needs = needs || (in->defined() && in->requires_grad());
  }
  if (needs) {
    node->requires_grad = true;
    for (const Tensor<T>* in : inputs) {
      // Undefined optional inputs keep their slot so indices stay stable.
      node->inputs.push_back(in->defined() ? in->node() : std::make_shared<Node<T>>());
    }
    node->backward = std::move(fn);
  }
  return Tensor<T>(std::move(node));
}

// Grad span of input i, or empty when that input does not want a gradient.
template <typename T>
std::span<T> input_grad(Node<T>& self, std::size_t i) {
  Node<T>& in = *self.inputs[i];
  if (!in.requires_grad) return {};
  return in.grad_buffer();
}

inline void require(bool ok, const std::string& message) {
  if (!ok) throw ContractError(message);
}

inline void require_shape(bool ok, const std::string& message) {
  if (!ok) throw ShapeError(message);
}

}  // namespace tscnet::core::detail
