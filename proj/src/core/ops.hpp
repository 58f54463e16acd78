#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "core/tensor.hpp"

// Differentiable operations over Tensor<T>. Every op checks its result for
// NaN/Inf and throws NumericError if one appears.
namespace tscnet::core {

struct Conv2dOptions {
  int stride = 1;
  int dilation = 1;
  int pad_top = 0;
  int pad_bottom = 0;
  int pad_left = 0;
  int pad_right = 0;

  // Symmetric padding that keeps H x W for stride 1.
  static Conv2dOptions same(int kernel_h, int kernel_w, int dilation = 1);
};

// x: Cin x H x W, weight: Cout x Cin x kh x kw, bias: Cout (may be undefined).
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 const Conv2dOptions& options = {});

// Transposed convolution, kernel 4 / padding 1 / stride 2: exact x2 upsampling.
// weight: Cin x Cout x 4 x 4, bias: Cout (may be undefined).
template <typename T>
Tensor<T> deconv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                   int stride = 2);

// y = W x + b for a rank-1 x. weight: m x n.
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

// Row-wise linear map: x is N x in, weight out x in, result N x out.
template <typename T>
Tensor<T> linear_rows(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> transpose(const Tensor<T>& a);

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Dims dims);

enum class Activation { relu, sigmoid, softmax_last, gelu };

template <typename T>
Tensor<T> activation(const Tensor<T>& x, Activation kind);

template <typename T>
Tensor<T> relu(const Tensor<T>& x) { return activation(x, Activation::relu); }
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) { return activation(x, Activation::sigmoid); }
template <typename T>
Tensor<T> softmax_last(const Tensor<T>& x) { return activation(x, Activation::softmax_last); }
template <typename T>
Tensor<T> gelu(const Tensor<T>& x) { return activation(x, Activation::gelu); }

// `b` broadcasts into `a`: same rank, each extent of b is 1 or equal to a's.
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor);

template <typename T>
Tensor<T> concat(std::span<const Tensor<T>> parts, int axis);
template <typename T>
Tensor<T> concat(std::initializer_list<Tensor<T>> parts, int axis) {
  std::vector<Tensor<T>> v(parts);
  return concat<T>(std::span<const Tensor<T>>(v), axis);
}

template <typename T>
Tensor<T> narrow(const Tensor<T>& x, int axis, int start, int length);

template <typename T>
Tensor<T> sum(const Tensor<T>& x);
template <typename T>
Tensor<T> mean(const Tensor<T>& x);

enum class PoolMode { global_avg, adaptive_avg, bilinear_up };

// global_avg: C x 1 x 1. adaptive_avg needs out <= in, bilinear_up out >= in.
template <typename T>
Tensor<T> pool_resize(const Tensor<T>& x, PoolMode mode, int out_h = 1, int out_w = 1);

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x) { return pool_resize(x, PoolMode::global_avg); }
template <typename T>
Tensor<T> adaptive_avg_pool(const Tensor<T>& x, int out_h, int out_w) {
  return pool_resize(x, PoolMode::adaptive_avg, out_h, out_w);
}
// Half-pixel (align_corners = false) bilinear interpolation.
template <typename T>
Tensor<T> bilinear_up(const Tensor<T>& x, int out_h, int out_w) {
  return pool_resize(x, PoolMode::bilinear_up, out_h, out_w);
}

template <typename T>
Tensor<T> max_pool2x2(const Tensor<T>& x);

// Reductions across the channel axis: C x H x W -> 1 x H x W.
template <typename T>
Tensor<T> channel_mean(const Tensor<T>& x);
template <typename T>
Tensor<T> channel_max(const Tensor<T>& x);

// Normalises over the last axis.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     T eps = T(1e-5));

// Inverted dropout with a mask drawn from `seed`.
template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double rate, std::uint64_t seed);

// Per-channel attention: A_c = softmax(q_c k_c^T / sqrt(W)), out_c = A_c v_c.
// Requires H == W.
template <typename T>
Tensor<T> channelwise_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v);

// The C x H x H attention maps the op above would use (no graph recorded).
template <typename T>
Tensor<T> channelwise_attention_maps(const Tensor<T>& q, const Tensor<T>& k);

// Extension point for ops defined outside the core (and for test fixtures).
template <typename T>
Tensor<T> make_op(const char* name, Dims dims, std::vector<T> values,
                  std::vector<Tensor<T>> inputs, BackwardFn<T> backward_fn);

}  // namespace tscnet::core
