#include "core/attention.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <memory>

#include "core/op_support.hpp"
#include "core/ops.hpp"

namespace tscnet::core {

namespace {

thread_local ScratchStats g_scratch;

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Mat = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMat = Eigen::Map<const RowMat<T>>;

template <typename T>
void softmax_rows(Mat<T>& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const T peak = m.row(r).maxCoeff();
    m.row(r) = (m.row(r).array() - peak).exp();
    m.row(r) /= m.row(r).sum();
  }
}

}  // namespace

ScratchStats scratch_stats() { return g_scratch; }
void reset_scratch_stats() { g_scratch = ScratchStats{g_scratch.live_elements, g_scratch.live_elements, 0}; }

namespace detail {
void scratch_acquire(std::size_t elements) {
  g_scratch.live_elements += elements;
  g_scratch.peak_elements = std::max(g_scratch.peak_elements, g_scratch.live_elements);
  ++g_scratch.allocations;
}
void scratch_release(std::size_t elements) { g_scratch.live_elements -= elements; }
}  // namespace detail

template <typename T>
void channelwise_attention_kernel(std::span<const T> q, std::span<const T> k, std::span<const T> v,
                                  int channels, int height, int width, std::span<T> attn,
                                  std::span<T> out) {
  const T scale = T(1) / std::sqrt(static_cast<T>(width));
  const auto plane = static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  const auto map = static_cast<std::size_t>(height) * static_cast<std::size_t>(height);
  for (int c = 0; c < channels; ++c) {
    const auto off = static_cast<std::size_t>(c) * plane;
    ConstMat<T> qc(q.data() + off, height, width);
    ConstMat<T> kc(k.data() + off, height, width);
    ConstMat<T> vc(v.data() + off, height, width);
    Mat<T> a(attn.data() + static_cast<std::size_t>(c) * map, height, height);
    a.noalias() = (qc * kc.transpose()) * scale;
    softmax_rows(a);
    Mat<T>(out.data() + off, height, width).noalias() = a * vc;
  }
}

template <typename T>
std::vector<T> standard_attention_reference(std::span<const T> q, std::span<const T> k,
                                            std::span<const T> v, int channels, int height,
                                            int width) {
  const int tokens = height * width;
  // Feature maps are C x HW; tokens are their columns.
  ConstMat<T> qm(q.data(), channels, tokens);
  ConstMat<T> km(k.data(), channels, tokens);
  ConstMat<T> vm(v.data(), channels, tokens);
  CountedBuffer<T> scores(static_cast<std::size_t>(tokens) * static_cast<std::size_t>(tokens));
  Mat<T> s(scores.span().data(), tokens, tokens);
  s.noalias() = (qm.transpose() * km) * (T(1) / std::sqrt(static_cast<T>(channels)));
  softmax_rows(s);
  std::vector<T> out(static_cast<std::size_t>(channels) * static_cast<std::size_t>(tokens));
  Mat<T>(out.data(), channels, tokens).noalias() = vm * s.transpose();
  return out;
}

template <typename T>
Tensor<T> channelwise_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v) {
  detail::require(q.rank() == 3 && q.dims() == k.dims() && q.dims() == v.dims(),
                  "channelwise_attention needs q, k, v with identical C x H x W dims");
  const int C = q.dim(0);
  const int H = q.dim(1);
  const int W = q.dim(2);
  if (H != W) {
    throw UnsupportedShapeError("channel-wise attention requires square maps, got " +
                                dims_to_string(q.dims()));
  }
  auto attn = std::make_shared<CountedBuffer<T>>(static_cast<std::size_t>(C) * H * H);
  std::vector<T> out(q.numel());
  channelwise_attention_kernel<T>(q.values(), k.values(), v.values(), C, H, W, attn->span(), out);

  return detail::record<T>(
      "channelwise_attention", q.dims(), std::move(out), {&q, &k, &v}, [C, H, W, attn](Node<T>& self) {
        const T scale = T(1) / std::sqrt(static_cast<T>(W));
        const auto plane = static_cast<std::size_t>(H) * static_cast<std::size_t>(W);
        const auto map = static_cast<std::size_t>(H) * static_cast<std::size_t>(H);
        auto gq = detail::input_grad(self, 0);
        auto gk = detail::input_grad(self, 1);
        auto gv = detail::input_grad(self, 2);
        RowMat<T> da(H, H);
        for (int c = 0; c < C; ++c) {
          const auto off = static_cast<std::size_t>(c) * plane;
          ConstMat<T> a(attn->span().data() + static_cast<std::size_t>(c) * map, H, H);
          ConstMat<T> dout(self.grad.data() + off, H, W);
          ConstMat<T> qc(self.inputs[0]->value.data() + off, H, W);
          ConstMat<T> kc(self.inputs[1]->value.data() + off, H, W);
          ConstMat<T> vc(self.inputs[2]->value.data() + off, H, W);
          if (!gv.empty()) Mat<T>(gv.data() + off, H, W).noalias() += a.transpose() * dout;
          if (gq.empty() && gk.empty()) continue;
          da.noalias() = dout * vc.transpose();
          // Softmax backward, row-wise.
          for (int r = 0; r < H; ++r) {
            const T dot = (da.row(r).array() * a.row(r).array()).sum();
            da.row(r) = (a.row(r).array() * (da.row(r).array() - dot)).matrix();
          }
          if (!gq.empty()) Mat<T>(gq.data() + off, H, W).noalias() += (da * kc) * scale;
          if (!gk.empty()) Mat<T>(gk.data() + off, H, W).noalias() += (da.transpose() * qc) * scale;
        }
      });
}

template <typename T>
Tensor<T> channelwise_attention_maps(const Tensor<T>& q, const Tensor<T>& k) {
  detail::require(q.rank() == 3 && q.dims() == k.dims(), "q and k must share C x H x W dims");
  const int C = q.dim(0);
  const int H = q.dim(1);
  const int W = q.dim(2);
  if (H != W) throw UnsupportedShapeError("channel-wise attention requires square maps");
  std::vector<T> maps(static_cast<std::size_t>(C) * H * H);
  std::vector<T> scratch(q.numel());
  // v is irrelevant for the maps; reuse k.
  channelwise_attention_kernel<T>(q.values(), k.values(), k.values(), C, H, W, maps, scratch);
  return Tensor<T>::from_values(Dims{C, H, H}, std::move(maps));
}

#define TSCNET_INSTANTIATE(T)                                                                   \
  template void channelwise_attention_kernel(std::span<const T>, std::span<const T>,            \
                                             std::span<const T>, int, int, int, std::span<T>,   \
                                             std::span<T>);                                     \
  template std::vector<T> standard_attention_reference(std::span<const T>, std::span<const T>,  \
                                                       std::span<const T>, int, int, int);      \
  template Tensor<T> channelwise_attention(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&); \
  template Tensor<T> channelwise_attention_maps(const Tensor<T>&, const Tensor<T>&);

TSCNET_INSTANTIATE(float)
TSCNET_INSTANTIATE(double)
#undef TSCNET_INSTANTIATE

}  // namespace tscnet::core
