#pragma once

#include <cstddef>
#include <span>
#include <vector>

// Attention kernels on raw C x H x W buffers, plus the allocation counter used
// to measure their intermediate footprint. Attention-map buffers in both the
// channel-wise kernel and the standard reference are CountedBuffers.
namespace tscnet::core {

struct ScratchStats {
  std::size_t live_elements = 0;
  std::size_t peak_elements = 0;
  std::size_t allocations = 0;
};

ScratchStats scratch_stats();
void reset_scratch_stats();

namespace detail {
void scratch_acquire(std::size_t elements);
void scratch_release(std::size_t elements);
}  // namespace detail

template <typename T>
class CountedBuffer {
 public:
  explicit CountedBuffer(std::size_t elements) : data_(elements) {
    detail::scratch_acquire(elements);
  }
  ~CountedBuffer() { detail::scratch_release(data_.size()); }
  CountedBuffer(const CountedBuffer&) = delete;
  CountedBuffer& operator=(const CountedBuffer&) = delete;

  std::span<T> span() { return data_; }
  std::span<const T> span() const { return data_; }
  std::size_t size() const { return data_.size(); }

 private:
  std::vector<T> data_;
};

// attn receives the C x H x H maps, out the C x H x W result.
template <typename T>
void channelwise_attention_kernel(std::span<const T> q, std::span<const T> k, std::span<const T> v,
                                  int channels, int height, int width, std::span<T> attn,
                                  std::span<T> out);

// Standard dot-product attention over the H*W positions with C features; the
// (HW) x (HW) score matrix is a CountedBuffer. Returns C x H x W.
// Reference path for tests and benchmarks only.
template <typename T>
std::vector<T> standard_attention_reference(std::span<const T> q, std::span<const T> k,
                                            std::span<const T> v, int channels, int height,
                                            int width);

}  // namespace tscnet::core
