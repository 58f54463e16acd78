#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "core/op_support.hpp"
#include "core/ops.hpp"
#include "core/rng.hpp"

namespace tscnet::core {

using detail::input_grad;
using detail::record;
using detail::require;
using detail::require_shape;

namespace {

std::array<int, 4> pad4(const Dims& d) {
  std::array<int, 4> out{1, 1, 1, 1};
  std::copy(d.begin(), d.end(), out.begin() + static_cast<std::ptrdiff_t>(4 - d.size()));
  return out;
}

// Strides of `b` inside the iteration space of `a`; zero on broadcast axes.
std::array<std::size_t, 4> broadcast_strides(const Dims& a, const Dims& b) {
  require_shape(a.size() == b.size(), "broadcast needs equal ranks: " + dims_to_string(a) +
                                          " vs " + dims_to_string(b));
  for (std::size_t i = 0; i < a.size(); ++i) {
    require_shape(b[i] == 1 || b[i] == a[i],
                  "cannot broadcast " + dims_to_string(b) + " into " + dims_to_string(a));
  }
  const auto bd = pad4(b);
  const auto ad = pad4(a);
  std::array<std::size_t, 4> stride{};
  std::size_t s = 1;
  for (int i = 3; i >= 0; --i) {
    stride[static_cast<std::size_t>(i)] = (bd[static_cast<std::size_t>(i)] == 1 &&
                                           ad[static_cast<std::size_t>(i)] != 1)
                                              ? 0
                                              : s;
    s *= static_cast<std::size_t>(bd[static_cast<std::size_t>(i)]);
  }
  return stride;
}

// Calls fn(index_in_a, index_in_b) for every element of a.
template <typename Fn>
void for_each_broadcast(const Dims& a, const std::array<std::size_t, 4>& sb, Fn&& fn) {
  const auto ad = pad4(a);
  std::size_t ai = 0;
  for (int i0 = 0; i0 < ad[0]; ++i0) {
    for (int i1 = 0; i1 < ad[1]; ++i1) {
      for (int i2 = 0; i2 < ad[2]; ++i2) {
        const std::size_t base = static_cast<std::size_t>(i0) * sb[0] +
                                 static_cast<std::size_t>(i1) * sb[1] +
                                 static_cast<std::size_t>(i2) * sb[2];
        for (int i3 = 0; i3 < ad[3]; ++i3, ++ai) {
          fn(ai, base + static_cast<std::size_t>(i3) * sb[3]);
        }
      }
    }
  }
}

template <typename T>
T stable_sigmoid(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  const auto sb = broadcast_strides(a.dims(), b.dims());
  std::vector<T> out(a.values().begin(), a.values().end());
  const auto bv = b.values();
  for_each_broadcast(a.dims(), sb, [&](std::size_t i, std::size_t j) { out[i] += bv[j]; });
  return record<T>("add", a.dims(), std::move(out), {&a, &b}, [sb](Node<T>& self) {
    const auto g = std::span<const T>(self.grad);
    if (auto ga = input_grad(self, 0); !ga.empty()) {
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (auto gb = input_grad(self, 1); !gb.empty()) {
      for_each_broadcast(self.dims, sb, [&](std::size_t i, std::size_t j) { gb[j] += g[i]; });
    }
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  const auto sb = broadcast_strides(a.dims(), b.dims());
  std::vector<T> out(a.numel());
  const auto av = a.values();
  const auto bv = b.values();
  for_each_broadcast(a.dims(), sb, [&](std::size_t i, std::size_t j) { out[i] = av[i] * bv[j]; });
  return record<T>("mul", a.dims(), std::move(out), {&a, &b}, [sb](Node<T>& self) {
    const auto g = std::span<const T>(self.grad);
    const auto& av = self.inputs[0]->value;
    const auto& bv = self.inputs[1]->value;
    auto ga = input_grad(self, 0);
    auto gb = input_grad(self, 1);
    for_each_broadcast(self.dims, sb, [&](std::size_t i, std::size_t j) {
      if (!ga.empty()) ga[i] += g[i] * bv[j];
      if (!gb.empty()) gb[j] += g[i] * av[i];
    });
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor) {
  std::vector<T> out(x.values().begin(), x.values().end());
  for (T& v : out) v *= factor;
  return record<T>("scale", x.dims(), std::move(out), {&x}, [factor](Node<T>& self) {
    auto gx = input_grad(self, 0);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += factor * self.grad[i];
  });
}

template <typename T>
Tensor<T> activation(const Tensor<T>& x, Activation kind) {
  const auto xv = x.values();
  std::vector<T> out(xv.size());
  switch (kind) {
    case Activation::relu: {
      std::uint64_t mask_hash = 0;
      for (std::size_t i = 0; i < xv.size(); ++i) {
        out[i] = xv[i] > T(0) ? xv[i] : T(0);
        if (xv[i] > T(0)) mask_hash = mask_hash * 31 + i + 1;
      }
      if (KinkMonitor::active()) KinkMonitor::fold(mask_hash);
      return record<T>("relu", x.dims(), std::move(out), {&x}, [](Node<T>& self) {
        auto gx = input_grad(self, 0);
        const auto& xin = self.inputs[0]->value;
        for (std::size_t i = 0; i < gx.size(); ++i) {
          if (xin[i] > T(0)) gx[i] += self.grad[i];
        }
      });
    }
    case Activation::sigmoid: {
      for (std::size_t i = 0; i < xv.size(); ++i) out[i] = stable_sigmoid(xv[i]);
      return record<T>("sigmoid", x.dims(), std::move(out), {&x}, [](Node<T>& self) {
        auto gx = input_grad(self, 0);
        for (std::size_t i = 0; i < gx.size(); ++i) {
          const T y = self.value[i];
          gx[i] += self.grad[i] * y * (T(1) - y);
        }
      });
    }
    case Activation::gelu: {
      const T inv_sqrt2 = T(1) / std::numbers::sqrt2_v<T>;
      for (std::size_t i = 0; i < xv.size(); ++i) {
        out[i] = T(0.5) * xv[i] * (T(1) + std::erf(xv[i] * inv_sqrt2));
      }
      return record<T>("gelu", x.dims(), std::move(out), {&x}, [inv_sqrt2](Node<T>& self) {
        auto gx = input_grad(self, 0);
        const auto& xin = self.inputs[0]->value;
        const T inv_sqrt_2pi = inv_sqrt2 * std::numbers::inv_sqrtpi_v<T>;
        for (std::size_t i = 0; i < gx.size(); ++i) {
          const T z = xin[i];
          const T cdf = T(0.5) * (T(1) + std::erf(z * inv_sqrt2));
          const T pdf = inv_sqrt_2pi * std::exp(T(-0.5) * z * z);
          gx[i] += self.grad[i] * (cdf + z * pdf);
        }
      });
    }
    case Activation::softmax_last: {
      const auto len = static_cast<std::size_t>(x.dims().back());
      const std::size_t rows = xv.size() / len;
      for (std::size_t r = 0; r < rows; ++r) {
        const T* in = xv.data() + r * len;
        T* o = out.data() + r * len;
        const T peak = *std::max_element(in, in + len);
        T total = 0;
        for (std::size_t j = 0; j < len; ++j) {
          o[j] = std::exp(in[j] - peak);
          total += o[j];
        }
        for (std::size_t j = 0; j < len; ++j) o[j] /= total;
      }
      return record<T>("softmax", x.dims(), std::move(out), {&x}, [len, rows](Node<T>& self) {
        auto gx = input_grad(self, 0);
        for (std::size_t r = 0; r < rows; ++r) {
          const T* y = self.value.data() + r * len;
          const T* g = self.grad.data() + r * len;
          T dot = 0;
          for (std::size_t j = 0; j < len; ++j) dot += g[j] * y[j];
          for (std::size_t j = 0; j < len; ++j) gx[r * len + j] += y[j] * (g[j] - dot);
        }
      });
    }
  }
  throw ContractError("unknown activation");
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Dims dims) {
  require_shape(numel_of(dims) == x.numel(),
                "reshape " + dims_to_string(x.dims()) + " -> " + dims_to_string(dims));
  std::vector<T> out(x.values().begin(), x.values().end());
  return record<T>("reshape", std::move(dims), std::move(out), {&x}, [](Node<T>& self) {
    auto gx = input_grad(self, 0);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
  require(a.rank() == 2, "transpose needs a rank-2 tensor, got " + dims_to_string(a.dims()));
  const int m = a.dim(0);
  const int n = a.dim(1);
  const auto av = a.values();
  std::vector<T> out(av.size());
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) out[static_cast<std::size_t>(j * m + i)] = av[static_cast<std::size_t>(i * n + j)];
  }
  return record<T>("transpose", Dims{n, m}, std::move(out), {&a}, [m, n](Node<T>& self) {
    auto ga = input_grad(self, 0);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) {
        ga[static_cast<std::size_t>(i * n + j)] += self.grad[static_cast<std::size_t>(j * m + i)];
      }
    }
  });
}

namespace {

struct AxisSplit {
  std::size_t outer = 1;
  std::size_t inner = 1;
};

AxisSplit split_at(const Dims& dims, int axis) {
  AxisSplit s;
  for (int i = 0; i < axis; ++i) s.outer *= static_cast<std::size_t>(dims[static_cast<std::size_t>(i)]);
  for (std::size_t i = static_cast<std::size_t>(axis) + 1; i < dims.size(); ++i) {
    s.inner *= static_cast<std::size_t>(dims[i]);
  }
  return s;
}

}  // namespace

template <typename T>
Tensor<T> concat(std::span<const Tensor<T>> parts, int axis) {
  require(!parts.empty(), "concat of zero tensors");
  const Dims& ref = parts[0].dims();
  if (axis < 0) axis += static_cast<int>(ref.size());
  require(axis >= 0 && axis < static_cast<int>(ref.size()), "concat axis out of range");
  Dims out_dims = ref;
  out_dims[static_cast<std::size_t>(axis)] = 0;
  std::vector<int> extents;
  for (const auto& p : parts) {
    Dims d = p.dims();
    require_shape(d.size() == ref.size(), "concat rank mismatch");
    for (std::size_t i = 0; i < d.size(); ++i) {
      require_shape(static_cast<int>(i) == axis || d[i] == ref[i],
                    "concat extent mismatch: " + dims_to_string(d) + " vs " + dims_to_string(ref));
    }
    extents.push_back(d[static_cast<std::size_t>(axis)]);
    out_dims[static_cast<std::size_t>(axis)] += d[static_cast<std::size_t>(axis)];
  }
  const AxisSplit s = split_at(out_dims, axis);
  const auto total_axis = static_cast<std::size_t>(out_dims[static_cast<std::size_t>(axis)]);
  std::vector<T> out(numel_of(out_dims));
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const auto block = static_cast<std::size_t>(extents[p]) * s.inner;
    const auto pv = parts[p].values();
    for (std::size_t o = 0; o < s.outer; ++o) {
      std::copy_n(pv.data() + o * block, block, out.data() + o * total_axis * s.inner + offset);
    }
    offset += block;
  }

  auto node = std::make_shared<Node<T>>();
  // record() takes a fixed input list; concat is variadic, so build directly.
  detail::check_finite<T>(out, "concat");
  node->dims = out_dims;
  node->value = std::move(out);
  node->op = "concat";
  node->seq = next_sequence_number();
  bool needs = false;
  if (grad_enabled()) {
    for (const auto& p : parts) needs = needs || p.requires_grad();
  }
  if (needs) {
    node->requires_grad = true;
    for (const auto& p : parts) node->inputs.push_back(p.node());
    node->backward = [extents, s, total_axis](Node<T>& self) {
      std::size_t offset = 0;
      for (std::size_t p = 0; p < extents.size(); ++p) {
        const auto block = static_cast<std::size_t>(extents[p]) * s.inner;
        if (auto g = input_grad(self, p); !g.empty()) {
          for (std::size_t o = 0; o < s.outer; ++o) {
            const T* src = self.grad.data() + o * total_axis * s.inner + offset;
            T* dst = g.data() + o * block;
            for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
          }
        }
        offset += block;
      }
    };
  }
  return Tensor<T>(std::move(node));
}

template <typename T>
Tensor<T> narrow(const Tensor<T>& x, int axis, int start, int length) {
  if (axis < 0) axis += x.rank();
  require(axis >= 0 && axis < x.rank(), "narrow axis out of range");
  const int extent = x.dim(axis);
  require(start >= 0 && length > 0 && start + length <= extent, "narrow range out of bounds");
  Dims out_dims = x.dims();
  out_dims[static_cast<std::size_t>(axis)] = length;
  const AxisSplit s = split_at(x.dims(), axis);
  const std::size_t src_block = static_cast<std::size_t>(extent) * s.inner;
  const std::size_t dst_block = static_cast<std::size_t>(length) * s.inner;
  const std::size_t shift = static_cast<std::size_t>(start) * s.inner;
  std::vector<T> out(s.outer * dst_block);
  const auto xv = x.values();
  for (std::size_t o = 0; o < s.outer; ++o) {
    std::copy_n(xv.data() + o * src_block + shift, dst_block, out.data() + o * dst_block);
  }
  return record<T>("narrow", std::move(out_dims), std::move(out), {&x},
                   [s, src_block, dst_block, shift](Node<T>& self) {
                     auto gx = input_grad(self, 0);
                     for (std::size_t o = 0; o < s.outer; ++o) {
                       for (std::size_t i = 0; i < dst_block; ++i) {
                         gx[o * src_block + shift + i] += self.grad[o * dst_block + i];
                       }
                     }
                   });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T total = 0;
  for (T v : x.values()) total += v;
  return record<T>("sum", Dims{1}, std::vector<T>{total}, {&x}, [](Node<T>& self) {
    auto gx = input_grad(self, 0);
    for (T& g : gx) g += self.grad[0];
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  T total = 0;
  for (T v : x.values()) total += v;
  const T inv_n = T(1) / static_cast<T>(x.numel());
  return record<T>("mean", Dims{1}, std::vector<T>{total * inv_n}, {&x}, [inv_n](Node<T>& self) {
    auto gx = input_grad(self, 0);
    for (T& g : gx) g += self.grad[0] * inv_n;
  });
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps) {
  const auto len = static_cast<std::size_t>(x.dims().back());
  require(gamma.numel() == len && beta.numel() == len, "layer_norm parameter length mismatch");
  const std::size_t rows = x.numel() / len;
  const auto xv = x.values();
  const auto gv = gamma.values();
  const auto bv = beta.values();
  std::vector<T> out(xv.size());
  std::vector<T> xhat(xv.size());
  std::vector<T> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* in = xv.data() + r * len;
    T mu = 0;
    for (std::size_t j = 0; j < len; ++j) mu += in[j];
    mu /= static_cast<T>(len);
    T var = 0;
    for (std::size_t j = 0; j < len; ++j) var += (in[j] - mu) * (in[j] - mu);
    var /= static_cast<T>(len);
    inv_std[r] = T(1) / std::sqrt(var + eps);
    for (std::size_t j = 0; j < len; ++j) {
      xhat[r * len + j] = (in[j] - mu) * inv_std[r];
      out[r * len + j] = xhat[r * len + j] * gv[j] + bv[j];
    }
  }
  return record<T>(
      "layer_norm", x.dims(), std::move(out), {&x, &gamma, &beta},
      [len, rows, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node<T>& self) {
        auto gx = input_grad(self, 0);
        auto gg = input_grad(self, 1);
        auto gb = input_grad(self, 2);
        const auto& gamma_v = self.inputs[1]->value;
        std::vector<T> dxhat(len);
        for (std::size_t r = 0; r < rows; ++r) {
          const T* g = self.grad.data() + r * len;
          const T* xh = xhat.data() + r * len;
          T mean_d = 0;
          T mean_dx = 0;
          for (std::size_t j = 0; j < len; ++j) {
            dxhat[j] = g[j] * gamma_v[j];
            mean_d += dxhat[j];
            mean_dx += dxhat[j] * xh[j];
            if (!gg.empty()) gg[j] += g[j] * xh[j];
            if (!gb.empty()) gb[j] += g[j];
          }
          mean_d /= static_cast<T>(len);
          mean_dx /= static_cast<T>(len);
          if (!gx.empty()) {
            for (std::size_t j = 0; j < len; ++j) {
              gx[r * len + j] += inv_std[r] * (dxhat[j] - mean_d - xh[j] * mean_dx);
            }
          }
        }
      });
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double rate, std::uint64_t seed) {
  require(rate >= 0.0 && rate < 1.0, "dropout rate must be in [0, 1)");
  std::vector<T> mask(x.numel(), T(1));
  if (rate > 0.0) {
    Rng rng(seed);
    const T keep_scale = T(1) / static_cast<T>(1.0 - rate);
    for (T& m : mask) m = rng.uniform() < rate ? T(0) : keep_scale;
  }
  std::vector<T> out(x.numel());
  const auto xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] * mask[i];
  return record<T>("dropout", x.dims(), std::move(out), {&x},
                   [mask = std::move(mask)](Node<T>& self) {
                     auto gx = input_grad(self, 0);
                     for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i] * mask[i];
                   });
}

template <typename T>
Tensor<T> make_op(const char* name, Dims dims, std::vector<T> values,
                  std::vector<Tensor<T>> inputs, BackwardFn<T> backward_fn) {
  require(numel_of(dims) == values.size(), std::string(name) + ": value count mismatch");
  detail::check_finite<T>(values, name);
  auto node = std::make_shared<Node<T>>();
  node->dims = std::move(dims);
  node->value = std::move(values);
  node->op = name;
  node->seq = next_sequence_number();
  bool needs = false;
  if (grad_enabled()) {
    for (const auto& in : inputs) needs = needs || in.requires_grad();
  }
  if (needs) {
    node->requires_grad = true;
    for (const auto& in : inputs) node->inputs.push_back(in.node());
    node->backward = std::move(backward_fn);
  }
  return Tensor<T>(std::move(node));
}

#define TSCNET_INSTANTIATE(T)                                                                  \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> scale(const Tensor<T>&, T);                                               \
  template Tensor<T> activation(const Tensor<T>&, Activation);                                 \
  template Tensor<T> reshape(const Tensor<T>&, Dims);                                          \
  template Tensor<T> transpose(const Tensor<T>&);                                              \
  template Tensor<T> concat(std::span<const Tensor<T>>, int);                                  \
  template Tensor<T> narrow(const Tensor<T>&, int, int, int);                                  \
  template Tensor<T> sum(const Tensor<T>&);                                                    \
  template Tensor<T> mean(const Tensor<T>&);                                                   \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);      \
  template Tensor<T> dropout(const Tensor<T>&, double, std::uint64_t);                         \
  template Tensor<T> make_op(const char*, Dims, std::vector<T>, std::vector<Tensor<T>>,        \
                             BackwardFn<T>);

TSCNET_INSTANTIATE(float)
TSCNET_INSTANTIATE(double)
#undef TSCNET_INSTANTIATE

}  // namespace tscnet::core
