#include <cmath>

#include "core/op_support.hpp"
#include "core/ops.hpp"

namespace tscnet::core {

using detail::input_grad;
using detail::record;
using detail::require;
using detail::require_shape;

namespace {

struct Window {
  int begin, end;
};

std::vector<Window> adaptive_windows(int in, int out) {
  std::vector<Window> w(static_cast<std::size_t>(out));
  for (int i = 0; i < out; ++i) {
    w[static_cast<std::size_t>(i)].begin = (i * in) / out;
    w[static_cast<std::size_t>(i)].end = ((i + 1) * in + out - 1) / out;
  }
  return w;
}

// Half-pixel sampling positions for an upsampling axis.
struct Tap {
  int lo, hi;
  double frac;
};

std::vector<Tap> bilinear_taps(int in, int out) {
  std::vector<Tap> taps(static_cast<std::size_t>(out));
  const double ratio = static_cast<double>(in) / static_cast<double>(out);
  for (int i = 0; i < out; ++i) {
    double src = (static_cast<double>(i) + 0.5) * ratio - 0.5;
    if (src < 0.0) src = 0.0;
    int lo = static_cast<int>(std::floor(src));
    if (lo > in - 1) lo = in - 1;
    const int hi = lo + 1 < in ? lo + 1 : in - 1;
    taps[static_cast<std::size_t>(i)] = {lo, hi, src - lo};
  }
  return taps;
}

}  // namespace

template <typename T>
Tensor<T> pool_resize(const Tensor<T>& x, PoolMode mode, int out_h, int out_w) {
  require(x.rank() == 3, "pool_resize expects C x H x W, got " + dims_to_string(x.dims()));
  const int C = x.dim(0);
  const int H = x.dim(1);
  const int W = x.dim(2);
  const auto plane_in = static_cast<std::size_t>(H) * static_cast<std::size_t>(W);
  const auto xv = x.values();

  if (mode == PoolMode::global_avg) {
    std::vector<T> out(static_cast<std::size_t>(C));
    for (int c = 0; c < C; ++c) {
      T acc = 0;
      for (std::size_t i = 0; i < plane_in; ++i) acc += xv[static_cast<std::size_t>(c) * plane_in + i];
      out[static_cast<std::size_t>(c)] = acc / static_cast<T>(plane_in);
    }
    return record<T>("global_avg_pool", Dims{C, 1, 1}, std::move(out), {&x},
                     [C, plane_in](Node<T>& self) {
                       auto gx = input_grad(self, 0);
                       for (int c = 0; c < C; ++c) {
                         const T g = self.grad[static_cast<std::size_t>(c)] / static_cast<T>(plane_in);
                         for (std::size_t i = 0; i < plane_in; ++i) gx[static_cast<std::size_t>(c) * plane_in + i] += g;
                       }
                     });
  }

  require_shape(out_h > 0 && out_w > 0, "pool_resize output dims must be positive");
  const auto plane_out = static_cast<std::size_t>(out_h) * static_cast<std::size_t>(out_w);
  std::vector<T> out(static_cast<std::size_t>(C) * plane_out, T(0));

  if (mode == PoolMode::adaptive_avg) {
    require_shape(out_h <= H && out_w <= W,
                  "adaptive_avg cannot upsample " + dims_to_string(x.dims()) + " to " +
                      std::to_string(out_h) + "x" + std::to_string(out_w));
    const auto rows = adaptive_windows(H, out_h);
    const auto cols = adaptive_windows(W, out_w);
    for (int c = 0; c < C; ++c) {
      const T* in = xv.data() + static_cast<std::size_t>(c) * plane_in;
      T* o = out.data() + static_cast<std::size_t>(c) * plane_out;
      for (int i = 0; i < out_h; ++i) {
        const Window r = rows[static_cast<std::size_t>(i)];
        for (int j = 0; j < out_w; ++j) {
          const Window q = cols[static_cast<std::size_t>(j)];
          T acc = 0;
          for (int y = r.begin; y < r.end; ++y) {
            for (int x0 = q.begin; x0 < q.end; ++x0) acc += in[y * W + x0];
          }
          o[i * out_w + j] = acc / static_cast<T>((r.end - r.begin) * (q.end - q.begin));
        }
      }
    }
    return record<T>("adaptive_avg_pool", Dims{C, out_h, out_w}, std::move(out), {&x},
                     [C, H, W, out_h, out_w, rows, cols, plane_in, plane_out](Node<T>& self) {
                       auto gx = input_grad(self, 0);
                       for (int c = 0; c < C; ++c) {
                         T* gin = gx.data() + static_cast<std::size_t>(c) * plane_in;
                         const T* g = self.grad.data() + static_cast<std::size_t>(c) * plane_out;
                         for (int i = 0; i < out_h; ++i) {
                           const Window r = rows[static_cast<std::size_t>(i)];
                           for (int j = 0; j < out_w; ++j) {
                             const Window q = cols[static_cast<std::size_t>(j)];
                             const T share = g[i * out_w + j] / static_cast<T>((r.end - r.begin) * (q.end - q.begin));
                             for (int y = r.begin; y < r.end; ++y) {
                               for (int x0 = q.begin; x0 < q.end; ++x0) gin[y * W + x0] += share;
                             }
                           }
                         }
                       }
                       (void)H;
                     });
  }

  require_shape(out_h >= H && out_w >= W,
                "bilinear_up cannot downsample " + dims_to_string(x.dims()) + " to " +
                    std::to_string(out_h) + "x" + std::to_string(out_w));
  const auto ty = bilinear_taps(H, out_h);
  const auto tx = bilinear_taps(W, out_w);
  for (int c = 0; c < C; ++c) {
    const T* in = xv.data() + static_cast<std::size_t>(c) * plane_in;
    T* o = out.data() + static_cast<std::size_t>(c) * plane_out;
    for (int i = 0; i < out_h; ++i) {
      const Tap a = ty[static_cast<std::size_t>(i)];
      const T fy = static_cast<T>(a.frac);
      for (int j = 0; j < out_w; ++j) {
        const Tap b = tx[static_cast<std::size_t>(j)];
        const T fx = static_cast<T>(b.frac);
        const T top = (T(1) - fx) * in[a.lo * W + b.lo] + fx * in[a.lo * W + b.hi];
        const T bottom = (T(1) - fx) * in[a.hi * W + b.lo] + fx * in[a.hi * W + b.hi];
        o[i * out_w + j] = (T(1) - fy) * top + fy * bottom;
      }
    }
  }
  return record<T>("bilinear_up", Dims{C, out_h, out_w}, std::move(out), {&x},
                   [C, W, out_h, out_w, ty, tx, plane_in, plane_out](Node<T>& self) {
                     auto gx = input_grad(self, 0);
                     for (int c = 0; c < C; ++c) {
                       T* gin = gx.data() + static_cast<std::size_t>(c) * plane_in;
                       const T* g = self.grad.data() + static_cast<std::size_t>(c) * plane_out;
                       for (int i = 0; i < out_h; ++i) {
                         const Tap a = ty[static_cast<std::size_t>(i)];
                         const T fy = static_cast<T>(a.frac);
                         for (int j = 0; j < out_w; ++j) {
                           const Tap b = tx[static_cast<std::size_t>(j)];
                           const T fx = static_cast<T>(b.frac);
                           const T v = g[i * out_w + j];
                           gin[a.lo * W + b.lo] += v * (T(1) - fy) * (T(1) - fx);
                           gin[a.lo * W + b.hi] += v * (T(1) - fy) * fx;
                           gin[a.hi * W + b.lo] += v * fy * (T(1) - fx);
                           gin[a.hi * W + b.hi] += v * fy * fx;
                         }
                       }
                     }
                   });
}

template <typename T>
Tensor<T> max_pool2x2(const Tensor<T>& x) {
  require(x.rank() == 3, "max_pool2x2 expects C x H x W");
  const int C = x.dim(0);
  const int H = x.dim(1);
  const int W = x.dim(2);
  require_shape(H % 2 == 0 && W % 2 == 0, "max_pool2x2 needs even spatial dims, got " +
                                              dims_to_string(x.dims()));
  const int oh = H / 2;
  const int ow = W / 2;
  const auto xv = x.values();
  std::vector<T> out(static_cast<std::size_t>(C * oh * ow));
  std::vector<std::uint32_t> argmax(out.size());
  std::uint64_t pattern = 0;
  for (int c = 0; c < C; ++c) {
    for (int i = 0; i < oh; ++i) {
      for (int j = 0; j < ow; ++j) {
        std::size_t best = static_cast<std::size_t>((c * H + 2 * i) * W + 2 * j);
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const auto idx = static_cast<std::size_t>((c * H + 2 * i + dy) * W + 2 * j + dx);
            if (xv[idx] > xv[best]) best = idx;
          }
        }
        const auto o = static_cast<std::size_t>((c * oh + i) * ow + j);
        out[o] = xv[best];
        argmax[o] = static_cast<std::uint32_t>(best);
        pattern = pattern * 1099511628211ULL + best;
      }
    }
  }
  if (KinkMonitor::active()) KinkMonitor::fold(pattern);
  return record<T>("max_pool2x2", Dims{C, oh, ow}, std::move(out), {&x},
                   [argmax = std::move(argmax)](Node<T>& self) {
                     auto gx = input_grad(self, 0);
                     for (std::size_t o = 0; o < argmax.size(); ++o) gx[argmax[o]] += self.grad[o];
                   });
}

template <typename T>
Tensor<T> channel_mean(const Tensor<T>& x) {
  require(x.rank() == 3, "channel_mean expects C x H x W");
  const int C = x.dim(0);
  const auto plane = static_cast<std::size_t>(x.dim(1)) * static_cast<std::size_t>(x.dim(2));
  const auto xv = x.values();
  std::vector<T> out(plane, T(0));
  for (int c = 0; c < C; ++c) {
    for (std::size_t i = 0; i < plane; ++i) out[i] += xv[static_cast<std::size_t>(c) * plane + i];
  }
  for (T& v : out) v /= static_cast<T>(C);
  return record<T>("channel_mean", Dims{1, x.dim(1), x.dim(2)}, std::move(out), {&x},
                   [C, plane](Node<T>& self) {
                     auto gx = input_grad(self, 0);
                     for (int c = 0; c < C; ++c) {
                       for (std::size_t i = 0; i < plane; ++i) {
                         gx[static_cast<std::size_t>(c) * plane + i] += self.grad[i] / static_cast<T>(C);
                       }
                     }
                   });
}

template <typename T>
Tensor<T> channel_max(const Tensor<T>& x) {
  require(x.rank() == 3, "channel_max expects C x H x W");
  const int C = x.dim(0);
  const auto plane = static_cast<std::size_t>(x.dim(1)) * static_cast<std::size_t>(x.dim(2));
  const auto xv = x.values();
  std::vector<T> out(plane);
  std::vector<std::uint32_t> argmax(plane);
  std::uint64_t pattern = 0;
  for (std::size_t i = 0; i < plane; ++i) {
    std::size_t best = i;
    for (int c = 1; c < C; ++c) {
      const std::size_t idx = static_cast<std::size_t>(c) * plane + i;
      if (xv[idx] > xv[best]) best = idx;
    }
    out[i] = xv[best];
    argmax[i] = static_cast<std::uint32_t>(best);
    pattern = pattern * 1099511628211ULL + best;
  }
  if (KinkMonitor::active()) KinkMonitor::fold(pattern);
  return record<T>("channel_max", Dims{1, x.dim(1), x.dim(2)}, std::move(out), {&x},
                   [argmax = std::move(argmax)](Node<T>& self) {
                     auto gx = input_grad(self, 0);
                     for (std::size_t i = 0; i < argmax.size(); ++i) gx[argmax[i]] += self.grad[i];
                   });
}

#define TSCNET_INSTANTIATE(T)                                               \
  template Tensor<T> pool_resize(const Tensor<T>&, PoolMode, int, int);     \
  template Tensor<T> max_pool2x2(const Tensor<T>&);                         \
  template Tensor<T> channel_mean(const Tensor<T>&);                        \
  template Tensor<T> channel_max(const Tensor<T>&);

TSCNET_INSTANTIATE(float)
TSCNET_INSTANTIATE(double)
#undef TSCNET_INSTANTIATE

}  // namespace tscnet::core
