#include <Eigen/Core>

#include "core/op_support.hpp"
#include "core/ops.hpp"

namespace tscnet::core {

using detail::input_grad;
using detail::record;
using detail::require;
using detail::require_shape;

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Mat = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMat = Eigen::Map<const RowMat<T>>;

struct ConvGeometry {
  int channels, height, width;
  int kernel_h, kernel_w;
  Conv2dOptions opt;
  int out_h, out_w;

  std::size_t rows() const {
    return static_cast<std::size_t>(channels) * static_cast<std::size_t>(kernel_h * kernel_w);
  }
  std::size_t positions() const { return static_cast<std::size_t>(out_h) * static_cast<std::size_t>(out_w); }
  bool is_pointwise() const {
    return kernel_h == 1 && kernel_w == 1 && opt.stride == 1 && opt.pad_top == 0 &&
           opt.pad_bottom == 0 && opt.pad_left == 0 && opt.pad_right == 0;
  }
};

int conv_out_extent(int in, int pad_a, int pad_b, int dilation, int kernel, int stride) {
  const int span = in + pad_a + pad_b - dilation * (kernel - 1) - 1;
  if (span < 0) return 0;
  return span / stride + 1;
}

template <typename T>
void im2col(const T* x, const ConvGeometry& g, T* cols) {
  const std::size_t positions = g.positions();
  for (int c = 0; c < g.channels; ++c) {
    for (int ki = 0; ki < g.kernel_h; ++ki) {
      for (int kj = 0; kj < g.kernel_w; ++kj) {
        T* row = cols + (static_cast<std::size_t>((c * g.kernel_h + ki) * g.kernel_w + kj)) * positions;
        const T* plane = x + static_cast<std::size_t>(c) * static_cast<std::size_t>(g.height * g.width);
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.opt.stride - g.opt.pad_top + ki * g.opt.dilation;
          T* dst = row + static_cast<std::size_t>(oy * g.out_w);
          if (iy < 0 || iy >= g.height) {
            std::fill(dst, dst + g.out_w, T(0));
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(iy * g.width);
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.opt.stride - g.opt.pad_left + kj * g.opt.dilation;
            dst[ox] = (ix >= 0 && ix < g.width) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

// Scatter-add of im2col's layout back onto the image.
template <typename T>
void col2im_add(const T* cols, const ConvGeometry& g, T* x) {
  const std::size_t positions = g.positions();
  for (int c = 0; c < g.channels; ++c) {
    for (int ki = 0; ki < g.kernel_h; ++ki) {
      for (int kj = 0; kj < g.kernel_w; ++kj) {
        const T* row = cols + (static_cast<std::size_t>((c * g.kernel_h + ki) * g.kernel_w + kj)) * positions;
        T* plane = x + static_cast<std::size_t>(c) * static_cast<std::size_t>(g.height * g.width);
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.opt.stride - g.opt.pad_top + ki * g.opt.dilation;
          if (iy < 0 || iy >= g.height) continue;
          const T* src = row + static_cast<std::size_t>(oy * g.out_w);
          T* dst = plane + static_cast<std::size_t>(iy * g.width);
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.opt.stride - g.opt.pad_left + kj * g.opt.dilation;
            if (ix >= 0 && ix < g.width) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

void check_bias(std::size_t bias_numel, int out_channels, bool defined) {
  if (defined) {
    require(bias_numel == static_cast<std::size_t>(out_channels),
            "bias length " + std::to_string(bias_numel) + " != output channels " +
                std::to_string(out_channels));
  }
}

}  // namespace

Conv2dOptions Conv2dOptions::same(int kernel_h, int kernel_w, int dilation) {
  Conv2dOptions o;
  o.dilation = dilation;
  o.pad_top = o.pad_bottom = dilation * (kernel_h - 1) / 2;
  o.pad_left = o.pad_right = dilation * (kernel_w - 1) / 2;
  return o;
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 const Conv2dOptions& options) {
  require(x.rank() == 3, "conv2d input must be C x H x W, got " + dims_to_string(x.dims()));
  require(weight.rank() == 4, "conv2d weight must be Cout x Cin x kh x kw");
  require(weight.dim(1) == x.dim(0), "conv2d channel mismatch: input " + dims_to_string(x.dims()) +
                                         " weight " + dims_to_string(weight.dims()));
  require(options.stride >= 1 && options.dilation >= 1, "stride and dilation must be >= 1");
  require(options.pad_top >= 0 && options.pad_bottom >= 0 && options.pad_left >= 0 &&
              options.pad_right >= 0,
          "padding must be non-negative");
  const int out_channels = weight.dim(0);
  check_bias(bias.defined() ? bias.numel() : 0, out_channels, bias.defined());

  ConvGeometry g{x.dim(0), x.dim(1), x.dim(2), weight.dim(2), weight.dim(3), options, 0, 0};
  g.out_h = conv_out_extent(g.height, options.pad_top, options.pad_bottom, options.dilation,
                            g.kernel_h, options.stride);
  g.out_w = conv_out_extent(g.width, options.pad_left, options.pad_right, options.dilation,
                            g.kernel_w, options.stride);
  require_shape(g.out_h > 0 && g.out_w > 0,
                "conv2d produces an empty output for input " + dims_to_string(x.dims()));

  const std::size_t K = g.rows();
  const std::size_t P = g.positions();
  std::vector<T> cols_storage;
  const T* cols = x.values().data();
  if (!g.is_pointwise()) {
    cols_storage.resize(K * P);
    im2col(x.values().data(), g, cols_storage.data());
    cols = cols_storage.data();
  }

  std::vector<T> out(static_cast<std::size_t>(out_channels) * P);
  Mat<T> out_m(out.data(), out_channels, static_cast<Eigen::Index>(P));
  ConstMat<T> w_m(weight.values().data(), out_channels, static_cast<Eigen::Index>(K));
  ConstMat<T> cols_m(cols, static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(P));
  out_m.noalias() = w_m * cols_m;
  if (bias.defined()) {
    const auto bv = bias.values();
    for (int o = 0; o < out_channels; ++o) out_m.row(o).array() += bv[static_cast<std::size_t>(o)];
  }
  cols_storage = {};

  return record<T>("conv2d", Dims{out_channels, g.out_h, g.out_w}, std::move(out),
                   {&x, &weight, &bias}, [g, out_channels](Node<T>& self) {
                     const std::size_t K = g.rows();
                     const std::size_t P = g.positions();
                     const auto& xin = self.inputs[0]->value;
                     const auto& w = self.inputs[1]->value;
                     ConstMat<T> dout(self.grad.data(), out_channels, static_cast<Eigen::Index>(P));
                     auto gx = input_grad(self, 0);
                     auto gw = input_grad(self, 1);
                     auto gb = input_grad(self, 2);

                     std::vector<T> cols_storage;
                     const T* cols = xin.data();
                     if (!gw.empty() && !g.is_pointwise()) {
                       cols_storage.resize(K * P);
                       im2col(xin.data(), g, cols_storage.data());
                       cols = cols_storage.data();
                     }
                     if (!gw.empty()) {
                       Mat<T> gw_m(gw.data(), out_channels, static_cast<Eigen::Index>(K));
                       ConstMat<T> cols_m(cols, static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(P));
                       gw_m.noalias() += dout * cols_m.transpose();
                     }
                     if (!gb.empty()) {
                       for (int o = 0; o < out_channels; ++o) gb[static_cast<std::size_t>(o)] += dout.row(o).sum();
                     }
                     if (!gx.empty()) {
                       ConstMat<T> w_m(w.data(), out_channels, static_cast<Eigen::Index>(K));
                       if (g.is_pointwise()) {
                         Mat<T> gx_m(gx.data(), static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(P));
                         gx_m.noalias() += w_m.transpose() * dout;
                       } else {
                         cols_storage.resize(K * P);
                         Mat<T> dcols(cols_storage.data(), static_cast<Eigen::Index>(K),
                                      static_cast<Eigen::Index>(P));
                         dcols.noalias() = w_m.transpose() * dout;
                         col2im_add(cols_storage.data(), g, gx.data());
                       }
                     }
                   });
}

template <typename T>
Tensor<T> deconv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias, int stride) {
  require(x.rank() == 3, "deconv2d input must be C x H x W");
  require(weight.rank() == 4 && weight.dim(0) == x.dim(0),
          "deconv2d weight must be Cin x Cout x 4 x 4 with Cin = " + std::to_string(x.dim(0)));
  require_shape(stride == 2 && weight.dim(2) == 4 && weight.dim(3) == 4,
                "deconv2d only supports kernel 4, stride 2, padding 1 (exact x2)");
  const int in_channels = x.dim(0);
  const int out_channels = weight.dim(1);
  check_bias(bias.defined() ? bias.numel() : 0, out_channels, bias.defined());

  Conv2dOptions opt;
  opt.stride = 2;
  opt.pad_top = opt.pad_bottom = opt.pad_left = opt.pad_right = 1;
  // Geometry of the equivalent forward conv that maps the output back to x.
  const ConvGeometry g{out_channels, 2 * x.dim(1), 2 * x.dim(2), 4, 4, opt, x.dim(1), x.dim(2)};
  const std::size_t K = g.rows();
  const std::size_t P = g.positions();

  ConstMat<T> x_m(x.values().data(), in_channels, static_cast<Eigen::Index>(P));
  ConstMat<T> w_m(weight.values().data(), in_channels, static_cast<Eigen::Index>(K));
  std::vector<T> cols(K * P);
  Mat<T> cols_m(cols.data(), static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(P));
  cols_m.noalias() = w_m.transpose() * x_m;
  std::vector<T> out(static_cast<std::size_t>(out_channels) * static_cast<std::size_t>(g.height * g.width), T(0));
  col2im_add(cols.data(), g, out.data());
  if (bias.defined()) {
    const auto plane = static_cast<std::size_t>(g.height * g.width);
    for (int o = 0; o < out_channels; ++o) {
      const T b = bias.values()[static_cast<std::size_t>(o)];
      for (std::size_t i = 0; i < plane; ++i) out[static_cast<std::size_t>(o) * plane + i] += b;
    }
  }

  return record<T>("deconv2d", Dims{out_channels, g.height, g.width}, std::move(out),
                   {&x, &weight, &bias}, [g, in_channels, out_channels](Node<T>& self) {
                     const std::size_t K = g.rows();
                     const std::size_t P = g.positions();
                     auto gx = input_grad(self, 0);
                     auto gw = input_grad(self, 1);
                     auto gb = input_grad(self, 2);
                     std::vector<T> dcols(K * P);
                     im2col(self.grad.data(), g, dcols.data());
                     ConstMat<T> dcols_m(dcols.data(), static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(P));
                     if (!gx.empty()) {
                       ConstMat<T> w_m(self.inputs[1]->value.data(), in_channels, static_cast<Eigen::Index>(K));
                       Mat<T> gx_m(gx.data(), in_channels, static_cast<Eigen::Index>(P));
                       gx_m.noalias() += w_m * dcols_m;
                     }
                     if (!gw.empty()) {
                       ConstMat<T> x_m(self.inputs[0]->value.data(), in_channels, static_cast<Eigen::Index>(P));
                       Mat<T> gw_m(gw.data(), in_channels, static_cast<Eigen::Index>(K));
                       gw_m.noalias() += x_m * dcols_m.transpose();
                     }
                     if (!gb.empty()) {
                       const auto plane = static_cast<std::size_t>(g.height * g.width);
                       for (int o = 0; o < out_channels; ++o) {
                         T acc = 0;
                         for (std::size_t i = 0; i < plane; ++i) acc += self.grad[static_cast<std::size_t>(o) * plane + i];
                         gb[static_cast<std::size_t>(o)] += acc;
                       }
                     }
                   });
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  require(x.rank() == 1, "linear expects a rank-1 input, got " + dims_to_string(x.dims()));
  require(weight.rank() == 2 && weight.dim(1) == x.dim(0),
          "linear weight " + dims_to_string(weight.dims()) + " does not match input length " +
              std::to_string(x.dim(0)));
  const int m = weight.dim(0);
  const int n = weight.dim(1);
  check_bias(bias.defined() ? bias.numel() : 0, m, bias.defined());
  const auto xv = x.values();
  const auto wv = weight.values();
  std::vector<T> out(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    T acc = bias.defined() ? bias.values()[static_cast<std::size_t>(i)] : T(0);
    for (int j = 0; j < n; ++j) acc += wv[static_cast<std::size_t>(i * n + j)] * xv[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(i)] = acc;
  }
  return record<T>("linear", Dims{m}, std::move(out), {&x, &weight, &bias}, [m, n](Node<T>& self) {
    auto gx = input_grad(self, 0);
    auto gw = input_grad(self, 1);
    auto gb = input_grad(self, 2);
    const auto& xin = self.inputs[0]->value;
    const auto& w = self.inputs[1]->value;
    for (int i = 0; i < m; ++i) {
      const T g = self.grad[static_cast<std::size_t>(i)];
      if (!gb.empty()) gb[static_cast<std::size_t>(i)] += g;
      for (int j = 0; j < n; ++j) {
        if (!gw.empty()) gw[static_cast<std::size_t>(i * n + j)] += g * xin[static_cast<std::size_t>(j)];
        if (!gx.empty()) gx[static_cast<std::size_t>(j)] += g * w[static_cast<std::size_t>(i * n + j)];
      }
    }
  });
}

template <typename T>
Tensor<T> linear_rows(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  require(x.rank() == 2, "linear_rows expects N x in, got " + dims_to_string(x.dims()));
  require(weight.rank() == 2 && weight.dim(1) == x.dim(1), "linear_rows weight mismatch: " +
                                                              dims_to_string(weight.dims()) + " vs " +
                                                              dims_to_string(x.dims()));
  const int rows = x.dim(0);
  const int in = x.dim(1);
  const int out_features = weight.dim(0);
  check_bias(bias.defined() ? bias.numel() : 0, out_features, bias.defined());
  std::vector<T> out(static_cast<std::size_t>(rows) * static_cast<std::size_t>(out_features));
  Mat<T> y(out.data(), rows, out_features);
  y.noalias() = ConstMat<T>(x.values().data(), rows, in) *
                ConstMat<T>(weight.values().data(), out_features, in).transpose();
  if (bias.defined()) {
    for (int r = 0; r < rows; ++r) {
      for (int o = 0; o < out_features; ++o) y(r, o) += bias.values()[static_cast<std::size_t>(o)];
    }
  }
  return record<T>("linear_rows", Dims{rows, out_features}, std::move(out), {&x, &weight, &bias},
                   [rows, in, out_features](Node<T>& self) {
                     ConstMat<T> dy(self.grad.data(), rows, out_features);
                     if (auto gx = input_grad(self, 0); !gx.empty()) {
                       Mat<T>(gx.data(), rows, in).noalias() +=
                           dy * ConstMat<T>(self.inputs[1]->value.data(), out_features, in);
                     }
                     if (auto gw = input_grad(self, 1); !gw.empty()) {
                       Mat<T>(gw.data(), out_features, in).noalias() +=
                           dy.transpose() * ConstMat<T>(self.inputs[0]->value.data(), rows, in);
                     }
                     if (auto gb = input_grad(self, 2); !gb.empty()) {
                       for (int o = 0; o < out_features; ++o) gb[static_cast<std::size_t>(o)] += dy.col(o).sum();
                     }
                   });
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require(a.rank() == 2 && b.rank() == 2 && a.dim(1) == b.dim(0),
          "matmul shape mismatch: " + dims_to_string(a.dims()) + " x " + dims_to_string(b.dims()));
  const int m = a.dim(0);
  const int k = a.dim(1);
  const int n = b.dim(1);
  std::vector<T> out(static_cast<std::size_t>(m) * static_cast<std::size_t>(n));
  Mat<T>(out.data(), m, n).noalias() =
      ConstMat<T>(a.values().data(), m, k) * ConstMat<T>(b.values().data(), k, n);
  return record<T>("matmul", Dims{m, n}, std::move(out), {&a, &b}, [m, k, n](Node<T>& self) {
    ConstMat<T> dc(self.grad.data(), m, n);
    if (auto ga = input_grad(self, 0); !ga.empty()) {
      Mat<T>(ga.data(), m, k).noalias() += dc * ConstMat<T>(self.inputs[1]->value.data(), k, n).transpose();
    }
    if (auto gb = input_grad(self, 1); !gb.empty()) {
      Mat<T>(gb.data(), k, n).noalias() += ConstMat<T>(self.inputs[0]->value.data(), m, k).transpose() * dc;
    }
  });
}

#define TSCNET_INSTANTIATE(T)                                                                     \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,                 \
                            const Conv2dOptions&);                                                \
  template Tensor<T> deconv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int);         \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                \
  template Tensor<T> linear_rows(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);           \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);

TSCNET_INSTANTIATE(float)
TSCNET_INSTANTIATE(double)
#undef TSCNET_INSTANTIATE

}  // namespace tscnet::core
