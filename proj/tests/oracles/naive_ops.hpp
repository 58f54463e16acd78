#pragma once

// Deliberately naive reference implementations, written straight from the
// textbook definitions and sharing no code with src/core.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

inline std::vector<double> random_values(std::size_t n, std::uint64_t seed, double lo = -1.0,
                                         double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

struct ConvSpec {
  int stride = 1, dilation = 1, pad_top = 0, pad_bottom = 0, pad_left = 0, pad_right = 0;
};

// Sliding window: out[o][y][x] = b[o] + sum_{c,i,j} w[o][c][i][j] * in[c][y*s - pt + i*d][x*s - pl + j*d]
inline std::vector<double> conv2d(const std::vector<double>& in, int C, int H, int W,
                                  const std::vector<double>& w, int O, int KH, int KW,
                                  const std::vector<double>& bias, const ConvSpec& s, int& OH,
                                  int& OW) {
  OH = (H + s.pad_top + s.pad_bottom - s.dilation * (KH - 1) - 1) / s.stride + 1;
  OW = (W + s.pad_left + s.pad_right - s.dilation * (KW - 1) - 1) / s.stride + 1;
  std::vector<double> out(static_cast<std::size_t>(O * OH * OW), 0.0);
  for (int o = 0; o < O; ++o)
    for (int y = 0; y < OH; ++y)
      for (int x = 0; x < OW; ++x) {
        double acc = bias.empty() ? 0.0 : bias[o];
        for (int c = 0; c < C; ++c)
          for (int i = 0; i < KH; ++i)
            for (int j = 0; j < KW; ++j) {
              const int iy = y * s.stride - s.pad_top + i * s.dilation;
              const int ix = x * s.stride - s.pad_left + j * s.dilation;
              if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
              acc += w[((o * C + c) * KH + i) * KW + j] * in[(c * H + iy) * W + ix];
            }
        out[(o * OH + y) * OW + x] = acc;
      }
  return out;
}

inline std::vector<double> matmul(const std::vector<double>& a, const std::vector<double>& b,
                                  int m, int k, int n) {
  std::vector<double> c(static_cast<std::size_t>(m * n), 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      for (int t = 0; t < k; ++t) c[i * n + j] += a[i * k + t] * b[t * n + j];
  return c;
}

// For each channel: A = softmax_rows(q k^T / sqrt(W)), out = A v; literal loops.
inline std::vector<double> channel_attention(const std::vector<double>& q,
                                             const std::vector<double>& k,
                                             const std::vector<double>& v, int C, int H, int W,
                                             std::vector<double>* maps = nullptr) {
  std::vector<double> out(static_cast<std::size_t>(C * H * W), 0.0);
  if (maps) maps->assign(static_cast<std::size_t>(C * H * H), 0.0);
  for (int c = 0; c < C; ++c) {
    std::vector<std::vector<double>> A(H, std::vector<double>(H, 0.0));
    for (int i = 0; i < H; ++i) {
      for (int j = 0; j < H; ++j) {
        double dot = 0.0;
        for (int t = 0; t < W; ++t) dot += q[(c * H + i) * W + t] * k[(c * H + j) * W + t];
        A[i][j] = dot / std::sqrt(static_cast<double>(W));
      }
      double mx = A[i][0];
      for (int j = 1; j < H; ++j) mx = std::max(mx, A[i][j]);
      double z = 0.0;
      for (int j = 0; j < H; ++j) z += std::exp(A[i][j] - mx);
      for (int j = 0; j < H; ++j) A[i][j] = std::exp(A[i][j] - mx) / z;
    }
    for (int i = 0; i < H; ++i)
      for (int t = 0; t < W; ++t) {
        double acc = 0.0;
        for (int j = 0; j < H; ++j) acc += A[i][j] * v[(c * H + j) * W + t];
        out[(c * H + i) * W + t] = acc;
      }
    if (maps)
      for (int i = 0; i < H; ++i)
        for (int j = 0; j < H; ++j) (*maps)[(c * H + i) * H + j] = A[i][j];
  }
  return out;
}

// Mean of each (H/oh) x (W/ow) block; sizes must divide evenly.
inline std::vector<double> block_means(const std::vector<double>& in, int C, int H, int W, int oh,
                                       int ow) {
  const int bh = H / oh, bw = W / ow;
  std::vector<double> out(static_cast<std::size_t>(C * oh * ow), 0.0);
  for (int c = 0; c < C; ++c)
    for (int i = 0; i < oh; ++i)
      for (int j = 0; j < ow; ++j) {
        double acc = 0.0;
        for (int y = i * bh; y < (i + 1) * bh; ++y)
          for (int x = j * bw; x < (j + 1) * bw; ++x) acc += in[(c * H + y) * W + x];
        out[(c * oh + i) * ow + j] = acc / (bh * bw);
      }
  return out;
}

// Half-pixel bilinear resampling: source coordinate (i + 0.5) * in / out - 0.5,
// clamped at 0, neighbours clamped at the last row/column.
inline std::vector<double> bilinear(const std::vector<double>& in, int C, int H, int W, int OH, int OW) {
  std::vector<double> out(static_cast<std::size_t>(C * OH * OW), 0.0);
  for (int c = 0; c < C; ++c)
    for (int i = 0; i < OH; ++i)
      for (int j = 0; j < OW; ++j) {
        double sy = (i + 0.5) * H / OH - 0.5;
        double sx = (j + 0.5) * W / OW - 0.5;
        if (sy < 0) sy = 0;
        if (sx < 0) sx = 0;
        const int y0 = static_cast<int>(std::floor(sy));
        const int x0 = static_cast<int>(std::floor(sx));
        const int y1 = std::min(y0 + 1, H - 1);
        const int x1 = std::min(x0 + 1, W - 1);
        const double fy = sy - y0;
        const double fx = sx - x0;
        auto at = [&](int y, int x) { return in[(c * H + y) * W + x]; };
        out[(c * OH + i) * OW + j] = (1 - fy) * ((1 - fx) * at(y0, x0) + fx * at(y0, x1)) +
                                     fy * ((1 - fx) * at(y1, x0) + fx * at(y1, x1));
      }
  return out;
}

// Adaptive average pooling: window rows floor(i*H/OH) .. ceil((i+1)*H/OH).
inline std::vector<double> adaptive_avg(const std::vector<double>& in, int C, int H, int W, int OH, int OW) {
  std::vector<double> out(static_cast<std::size_t>(C * OH * OW), 0.0);
  for (int c = 0; c < C; ++c)
    for (int i = 0; i < OH; ++i)
      for (int j = 0; j < OW; ++j) {
        const int y0 = (i * H) / OH, y1 = ((i + 1) * H + OH - 1) / OH;
        const int x0 = (j * W) / OW, x1 = ((j + 1) * W + OW - 1) / OW;
        double acc = 0.0;
        for (int y = y0; y < y1; ++y)
          for (int x = x0; x < x1; ++x) acc += in[(c * H + y) * W + x];
        out[(c * OH + i) * OW + j] = acc / ((y1 - y0) * (x1 - x0));
      }
  return out;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace oracle
