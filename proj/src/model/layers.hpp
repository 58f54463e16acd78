#pragma once

#include <string>
#include <vector>

#include "core/ops.hpp"
#include "model/params.hpp"

namespace tscnet::model {

using core::Conv2dOptions;

inline void add_conv_spec(std::vector<ParamSpec>& specs, const std::string& prefix, int cout, int cin,
                          int kh, int kw) {
  specs.push_back({prefix + ".weight", {cout, cin, kh, kw}, Init::he_normal, cin * kh * kw});
  specs.push_back({prefix + ".bias", {cout}, Init::zeros, 0});
}

inline void add_linear_spec(std::vector<ParamSpec>& specs, const std::string& prefix, int out, int in) {
  specs.push_back({prefix + ".weight", {out, in}, Init::he_normal, in});
  specs.push_back({prefix + ".bias", {out}, Init::zeros, 0});
}

inline void add_norm_spec(std::vector<ParamSpec>& specs, const std::string& prefix, int width) {
  specs.push_back({prefix + ".gamma", {width}, Init::ones, 0});
  specs.push_back({prefix + ".beta", {width}, Init::zeros, 0});
}

template <typename T>
Tensor<T> conv(const ParamStore<T>& p, const std::string& prefix, const Tensor<T>& x,
               const Conv2dOptions& options = {}) {
  return core::conv2d(x, p.at(prefix + ".weight"), p.at(prefix + ".bias"), options);
}

template <typename T>
Tensor<T> conv_relu(const ParamStore<T>& p, const std::string& prefix, const Tensor<T>& x,
                    const Conv2dOptions& options = {}) {
  return core::relu(conv(p, prefix, x, options));
}

// 3x3, padding 1.
template <typename T>
Tensor<T> conv3_relu(const ParamStore<T>& p, const std::string& prefix, const Tensor<T>& x) {
  return conv_relu(p, prefix, x, Conv2dOptions::same(3, 3));
}

}  // namespace tscnet::model
