#include "model/vit.hpp"

#include <cmath>

#include "core/ops.hpp"
#include "model/layers.hpp"

namespace tscnet::model {

using namespace core;

void append_vit_specs(const VitConfig& cfg, const std::string& prefix, std::vector<ParamSpec>& specs) {
  const int c = cfg.channels;
  add_linear_spec(specs, prefix + ".patch_embed", c, c);
  specs.push_back({prefix + ".pos_embed", {cfg.grid * cfg.grid, c}, Init::normal_002, 0});
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string layer = prefix + ".layer" + std::to_string(l);
    add_norm_spec(specs, layer + ".ln1", c);
    add_linear_spec(specs, layer + ".attn.qkv", 3 * c, c);
    add_linear_spec(specs, layer + ".attn.proj", c, c);
    add_norm_spec(specs, layer + ".ln2", c);
    add_linear_spec(specs, layer + ".mlp.fc1", cfg.mlp_ratio * c, c);
    add_linear_spec(specs, layer + ".mlp.fc2", c, cfg.mlp_ratio * c);
  }
  add_norm_spec(specs, prefix + ".norm", c);
  add_linear_spec(specs, prefix + ".head", c, c);
}

namespace {

template <typename T>
Tensor<T> dense(const ParamStore<T>& p, const std::string& prefix, const Tensor<T>& x) {
  return linear_rows(x, p.at(prefix + ".weight"), p.at(prefix + ".bias"));
}

template <typename T>
Tensor<T> norm(const ParamStore<T>& p, const std::string& prefix, const Tensor<T>& x) {
  return layer_norm(x, p.at(prefix + ".gamma"), p.at(prefix + ".beta"));
}

template <typename T>
Tensor<T> self_attention(const Tensor<T>& x, int heads, const ParamStore<T>& p, const std::string& prefix) {
  const int c = x.dim(1);
  const int d = c / heads;
  const Tensor<T> qkv = dense(p, prefix + ".qkv", x);
  std::vector<Tensor<T>> outs;
  outs.reserve(static_cast<std::size_t>(heads));
  const T inv_sqrt_d = T(1) / std::sqrt(static_cast<T>(d));
  for (int h = 0; h < heads; ++h) {
    const Tensor<T> q = narrow(qkv, 1, h * d, d);
    const Tensor<T> k = narrow(qkv, 1, c + h * d, d);
    const Tensor<T> v = narrow(qkv, 1, 2 * c + h * d, d);
    const Tensor<T> a = softmax_last(scale(matmul(q, transpose(k)), inv_sqrt_d));
    outs.push_back(matmul(a, v));
  }
  const Tensor<T> merged = heads == 1 ? outs.front() : concat<T>(std::span<const Tensor<T>>(outs), 1);
  return dense(p, prefix + ".proj", merged);
}

}  // namespace

template <typename T>
Tensor<T> vit_forward(const Tensor<T>& x, const VitConfig& cfg, const ParamStore<T>& p,
                      const std::string& prefix) {
  const int c = cfg.channels;
  const int g = cfg.grid;
  if (x.rank() != 3 || x.dim(0) != c || x.dim(1) != g || x.dim(2) != g) {
    throw ContractError("vit expects " + dims_to_string({c, g, g}) + ", got " + dims_to_string(x.dims()));
  }
  Tensor<T> tokens = transpose(reshape(x, {c, g * g}));
  tokens = add(dense(p, prefix + ".patch_embed", tokens), p.at(prefix + ".pos_embed"));
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string layer = prefix + ".layer" + std::to_string(l);
    tokens = add(tokens, self_attention(norm(p, layer + ".ln1", tokens), cfg.heads, p, layer + ".attn"));
    const Tensor<T> hidden = gelu(dense(p, layer + ".mlp.fc1", norm(p, layer + ".ln2", tokens)));
    tokens = add(tokens, dense(p, layer + ".mlp.fc2", hidden));
  }
  tokens = dense(p, prefix + ".head", norm(p, prefix + ".norm", tokens));
  return reshape(transpose(tokens), {c, g, g});
}

template Tensor<float> vit_forward(const Tensor<float>&, const VitConfig&, const ParamStore<float>&,
                                   const std::string&);
template Tensor<double> vit_forward(const Tensor<double>&, const VitConfig&, const ParamStore<double>&,
                                    const std::string&);

}  // namespace tscnet::model
