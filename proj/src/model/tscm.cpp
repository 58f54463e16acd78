#include "model/tscm.hpp"

#include "core/attention.hpp"
#include "core/error.hpp"
#include "core/ops.hpp"
#include "model/layers.hpp"

namespace tscnet::model {

using namespace core;

std::vector<std::vector<BranchConv>> msp_branch_schedule() {
  std::vector<std::vector<BranchConv>> out;
  out.push_back({{1, 1, 1, 0, 0}});
  for (int j = 2; j <= 4; ++j) {
    const int k = 2 * j - 1;
    const int half = (k - 1) / 2;
    out.push_back({{1, k, 1, 0, half}, {k, 1, 1, half, 0}, {3, 3, k, k, k}});
  }
  return out;
}

std::string tscm_prefix(int level) { return "tscm." + std::to_string(level); }

VitConfig vit_config(const ModelConfig& cfg) {
  return {cfg.channels, cfg.effective_grid(), cfg.vit_layers, cfg.vit_heads, cfg.mlp_ratio};
}

namespace {

std::string branch_conv(const std::string& prefix, std::size_t branch, std::size_t conv) {
  return prefix + ".msp.branch" + std::to_string(branch + 1) + ".conv" + std::to_string(conv + 1);
}

}  // namespace

void append_tscm_specs(const ModelConfig& cfg, std::vector<ParamSpec>& specs) {
  const int c = cfg.channels;
  const auto schedule = msp_branch_schedule();
  for (int level = 2; level <= 4; ++level) {
    const std::string pre = tscm_prefix(level);
    if (cfg.pau) {
      add_linear_spec(specs, pre + ".pau.fc_r", c, 2 * c);
      add_linear_spec(specs, pre + ".pau.fc_s", c, c);
      add_conv_spec(specs, pre + ".pau.spatial", 1, 2, 7, 7);
    }
    if (cfg.tru) {
      add_conv_spec(specs, pre + ".tru.q", c, c, 1, 1);
      add_conv_spec(specs, pre + ".tru.k", c, c, 1, 1);
      add_conv_spec(specs, pre + ".tru.v", c, c, 1, 1);
      specs.push_back({pre + ".tru.beta", {1}, Init::zeros, 0});
    }
    if (cfg.riu) {
      for (std::size_t b = 0; b < schedule.size(); ++b)
        for (std::size_t j = 0; j < schedule[b].size(); ++j)
          add_conv_spec(specs, branch_conv(pre, b, j), c, c, schedule[b][j].kh, schedule[b][j].kw);
      add_conv_spec(specs, pre + ".msp.fuse", c, 4 * c, 1, 1);
    }
    add_conv_spec(specs, pre + ".fuse", c, cfg.riu ? 2 * c : c, 3, 3);
  }
  if (cfg.riu) append_vit_specs(vit_config(cfg), kSharedVit, specs);
}

template <typename T>
PauOutput<T> pau(const Tensor<T>& f_b, const Tensor<T>& f_s, const ParamStore<T>& p, const std::string& prefix) {
  if (f_b.rank() != 3 || f_s.rank() != 3 || f_b.dim(0) != f_s.dim(0)) {
    throw ContractError("pau needs f_b and f_s with the same channel count, got " + dims_to_string(f_b.dims()) +
                        " and " + dims_to_string(f_s.dims()));
  }
  const int c = f_b.dim(0);
  const Tensor<T> descriptor =
      concat({reshape(global_avg_pool(f_b), {c}), reshape(global_avg_pool(f_s), {c})}, 0);
  const Tensor<T> hidden = relu(linear(descriptor, p.at(prefix + ".fc_r.weight"), p.at(prefix + ".fc_r.bias")));
  const Tensor<T> channel_map = sigmoid(linear(hidden, p.at(prefix + ".fc_s.weight"), p.at(prefix + ".fc_s.bias")));
  const Tensor<T> f_jca = mul(f_b, reshape(channel_map, {c, 1, 1}));

  const Tensor<T> pooled = concat({channel_mean(f_s), channel_max(f_s)}, 0);
  const Tensor<T> spatial = sigmoid(conv(p, prefix + ".spatial", pooled, Conv2dOptions::same(7, 7)));
  const Tensor<T> spatial_up = bilinear_up(spatial, f_b.dim(1), f_b.dim(2));
  return {add(f_b, mul(f_jca, spatial_up)), f_jca, channel_map, spatial_up};
}

template <typename T>
TruOutput<T> tru(const Tensor<T>& f_pau, const Tensor<T>& f_t, const ParamStore<T>& p, const std::string& prefix) {
  if (f_pau.rank() != 3 || f_pau.dim(1) != f_pau.dim(2)) {
    throw UnsupportedShapeError("tru requires square feature maps, got " + dims_to_string(f_pau.dims()));
  }
  const int h2 = 2 * f_pau.dim(1);
  const int w2 = 2 * f_pau.dim(2);
  if (f_t.rank() != 3 || f_t.dim(1) < h2 || f_t.dim(2) < w2) {
    throw ContractError("texture features " + dims_to_string(f_t.dims()) + " are smaller than twice the level size");
  }
  const Tensor<T> f_hat_pau = bilinear_up(f_pau, h2, w2);
  const Tensor<T> f_hat_t = adaptive_avg_pool(f_t, h2, w2);
  const Tensor<T> q = conv(p, prefix + ".q", f_hat_t);
  const Tensor<T> k = conv(p, prefix + ".k", f_hat_pau);
  const Tensor<T> v = conv(p, prefix + ".v", f_hat_pau);
  const Tensor<T> f_sp = channelwise_attention(q, k, v);
  const Tensor<T> beta = reshape(p.at(prefix + ".beta"), {1, 1, 1});
  return {add(f_hat_pau, mul(f_sp, beta)), f_hat_pau, f_sp};
}

template <typename T>
Tensor<T> msp(const Tensor<T>& f_in, const ParamStore<T>& p, const std::string& prefix,
              std::vector<Tensor<T>>* branches) {
  const auto schedule = msp_branch_schedule();
  std::vector<Tensor<T>> outs;
  for (std::size_t b = 0; b < schedule.size(); ++b) {
    Tensor<T> x = f_in;
    for (std::size_t j = 0; j < schedule[b].size(); ++j) {
      const BranchConv& s = schedule[b][j];
      Conv2dOptions o;
      o.dilation = s.dilation;
      o.pad_top = o.pad_bottom = s.pad_h;
      o.pad_left = o.pad_right = s.pad_w;
      x = conv_relu(p, branch_conv(prefix, b, j), x, o);
    }
    outs.push_back(x);
  }
  if (branches) *branches = outs;
  return conv_relu(p, prefix + ".msp.fuse", concat<T>(std::span<const Tensor<T>>(outs), 0));
}

template <typename T>
Tensor<T> riu(const Tensor<T>& f_jca, const Tensor<T>& f_b, const ModelConfig& cfg, const ParamStore<T>& p,
              const std::string& prefix) {
  if (f_jca.defined() && f_jca.dims() != f_b.dims()) {
    throw ContractError("riu inputs differ: " + dims_to_string(f_jca.dims()) + " vs " + dims_to_string(f_b.dims()));
  }
  const VitConfig vc = vit_config(cfg);
  const int h = f_b.dim(1);
  const int w = f_b.dim(2);
  if (vc.grid > h || vc.grid > w) {
    throw ConfigError("interaction grid " + std::to_string(vc.grid) + " exceeds the feature size " + std::to_string(h));
  }
  const Tensor<T> f_in = f_jca.defined() ? add(f_jca, f_b) : f_b;
  const Tensor<T> pooled = adaptive_avg_pool(msp(f_in, p, prefix), vc.grid, vc.grid);
  return bilinear_up(vit_forward(pooled, vc, p, kSharedVit), 2 * h, 2 * w);
}

template <typename T>
Tensor<T> tscm_forward(int level, const Tensor<T>& f_b, const Tensor<T>& f_t, const Tensor<T>& f_s,
                       const ModelConfig& cfg, const ParamStore<T>& p) {
  const std::string pre = tscm_prefix(level);
  Tensor<T> f_pau = f_b;
  Tensor<T> f_jca;
  if (cfg.pau) {
    auto out = pau(f_b, f_s, p, pre + ".pau");
    f_pau = out.f_pau;
    f_jca = out.f_jca;
  }
  Tensor<T> f_tru = cfg.tru ? tru(f_pau, f_t, p, pre + ".tru").f_tru
                            : bilinear_up(f_pau, 2 * f_pau.dim(1), 2 * f_pau.dim(2));
  Tensor<T> fused = f_tru;
  if (cfg.riu) fused = concat({f_tru, riu(f_jca, f_b, cfg, p, pre)}, 0);
  return conv3_relu(p, pre + ".fuse", fused);
}

#define TSCNET_INSTANTIATE(T)                                                                                \
  template PauOutput<T> pau(const Tensor<T>&, const Tensor<T>&, const ParamStore<T>&, const std::string&);   \
  template TruOutput<T> tru(const Tensor<T>&, const Tensor<T>&, const ParamStore<T>&, const std::string&);   \
  template Tensor<T> msp(const Tensor<T>&, const ParamStore<T>&, const std::string&, std::vector<Tensor<T>>*); \
  template Tensor<T> riu(const Tensor<T>&, const Tensor<T>&, const ModelConfig&, const ParamStore<T>&,       \
                         const std::string&);                                                                \
  template Tensor<T> tscm_forward(int, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const ModelConfig&, \
                                  const ParamStore<T>&);

TSCNET_INSTANTIATE(float)
TSCNET_INSTANTIATE(double)
#undef TSCNET_INSTANTIATE

}  // namespace tscnet::model
