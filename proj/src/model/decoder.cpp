#include "model/decoder.hpp"

#include "core/error.hpp"
#include "core/ops.hpp"
#include "core/rng.hpp"
#include "model/layers.hpp"

namespace tscnet::model {

using namespace core;

void append_decoder_specs(const ModelConfig& cfg, std::vector<ParamSpec>& specs) {
  const int c = cfg.channels;
  for (int level : {4, 3}) {
    const std::string pre = "sp." + std::to_string(level);
    add_conv_spec(specs, pre + ".conv1", c, c, 3, 3);
    add_conv_spec(specs, pre + ".conv2", c, c, 3, 3);
    // Transposed conv weights are Cin x Cout x 4 x 4; each output pixel sees 2x2 taps per input channel.
    specs.push_back({pre + ".deconv.weight", {c, c, 4, 4}, Init::he_normal, c * 4});
    specs.push_back({pre + ".deconv.bias", {c}, Init::zeros, 0});
    add_conv_spec(specs, pre + ".head", 1, c, 1, 1);
  }
  add_conv_spec(specs, "sp.2.conv1", c, c, 3, 3);
  add_conv_spec(specs, "sp.2.conv2", c, c, 3, 3);
  add_conv_spec(specs, "sp.2.conv3", 1, c, 3, 3);
}

namespace {

// convs + dropout + deconv; returns the upsampled features.
template <typename T>
Tensor<T> sp_block(int level, const Tensor<T>& x, const ModelConfig& cfg, const ParamStore<T>& p,
                   const RunMode& mode) {
  const std::string pre = "sp." + std::to_string(level);
  Tensor<T> y = conv3_relu(p, pre + ".conv1", x);
  y = conv3_relu(p, pre + ".conv2", y);
  if (mode.training && cfg.dropout > 0.0) y = dropout(y, cfg.dropout, derive_seed(mode.seed, static_cast<std::uint64_t>(level)));
  return deconv2d(y, p.at(pre + ".deconv.weight"), p.at(pre + ".deconv.bias"));
}

template <typename T>
Tensor<T> fuse(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.dims() != b.dims()) {
    throw ContractError("decoder fusion mismatch: " + dims_to_string(a.dims()) + " vs " + dims_to_string(b.dims()));
  }
  return add(a, b);
}

}  // namespace

template <typename T>
SaliencyMaps<T> decode(const Tensor<T>& f2, const Tensor<T>& f3, const Tensor<T>& f4, const ModelConfig& cfg,
                       const ParamStore<T>& p, const RunMode& mode) {
  SaliencyMaps<T> out;
  const Tensor<T> up4 = sp_block(4, f4, cfg, p, mode);
  out.s4 = sigmoid(conv(p, "sp.4.head", up4));
  const Tensor<T> up3 = sp_block(3, fuse(up4, f3), cfg, p, mode);
  out.s3 = sigmoid(conv(p, "sp.3.head", up3));
  Tensor<T> y = conv3_relu(p, "sp.2.conv1", fuse(up3, f2));
  y = conv3_relu(p, "sp.2.conv2", y);
  out.s2 = sigmoid(conv(p, "sp.2.conv3", y, Conv2dOptions::same(3, 3)));
  return out;
}

template SaliencyMaps<float> decode(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&,
                                    const ModelConfig&, const ParamStore<float>&, const RunMode&);
template SaliencyMaps<double> decode(const Tensor<double>&, const Tensor<double>&, const Tensor<double>&,
                                     const ModelConfig&, const ParamStore<double>&, const RunMode&);

}  // namespace tscnet::model
