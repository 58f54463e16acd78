#include "model/backbone.hpp"

#include <string>

#include "core/error.hpp"
#include "model/layers.hpp"

namespace tscnet::model {

namespace {

std::string block_conv(int block, int conv) {
  return "fe.block" + std::to_string(block) + ".conv" + std::to_string(conv);
}

}  // namespace

void append_backbone_specs(const ModelConfig& cfg, std::vector<ParamSpec>& specs) {
  int in = 3;
  for (int b = 1; b <= 5; ++b) {
    const int width = cfg.widths[static_cast<std::size_t>(b - 1)];
    for (int j = 1; j <= cfg.convs[static_cast<std::size_t>(b - 1)]; ++j) {
      add_conv_spec(specs, block_conv(b, j), width, in, 3, 3);
      in = width;
    }
    add_conv_spec(specs, "fe.compress" + std::to_string(b), cfg.channels, width, 1, 1);
  }
}

template <typename T>
FeatureSet<T> extract_features(const Tensor<T>& image, const ModelConfig& cfg, const ParamStore<T>& p) {
  const int S = cfg.input_size;
  if (S % 16 != 0) throw ConfigError("input size must be divisible by 16");
  if (image.rank() != 3 || image.dim(0) != 3 || image.dim(1) != S || image.dim(2) != S) {
    throw ContractError("backbone expects a 3 x " + std::to_string(S) + " x " + std::to_string(S) +
                        " image, got " + core::dims_to_string(image.dims()));
  }
  FeatureSet<T> out;
  Tensor<T> x = image;
  for (int b = 1; b <= 5; ++b) {
    if (b > 1) x = core::max_pool2x2(x);
    for (int j = 1; j <= cfg.convs[static_cast<std::size_t>(b - 1)]; ++j) x = conv3_relu(p, block_conv(b, j), x);
    out.levels[static_cast<std::size_t>(b - 1)] = conv_relu(p, "fe.compress" + std::to_string(b), x);
  }
  return out;
}

template FeatureSet<float> extract_features(const Tensor<float>&, const ModelConfig&, const ParamStore<float>&);
template FeatureSet<double> extract_features(const Tensor<double>&, const ModelConfig&, const ParamStore<double>&);

}  // namespace tscnet::model
