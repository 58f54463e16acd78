#pragma once

#include <array>

#include "model/backbone.hpp"
#include "model/decoder.hpp"
#include "model/tscm.hpp"

namespace tscnet::model {

template <typename T>
struct ForwardResult {
  FeatureSet<T> features;
  // Fused TSCM outputs for levels 2, 3, 4.
  std::array<Tensor<T>, 3> f_ts;
  SaliencyMaps<T> maps;
};

// (x - 0.5) / 0.25 per channel.
template <typename T>
Tensor<T> normalize_image(const Tensor<T>& image);

// `image` is 3 x S x S with values in [0, 1].
template <typename T>
ForwardResult<T> forward(const Tensor<T>& image, const ModelConfig& cfg, const ParamStore<T>& p,
                         const RunMode& mode = {});

}  // namespace tscnet::model
