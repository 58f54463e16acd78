#pragma once

#include <array>
#include <vector>

#include "model/config.hpp"
#include "model/params.hpp"

namespace tscnet::model {

// levels[i - 1] holds level i: texture f1, mid-level f2..f4, semantic f5.
template <typename T>
struct FeatureSet {
  std::array<Tensor<T>, 5> levels;

  const Tensor<T>& texture() const { return levels[0]; }
  const Tensor<T>& semantic() const { return levels[4]; }
  const Tensor<T>& level(int i) const { return levels[static_cast<std::size_t>(i - 1)]; }
};

void append_backbone_specs(const ModelConfig& cfg, std::vector<ParamSpec>& specs);

// `image` is the normalised 3 x S x S input.
template <typename T>
FeatureSet<T> extract_features(const Tensor<T>& image, const ModelConfig& cfg, const ParamStore<T>& p);

}  // namespace tscnet::model
