#pragma once

#include <cstdint>
#include <vector>

#include "model/config.hpp"
#include "model/params.hpp"

namespace tscnet::model {

struct RunMode {
  bool training = false;
  // Dropout masks are derived from this seed; ignored in eval mode.
  std::uint64_t seed = 0;
};

// Saliency maps in (0,1): s2 and s3 at the input size, s4 at half of it.
template <typename T>
struct SaliencyMaps {
  Tensor<T> s2;
  Tensor<T> s3;
  Tensor<T> s4;
};

void append_decoder_specs(const ModelConfig& cfg, std::vector<ParamSpec>& specs);

// Inputs are the fused TSCM outputs of levels 2, 3, 4.
template <typename T>
SaliencyMaps<T> decode(const Tensor<T>& f2, const Tensor<T>& f3, const Tensor<T>& f4, const ModelConfig& cfg,
                       const ParamStore<T>& p, const RunMode& mode = {});

}  // namespace tscnet::model
