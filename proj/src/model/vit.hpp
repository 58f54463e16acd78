#pragma once

#include <string>
#include <vector>

#include "model/params.hpp"

namespace tscnet::model {

struct VitConfig {
  int channels = 32;
  int grid = 32;
  int layers = 2;
  int heads = 4;
  int mlp_ratio = 2;
};

void append_vit_specs(const VitConfig& cfg, const std::string& prefix, std::vector<ParamSpec>& specs);

// x: c x G x G. Each grid cell is one 1x1 patch token; returns c x G x G.
template <typename T>
Tensor<T> vit_forward(const Tensor<T>& x, const VitConfig& cfg, const ParamStore<T>& p,
                      const std::string& prefix);

}  // namespace tscnet::model
