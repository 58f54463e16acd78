#include "model/config.hpp"

#include "core/error.hpp"

namespace tscnet::model {

ModelConfig ModelConfig::full() { return ModelConfig{}; }

ModelConfig ModelConfig::desk() {
  ModelConfig c;
  c.input_size = 64;
  c.widths = {8, 16, 32, 64, 64};
  c.convs = {1, 1, 1, 1, 1};
  c.channels = 16;
  return c;
}

ModelConfig ModelConfig::micro() {
  ModelConfig c;
  c.input_size = 32;
  c.widths = {4, 4, 4, 4, 4};
  c.convs = {1, 1, 1, 1, 1};
  c.channels = 4;
  c.grid = 4;
  c.vit_layers = 1;
  c.vit_heads = 2;
  return c;
}

void ModelConfig::validate() const {
  if (input_size < 16 || input_size % 16 != 0) {
    throw ConfigError("input_size must be a positive multiple of 16, got " + std::to_string(input_size));
  }
  for (int i = 0; i < 5; ++i) {
    if (widths[i] < 1) throw ConfigError("backbone widths must be positive");
    if (convs[i] < 1) throw ConfigError("each backbone block needs at least one conv");
  }
  if (channels < 1) throw ConfigError("channels must be positive");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must lie in [0, 1)");
  if (riu) {
    const int g = effective_grid();
    // The smallest TSCM level is 4, at input_size / 8.
    if (g < 1 || g > level_size(4)) {
      throw ConfigError("interaction grid " + std::to_string(g) + " exceeds the level-4 size " +
                        std::to_string(level_size(4)));
    }
    if (vit_layers < 0 || vit_heads < 1 || channels % vit_heads != 0) {
      throw ConfigError("vit_heads must divide channels");
    }
    if (mlp_ratio < 1) throw ConfigError("mlp_ratio must be positive");
  }
}

std::string ModelConfig::ablation_name() const {
  if (!pau && !tru && !riu) return "baseline";
  std::string s;
  if (pau) s += "+pau";
  if (tru) s += "+tru";
  if (riu) s += "+riu";
  if (pau && tru && riu) return "full";
  return s;
}

}  // namespace tscnet::model
