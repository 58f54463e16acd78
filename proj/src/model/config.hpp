#pragma once

#include <array>
#include <string>

namespace tscnet::model {

struct ModelConfig {
  int input_size = 256;
  std::array<int, 5> widths{64, 128, 256, 512, 512};
  std::array<int, 5> convs{2, 2, 3, 3, 3};
  int channels = 32;
  // Interaction grid side; 0 means input_size / 8.
  int grid = 0;
  int vit_layers = 2;
  int vit_heads = 4;
  int mlp_ratio = 2;
  bool pau = true;
  bool tru = true;
  bool riu = true;
  double dropout = 0.1;

  static ModelConfig full();
  static ModelConfig desk();
  static ModelConfig micro();

  int effective_grid() const { return grid > 0 ? grid : input_size / 8; }
  // Spatial side of level i (1..5).
  int level_size(int level) const { return input_size >> (level - 1); }

  // Throws ConfigError.
  void validate() const;
  std::string ablation_name() const;
};

}  // namespace tscnet::model
