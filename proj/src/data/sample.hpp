#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tscnet::data {

struct Sample {
  std::string id;
  int height = 0;
  int width = 0;
  // 3 x H x W, channel-major, values in [0, 1].
  std::vector<float> image;
  // H x W, values in {0, 1}.
  std::vector<std::uint8_t> mask;
};

}  // namespace tscnet::data
