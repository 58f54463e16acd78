#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "data/io.hpp"
#include "data/sample.hpp"

namespace tscnet::data {

enum class Shape { ellipse, rectangle, star };

struct SynthConfig {
  int size = 64;
  int min_objects = 1;
  int max_objects = 4;
  // Relative weights of ellipse, rotated rectangle, star polygon.
  std::array<double, 3> shape_weights{1.0, 1.0, 1.0};
  // Equivalent diameter of each object (the diameter of the disc with the
  // same area) as a fraction of `size`.
  double min_extent = 0.1;
  double max_extent = 0.3;
  double texture_amplitude = 0.15;
  double min_gain = 0.4;
  double max_gain = 1.0;
  double noise = 0.02;
  std::uint64_t seed = 1;

  // Throws ConfigError.
  void validate() const;
};

struct ObjectInfo {
  Shape shape;
  double target_area;  // in pixels
  int pixels;          // rendered pixels in the mask
};

// Deterministic in (cfg.seed, index). `objects` receives the rendered objects.
Sample generate_sample(const SynthConfig& cfg, int index, std::vector<ObjectInfo>* objects = nullptr);

// Writes images/<id>.png, masks/<id>.png and manifest.txt under `dir`;
// returns the manifest path.
std::string generate_dataset(const SynthConfig& cfg, int n, const std::string& dir);

}  // namespace tscnet::data
