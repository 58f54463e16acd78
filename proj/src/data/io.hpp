#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "data/sample.hpp"

namespace tscnet::data {

struct Image8 {
  int height = 0;
  int width = 0;
  int channels = 0;  // 1 or 3
  std::vector<std::uint8_t> pixels;  // interleaved, row-major
};

// Any PNG is expanded to 8-bit; `channels` selects grayscale or RGB output.
// Throws DataError naming the file.
Image8 read_png(const std::string& path, int channels);
void write_png(const std::string& path, const Image8& image);

// 8-bit quantisation used for every saved map: round-half-up of v * 255.
std::uint8_t quantize(double v);

// Image as RGB, mask binarised at 128.
Sample load_sample(const std::string& image_path, const std::string& mask_path);
void save_sample(const Sample& s, const std::string& image_path, const std::string& mask_path);

// Single-channel [0, 1] map as an 8-bit grayscale PNG.
void save_map(const std::string& path, const std::vector<double>& values, int height, int width);

struct ManifestEntry {
  std::string image;
  std::string mask;
};

// One "image<TAB>mask" per line; relative paths resolve against the manifest's directory.
std::vector<ManifestEntry> read_manifest(const std::string& path);
void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);

}  // namespace tscnet::data
