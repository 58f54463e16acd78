#pragma once

#include <cstdint>

#include "data/sample.hpp"

namespace tscnet::data {

// Rotations are counter-clockwise.
enum class Transform { identity, hflip, vflip, rot90, rot180, rot270 };

Sample apply_transform(const Sample& s, Transform t);

// With probability 1/2 applies one of the five non-identity transforms,
// chosen uniformly; image and mask always move together.
Transform choose_transform(std::uint64_t seed);
Sample augment(const Sample& s, std::uint64_t seed);

}  // namespace tscnet::data
