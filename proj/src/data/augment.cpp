#include "data/augment.hpp"

#include "core/rng.hpp"

namespace tscnet::data {

namespace {

// Source coordinate (sr, sc) for destination (r, c) in an output of size oh x ow.
void source_of(Transform t, int r, int c, int h, int w, int& sr, int& sc) {
  switch (t) {
    case Transform::identity: sr = r; sc = c; break;
    case Transform::hflip: sr = r; sc = w - 1 - c; break;
    case Transform::vflip: sr = h - 1 - r; sc = c; break;
    case Transform::rot90: sr = c; sc = w - 1 - r; break;
    case Transform::rot180: sr = h - 1 - r; sc = w - 1 - c; break;
    case Transform::rot270: sr = h - 1 - c; sc = r; break;
  }
}

}  // namespace

Sample apply_transform(const Sample& s, Transform t) {
  const bool swap = t == Transform::rot90 || t == Transform::rot270;
  Sample out;
  out.id = s.id;
  out.height = swap ? s.width : s.height;
  out.width = swap ? s.height : s.width;
  const std::size_t plane = static_cast<std::size_t>(s.height) * s.width;
  out.image.resize(s.image.size());
  out.mask.resize(s.mask.size());
  for (int r = 0; r < out.height; ++r)
    for (int c = 0; c < out.width; ++c) {
      int sr = 0, sc = 0;
      source_of(t, r, c, s.height, s.width, sr, sc);
      const std::size_t dst = static_cast<std::size_t>(r) * out.width + c;
      const std::size_t src = static_cast<std::size_t>(sr) * s.width + sc;
      out.mask[dst] = s.mask[src];
      for (std::size_t ch = 0; ch < 3; ++ch) out.image[ch * plane + dst] = s.image[ch * plane + src];
    }
  return out;
}

Transform choose_transform(std::uint64_t seed) {
  core::Rng rng(seed);
  if (rng.uniform() < 0.5) return Transform::identity;
  return static_cast<Transform>(1 + rng.uniform_int(0, 4));
}

Sample augment(const Sample& s, std::uint64_t seed) { return apply_transform(s, choose_transform(seed)); }

}  // namespace tscnet::data
