#include "data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace tscnet::data {

namespace fs = std::filesystem;
using core::Rng;

void SynthConfig::validate() const {
  if (size < 8) throw ConfigError("synthetic image size must be at least 8");
  if (min_objects < 1 || max_objects < min_objects) throw ConfigError("object count range must satisfy 1 <= min <= max");
  if (!(min_extent > 0.0) || max_extent < min_extent || max_extent > 0.9) {
    throw ConfigError("object extent range must satisfy 0 < min <= max <= 0.9");
  }
  double total = 0.0;
  for (double w : shape_weights) {
    if (w < 0.0) throw ConfigError("shape weights must be non-negative");
    total += w;
  }
  if (total <= 0.0) throw ConfigError("at least one shape weight must be positive");
  if (min_gain <= 0.0 || max_gain < min_gain) throw ConfigError("gain range must satisfy 0 < min <= max");
  if (noise < 0.0 || texture_amplitude < 0.0) throw ConfigError("noise and texture amplitude must be non-negative");
}

namespace {

struct Pt {
  double x;
  double y;
};

struct Candidate {
  Shape shape;
  double cx, cy, angle;
  double a, b;                // ellipse semi-axes or rectangle half sides
  std::vector<Pt> polygon;    // star, local frame
  double radius;              // bounding radius
};

Shape pick_shape(Rng& rng, const std::array<double, 3>& w) {
  const double r = rng.uniform() * (w[0] + w[1] + w[2]);
  if (r < w[0]) return Shape::ellipse;
  if (r < w[0] + w[1]) return Shape::rectangle;
  return Shape::star;
}

double polygon_area(const std::vector<Pt>& p) {
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Pt& u = p[i];
    const Pt& v = p[(i + 1) % p.size()];
    acc += u.x * v.y - v.x * u.y;
  }
  return std::fabs(acc) / 2.0;
}

bool inside_polygon(const std::vector<Pt>& p, double x, double y) {
  bool in = false;
  for (std::size_t i = 0, j = p.size() - 1; i < p.size(); j = i++) {
    if ((p[i].y > y) != (p[j].y > y) && x < (p[j].x - p[i].x) * (y - p[i].y) / (p[j].y - p[i].y) + p[i].x) in = !in;
  }
  return in;
}

Candidate make_candidate(Rng& rng, Shape shape, double area) {
  Candidate c{};
  c.shape = shape;
  c.angle = rng.uniform(0.0, std::numbers::pi);
  const double aspect = rng.uniform(1.0, 2.0);
  switch (shape) {
    case Shape::ellipse: {
      const double r = std::sqrt(area / std::numbers::pi);
      c.a = r * std::sqrt(aspect);
      c.b = r / std::sqrt(aspect);
      c.radius = c.a;
      break;
    }
    case Shape::rectangle: {
      const double w = std::sqrt(area * aspect);
      c.a = w / 2.0;
      c.b = area / w / 2.0;
      c.radius = std::hypot(c.a, c.b);
      break;
    }
    case Shape::star: {
      const int spikes = rng.uniform_int(5, 8);
      const double inner = rng.uniform(0.45, 0.75);
      for (int i = 0; i < 2 * spikes; ++i) {
        const double t = std::numbers::pi * i / spikes;
        const double r = (i % 2 == 0 ? 1.0 : inner) * rng.uniform(0.85, 1.15);
        c.polygon.push_back({r * std::cos(t), r * std::sin(t)});
      }
      const double s = std::sqrt(area / polygon_area(c.polygon));
      c.radius = 0.0;
      for (Pt& p : c.polygon) {
        p.x *= s;
        p.y *= s;
        c.radius = std::max(c.radius, std::hypot(p.x, p.y));
      }
      break;
    }
  }
  return c;
}

bool contains(const Candidate& c, double x, double y) {
  const double dx = x - c.cx;
  const double dy = y - c.cy;
  const double u = std::cos(c.angle) * dx + std::sin(c.angle) * dy;
  const double v = -std::sin(c.angle) * dx + std::cos(c.angle) * dy;
  switch (c.shape) {
    case Shape::ellipse: return (u / c.a) * (u / c.a) + (v / c.b) * (v / c.b) <= 1.0;
    case Shape::rectangle: return std::fabs(u) <= c.a && std::fabs(v) <= c.b;
    case Shape::star: return inside_polygon(c.polygon, u, v);
  }
  return false;
}

// Rendered pixel indices of the largest 8-connected component.
std::vector<int> rasterize(const Candidate& c, int S) {
  const int x0 = std::max(0, static_cast<int>(std::floor(c.cx - c.radius)) - 1);
  const int x1 = std::min(S - 1, static_cast<int>(std::ceil(c.cx + c.radius)) + 1);
  const int y0 = std::max(0, static_cast<int>(std::floor(c.cy - c.radius)) - 1);
  const int y1 = std::min(S - 1, static_cast<int>(std::ceil(c.cy + c.radius)) + 1);
  std::vector<std::uint8_t> hit(static_cast<std::size_t>(S) * S, 0);
  std::vector<int> all;
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x)
      if (contains(c, x + 0.5, y + 0.5)) {
        hit[static_cast<std::size_t>(y) * S + x] = 1;
        all.push_back(y * S + x);
      }
  std::vector<int> best;
  std::vector<int> stack;
  for (int start : all) {
    if (hit[static_cast<std::size_t>(start)] != 1) continue;
    std::vector<int> comp;
    hit[static_cast<std::size_t>(start)] = 2;
    stack.push_back(start);
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      comp.push_back(p);
      const int py = p / S, px = p % S;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int ny = py + dy, nx = px + dx;
          if (ny < 0 || ny >= S || nx < 0 || nx >= S) continue;
          auto& h = hit[static_cast<std::size_t>(ny) * S + nx];
          if (h == 1) {
            h = 2;
            stack.push_back(ny * S + nx);
          }
        }
    }
    if (comp.size() > best.size()) best = std::move(comp);
  }
  std::sort(best.begin(), best.end());
  return best;
}

}  // namespace

Sample generate_sample(const SynthConfig& cfg, int index, std::vector<ObjectInfo>* objects) {
  cfg.validate();
  const int S = cfg.size;
  const std::size_t plane = static_cast<std::size_t>(S) * S;
  Rng rng(core::derive_seed(cfg.seed, static_cast<std::uint64_t>(index)));
  const int count = rng.uniform_int(cfg.min_objects, cfg.max_objects);

  Sample s;
  char id[32];
  std::snprintf(id, sizeof id, "synth_%05d", index);
  s.id = id;
  s.height = S;
  s.width = S;
  s.mask.assign(plane, 0);
  // Object pixels plus their 8-neighbourhood, so objects never touch.
  std::vector<std::uint8_t> blocked(plane, 0);
  std::vector<std::vector<int>> placed;
  std::vector<ObjectInfo> info;

  constexpr int kAttempts = 200;
  for (int k = 0; k < count; ++k) {
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
      const Shape shape = pick_shape(rng, cfg.shape_weights);
      const double d = rng.uniform(cfg.min_extent, cfg.max_extent) * S;
      const double area = std::numbers::pi * d * d / 4.0;
      Candidate c = make_candidate(rng, shape, area);
      const double lo = std::min(c.radius, S / 2.0);
      c.cx = rng.uniform(lo, S - lo);
      c.cy = rng.uniform(lo, S - lo);
      std::vector<int> pixels = rasterize(c, S);
      if (pixels.empty()) continue;
      if (std::any_of(pixels.begin(), pixels.end(), [&](int p) { return blocked[static_cast<std::size_t>(p)] != 0; })) {
        continue;
      }
      for (int p : pixels) {
        s.mask[static_cast<std::size_t>(p)] = 1;
        const int py = p / S, px = p % S;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int ny = py + dy, nx = px + dx;
            if (ny >= 0 && ny < S && nx >= 0 && nx < S) blocked[static_cast<std::size_t>(ny) * S + nx] = 1;
          }
      }
      info.push_back({shape, area, static_cast<int>(pixels.size())});
      placed.push_back(std::move(pixels));
      break;
    }
  }

  // Background: a base colour with a few low-frequency waves and per-pixel grain.
  std::array<double, 3> base;
  for (double& b : base) b = rng.uniform(0.3, 0.7);
  struct Wave {
    double fx, fy, phase, amp;
  };
  std::array<Wave, 3> waves;
  for (Wave& w : waves) {
    w = {rng.uniform(0.5, 4.0) * 2.0 * std::numbers::pi / S, rng.uniform(0.5, 4.0) * 2.0 * std::numbers::pi / S,
         rng.uniform(0.0, 2.0 * std::numbers::pi), rng.uniform(0.3, 1.0) * cfg.texture_amplitude};
  }
  s.image.assign(3 * plane, 0.0f);
  std::vector<double> img(3 * plane);
  for (int y = 0; y < S; ++y)
    for (int x = 0; x < S; ++x) {
      double t = 0.0;
      for (const Wave& w : waves) t += w.amp * std::sin(w.fx * x + w.fy * y + w.phase);
      for (std::size_t ch = 0; ch < 3; ++ch)
        img[ch * plane + static_cast<std::size_t>(y) * S + x] = base[ch] + t * (0.8 + 0.2 * static_cast<double>(ch));
    }

  for (const auto& pixels : placed) {
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    std::array<double, 3> color;
    for (std::size_t ch = 0; ch < 3; ++ch) {
      color[ch] = std::clamp(base[ch] + sign * rng.uniform(0.25, 0.45), 0.05, 0.95);
    }
    const double ramp = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double gx = std::cos(ramp) / S, gy = std::sin(ramp) / S;
    for (int p : pixels) {
      const int py = p / S, px = p % S;
      const double shade = 0.85 + 0.3 * (gx * px + gy * py + 0.5);
      for (std::size_t ch = 0; ch < 3; ++ch) img[ch * plane + static_cast<std::size_t>(p)] = color[ch] * shade;
    }
  }

  const double gain = rng.uniform(cfg.min_gain, cfg.max_gain);
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double v = img[i] * gain + cfg.noise * rng.normal();
    s.image[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
  }
  if (objects) *objects = std::move(info);
  return s;
}

std::string generate_dataset(const SynthConfig& cfg, int n, const std::string& dir) {
  if (n < 1) throw ConfigError("dataset size must be at least 1");
  cfg.validate();
  const fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root / "images", ec);
  fs::create_directories(root / "masks", ec);
  if (ec) throw DataError("cannot create dataset directory '" + dir + "': " + ec.message());
  std::vector<ManifestEntry> entries;
  for (int i = 0; i < n; ++i) {
    const Sample s = generate_sample(cfg, i);
    const std::string image = "images/" + s.id + ".png";
    const std::string mask = "masks/" + s.id + ".png";
    save_sample(s, (root / image).string(), (root / mask).string());
    entries.push_back({image, mask});
  }
  const std::string manifest = (root / "manifest.txt").string();
  write_manifest(manifest, entries);
  return manifest;
}

}  // namespace tscnet::data
