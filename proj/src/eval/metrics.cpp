#include "eval/metrics.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstdio>

#include "core/error.hpp"

namespace tscnet::eval {

namespace {

constexpr double kEps = DBL_EPSILON;

void check(const MapView& pred, const MapView& gt) {
  if (pred.height != gt.height || pred.width != gt.width ||
      pred.values.size() != static_cast<std::size_t>(gt.height) * static_cast<std::size_t>(gt.width) ||
      gt.values.size() != pred.values.size()) {
    throw ContractError("metric inputs differ in size: " + std::to_string(pred.height) + "x" +
                        std::to_string(pred.width) + " vs " + std::to_string(gt.height) + "x" +
                        std::to_string(gt.width));
  }
  if (pred.values.empty()) throw ContractError("metric inputs are empty");
}

bool fg(double g) { return g >= 0.5; }

double threshold(int k) { return static_cast<double>(k) / 255.0; }

struct Moments {
  double n = 0.0;
  double mean = 0.0;
  double ss = 0.0;  // sum of squared deviations
};

Moments moments(const std::vector<double>& v) {
  Moments m;
  m.n = static_cast<double>(v.size());
  if (v.empty()) return m;
  for (double x : v) m.mean += x;
  m.mean /= m.n;
  for (double x : v) m.ss += (x - m.mean) * (x - m.mean);
  return m;
}

double object_score(const std::vector<double>& values) {
  const Moments m = moments(values);
  const double sd = m.n > 1 ? std::sqrt(m.ss / (m.n - 1)) : 0.0;
  return 2.0 * m.mean / (m.mean * m.mean + 1.0 + sd + kEps);
}

double s_object(const MapView& pred, const MapView& gt) {
  std::vector<double> fg_vals;
  std::vector<double> bg_vals;
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    if (fg(gt.values[i])) {
      fg_vals.push_back(pred.values[i]);
    } else {
      bg_vals.push_back(1.0 - pred.values[i]);
    }
  }
  const double u = static_cast<double>(fg_vals.size()) / static_cast<double>(pred.values.size());
  return u * object_score(fg_vals) + (1.0 - u) * object_score(bg_vals);
}

// SSIM-style comparison of one quadrant [r0, r1) x [c0, c1).
double region_ssim(const MapView& pred, const MapView& gt, int r0, int r1, int c0, int c1) {
  const int n = (r1 - r0) * (c1 - c0);
  if (n <= 0) return 0.0;
  double x = 0.0;
  double y = 0.0;
  for (int r = r0; r < r1; ++r)
    for (int c = c0; c < c1; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * pred.width + c;
      x += pred.values[i];
      y += fg(gt.values[i]) ? 1.0 : 0.0;
    }
  x /= n;
  y /= n;
  double sx = 0.0, sy = 0.0, sxy = 0.0;
  for (int r = r0; r < r1; ++r)
    for (int c = c0; c < c1; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * pred.width + c;
      const double dx = pred.values[i] - x;
      const double dy = (fg(gt.values[i]) ? 1.0 : 0.0) - y;
      sx += dx * dx;
      sy += dy * dy;
      sxy += dx * dy;
    }
  const double denom = n - 1 + kEps;
  sx /= denom;
  sy /= denom;
  sxy /= denom;
  const double a = 4.0 * x * y * sxy;
  const double b = (x * x + y * y) * (sx + sy);
  if (a != 0.0) return a / (b + kEps);
  return b == 0.0 ? 1.0 : 0.0;
}

double s_region(const MapView& pred, const MapView& gt) {
  const int H = gt.height;
  const int W = gt.width;
  double total = 0.0, sx = 0.0, sy = 0.0;
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < W; ++c)
      if (fg(gt.values[static_cast<std::size_t>(r) * W + c])) {
        total += 1.0;
        sx += c + 1;
        sy += r + 1;
      }
  // Centroid in 1-based pixel units: the left/top parts span columns/rows 1..X / 1..Y.
  int X = static_cast<int>(std::round(W / 2.0));
  int Y = static_cast<int>(std::round(H / 2.0));
  if (total > 0) {
    X = static_cast<int>(std::round(sx / total));
    Y = static_cast<int>(std::round(sy / total));
  }
  const double area = static_cast<double>(H) * W;
  const double w1 = static_cast<double>(X) * Y / area;
  const double w2 = static_cast<double>(W - X) * Y / area;
  const double w3 = static_cast<double>(X) * (H - Y) / area;
  const double w4 = 1.0 - w1 - w2 - w3;
  return w1 * region_ssim(pred, gt, 0, Y, 0, X) + w2 * region_ssim(pred, gt, 0, Y, X, W) +
         w3 * region_ssim(pred, gt, Y, H, 0, X) + w4 * region_ssim(pred, gt, Y, H, X, W);
}

}  // namespace

double mae(const MapView& pred, const MapView& gt) {
  check(pred, gt);
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.values.size(); ++i) acc += std::fabs(pred.values[i] - (fg(gt.values[i]) ? 1.0 : 0.0));
  return acc / static_cast<double>(pred.values.size());
}

double f_measure_mean(const MapView& pred, const MapView& gt, double beta2) {
  check(pred, gt);
  double acc = 0.0;
  for (int k = 0; k < kThresholds; ++k) {
    const double t = threshold(k);
    double tp = 0.0, positives = 0.0, truth = 0.0;
    for (std::size_t i = 0; i < pred.values.size(); ++i) {
      const bool p = pred.values[i] >= t;
      const bool g = fg(gt.values[i]);
      tp += (p && g) ? 1.0 : 0.0;
      positives += p ? 1.0 : 0.0;
      truth += g ? 1.0 : 0.0;
    }
    const double precision = positives > 0 ? tp / positives : 0.0;
    const double recall = truth > 0 ? tp / truth : 0.0;
    const double denom = beta2 * precision + recall;
    acc += denom > 0 ? (1.0 + beta2) * precision * recall / denom : 0.0;
  }
  return acc / kThresholds;
}

double s_measure(const MapView& pred, const MapView& gt, double alpha) {
  check(pred, gt);
  double y = 0.0;
  double x = 0.0;
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    y += fg(gt.values[i]) ? 1.0 : 0.0;
    x += pred.values[i];
  }
  const double n = static_cast<double>(pred.values.size());
  y /= n;
  x /= n;
  if (y == 0.0) return 1.0 - x;
  if (y == 1.0) return x;
  const double q = alpha * s_object(pred, gt) + (1.0 - alpha) * s_region(pred, gt);
  return std::max(q, 0.0);
}

double e_measure_mean(const MapView& pred, const MapView& gt) {
  check(pred, gt);
  const std::size_t n = pred.values.size();
  double gt_count = 0.0;
  for (double g : gt.values) gt_count += fg(g) ? 1.0 : 0.0;
  const double mu_g = gt_count / static_cast<double>(n);
  double acc = 0.0;
  for (int k = 0; k < kThresholds; ++k) {
    const double t = threshold(k);
    double fm_count = 0.0;
    for (double p : pred.values) fm_count += p >= t ? 1.0 : 0.0;
    const double mu_f = fm_count / static_cast<double>(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double f = pred.values[i] >= t ? 1.0 : 0.0;
      const double g = fg(gt.values[i]) ? 1.0 : 0.0;
      if (gt_count == 0.0) {
        sum += 1.0 - f;
      } else if (gt_count == static_cast<double>(n)) {
        sum += f;
      } else {
        const double af = f - mu_f;
        const double ag = g - mu_g;
        const double align = 2.0 * af * ag / (ag * ag + af * af + kEps);
        sum += (align + 1.0) * (align + 1.0) / 4.0;
      }
    }
    acc += sum / static_cast<double>(n);
  }
  return acc / kThresholds;
}

ImageMetrics evaluate_map(const std::string& id, const MapView& pred, const MapView& gt) {
  return {id, s_measure(pred, gt), f_measure_mean(pred, gt), e_measure_mean(pred, gt), mae(pred, gt)};
}

MetricsReport aggregate(std::vector<ImageMetrics> images) {
  if (images.empty()) throw DataError("no images to evaluate");
  MetricsReport report;
  report.mean.id = "MEAN";
  for (const auto& m : images) {
    report.mean.s_alpha += m.s_alpha;
    report.mean.f_mean += m.f_mean;
    report.mean.e_mean += m.e_mean;
    report.mean.mae += m.mae;
  }
  const double n = static_cast<double>(images.size());
  report.mean.s_alpha /= n;
  report.mean.f_mean /= n;
  report.mean.e_mean /= n;
  report.mean.mae /= n;
  report.images = std::move(images);
  return report;
}

void write_csv(std::ostream& os, const MetricsReport& report) {
  auto row = [&os](const ImageMetrics& m) {
    char buf[160];
    std::snprintf(buf, sizeof buf, ",%.9f,%.9f,%.9f,%.9f\n", m.s_alpha, m.f_mean, m.e_mean, m.mae);
    os << m.id << buf;
  };
  os << "image_id,s_alpha,f_mean,e_mean,mae\n";
  for (const auto& m : report.images) row(m);
  row(report.mean);
}

}  // namespace tscnet::eval
