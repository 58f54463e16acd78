#pragma once

#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace tscnet::eval {

// Row-major single-channel map. Predictions lie in [0, 1]; ground truth pixels
// are foreground when >= 0.5.
struct MapView {
  std::span<const double> values;
  int height = 0;
  int width = 0;
};

inline constexpr int kThresholds = 256;

double mae(const MapView& pred, const MapView& gt);

// Mean over thresholds k / 255, k = 0..255, of F_beta with pixels p >= t positive.
double f_measure_mean(const MapView& pred, const MapView& gt, double beta2 = 0.3);

double s_measure(const MapView& pred, const MapView& gt, double alpha = 0.5);

// Mean over the same thresholds of the enhanced-alignment score.
double e_measure_mean(const MapView& pred, const MapView& gt);

struct ImageMetrics {
  std::string id;
  double s_alpha = 0.0;
  double f_mean = 0.0;
  double e_mean = 0.0;
  double mae = 0.0;
};

ImageMetrics evaluate_map(const std::string& id, const MapView& pred, const MapView& gt);

struct MetricsReport {
  std::vector<ImageMetrics> images;
  ImageMetrics mean;
};

// Throws DataError on an empty list.
MetricsReport aggregate(std::vector<ImageMetrics> images);

// image_id,s_alpha,f_mean,e_mean,mae with a final MEAN row.
void write_csv(std::ostream& os, const MetricsReport& report);

}  // namespace tscnet::eval
