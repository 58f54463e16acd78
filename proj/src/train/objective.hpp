#pragma once

#include <array>

#include "core/tensor.hpp"
#include "model/decoder.hpp"

namespace tscnet::train {

using core::Tensor;

inline constexpr double kBceClamp = 1e-7;
inline constexpr double kIouSmooth = 1.0;

// Mean binary cross-entropy; predictions are clamped to [1e-7, 1 - 1e-7].
template <typename T>
Tensor<T> bce_loss(const Tensor<T>& pred, const Tensor<T>& gt);

// 1 - (sum p g + 1) / (sum (p + g - p g) + 1).
template <typename T>
Tensor<T> iou_loss(const Tensor<T>& pred, const Tensor<T>& gt);

template <typename T>
struct LossReport {
  // Index 0, 1, 2 for maps S2, S3, S4.
  std::array<double, 3> bce{};
  std::array<double, 3> iou{};
  double total = 0.0;
  Tensor<T> loss;  // differentiable total
};

// Maps smaller than gt are bilinearly upsampled before scoring.
template <typename T>
LossReport<T> total_loss(const model::SaliencyMaps<T>& maps, const Tensor<T>& gt);

}  // namespace tscnet::train
