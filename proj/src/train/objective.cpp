#include "train/objective.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"
#include "core/ops.hpp"

namespace tscnet::train {

using namespace core;

namespace {

template <typename T>
void check_pair(const Tensor<T>& pred, const Tensor<T>& gt, const char* what) {
  if (pred.dims() != gt.dims()) {
    throw ContractError(std::string(what) + ": prediction " + dims_to_string(pred.dims()) +
                        " and ground truth " + dims_to_string(gt.dims()) + " differ");
  }
}

}  // namespace

template <typename T>
Tensor<T> bce_loss(const Tensor<T>& pred, const Tensor<T>& gt) {
  check_pair(pred, gt, "bce_loss");
  const auto p = pred.values();
  const auto g = gt.values();
  const double n = static_cast<double>(p.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pc = std::clamp(static_cast<double>(p[i]), kBceClamp, 1.0 - kBceClamp);
    acc -= g[i] * std::log(pc) + (1.0 - g[i]) * std::log(1.0 - pc);
  }
  return make_op<T>("bce_loss", {1}, {static_cast<T>(acc / n)}, {pred, gt}, [n](Node<T>& self) {
    Node<T>& in = *self.inputs[0];
    if (!in.requires_grad) return;
    auto grad = in.grad_buffer();
    const auto& gv = self.inputs[1]->value;
    const double up = self.grad[0];
    for (std::size_t i = 0; i < grad.size(); ++i) {
      const double pc = std::clamp(static_cast<double>(in.value[i]), kBceClamp, 1.0 - kBceClamp);
      grad[i] += static_cast<T>(up * (pc - gv[i]) / (pc * (1.0 - pc)) / n);
    }
  });
}

template <typename T>
Tensor<T> iou_loss(const Tensor<T>& pred, const Tensor<T>& gt) {
  check_pair(pred, gt, "iou_loss");
  const auto p = pred.values();
  const auto g = gt.values();
  double inter = 0.0;
  double uni = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    inter += static_cast<double>(p[i]) * g[i];
    uni += static_cast<double>(p[i]) + g[i] - static_cast<double>(p[i]) * g[i];
  }
  const double I = inter + kIouSmooth;
  const double U = uni + kIouSmooth;
  return make_op<T>("iou_loss", {1}, {static_cast<T>(1.0 - I / U)}, {pred, gt}, [I, U](Node<T>& self) {
    Node<T>& in = *self.inputs[0];
    if (!in.requires_grad) return;
    auto grad = in.grad_buffer();
    const auto& gv = self.inputs[1]->value;
    const double up = self.grad[0];
    for (std::size_t i = 0; i < grad.size(); ++i) {
      const double dI = gv[i];
      const double dU = 1.0 - gv[i];
      grad[i] += static_cast<T>(-up * (dI * U - I * dU) / (U * U));
    }
  });
}

template <typename T>
LossReport<T> total_loss(const model::SaliencyMaps<T>& maps, const Tensor<T>& gt) {
  if (gt.rank() != 3 || gt.dim(0) != 1) throw ContractError("ground truth must be 1 x H x W");
  LossReport<T> report;
  const std::array<const Tensor<T>*, 3> list{&maps.s2, &maps.s3, &maps.s4};
  for (std::size_t i = 0; i < list.size(); ++i) {
    Tensor<T> m = *list[i];
    if (m.dims() != gt.dims()) m = bilinear_up(m, gt.dim(1), gt.dim(2));
    const Tensor<T> b = bce_loss(m, gt);
    const Tensor<T> u = iou_loss(m, gt);
    report.bce[i] = b.item();
    report.iou[i] = u.item();
    report.total += report.bce[i] + report.iou[i];
    const Tensor<T> term = add(b, u);
    report.loss = report.loss.defined() ? add(report.loss, term) : term;
  }
  return report;
}

template Tensor<float> bce_loss(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> bce_loss(const Tensor<double>&, const Tensor<double>&);
template Tensor<float> iou_loss(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> iou_loss(const Tensor<double>&, const Tensor<double>&);
template LossReport<float> total_loss(const model::SaliencyMaps<float>&, const Tensor<float>&);
template LossReport<double> total_loss(const model::SaliencyMaps<double>&, const Tensor<double>&);

}  // namespace tscnet::train
