#include "train/adam.hpp"

#include <cmath>

namespace tscnet::train {

void Adam::step(model::ParamStore<float>& params, double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  for (const auto& [name, t] : params) {
    if (!t.has_grad()) continue;
    auto& m = m_[name];
    auto& v = v_[name];
    if (m.empty()) {
      m.assign(t.numel(), 0.0);
      v.assign(t.numel(), 0.0);
    }
    core::Tensor<float> handle = t;
    auto values = handle.mutable_values();
    const auto grad = t.grad();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grad[i];
      m[i] = options_.beta1 * m[i] + (1.0 - options_.beta1) * g;
      v[i] = options_.beta2 * v[i] + (1.0 - options_.beta2) * g * g;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      values[i] = static_cast<float>(values[i] - lr * mhat / (std::sqrt(vhat) + options_.eps));
    }
  }
}

}  // namespace tscnet::train
