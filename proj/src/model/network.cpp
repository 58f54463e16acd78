#include "model/network.hpp"

#include "core/ops.hpp"

namespace tscnet::model {

using namespace core;

template <typename T>
Tensor<T> normalize_image(const Tensor<T>& image) {
  return scale(add(image, Tensor<T>::full({1, 1, 1}, T(-0.5))), T(4));
}

template <typename T>
ForwardResult<T> forward(const Tensor<T>& image, const ModelConfig& cfg, const ParamStore<T>& p,
                         const RunMode& mode) {
  cfg.validate();
  ForwardResult<T> out;
  out.features = extract_features(normalize_image(image), cfg, p);
  const auto& f = out.features;
  for (int level = 2; level <= 4; ++level) {
    out.f_ts[static_cast<std::size_t>(level - 2)] =
        tscm_forward(level, f.level(level), f.texture(), f.semantic(), cfg, p);
  }
  out.maps = decode(out.f_ts[0], out.f_ts[1], out.f_ts[2], cfg, p, mode);
  return out;
}

template Tensor<float> normalize_image(const Tensor<float>&);
template Tensor<double> normalize_image(const Tensor<double>&);
template ForwardResult<float> forward(const Tensor<float>&, const ModelConfig&, const ParamStore<float>&,
                                      const RunMode&);
template ForwardResult<double> forward(const Tensor<double>&, const ModelConfig&, const ParamStore<double>&,
                                       const RunMode&);

}  // namespace tscnet::model
