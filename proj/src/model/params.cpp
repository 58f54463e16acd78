#include "model/params.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"
#include "core/rng.hpp"
#include "model/backbone.hpp"
#include "model/decoder.hpp"
#include "model/tscm.hpp"

namespace tscnet::model {

std::vector<ParamSpec> param_specs(const ModelConfig& cfg) {
  cfg.validate();
  std::vector<ParamSpec> specs;
  append_backbone_specs(cfg, specs);
  append_tscm_specs(cfg, specs);
  append_decoder_specs(cfg, specs);
  std::sort(specs.begin(), specs.end(), [](const ParamSpec& a, const ParamSpec& b) { return a.name < b.name; });
  return specs;
}

template <typename T>
void ParamStore<T>::insert(const std::string& name, Tensor<T> tensor) {
  map_[name] = std::move(tensor);
}

template <typename T>
const Tensor<T>& ParamStore<T>::at(const std::string& name) const {
  auto it = map_.find(name);
  if (it == map_.end()) throw ContractError("unknown parameter '" + name + "'");
  return it->second;
}

template <typename T>
std::vector<std::string> ParamStore<T>::names() const {
  std::vector<std::string> out;
  out.reserve(map_.size());
  for (const auto& kv : map_) out.push_back(kv.first);
  return out;
}

template <typename T>
std::size_t ParamStore<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& kv : map_) n += kv.second.numel();
  return n;
}

template <typename T>
void ParamStore<T>::zero_grad() {
  for (auto& kv : map_) kv.second.zero_grad();
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

template <typename T>
ParamStore<T> init_params(const ModelConfig& cfg, std::uint64_t seed) {
  ParamStore<T> store;
  for (const ParamSpec& spec : param_specs(cfg)) {
    std::vector<T> values(core::numel_of(spec.dims), T(0));
    core::Rng rng(core::derive_seed(seed, fnv1a(spec.name)));
    switch (spec.init) {
      case Init::he_normal: {
        const double stddev = std::sqrt(2.0 / spec.fan_in);
        for (T& v : values) v = static_cast<T>(rng.normal(0.0, stddev));
        break;
      }
      case Init::normal_002:
        for (T& v : values) v = static_cast<T>(rng.normal(0.0, 0.02));
        break;
      case Init::ones:
        std::fill(values.begin(), values.end(), T(1));
        break;
      case Init::zeros:
        break;
    }
    store.insert(spec.name, Tensor<T>::from_values(spec.dims, std::move(values), true));
  }
  return store;
}

template <typename To, typename From>
ParamStore<To> convert_params(const ParamStore<From>& src) {
  ParamStore<To> out;
  for (const auto& [name, t] : src) {
    std::vector<To> values(t.values().begin(), t.values().end());
    out.insert(name, Tensor<To>::from_values(t.dims(), std::move(values), true));
  }
  return out;
}

template class ParamStore<float>;
template class ParamStore<double>;
template ParamStore<float> init_params<float>(const ModelConfig&, std::uint64_t);
template ParamStore<double> init_params<double>(const ModelConfig&, std::uint64_t);
template ParamStore<float> convert_params<float, double>(const ParamStore<double>&);
template ParamStore<double> convert_params<double, float>(const ParamStore<float>&);
template ParamStore<float> convert_params<float, float>(const ParamStore<float>&);
template ParamStore<double> convert_params<double, double>(const ParamStore<double>&);

}  // namespace tscnet::model
