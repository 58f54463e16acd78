#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "core/tensor.hpp"
#include "model/config.hpp"

namespace tscnet::model {

using core::Dims;
using core::Tensor;

enum class Init { he_normal, zeros, ones, normal_002 };

struct ParamSpec {
  std::string name;
  Dims dims;
  Init init = Init::zeros;
  int fan_in = 0;
};

// Every learnable tensor of the network for `cfg`, sorted by name.
std::vector<ParamSpec> param_specs(const ModelConfig& cfg);

template <typename T>
class ParamStore {
 public:
  using Map = std::map<std::string, Tensor<T>>;

  void insert(const std::string& name, Tensor<T> tensor);
  // Throws ContractError naming the missing parameter.
  const Tensor<T>& at(const std::string& name) const;
  bool contains(const std::string& name) const { return map_.count(name) != 0; }

  std::vector<std::string> names() const;
  std::size_t size() const { return map_.size(); }
  std::size_t scalar_count() const;
  void zero_grad();

  typename Map::const_iterator begin() const { return map_.begin(); }
  typename Map::const_iterator end() const { return map_.end(); }

 private:
  Map map_;
};

// Deterministic per (seed, parameter name): toggling a unit leaves every other
// parameter's initial value unchanged.
template <typename T>
ParamStore<T> init_params(const ModelConfig& cfg, std::uint64_t seed);

template <typename To, typename From>
ParamStore<To> convert_params(const ParamStore<From>& src);

extern template class ParamStore<float>;
extern template class ParamStore<double>;

}  // namespace tscnet::model
