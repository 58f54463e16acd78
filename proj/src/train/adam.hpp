#pragma once

#include <map>
#include <string>
#include <vector>

#include "model/params.hpp"

namespace tscnet::train {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Moments are kept in double.
class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}

  // Uses each parameter's accumulated grad; parameters without a grad are skipped.
  void step(model::ParamStore<float>& params, double lr);
  long long steps() const { return t_; }

 private:
  AdamOptions options_;
  long long t_ = 0;
  std::map<std::string, std::vector<double>> m_;
  std::map<std::string, std::vector<double>> v_;
};

}  // namespace tscnet::train
