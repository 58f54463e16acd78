#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "core/tensor.hpp"

namespace tscnet::core {

struct GradCheckOptions {
  double epsilon = 1e-5;
  // Below this gradient magnitude the error is absolute rather than relative.
  double abs_floor = 1e-6;
  // A step whose +/- evaluations change the relu / max-pool branch pattern is
  // retried with epsilon / 10 up to this many times.
  int max_refinements = 3;
};

struct ParamCheck {
  std::string name;
  std::size_t count = 0;
  double max_error = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t nonfinite = 0;
  std::size_t refined = 0;
  // Entries where every step size still straddled a kink; not scored.
  std::size_t kinked = 0;
};

struct GradCheckReport {
  std::vector<ParamCheck> params;  // worst first

  double max_error() const { return params.empty() ? 0.0 : params.front().max_error; }
  std::size_t nonfinite() const;
};

double gradient_error(double analytic, double numeric, double abs_floor);

using NamedParam = std::pair<std::string, Tensor<double>>;

// Central differences of a scalar function against backward() for every
// scalar entry of `params`. Requires 64-bit tensors.
GradCheckReport finite_diff_check(const std::function<Tensor<double>()>& f,
                                  const std::vector<NamedParam>& params,
                                  const GradCheckOptions& options = {});

}  // namespace tscnet::core
