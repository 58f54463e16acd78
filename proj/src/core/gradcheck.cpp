#include "core/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "core/kink.hpp"

namespace tscnet::core {

std::size_t GradCheckReport::nonfinite() const {
  std::size_t n = 0;
  for (const auto& p : params) n += p.nonfinite;
  return n;
}

double gradient_error(double analytic, double numeric, double abs_floor) {
  const double diff = std::fabs(analytic - numeric);
  const double scale = std::max(std::fabs(analytic), std::fabs(numeric));
  return scale < abs_floor ? diff : diff / scale;
}

namespace {

struct Probe {
  double value;
  std::uint64_t signature;
  bool finite;
};

Probe probe(const std::function<Tensor<double>()>& f) {
  NoGradGuard no_grad;
  KinkMonitor::Scope monitor;
  try {
    const double v = f().item();
    return {v, monitor.signature(), std::isfinite(v)};
  } catch (const NumericError&) {
    return {0.0, monitor.signature(), false};
  }
}

}  // namespace

GradCheckReport finite_diff_check(const std::function<Tensor<double>()>& f,
                                  const std::vector<NamedParam>& params,
                                  const GradCheckOptions& options) {
  if (options.epsilon < 1e-7 || options.epsilon > 1e-3) {
    throw ContractError("finite-difference epsilon must lie in [1e-7, 1e-3]");
  }
  for (const auto& [name, t] : params) {
    if (!t.is_leaf()) throw ContractError("gradcheck parameter '" + name + "' is not a leaf");
    Tensor<double> handle = t;
    handle.zero_grad();
  }
  {
    const Tensor<double> loss = f();
    backward(loss);
  }
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const auto& [name, t] : params) {
    if (t.has_grad()) {
      analytic.emplace_back(t.grad().begin(), t.grad().end());
    } else {
      analytic.emplace_back(t.numel(), 0.0);
    }
  }

  const Probe base = probe(f);
  GradCheckReport report;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor<double> t = params[p].second;
    auto values = t.mutable_values();
    ParamCheck check;
    check.name = params[p].first;
    check.count = values.size();
    bool have_worst = false;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double original = values[i];
      double eps = options.epsilon;
      bool scored = false;
      bool nonfinite = false;
      double numeric = 0.0;
      for (int attempt = 0; attempt <= options.max_refinements; ++attempt) {
        values[i] = original + eps;
        const Probe plus = probe(f);
        values[i] = original - eps;
        const Probe minus = probe(f);
        values[i] = original;
        if (!plus.finite || !minus.finite) {
          ++check.nonfinite;
          nonfinite = true;
          break;
        }
        if (plus.signature == base.signature && minus.signature == base.signature) {
          numeric = (plus.value - minus.value) / (2.0 * eps);
          scored = true;
          break;
        }
        ++check.refined;
        eps /= 10.0;
      }
      values[i] = original;
      if (!scored) {
        if (!nonfinite) ++check.kinked;
        continue;
      }
      const double err = gradient_error(analytic[p][i], numeric, options.abs_floor);
      if (!have_worst || err > check.max_error) {
        have_worst = true;
        check.max_error = err;
        check.worst_index = i;
        check.worst_analytic = analytic[p][i];
        check.worst_numeric = numeric;
      }
    }
    report.params.push_back(std::move(check));
  }
  std::stable_sort(report.params.begin(), report.params.end(),
                   [](const ParamCheck& a, const ParamCheck& b) { return a.max_error > b.max_error; });
  return report;
}

}  // namespace tscnet::core
