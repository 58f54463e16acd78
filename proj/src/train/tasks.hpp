#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "core/gradcheck.hpp"
#include "eval/metrics.hpp"
#include "model/params.hpp"
#include "train/run_config.hpp"
#include "train/trainer.hpp"

namespace tscnet::train {

// Eval-mode metrics of the model over the manifest.
eval::MetricsReport evaluate(const RunConfig& cfg, const model::ParamStore<float>& params,
                             const std::string& manifest);
eval::MetricsReport evaluate(const RunConfig& cfg, const std::string& checkpoint, const std::string& manifest);

// S2 (and optionally S3, S4) as values in [0, 1], row-major.
struct Prediction {
  int size = 0;
  std::vector<double> s2;
  std::vector<double> s3;
  std::vector<double> s4;  // size / 2
};

Prediction predict(const RunConfig& cfg, const model::ParamStore<float>& params, const data::Sample& s);

// Writes <out> for S2; with `laterals`, also <stem>_s3.png and <stem>_s4.png.
std::vector<std::string> infer(const RunConfig& cfg, const std::string& checkpoint, const std::string& image,
                               const std::string& out, bool laterals);

struct GroupCheck {
  std::string group;
  std::size_t params = 0;
  std::size_t scalars = 0;
  double max_error = 0.0;
  std::string worst;
};

struct GradcheckRun {
  core::GradCheckReport report;
  std::vector<GroupCheck> groups;
  double max_error = 0.0;
  double beta_grad = 0.0;  // |dL/dbeta| summed over levels
  bool passed = false;
};

// Parameter group of a name: backbone, pau, tru, riu, fuse or decoder.
std::string param_group(const std::string& name);

// 64-bit finite-difference check of every parameter against the total loss of
// one synthetic sample. TRU gates are set to `gradcheck_beta` so the attention
// projections receive gradient.
GradcheckRun run_gradcheck(const RunConfig& cfg);
std::string format_gradcheck(const GradcheckRun& run, double threshold);

struct BenchRow {
  int channels = 0;
  int size = 0;
  std::size_t channelwise_elements = 0;
  std::size_t standard_elements = 0;  // 0 when skipped
  double channelwise_ms = 0.0;
  double standard_ms = 0.0;
  bool skipped = false;
  bool ratio_exact = false;  // standard / channelwise == h^2 / c
};

std::vector<BenchRow> bench_attention(const std::vector<std::pair<int, int>>& sizes, int repeats,
                                      std::size_t cap_elements, std::uint64_t seed = 1);
std::string format_bench(const std::vector<BenchRow>& rows);

}  // namespace tscnet::train
