#include "train/tasks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>

#include "core/attention.hpp"
#include "core/error.hpp"
#include "core/ops.hpp"
#include "core/rng.hpp"
#include "data/io.hpp"
#include "data/synth.hpp"
#include "model/network.hpp"
#include "train/checkpoint.hpp"
#include "train/objective.hpp"

namespace tscnet::train {

using core::Tensor;

namespace {

std::vector<double> to_double(const Tensor<float>& t) { return {t.values().begin(), t.values().end()}; }

}  // namespace

Prediction predict(const RunConfig& cfg, const model::ParamStore<float>& params, const data::Sample& s) {
  if (s.height != cfg.model.input_size || s.width != cfg.model.input_size) {
    throw DataError("sample '" + s.id + "' is " + std::to_string(s.width) + "x" + std::to_string(s.height) +
                    ", the model expects " + std::to_string(cfg.model.input_size));
  }
  core::NoGradGuard no_grad;
  const auto out = model::forward(image_tensor<float>(s), cfg.model, params);
  return {cfg.model.input_size, to_double(out.maps.s2), to_double(out.maps.s3), to_double(out.maps.s4)};
}

eval::MetricsReport evaluate(const RunConfig& cfg, const model::ParamStore<float>& params,
                             const std::string& manifest) {
  const auto samples = load_dataset(manifest, cfg.model.input_size);
  std::vector<eval::ImageMetrics> rows;
  for (const auto& s : samples) {
    const Prediction p = predict(cfg, params, s);
    const std::vector<double> gt(s.mask.begin(), s.mask.end());
    rows.push_back(eval::evaluate_map(s.id, {p.s2, p.size, p.size}, {gt, s.height, s.width}));
  }
  return eval::aggregate(std::move(rows));
}

eval::MetricsReport evaluate(const RunConfig& cfg, const std::string& checkpoint, const std::string& manifest) {
  return evaluate(cfg, load_checkpoint<float>(checkpoint, cfg.model), manifest);
}

std::vector<std::string> infer(const RunConfig& cfg, const std::string& checkpoint, const std::string& image,
                               const std::string& out, bool laterals) {
  const auto params = load_checkpoint<float>(checkpoint, cfg.model);
  const data::Image8 rgb = data::read_png(image, 3);
  data::Sample s;
  s.id = std::filesystem::path(image).stem().string();
  s.height = rgb.height;
  s.width = rgb.width;
  const std::size_t plane = static_cast<std::size_t>(s.height) * s.width;
  s.image.resize(3 * plane);
  for (std::size_t i = 0; i < plane; ++i)
    for (std::size_t c = 0; c < 3; ++c) s.image[c * plane + i] = static_cast<float>(rgb.pixels[3 * i + c] / 255.0);
  const Prediction p = predict(cfg, params, s);
  std::vector<std::string> written{out};
  data::save_map(out, p.s2, p.size, p.size);
  if (laterals) {
    const std::filesystem::path base(out);
    const std::string stem = (base.parent_path() / base.stem()).string();
    data::save_map(stem + "_s3.png", p.s3, p.size, p.size);
    data::save_map(stem + "_s4.png", p.s4, p.size / 2, p.size / 2);
    written.push_back(stem + "_s3.png");
    written.push_back(stem + "_s4.png");
  }
  return written;
}

std::string param_group(const std::string& name) {
  if (name.rfind("fe.", 0) == 0) return "backbone";
  if (name.rfind("sp.", 0) == 0) return "decoder";
  if (name.rfind("tscm.shared_vit.", 0) == 0 || name.find(".msp.") != std::string::npos) return "riu";
  if (name.find(".pau.") != std::string::npos) return "pau";
  if (name.find(".tru.") != std::string::npos) return "tru";
  if (name.find(".fuse.") != std::string::npos) return "fuse";
  return "other";
}

GradcheckRun run_gradcheck(const RunConfig& cfg) {
  cfg.model.validate();
  data::SynthConfig synth = cfg.synth;
  synth.size = cfg.model.input_size;
  synth.seed = cfg.seed;
  const data::Sample sample = data::generate_sample(synth, 0);
  const Tensor<double> image = image_tensor<double>(sample);
  const Tensor<double> gt = mask_tensor<double>(sample);

  auto params = model::init_params<double>(cfg.model, cfg.seed);
  std::vector<core::NamedParam> named;
  for (const auto& [name, t] : params) {
    if (name.size() >= 9 && name.compare(name.size() - 9, 9, ".tru.beta") == 0) {
      Tensor<double> handle = t;
      handle.mutable_values()[0] = cfg.gradcheck_beta;
    }
    named.emplace_back(name, t);
  }
  auto loss = [&] { return total_loss(model::forward(image, cfg.model, params).maps, gt).loss; };

  core::GradCheckOptions options;
  options.epsilon = cfg.gradcheck_eps;
  GradcheckRun run;
  run.report = core::finite_diff_check(loss, named, options);

  for (const auto& [name, t] : params)
    if (name.find(".tru.beta") != std::string::npos && t.has_grad()) run.beta_grad += std::fabs(t.grad()[0]);

  std::map<std::string, GroupCheck> groups;
  for (const auto& p : run.report.params) {
    GroupCheck& g = groups[param_group(p.name)];
    g.group = param_group(p.name);
    ++g.params;
    g.scalars += p.count;
    if (g.worst.empty() || p.max_error > g.max_error) {
      g.max_error = p.max_error;
      g.worst = p.name;
    }
  }
  for (auto& [k, g] : groups) run.groups.push_back(g);
  run.max_error = run.report.max_error();
  run.passed = run.max_error < cfg.gradcheck_threshold && run.report.nonfinite() == 0;
  return run;
}

std::string format_gradcheck(const GradcheckRun& run, double threshold) {
  std::string out;
  char buf[320];
  std::snprintf(buf, sizeof buf, "%-10s %7s %8s %12s  %s\n", "group", "params", "scalars", "max_error", "worst");
  out += buf;
  for (const auto& g : run.groups) {
    std::snprintf(buf, sizeof buf, "%-10s %7zu %8zu %12.3e  %s\n", g.group.c_str(), g.params, g.scalars, g.max_error,
                  g.worst.c_str());
    out += buf;
  }
  out += "\nworst parameters:\n";
  std::snprintf(buf, sizeof buf, "%-44s %8s %12s %14s %14s %6s %6s\n", "name", "index", "rel_error", "analytic",
                "numeric", "kinked", "refined");
  out += buf;
  const std::size_t shown = std::min<std::size_t>(run.report.params.size(), 15);
  for (std::size_t i = 0; i < shown; ++i) {
    const auto& p = run.report.params[i];
    std::snprintf(buf, sizeof buf, "%-44s %8zu %12.3e %14.6e %14.6e %6zu %6zu\n", p.name.c_str(), p.worst_index,
                  p.max_error, p.worst_analytic, p.worst_numeric, p.kinked, p.refined);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "\nmax error %.3e (threshold %.1e), |dL/dbeta| %.3e: %s\n", run.max_error, threshold,
                run.beta_grad, run.passed ? "PASS" : "FAIL");
  out += buf;
  return out;
}

std::vector<BenchRow> bench_attention(const std::vector<std::pair<int, int>>& sizes, int repeats,
                                      std::size_t cap_elements, std::uint64_t seed) {
  if (repeats < 1) throw ConfigError("bench repeats must be at least 1");
  core::NoGradGuard no_grad;
  std::vector<BenchRow> rows;
  for (const auto& [c, h] : sizes) {
    if (c < 1 || h < 1) throw ConfigError("bench sizes must be positive");
    const std::size_t n = static_cast<std::size_t>(c) * h * h;
    core::Rng rng(core::derive_seed(seed, n));
    std::array<std::vector<float>, 3> qkv;
    for (auto& v : qkv) {
      v.resize(n);
      for (float& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
    }
    const auto q = Tensor<float>::from_values({c, h, h}, qkv[0]);
    const auto k = Tensor<float>::from_values({c, h, h}, qkv[1]);
    const auto v = Tensor<float>::from_values({c, h, h}, qkv[2]);

    auto median = [](std::vector<double> t) {
      std::sort(t.begin(), t.end());
      return t[t.size() / 2];
    };
    BenchRow row;
    row.channels = c;
    row.size = h;
    std::vector<double> times;
    for (int r = 0; r < repeats; ++r) {
      core::reset_scratch_stats();
      const auto t0 = std::chrono::steady_clock::now();
      const auto out = core::channelwise_attention(q, k, v);
      const auto t1 = std::chrono::steady_clock::now();
      times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
      row.channelwise_elements = core::scratch_stats().peak_elements;
    }
    row.channelwise_ms = median(times);

    const std::size_t tokens = static_cast<std::size_t>(h) * h;
    if (tokens * tokens > cap_elements) {
      row.skipped = true;
    } else {
      times.clear();
      for (int r = 0; r < repeats; ++r) {
        core::reset_scratch_stats();
        const auto t0 = std::chrono::steady_clock::now();
        const auto out = core::standard_attention_reference<float>(q.values(), k.values(), v.values(), c, h, h);
        const auto t1 = std::chrono::steady_clock::now();
        times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        row.standard_elements = core::scratch_stats().peak_elements;
      }
      row.standard_ms = median(times);
      // standard / channelwise == h^2 / c  <=>  standard * c == channelwise * h^2
      row.ratio_exact = row.standard_elements * static_cast<std::size_t>(c) == row.channelwise_elements * tokens;
    }
    rows.push_back(row);
  }
  return rows;
}

std::string format_bench(const std::vector<BenchRow>& rows) {
  std::string out = "c,h,channelwise_elements,standard_elements,ratio,expected_ratio,channelwise_ms,standard_ms,status\n";
  char buf[320];
  for (const auto& r : rows) {
    const double expected = static_cast<double>(r.size) * r.size / r.channels;
    if (r.skipped) {
      std::snprintf(buf, sizeof buf, "%d,%d,%zu,,,%.6g,%.4f,,skipped (cap)\n", r.channels, r.size,
                    r.channelwise_elements, expected, r.channelwise_ms);
    } else {
      std::snprintf(buf, sizeof buf, "%d,%d,%zu,%zu,%.6g,%.6g,%.4f,%.4f,%s\n", r.channels, r.size,
                    r.channelwise_elements, r.standard_elements,
                    static_cast<double>(r.standard_elements) / static_cast<double>(r.channelwise_elements), expected,
                    r.channelwise_ms, r.standard_ms, r.ratio_exact ? "ok" : "ratio mismatch");
    }
    out += buf;
  }
  return out;
}

}  // namespace tscnet::train
