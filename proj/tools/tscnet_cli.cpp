#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "tscnet/tscnet.h"

namespace {

struct Common {
  std::string config_file;
  std::string preset;
  std::vector<std::string> sets;
  std::optional<long long> seed;
  bool quiet = false;
  bool print_config = false;
};

int report(tscnet_status st) {
  if (st != TSCNET_OK) std::fprintf(stderr, "tscnet: %s\n", tscnet_last_error());
  return static_cast<int>(st);
}

void log_to_stderr(const char* line, void*) { std::fprintf(stderr, "%s\n", line); }

class Config {
 public:
  Config() { tscnet_config_new(&cfg_); }
  ~Config() { tscnet_config_free(cfg_); }
  Config(const Config&) = delete;
  Config& operator=(const Config&) = delete;

  tscnet_config* get() const { return cfg_; }

  tscnet_status set(const std::string& key, const std::string& value) {
    return tscnet_config_set(cfg_, key.c_str(), value.c_str());
  }

 private:
  tscnet_config* cfg_ = nullptr;
};

// Resolution order: base preset, config file, --preset, --set in order, dedicated flags.
tscnet_status build(Config& cfg, const Common& c, const char* base_preset,
                    const std::vector<std::pair<std::string, std::string>>& flags) {
  tscnet_status st = TSCNET_OK;
  if (base_preset && (st = cfg.set("preset", base_preset)) != TSCNET_OK) return st;
  if (!c.config_file.empty() && (st = tscnet_config_load_file(cfg.get(), c.config_file.c_str())) != TSCNET_OK)
    return st;
  if (!c.preset.empty() && (st = cfg.set("preset", c.preset)) != TSCNET_OK) return st;
  for (const auto& kv : c.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::fprintf(stderr, "tscnet: --set expects key=value, got '%s'\n", kv.c_str());
      return TSCNET_ERR_USAGE;
    }
    if ((st = cfg.set(kv.substr(0, eq), kv.substr(eq + 1))) != TSCNET_OK) return st;
  }
  if (c.seed && (st = cfg.set("seed", std::to_string(*c.seed))) != TSCNET_OK) return st;
  for (const auto& [k, v] : flags)
    if ((st = cfg.set(k, v)) != TSCNET_OK) return st;
  if (c.print_config) {
    char* text = nullptr;
    if ((st = tscnet_config_dump(cfg.get(), &text)) != TSCNET_OK) return st;
    std::fputs(text, stderr);
    tscnet_string_free(text);
  }
  return TSCNET_OK;
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("-c,--config", c.config_file, "key=value configuration file")->check(CLI::ExistingFile);
  app->add_option("-p,--preset", c.preset, "model preset: full, desk or micro");
  app->add_option("-s,--set", c.sets, "override a setting, key=value (repeatable)")->allow_extra_args(false);
  app->add_option("--seed", c.seed, "RNG seed");
  app->add_flag("-q,--quiet", c.quiet, "suppress progress output");
  app->add_flag("--print-config", c.print_config, "print the resolved configuration to stderr");
}

bool write_text(const std::string& path, const char* text) {
  if (path.empty() || path == "-") {
    std::fputs(text, stdout);
    return true;
  }
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) {
    std::fprintf(stderr, "tscnet: cannot write %s\n", path.c_str());
    return false;
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tscnet salient object detection: data generation, training, evaluation and checks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(tscnet_version()));

  Common common;

  auto* gen = app.add_subcommand("gen-data", "write a synthetic image/mask dataset and manifest");
  add_common(gen, common);
  std::string gen_out;
  int gen_count = 0;
  std::optional<int> gen_size;
  gen->add_option("-o,--out", gen_out, "output directory")->required();
  gen->add_option("-n,--count", gen_count, "number of samples (default synth.count)");
  gen->add_option("--size", gen_size, "image side length (sets input_size)");

  auto* train = app.add_subcommand("train", "train from a manifest and write a checkpoint and loss log");
  add_common(train, common);
  std::string tr_manifest, tr_ckpt, tr_log, tr_init;
  std::optional<int> tr_steps, tr_epochs;
  train->add_option("-m,--manifest", tr_manifest, "training manifest");
  train->add_option("-k,--checkpoint", tr_ckpt, "checkpoint to write");
  train->add_option("--log", tr_log, "CSV loss log to write");
  train->add_option("--init", tr_init, "checkpoint to resume from");
  train->add_option("--max-steps", tr_steps, "stop after this many optimiser steps");
  train->add_option("--epochs", tr_epochs, "number of epochs");

  auto* eval = app.add_subcommand("eval", "score a checkpoint on a manifest");
  add_common(eval, common);
  std::string ev_ckpt, ev_manifest, ev_csv;
  eval->add_option("-k,--checkpoint", ev_ckpt, "checkpoint")->required();
  eval->add_option("-m,--manifest", ev_manifest, "evaluation manifest")->required();
  eval->add_option("--csv", ev_csv, "per-image CSV report (default stdout)");

  auto* infer = app.add_subcommand("infer", "write the saliency map of one image");
  add_common(infer, common);
  std::string in_ckpt, in_image, in_out;
  bool in_laterals = false;
  infer->add_option("-k,--checkpoint", in_ckpt, "checkpoint")->required();
  infer->add_option("-i,--image", in_image, "input PNG")->required();
  infer->add_option("-o,--out", in_out, "output PNG")->required();
  infer->add_flag("--laterals", in_laterals, "also write the S3 and S4 maps");

  auto* grad = app.add_subcommand("gradcheck", "compare analytic gradients with finite differences");
  add_common(grad, common);
  std::string gc_report;
  grad->add_option("--report", gc_report, "write the report here (default stdout)");

  auto* bench = app.add_subcommand("bench-attn", "channel-wise vs standard attention scratch size and time");
  add_common(bench, common);
  std::string bench_csv;
  bench->add_option("--csv", bench_csv, "write the CSV here (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : TSCNET_ERR_USAGE;
  }

  if (!common.quiet) tscnet_set_log_callback(log_to_stderr, nullptr);

  Config cfg;
  std::vector<std::pair<std::string, std::string>> flags;

  if (*gen) {
    if (gen_size) flags.emplace_back("input_size", std::to_string(*gen_size));
    if (auto st = build(cfg, common, nullptr, flags)) return report(st);
    return report(tscnet_gen_data(cfg.get(), gen_out.c_str(), gen_count));
  }

  if (*train) {
    if (!tr_manifest.empty()) flags.emplace_back("manifest", tr_manifest);
    if (!tr_ckpt.empty()) flags.emplace_back("checkpoint", tr_ckpt);
    if (!tr_log.empty()) flags.emplace_back("log", tr_log);
    if (!tr_init.empty()) flags.emplace_back("init_checkpoint", tr_init);
    if (tr_steps) flags.emplace_back("max_steps", std::to_string(*tr_steps));
    if (tr_epochs) flags.emplace_back("epochs", std::to_string(*tr_epochs));
    if (auto st = build(cfg, common, nullptr, flags)) return report(st);
    tscnet_train_summary summary{};
    const tscnet_status st = tscnet_train(cfg.get(), &summary);
    if (st == TSCNET_OK && !common.quiet)
      std::fprintf(stderr, "trained %d steps, loss %.6f -> %.6f\n", summary.steps, summary.first_loss,
                   summary.last_loss);
    return report(st);
  }

  if (*eval) {
    if (auto st = build(cfg, common, nullptr, flags)) return report(st);
    tscnet_metrics mean{};
    char* csv = nullptr;
    const tscnet_status st = tscnet_evaluate(cfg.get(), ev_ckpt.c_str(), ev_manifest.c_str(), &mean, &csv);
    if (st != TSCNET_OK) return report(st);
    const bool ok = write_text(ev_csv, csv);
    tscnet_string_free(csv);
    if (!ok) return TSCNET_ERR_DATA;
    if (!common.quiet)
      std::fprintf(stderr, "S=%.4f F=%.4f E=%.4f MAE=%.4f\n", mean.s_alpha, mean.f_mean, mean.e_mean, mean.mae);
    return 0;
  }

  if (*infer) {
    if (auto st = build(cfg, common, nullptr, flags)) return report(st);
    return report(tscnet_infer(cfg.get(), in_ckpt.c_str(), in_image.c_str(), in_out.c_str(), in_laterals ? 1 : 0));
  }

  if (*grad) {
    if (auto st = build(cfg, common, "micro", flags)) return report(st);
    tscnet_gradcheck_result result{};
    char* text = nullptr;
    const tscnet_status st = tscnet_gradcheck(cfg.get(), &result, &text);
    if (text) {
      const bool ok = write_text(gc_report, text);
      tscnet_string_free(text);
      if (!ok) return TSCNET_ERR_DATA;
    }
    return report(st);
  }

  if (*bench) {
    if (auto st = build(cfg, common, nullptr, flags)) return report(st);
    char* csv = nullptr;
    const tscnet_status st = tscnet_bench_attention(cfg.get(), &csv);
    if (st != TSCNET_OK) return report(st);
    const bool ok = write_text(bench_csv, csv);
    tscnet_string_free(csv);
    return ok ? 0 : TSCNET_ERR_DATA;
  }
  return TSCNET_ERR_USAGE;
}
