#include "tscnet/tscnet.h"

#include <cstring>
#include <exception>
#include <mutex>
#include <new>
#include <sstream>
#include <string>

#include "core/error.hpp"
#include "data/synth.hpp"
#include "eval/metrics.hpp"
#include "train/checkpoint.hpp"
#include "train/run_config.hpp"
#include "train/tasks.hpp"
#include "train/trainer.hpp"

struct tscnet_config {
  tscnet::train::RunConfig cfg;
};

struct tscnet_model {
  tscnet::train::RunConfig cfg;
  tscnet::model::ParamStore<float> params;
};

namespace {

thread_local std::string g_last_error;

std::mutex g_log_mutex;
tscnet_log_fn g_log_fn = nullptr;
void* g_log_user = nullptr;

void emit(const std::string& line) {
  std::lock_guard<std::mutex> lock(g_log_mutex);
  if (g_log_fn) g_log_fn(line.c_str(), g_log_user);
}

tscnet_status fail(tscnet_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <typename F>
tscnet_status guarded(F&& body) {
  g_last_error.clear();
  try {
    return body();
  } catch (const tscnet::ConfigError& e) {
    return fail(TSCNET_ERR_USAGE, e.what());
  } catch (const tscnet::DataError& e) {
    return fail(TSCNET_ERR_DATA, e.what());
  } catch (const tscnet::NumericError& e) {
    return fail(TSCNET_ERR_NUMERIC, e.what());
  } catch (const tscnet::UnsupportedShapeError& e) {
    return fail(TSCNET_ERR_USAGE, e.what());
  } catch (const std::bad_alloc&) {
    return fail(TSCNET_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(TSCNET_ERR_INTERNAL, std::string("internal error: ") + e.what());
  } catch (...) {
    return fail(TSCNET_ERR_INTERNAL, "internal error: unknown exception");
  }
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

bool missing(const void* p, const char* what, tscnet_status* status) {
  if (p) return false;
  *status = fail(TSCNET_ERR_USAGE, std::string(what) + " must not be NULL");
  return true;
}

}  // namespace

extern "C" {

const char* tscnet_version(void) { return "0.1.0"; }

const char* tscnet_last_error(void) { return g_last_error.c_str(); }

void tscnet_set_log_callback(tscnet_log_fn fn, void* user) {
  std::lock_guard<std::mutex> lock(g_log_mutex);
  g_log_fn = fn;
  g_log_user = user;
}

void tscnet_string_free(char* s) { delete[] s; }

tscnet_status tscnet_config_new(tscnet_config** out) {
  return guarded([&] {
    tscnet_status st;
    if (missing(out, "out", &st)) return st;
    *out = new tscnet_config();
    return TSCNET_OK;
  });
}

void tscnet_config_free(tscnet_config* cfg) { delete cfg; }

tscnet_status tscnet_config_load_file(tscnet_config* cfg, const char* path) {
  return guarded([&] {
    tscnet_status st;
    if (missing(cfg, "config", &st) || missing(path, "path", &st)) return st;
    cfg->cfg.load_file(path);
    return TSCNET_OK;
  });
}

tscnet_status tscnet_config_set(tscnet_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    tscnet_status st;
    if (missing(cfg, "config", &st) || missing(key, "key", &st) || missing(value, "value", &st)) return st;
    cfg->cfg.set(key, value);
    return TSCNET_OK;
  });
}

tscnet_status tscnet_config_dump(const tscnet_config* cfg, char** text) {
  return guarded([&] {
    tscnet_status st;
    if (missing(cfg, "config", &st) || missing(text, "text", &st)) return st;
    std::string out;
    for (const auto& [k, v] : cfg->cfg.entries()) out += k + "=" + v + "\n";
    *text = dup_string(out);
    return TSCNET_OK;
  });
}

tscnet_status tscnet_gen_data(const tscnet_config* cfg, const char* dir, int count) {
  return guarded([&] {
    tscnet_status st;
    if (missing(cfg, "config", &st) || missing(dir, "dir", &st)) return st;
    if (count <= 0) count = cfg->cfg.synth_count;
    if (count <= 0) return fail(TSCNET_ERR_USAGE, "synth.count must be positive");
    tscnet::data::SynthConfig synth = cfg->cfg.synth;
    synth.size = cfg->cfg.model.input_size;
    cfg->cfg.model.validate();
    const std::string manifest = tscnet::data::generate_dataset(synth, count, dir);
    emit("wrote " + std::to_string(count) + " samples, manifest " + manifest);
    return TSCNET_OK;
  });
}

tscnet_status tscnet_train(const tscnet_config* cfg, tscnet_train_summary* summary) {
  return guarded([&] {
    tscnet_status st;
    if (missing(cfg, "config", &st)) return st;
    const auto result = tscnet::train::train(cfg->cfg, emit);
    if (summary) {
      summary->steps = result.steps;
      summary->first_loss = result.log.empty() ? 0.0 : result.log.front().total;
      summary->last_loss = result.log.empty() ? 0.0 : result.log.back().total;
    }
    return TSCNET_OK;
  });
}

tscnet_status tscnet_evaluate(const tscnet_config* cfg, const char* checkpoint, const char* manifest,
                              tscnet_metrics* mean, char** csv) {
  return guarded([&] {
    tscnet_status st;
    if (missing(cfg, "config", &st) || missing(checkpoint, "checkpoint", &st) || missing(manifest, "manifest", &st))
      return st;
    const auto report = tscnet::train::evaluate(cfg->cfg, checkpoint, manifest);
    if (mean) *mean = {report.mean.s_alpha, report.mean.f_mean, report.mean.e_mean, report.mean.mae};
    if (csv) {
      std::ostringstream os;
      tscnet::eval::write_csv(os, report);
      *csv = dup_string(os.str());
    }
    return TSCNET_OK;
  });
}

tscnet_status tscnet_infer(const tscnet_config* cfg, const char* checkpoint, const char* image, const char* out,
                           int laterals) {
  return guarded([&] {
    tscnet_status st;
    if (missing(cfg, "config", &st) || missing(checkpoint, "checkpoint", &st) || missing(image, "image", &st) ||
        missing(out, "out", &st))
      return st;
    for (const auto& path : tscnet::train::infer(cfg->cfg, checkpoint, image, out, laterals != 0))
      emit("wrote " + path);
    return TSCNET_OK;
  });
}

tscnet_status tscnet_gradcheck(const tscnet_config* cfg, tscnet_gradcheck_result* result, char** report) {
  return guarded([&] {
    tscnet_status st;
    if (missing(cfg, "config", &st)) return st;
    const auto run = tscnet::train::run_gradcheck(cfg->cfg);
    if (result) *result = {run.max_error, cfg->cfg.gradcheck_threshold, run.passed ? 1 : 0};
    if (report) *report = dup_string(tscnet::train::format_gradcheck(run, cfg->cfg.gradcheck_threshold));
    if (!run.passed) {
      std::ostringstream msg;
      msg << "gradient check failed: max relative error " << run.max_error << " >= "
          << cfg->cfg.gradcheck_threshold;
      return fail(TSCNET_ERR_NUMERIC, msg.str());
    }
    return TSCNET_OK;
  });
}

tscnet_status tscnet_bench_attention(const tscnet_config* cfg, char** csv) {
  return guarded([&] {
    tscnet_status st;
    if (missing(cfg, "config", &st) || missing(csv, "csv", &st)) return st;
    const auto rows = tscnet::train::bench_attention(cfg->cfg.bench_sizes, cfg->cfg.bench_repeats,
                                                     cfg->cfg.bench_cap, cfg->cfg.seed);
    *csv = dup_string(tscnet::train::format_bench(rows));
    return TSCNET_OK;
  });
}

tscnet_status tscnet_model_load(const tscnet_config* cfg, const char* checkpoint, tscnet_model** out) {
  return guarded([&] {
    tscnet_status st;
    if (missing(cfg, "config", &st) || missing(checkpoint, "checkpoint", &st) || missing(out, "out", &st)) return st;
    cfg->cfg.model.validate();
    auto params = tscnet::train::load_checkpoint<float>(checkpoint, cfg->cfg.model);
    *out = new tscnet_model{cfg->cfg, std::move(params)};
    return TSCNET_OK;
  });
}

void tscnet_model_free(tscnet_model* model) { delete model; }

int tscnet_model_input_size(const tscnet_model* model) { return model ? model->cfg.model.input_size : 0; }

tscnet_status tscnet_model_predict(const tscnet_model* model, const float* rgb, float* s2) {
  return guarded([&] {
    tscnet_status st;
    if (missing(model, "model", &st) || missing(rgb, "rgb", &st) || missing(s2, "s2", &st)) return st;
    const int s = model->cfg.model.input_size;
    const std::size_t plane = static_cast<std::size_t>(s) * s;
    tscnet::data::Sample sample;
    sample.id = "input";
    sample.height = s;
    sample.width = s;
    sample.image.assign(rgb, rgb + 3 * plane);
    sample.mask.assign(plane, 0);
    const auto pred = tscnet::train::predict(model->cfg, model->params, sample);
    for (std::size_t i = 0; i < plane; ++i) s2[i] = static_cast<float>(pred.s2[i]);
    return TSCNET_OK;
  });
}

}  // extern "C"
