#include "train/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "core/error.hpp"
#include "core/ops.hpp"
#include "core/rng.hpp"
#include "data/augment.hpp"
#include "data/io.hpp"
#include "model/network.hpp"
#include "train/adam.hpp"
#include "train/checkpoint.hpp"
#include "train/objective.hpp"

namespace tscnet::train {

using core::Tensor;

std::vector<data::Sample> load_dataset(const std::string& manifest, int input_size) {
  const auto entries = data::read_manifest(manifest);
  if (entries.empty()) throw DataError("manifest '" + manifest + "' lists no samples");
  std::vector<data::Sample> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    data::Sample s = data::load_sample(e.image, e.mask);
    if (s.height != input_size || s.width != input_size) {
      throw DataError("'" + e.image + "' is " + std::to_string(s.width) + "x" + std::to_string(s.height) +
                      ", the model expects " + std::to_string(input_size) + "x" + std::to_string(input_size));
    }
    out.push_back(std::move(s));
  }
  return out;
}

template <typename T>
Tensor<T> image_tensor(const data::Sample& s) {
  return Tensor<T>::from_values({3, s.height, s.width}, std::vector<T>(s.image.begin(), s.image.end()));
}

template <typename T>
Tensor<T> mask_tensor(const data::Sample& s) {
  return Tensor<T>::from_values({1, s.height, s.width}, std::vector<T>(s.mask.begin(), s.mask.end()));
}

template Tensor<float> image_tensor<float>(const data::Sample&);
template Tensor<double> image_tensor<double>(const data::Sample&);
template Tensor<float> mask_tensor<float>(const data::Sample&);
template Tensor<double> mask_tensor<double>(const data::Sample&);

std::string format_loss_log(const std::vector<LossRow>& rows) {
  std::string out = "step,bce2,bce3,bce4,iou2,iou3,iou4,total\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%.9e,%.9e,%.9e,%.9e,%.9e,%.9e,%.9e\n", r.step, r.bce[0], r.bce[1], r.bce[2],
                  r.iou[0], r.iou[1], r.iou[2], r.total);
    out += buf;
  }
  return out;
}

double dataset_loss(const model::ModelConfig& cfg, const model::ParamStore<float>& params,
                    const std::vector<data::Sample>& samples) {
  core::NoGradGuard no_grad;
  double acc = 0.0;
  for (const auto& s : samples) {
    const auto out = model::forward(image_tensor<float>(s), cfg, params);
    acc += total_loss(out.maps, mask_tensor<float>(s)).total;
  }
  return acc / static_cast<double>(samples.size());
}

namespace {

bool grads_finite(const model::ParamStore<float>& params) {
  for (const auto& [name, t] : params)
    for (float g : t.grad())
      if (!std::isfinite(g)) return false;
  return true;
}

std::vector<std::vector<float>> snapshot(const model::ParamStore<float>& params) {
  std::vector<std::vector<float>> out;
  for (const auto& [name, t] : params) out.emplace_back(t.values().begin(), t.values().end());
  return out;
}

void restore(model::ParamStore<float>& params, const std::vector<std::vector<float>>& saved) {
  std::size_t i = 0;
  for (const auto& [name, t] : params) {
    Tensor<float> handle = t;
    auto v = handle.mutable_values();
    std::copy(saved[i].begin(), saved[i].end(), v.begin());
    ++i;
  }
}

bool values_finite(const model::ParamStore<float>& params) {
  for (const auto& [name, t] : params)
    for (float v : t.values())
      if (!std::isfinite(v)) return false;
  return true;
}

constexpr std::uint64_t kShuffleStream = 0x5348554646ULL;
constexpr std::uint64_t kAugmentStream = 0x415547ULL;
constexpr std::uint64_t kDropoutStream = 0x44524f50ULL;

}  // namespace

TrainResult train_on(const RunConfig& cfg, const std::vector<data::Sample>& samples, model::ParamStore<float> params,
                     const Logger& log) {
  cfg.validate();
  if (samples.empty()) throw DataError("no training samples");
  TrainResult result;
  Adam adam({cfg.beta1, cfg.beta2, cfg.adam_eps});
  const std::size_t n = samples.size();
  const std::size_t bsz = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch), n);
  int step = 0;
  bool done = false;
  for (int epoch = 0; epoch < cfg.epochs && !done; ++epoch) {
    const double lr = cfg.lr_at_epoch(epoch);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    core::Rng shuffle(core::derive_seed(cfg.seed ^ kShuffleStream, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle.uniform_int(0, static_cast<int>(i - 1)))]);

    for (std::size_t start = 0; start < n; start += bsz) {
      if (cfg.max_steps > 0 && step >= cfg.max_steps) {
        done = true;
        break;
      }
      const std::size_t end = std::min(n, start + bsz);
      const float inv = 1.0f / static_cast<float>(end - start);
      params.zero_grad();
      LossRow row;
      row.step = step;
      try {
        for (std::size_t j = start; j < end; ++j) {
          const std::uint64_t item = static_cast<std::uint64_t>(step) * 1024 + (j - start);
          const data::Sample& raw = samples[order[j]];
          const data::Sample s = cfg.augment ? data::augment(raw, core::derive_seed(cfg.seed ^ kAugmentStream, item)) : raw;
          const model::RunMode mode{true, core::derive_seed(cfg.seed ^ kDropoutStream, item)};
          const auto out = model::forward(image_tensor<float>(s), cfg.model, params, mode);
          const auto rep = total_loss(out.maps, mask_tensor<float>(s));
          core::backward(core::scale(rep.loss, inv));
          for (std::size_t k = 0; k < 3; ++k) {
            row.bce[k] += rep.bce[k] * inv;
            row.iou[k] += rep.iou[k] * inv;
          }
          row.total += rep.total * inv;
        }
      } catch (const NumericError& e) {
        result.aborted = true;
        result.abort_reason = std::string("step ") + std::to_string(step) + ": " + e.what();
      }
      if (!result.aborted && (!std::isfinite(row.total) || !grads_finite(params))) {
        result.aborted = true;
        result.abort_reason = "step " + std::to_string(step) + ": non-finite loss or gradient";
      }
      if (!result.aborted) {
        const auto saved = snapshot(params);
        adam.step(params, lr);
        if (!values_finite(params)) {
          restore(params, saved);
          result.aborted = true;
          result.abort_reason = "step " + std::to_string(step) + ": non-finite parameter update";
        }
      }
      if (result.aborted) {
        done = true;
        break;
      }
      result.log.push_back(row);
      if (log) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "step %d epoch %d lr %.3g loss %.6f", step, epoch, lr, row.total);
        log(buf);
      }
      ++step;
    }
    if (!done && cfg.checkpoint_every > 0 && !cfg.checkpoint.empty() && (epoch + 1) % cfg.checkpoint_every == 0) {
      save_checkpoint(cfg.checkpoint + ".epoch" + std::to_string(epoch + 1), params);
    }
  }
  params.zero_grad();
  result.steps = step;
  result.params = std::move(params);
  return result;
}

TrainResult train(const RunConfig& cfg, const Logger& log) {
  cfg.validate();
  if (cfg.manifest.empty()) throw ConfigError("train needs a manifest");
  const auto samples = load_dataset(cfg.manifest, cfg.model.input_size);
  model::ParamStore<float> params = cfg.init_checkpoint.empty()
                                        ? model::init_params<float>(cfg.model, cfg.seed)
                                        : load_checkpoint<float>(cfg.init_checkpoint, cfg.model);
  TrainResult result = train_on(cfg, samples, std::move(params), log);
  if (!cfg.log.empty()) {
    std::ofstream out(cfg.log, std::ios::binary);
    if (!out) throw DataError("cannot write log '" + cfg.log + "'");
    out << format_loss_log(result.log);
  }
  if (!cfg.checkpoint.empty()) save_checkpoint(cfg.checkpoint, result.params);
  if (result.aborted) {
    throw NumericError("training diverged at " + result.abort_reason + "; last good checkpoint saved to '" +
                       cfg.checkpoint + "'");
  }
  return result;
}

}  // namespace tscnet::train
