#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "core/tensor.hpp"
#include "data/sample.hpp"
#include "model/params.hpp"
#include "train/run_config.hpp"

namespace tscnet::train {

using Logger = std::function<void(const std::string&)>;

// Loads every manifest entry; throws DataError if the manifest is empty or an
// image is not input_size x input_size.
std::vector<data::Sample> load_dataset(const std::string& manifest, int input_size);

template <typename T>
core::Tensor<T> image_tensor(const data::Sample& s);
template <typename T>
core::Tensor<T> mask_tensor(const data::Sample& s);

struct LossRow {
  int step = 0;
  std::array<double, 3> bce{};
  std::array<double, 3> iou{};
  double total = 0.0;
};

std::string format_loss_log(const std::vector<LossRow>& rows);

// Mean eval-mode total loss over `samples`.
double dataset_loss(const model::ModelConfig& cfg, const model::ParamStore<float>& params,
                    const std::vector<data::Sample>& samples);

struct TrainResult {
  model::ParamStore<float> params;
  std::vector<LossRow> log;
  int steps = 0;
  bool aborted = false;
  std::string abort_reason;
};

// The optimisation loop on in-memory samples. On a non-finite loss, gradient
// or update the result holds the parameters from before the failing step and
// `aborted` is set. Intermediate checkpoints are written only when
// `checkpoint_every` > 0 and `cfg.checkpoint` is non-empty.
TrainResult train_on(const RunConfig& cfg, const std::vector<data::Sample>& samples,
                     model::ParamStore<float> params, const Logger& log = {});

// Loads the manifest, trains, writes the checkpoint and the CSV loss log.
// Throws NumericError after saving the last good checkpoint when training diverges.
TrainResult train(const RunConfig& cfg, const Logger& log = {});

}  // namespace tscnet::train
