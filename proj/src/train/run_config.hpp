#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "data/synth.hpp"
#include "model/config.hpp"

namespace tscnet::train {

struct RunConfig {
  model::ModelConfig model;

  double base_lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch = 4;
  double lr_decay = 0.1;
  int decay_every = 30;
  int epochs = 70;
  // 0 = no limit beyond `epochs`.
  int max_steps = 0;
  // Save an intermediate checkpoint every k epochs; 0 disables.
  int checkpoint_every = 0;
  bool augment = true;
  std::uint64_t seed = 1;

  std::string manifest;
  std::string checkpoint = "tscnet.ckpt";
  std::string init_checkpoint;
  std::string log = "train_log.csv";

  data::SynthConfig synth;
  int synth_count = 10;

  double gradcheck_eps = 1e-4;
  double gradcheck_threshold = 1e-4;
  double gradcheck_beta = 0.5;

  std::vector<std::pair<int, int>> bench_sizes{{32, 16}, {32, 32}, {32, 64}};
  int bench_repeats = 5;
  std::size_t bench_cap = std::size_t{1} << 26;

  // Learning rate in effect during `epoch` (0-based).
  double lr_at_epoch(int epoch) const;

  // Throws ConfigError on unknown keys or malformed values. `preset` replaces
  // the model section with full / desk / micro.
  void set(const std::string& key, const std::string& value);
  void apply_preset(const std::string& name);
  // key=value lines; '#' starts a comment. A preset line is applied first.
  void load_file(const std::string& path);
  void load_text(const std::string& text, const std::string& origin = "<text>");
  void validate() const;

  std::vector<std::pair<std::string, std::string>> entries() const;
};

}  // namespace tscnet::train
