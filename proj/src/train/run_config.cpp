#include "train/run_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "core/error.hpp"

namespace tscnet::train {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const char* expected) {
  throw ConfigError("invalid value '" + value + "' for " + key + " (expected " + expected + ")");
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size() || !std::isfinite(d)) bad(key, v, "a number");
    return d;
  } catch (const std::logic_error&) {
    bad(key, v, "a number");
  }
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad(key, v, "an integer");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  bad(key, v, "true/false");
}

std::array<int, 5> to_five(const std::string& key, const std::string& v) {
  std::array<int, 5> out{};
  std::stringstream ss(v);
  std::string item;
  int n = 0;
  while (std::getline(ss, item, ',')) {
    if (n == 5) bad(key, v, "five comma-separated integers");
    out[static_cast<std::size_t>(n++)] = static_cast<int>(to_int(key, trim(item)));
  }
  if (n == 1) out.fill(out[0]);
  else if (n != 5) bad(key, v, "five comma-separated integers");
  return out;
}

std::string join(const std::array<int, 5>& a) {
  std::string s;
  for (std::size_t i = 0; i < a.size(); ++i) s += (i ? "," : "") + std::to_string(a[i]);
  return s;
}

std::string fmt(double d) {
  std::ostringstream os;
  os.precision(17);
  os << d;
  return os.str();
}

}  // namespace

double RunConfig::lr_at_epoch(int epoch) const {
  const int drops = decay_every > 0 ? epoch / decay_every : 0;
  return base_lr * std::pow(lr_decay, drops);
}

void RunConfig::apply_preset(const std::string& name) {
  const model::ModelConfig keep = model;
  if (name == "full") model = model::ModelConfig::full();
  else if (name == "desk") model = model::ModelConfig::desk();
  else if (name == "micro") model = model::ModelConfig::micro();
  else throw ConfigError("unknown preset '" + name + "' (expected full, desk or micro)");
  model.pau = keep.pau;
  model.tru = keep.tru;
  model.riu = keep.riu;
}

void RunConfig::set(const std::string& raw_key, const std::string& raw_value) {
  const std::string key = trim(raw_key);
  const std::string v = trim(raw_value);
  auto& m = model;
  auto& s = synth;
  if (key == "preset") apply_preset(v);
  else if (key == "input_size") m.input_size = static_cast<int>(to_int(key, v));
  else if (key == "widths") m.widths = to_five(key, v);
  else if (key == "convs") m.convs = to_five(key, v);
  else if (key == "channels") m.channels = static_cast<int>(to_int(key, v));
  else if (key == "grid") m.grid = static_cast<int>(to_int(key, v));
  else if (key == "vit_layers") m.vit_layers = static_cast<int>(to_int(key, v));
  else if (key == "vit_heads") m.vit_heads = static_cast<int>(to_int(key, v));
  else if (key == "mlp_ratio") m.mlp_ratio = static_cast<int>(to_int(key, v));
  else if (key == "pau") m.pau = to_bool(key, v);
  else if (key == "tru") m.tru = to_bool(key, v);
  else if (key == "riu") m.riu = to_bool(key, v);
  else if (key == "dropout") m.dropout = to_double(key, v);
  else if (key == "ablation") {
    if (v == "baseline") m.pau = m.tru = m.riu = false;
    else if (v == "pau") { m.pau = true; m.tru = m.riu = false; }
    else if (v == "pau+tru") { m.pau = m.tru = true; m.riu = false; }
    else if (v == "pau+riu") { m.pau = m.riu = true; m.tru = false; }
    else if (v == "full") m.pau = m.tru = m.riu = true;
    else bad(key, v, "baseline, pau, pau+tru, pau+riu or full");
  }
  else if (key == "base_lr") base_lr = to_double(key, v);
  else if (key == "beta1") beta1 = to_double(key, v);
  else if (key == "beta2") beta2 = to_double(key, v);
  else if (key == "adam_eps") adam_eps = to_double(key, v);
  else if (key == "batch") batch = static_cast<int>(to_int(key, v));
  else if (key == "lr_decay") lr_decay = to_double(key, v);
  else if (key == "decay_every") decay_every = static_cast<int>(to_int(key, v));
  else if (key == "epochs") epochs = static_cast<int>(to_int(key, v));
  else if (key == "max_steps") max_steps = static_cast<int>(to_int(key, v));
  else if (key == "checkpoint_every") checkpoint_every = static_cast<int>(to_int(key, v));
  else if (key == "augment") augment = to_bool(key, v);
  else if (key == "seed") seed = static_cast<std::uint64_t>(to_int(key, v));
  else if (key == "manifest") manifest = v;
  else if (key == "checkpoint") checkpoint = v;
  else if (key == "init_checkpoint") init_checkpoint = v;
  else if (key == "log") log = v;
  else if (key == "synth.count") synth_count = static_cast<int>(to_int(key, v));
  else if (key == "synth.min_objects") s.min_objects = static_cast<int>(to_int(key, v));
  else if (key == "synth.max_objects") s.max_objects = static_cast<int>(to_int(key, v));
  else if (key == "synth.min_extent") s.min_extent = to_double(key, v);
  else if (key == "synth.max_extent") s.max_extent = to_double(key, v);
  else if (key == "synth.texture") s.texture_amplitude = to_double(key, v);
  else if (key == "synth.min_gain") s.min_gain = to_double(key, v);
  else if (key == "synth.max_gain") s.max_gain = to_double(key, v);
  else if (key == "synth.noise") s.noise = to_double(key, v);
  else if (key == "synth.seed") s.seed = static_cast<std::uint64_t>(to_int(key, v));
  else if (key == "synth.shape_weights") {
    std::stringstream ss(v);
    std::string item;
    std::size_t n = 0;
    while (std::getline(ss, item, ',')) {
      if (n == 3) bad(key, v, "three comma-separated weights");
      s.shape_weights[n++] = to_double(key, trim(item));
    }
    if (n != 3) bad(key, v, "three comma-separated weights");
  }
  else if (key == "gradcheck.eps") gradcheck_eps = to_double(key, v);
  else if (key == "gradcheck.threshold") gradcheck_threshold = to_double(key, v);
  else if (key == "gradcheck.beta") gradcheck_beta = to_double(key, v);
  else if (key == "bench.sizes") {
    bench_sizes.clear();
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      const auto x = item.find('x');
      if (x == std::string::npos) bad(key, v, "a list like 32x16,32x64");
      bench_sizes.emplace_back(static_cast<int>(to_int(key, item.substr(0, x))),
                               static_cast<int>(to_int(key, item.substr(x + 1))));
    }
  }
  else if (key == "bench.repeats") bench_repeats = static_cast<int>(to_int(key, v));
  else if (key == "bench.cap") bench_cap = static_cast<std::size_t>(to_int(key, v));
  else throw ConfigError("unknown config key '" + key + "'");
}

void RunConfig::load_text(const std::string& text, const std::string& origin) {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::stringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(number) + ": expected key=value");
    }
    pairs.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  for (const auto& [k, v] : pairs)
    if (k == "preset") set(k, v);
  for (const auto& [k, v] : pairs)
    if (k != "preset") {
      try {
        set(k, v);
      } catch (const ConfigError& e) {
        throw ConfigError(origin + ": " + e.what());
      }
    }
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  load_text(buf.str(), path);
}

void RunConfig::validate() const {
  model.validate();
  if (!(base_lr > 0.0)) throw ConfigError("base_lr must be positive");
  if (!(lr_decay > 0.0)) throw ConfigError("lr_decay must be positive");
  if (batch < 1) throw ConfigError("batch must be at least 1");
  if (epochs < 0 || max_steps < 0 || checkpoint_every < 0 || decay_every < 0) {
    throw ConfigError("epochs, max_steps, decay_every and checkpoint_every must be non-negative");
  }
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0 || !(adam_eps > 0.0)) {
    throw ConfigError("adam betas must lie in [0, 1) and adam_eps must be positive");
  }
}

std::vector<std::pair<std::string, std::string>> RunConfig::entries() const {
  return {
      {"input_size", std::to_string(model.input_size)},
      {"widths", join(model.widths)},
      {"convs", join(model.convs)},
      {"channels", std::to_string(model.channels)},
      {"grid", std::to_string(model.effective_grid())},
      {"vit_layers", std::to_string(model.vit_layers)},
      {"vit_heads", std::to_string(model.vit_heads)},
      {"mlp_ratio", std::to_string(model.mlp_ratio)},
      {"pau", model.pau ? "true" : "false"},
      {"tru", model.tru ? "true" : "false"},
      {"riu", model.riu ? "true" : "false"},
      {"dropout", fmt(model.dropout)},
      {"base_lr", fmt(base_lr)},
      {"beta1", fmt(beta1)},
      {"beta2", fmt(beta2)},
      {"adam_eps", fmt(adam_eps)},
      {"batch", std::to_string(batch)},
      {"lr_decay", fmt(lr_decay)},
      {"decay_every", std::to_string(decay_every)},
      {"epochs", std::to_string(epochs)},
      {"max_steps", std::to_string(max_steps)},
      {"checkpoint_every", std::to_string(checkpoint_every)},
      {"augment", augment ? "true" : "false"},
      {"seed", std::to_string(seed)},
      {"manifest", manifest},
      {"checkpoint", checkpoint},
      {"init_checkpoint", init_checkpoint},
      {"log", log},
  };
}

}  // namespace tscnet::train
