#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "core/ops.hpp"
#include "model/network.hpp"
#include "model/tscm.hpp"
#include "oracles/naive_ops.hpp"
#include "train/objective.hpp"

using namespace tscnet;
using namespace tscnet::model;
using core::Dims;
using core::Tensor;

namespace {

void assign(const ParamStore<double>& p, const std::string& name, const std::vector<double>& v) {
  Tensor<double> t = p.at(name);
  auto dst = t.mutable_values();
  REQUIRE(dst.size() == v.size());
  std::copy(v.begin(), v.end(), dst.begin());
}

void fill(const ParamStore<double>& p, const std::string& name, double value) {
  Tensor<double> t = p.at(name);
  for (double& x : t.mutable_values()) x = value;
}

std::vector<double> values_of(const Tensor<double>& t) { return {t.values().begin(), t.values().end()}; }

Tensor<double> random_tensor(Dims dims, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  return Tensor<double>::from_values(dims, oracle::random_values(core::numel_of(dims), seed, lo, hi));
}

ModelConfig with_channels(int c) {
  ModelConfig cfg = ModelConfig::micro();
  cfg.channels = c;
  return cfg;
}

std::set<std::string> name_set(const ModelConfig& cfg) {
  std::set<std::string> out;
  for (const auto& s : param_specs(cfg)) out.insert(s.name);
  return out;
}

}  // namespace

TEST_CASE("pau with saturated gates returns exactly 2 f_b") {
  const ModelConfig cfg = with_channels(4);
  const auto p = init_params<double>(cfg, 1);
  fill(p, "tscm.3.pau.fc_s.weight", 0.0);
  fill(p, "tscm.3.pau.fc_s.bias", 100.0);
  fill(p, "tscm.3.pau.spatial.weight", 0.0);
  fill(p, "tscm.3.pau.spatial.bias", 100.0);
  const auto f_b = random_tensor({4, 8, 8}, 2);
  const auto f_s = random_tensor({4, 2, 2}, 3);
  const auto out = pau(f_b, f_s, p, "tscm.3.pau");
  for (std::size_t i = 0; i < f_b.numel(); ++i) CHECK(out.f_pau.values()[i] == 2.0 * f_b.values()[i]);
}

TEST_CASE("joint channel attention matches a hand computation") {
  const int c = 4;
  const ModelConfig cfg = with_channels(c);
  const auto p = init_params<double>(cfg, 7);
  assign(p, "tscm.2.pau.fc_r.bias", oracle::random_values(c, 8));
  assign(p, "tscm.2.pau.fc_s.bias", oracle::random_values(c, 9));
  const auto f_b = random_tensor({c, 4, 4}, 10);
  const auto f_s = Tensor<double>::zeros({c, 2, 2});
  const auto out = pau(f_b, f_s, p, "tscm.2.pau");

  const auto wr = values_of(p.at("tscm.2.pau.fc_r.weight"));
  const auto br = values_of(p.at("tscm.2.pau.fc_r.bias"));
  const auto ws = values_of(p.at("tscm.2.pau.fc_s.weight"));
  const auto bs = values_of(p.at("tscm.2.pau.fc_s.bias"));
  std::vector<double> desc(2 * c, 0.0);
  for (int ch = 0; ch < c; ++ch) {
    for (int i = 0; i < 16; ++i) desc[ch] += f_b.values()[ch * 16 + i];
    desc[ch] /= 16.0;
  }
  std::vector<double> hidden(c), cmap(c);
  for (int o = 0; o < c; ++o) {
    double acc = br[o];
    for (int i = 0; i < 2 * c; ++i) acc += wr[o * 2 * c + i] * desc[i];
    hidden[o] = std::max(0.0, acc);
  }
  for (int o = 0; o < c; ++o) {
    double acc = bs[o];
    for (int i = 0; i < c; ++i) acc += ws[o * c + i] * hidden[i];
    cmap[o] = oracle::sigmoid(acc);
  }
  for (int ch = 0; ch < c; ++ch) {
    CHECK(out.channel_map.values()[ch] == doctest::Approx(cmap[ch]).epsilon(1e-12));
    for (int i = 0; i < 16; ++i) {
      const double jca = f_b.values()[ch * 16 + i] * cmap[ch];
      CHECK(out.f_jca.values()[ch * 16 + i] == doctest::Approx(jca).epsilon(1e-12));
      // Zero semantic features and a zero spatial bias give a 0.5 spatial map.
      CHECK(out.f_pau.values()[ch * 16 + i] == doctest::Approx(f_b.values()[ch * 16 + i] + 0.5 * jca).epsilon(1e-12));
    }
  }
}

TEST_CASE("pau maps lie strictly inside (0,1) and channel mismatch throws") {
  const ModelConfig cfg = with_channels(4);
  const auto p = init_params<double>(cfg, 4);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto out = pau(random_tensor({4, 8, 8}, seed, -3, 3), random_tensor({4, 2, 2}, seed + 100, -3, 3), p,
                         "tscm.4.pau");
    for (double v : out.channel_map.values()) CHECK((v > 0.0 && v < 1.0));
    for (double v : out.spatial_map.values()) CHECK((v > 0.0 && v < 1.0));
    CHECK(out.spatial_map.dims() == Dims{1, 8, 8});
  }
  CHECK_THROWS_AS(pau(random_tensor({4, 8, 8}, 1), random_tensor({3, 2, 2}, 2), p, "tscm.4.pau"), ContractError);
}

TEST_CASE("tru with zero gate equals the upsampled input bit for bit") {
  const ModelConfig cfg = with_channels(4);
  const auto p = init_params<double>(cfg, 5);
  CHECK(p.at("tscm.2.tru.beta").values()[0] == 0.0);
  const auto f_pau = random_tensor({4, 4, 4}, 11);
  const auto out = tru(f_pau, random_tensor({4, 16, 16}, 12), p, "tscm.2.tru");
  CHECK(out.f_tru.dims() == Dims{4, 8, 8});
  const auto a = out.f_tru.values();
  const auto b = out.f_hat_pau.values();
  CHECK(std::equal(a.begin(), a.end(), b.begin(), b.end()));
}

TEST_CASE("tru on a 2-channel 2x2 input matches a loop oracle") {
  const int c = 2;
  const ModelConfig cfg = with_channels(c);
  const auto p = init_params<double>(cfg, 6);
  const std::string pre = "tscm.2.tru";
  for (const char* proj : {".q", ".k", ".v"}) assign(p, pre + proj + ".bias", oracle::random_values(c, 40 + proj[1]));
  fill(p, pre + ".beta", 0.7);
  const auto f_pau = random_tensor({c, 2, 2}, 13);
  const auto f_t = random_tensor({c, 8, 8}, 14);
  const auto out = tru(f_pau, f_t, p, pre);

  const auto up = oracle::bilinear(values_of(f_pau), c, 2, 2, 4, 4);
  const auto tex = oracle::adaptive_avg(values_of(f_t), c, 8, 8, 4, 4);
  auto project = [&](const std::vector<double>& x, const char* which) {
    int oh = 0, ow = 0;
    return oracle::conv2d(x, c, 4, 4, values_of(p.at(pre + which + ".weight")), c, 1, 1,
                          values_of(p.at(pre + which + ".bias")), {}, oh, ow);
  };
  const auto sp = oracle::channel_attention(project(tex, ".q"), project(up, ".k"), project(up, ".v"), c, 4, 4);
  REQUIRE(out.f_tru.numel() == up.size());
  for (std::size_t i = 0; i < up.size(); ++i) {
    CHECK(std::fabs(out.f_hat_pau.values()[i] - up[i]) < 1e-10);
    CHECK(std::fabs(out.f_sp.values()[i] - sp[i]) < 1e-10);
    CHECK(std::fabs(out.f_tru.values()[i] - (up[i] + 0.7 * sp[i])) < 1e-10);
  }
}

TEST_CASE("tru rejects non-square maps and undersized texture") {
  const ModelConfig cfg = with_channels(4);
  const auto p = init_params<double>(cfg, 5);
  CHECK_THROWS_AS(tru(random_tensor({4, 4, 6}, 1), random_tensor({4, 16, 16}, 2), p, "tscm.2.tru"),
                  UnsupportedShapeError);
  CHECK_THROWS_AS(tru(random_tensor({4, 4, 4}, 1), random_tensor({4, 4, 4}, 2), p, "tscm.2.tru"), ContractError);
}

TEST_CASE("multi-scale branch schedule") {
  const auto s = msp_branch_schedule();
  REQUIRE(s.size() == 4);
  REQUIRE(s[0].size() == 1);
  CHECK((s[0][0].kh == 1 && s[0][0].kw == 1 && s[0][0].dilation == 1 && s[0][0].pad_h == 0 && s[0][0].pad_w == 0));
  for (int b = 1; b < 4; ++b) {
    const int k = 2 * b + 1;
    REQUIRE(s[b].size() == 3);
    CHECK((s[b][0].kh == 1 && s[b][0].kw == k && s[b][0].dilation == 1 && s[b][0].pad_h == 0 &&
           s[b][0].pad_w == (k - 1) / 2));
    CHECK((s[b][1].kh == k && s[b][1].kw == 1 && s[b][1].dilation == 1 && s[b][1].pad_h == (k - 1) / 2 &&
           s[b][1].pad_w == 0));
    CHECK((s[b][2].kh == 3 && s[b][2].kw == 3 && s[b][2].dilation == k && s[b][2].pad_h == k && s[b][2].pad_w == k));
  }
}

TEST_CASE("every branch preserves the input size") {
  const ModelConfig cfg = ModelConfig::desk();
  const auto p = init_params<double>(cfg, 3);
  for (int h : {8, 16}) {
    const auto f_in = random_tensor({16, h, h}, 20 + h);
    std::vector<Tensor<double>> branches;
    const auto out = msp(f_in, p, "tscm.3", &branches);
    CHECK(out.dims() == f_in.dims());
    REQUIRE(branches.size() == 4);
    for (const auto& b : branches) CHECK(b.dims() == f_in.dims());
  }
}

TEST_CASE("riu: grid limits, zero head, full-size token grid") {
  ModelConfig cfg = with_channels(4);
  cfg.grid = 4;
  const auto p = init_params<double>(cfg, 9);
  const auto f_b = random_tensor({4, 4, 4}, 30);
  const auto f_riu = riu(Tensor<double>(), f_b, cfg, p, "tscm.4");
  CHECK(f_riu.dims() == Dims{4, 8, 8});
  CHECK_THROWS_AS(riu(Tensor<double>(), random_tensor({4, 2, 2}, 31), cfg, p, "tscm.4"), ConfigError);

  fill(p, std::string(kSharedVit) + ".head.weight", 0.0);
  fill(p, std::string(kSharedVit) + ".head.bias", 0.0);
  const auto zeroed = riu(Tensor<double>(), f_b, cfg, p, "tscm.4");
  for (double v : zeroed.values()) CHECK(v == 0.0);

  core::NoGradGuard no_grad;
  const ModelConfig full = ModelConfig::full();
  CHECK(full.effective_grid() == 32);
  const auto pf = init_params<float>(full, 1);
  CHECK(pf.at(std::string(kSharedVit) + ".pos_embed").dims() == Dims{1024, 32});
  const auto big = Tensor<float>::full({32, 32, 32}, 0.1f);
  CHECK(riu(Tensor<float>(), big, full, pf, "tscm.4").dims() == Dims{32, 64, 64});
}

TEST_CASE("tscm output doubles the level size for every ablation") {
  core::NoGradGuard no_grad;
  for (int mask = 0; mask < 8; ++mask) {
    ModelConfig cfg = ModelConfig::micro();
    cfg.pau = mask & 1;
    cfg.tru = mask & 2;
    cfg.riu = mask & 4;
    CAPTURE(cfg.ablation_name());
    const auto p = init_params<double>(cfg, 2);
    const int S = cfg.input_size;
    const auto f_t = random_tensor({4, S, S}, 1);
    const auto f_s = random_tensor({4, S / 16, S / 16}, 2);
    for (int level = 2; level <= 4; ++level) {
      const int h = cfg.level_size(level);
      if (cfg.riu && cfg.effective_grid() > h) {
        CHECK_THROWS_AS(tscm_forward(level, random_tensor({4, h, h}, 3), f_t, f_s, cfg, p), ConfigError);
        continue;
      }
      CHECK(tscm_forward(level, random_tensor({4, h, h}, 3), f_t, f_s, cfg, p).dims() == Dims{4, 2 * h, 2 * h});
    }
  }
}

TEST_CASE("ablation configurations differ exactly by the toggled units") {
  const ModelConfig full = ModelConfig::desk();
  const auto all = name_set(full);
  auto without = [&](bool ModelConfig::*flag) {
    ModelConfig c = full;
    c.*flag = false;
    std::set<std::string> diff;
    const auto names = name_set(c);
    for (const auto& n : names) CHECK(all.count(n) == 1);
    for (const auto& n : all)
      if (!names.count(n)) diff.insert(n);
    return diff;
  };
  const auto pau_only = without(&ModelConfig::pau);
  const auto tru_only = without(&ModelConfig::tru);
  const auto riu_only = without(&ModelConfig::riu);
  CHECK(pau_only.size() == 3 * 6);
  CHECK(tru_only.size() == 3 * 7);
  for (const auto& n : pau_only) CHECK(n.find(".pau.") != std::string::npos);
  for (const auto& n : tru_only) CHECK(n.find(".tru.") != std::string::npos);
  for (const auto& n : riu_only) CHECK((n.find(".msp.") != std::string::npos || n.rfind(kSharedVit, 0) == 0));
  CHECK(riu_only.size() > 3 * 22);

  std::set<std::string> names;
  for (int mask = 0; mask < 8; ++mask) {
    ModelConfig c = full;
    c.pau = mask & 1;
    c.tru = mask & 2;
    c.riu = mask & 4;
    names.insert(c.ablation_name());
  }
  CHECK(names.size() == 8);
}

TEST_CASE("every TSCM parameter receives gradient with all units enabled") {
  const ModelConfig cfg = ModelConfig::desk();
  const auto p = init_params<double>(cfg, 3);
  for (int level = 2; level <= 4; ++level) fill(p, tscm_prefix(level) + ".tru.beta", 0.5);
  const int S = cfg.input_size;
  const auto image = random_tensor({3, S, S}, 50, 0.0, 1.0);
  std::vector<double> mask(static_cast<std::size_t>(S * S), 0.0);
  for (int y = S / 4; y < 3 * S / 4; ++y)
    for (int x = S / 3; x < 2 * S / 3; ++x) mask[y * S + x] = 1.0;
  const auto out = forward(image, cfg, p);
  core::backward(train::total_loss(out.maps, Tensor<double>::from_values({1, S, S}, mask)).loss);
  for (const auto& [name, t] : p) {
    if (name.rfind("tscm.", 0) != 0) continue;
    CAPTURE(name);
    REQUIRE(t.has_grad());
    CHECK(std::any_of(t.grad().begin(), t.grad().end(), [](double g) { return g != 0.0; }));
  }
}

TEST_CASE("texture attention maps are row-stochastic") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto maps = core::channelwise_attention_maps(random_tensor({3, 8, 8}, seed, -4, 4),
                                                       random_tensor({3, 8, 8}, seed + 50, -4, 4));
    REQUIRE(maps.dims() == Dims{3, 8, 8});
    for (int row = 0; row < 24; ++row) {
      double s = 0.0;
      for (int j = 0; j < 8; ++j) s += maps.values()[row * 8 + j];
      CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}
