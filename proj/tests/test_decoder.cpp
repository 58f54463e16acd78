#include <doctest.h>

#include <algorithm>

#include "core/ops.hpp"
#include "model/decoder.hpp"
#include "model/network.hpp"
#include "oracles/naive_ops.hpp"

using namespace tscnet;
using namespace tscnet::model;
using core::Dims;
using core::Tensor;

namespace {

Tensor<double> random_tensor(Dims dims, std::uint64_t seed) {
  return Tensor<double>::from_values(dims, oracle::random_values(core::numel_of(dims), seed, 0.0, 1.0));
}

struct Inputs {
  Tensor<double> f2, f3, f4;
};

Inputs level_inputs(const ModelConfig& cfg, std::uint64_t seed) {
  const int c = cfg.channels;
  const int S = cfg.input_size;
  return {random_tensor({c, S, S}, seed), random_tensor({c, S / 2, S / 2}, seed + 1),
          random_tensor({c, S / 4, S / 4}, seed + 2)};
}

bool same_values(const Tensor<double>& a, const Tensor<double>& b) {
  return std::equal(a.values().begin(), a.values().end(), b.values().begin(), b.values().end());
}

}  // namespace

TEST_CASE("decoder map shapes") {
  for (const ModelConfig& cfg : {ModelConfig::micro(), ModelConfig::desk()}) {
    const auto p = init_params<double>(cfg, 1);
    const auto in = level_inputs(cfg, 3);
    const auto maps = decode(in.f2, in.f3, in.f4, cfg, p);
    const int S = cfg.input_size;
    CHECK(maps.s2.dims() == Dims{1, S, S});
    CHECK(maps.s3.dims() == Dims{1, S, S});
    CHECK(maps.s4.dims() == Dims{1, S / 2, S / 2});
    for (const auto* m : {&maps.s2, &maps.s3, &maps.s4})
      for (double v : m->values()) CHECK((v > 0.0 && v < 1.0));
  }
}

TEST_CASE("network shapes at the desk and full sizes") {
  core::NoGradGuard no_grad;
  for (const ModelConfig& cfg : {ModelConfig::desk(), ModelConfig::full()}) {
    const int S = cfg.input_size;
    const auto p = init_params<float>(cfg, 2);
    const auto out = forward(Tensor<float>::full({3, S, S}, 0.4f), cfg, p);
    CHECK(out.maps.s2.dims() == Dims{1, S, S});
    CHECK(out.maps.s3.dims() == Dims{1, S, S});
    CHECK(out.maps.s4.dims() == Dims{1, S / 2, S / 2});
    CHECK(out.f_ts[0].dims() == Dims{cfg.channels, S, S});
    CHECK(out.f_ts[1].dims() == Dims{cfg.channels, S / 2, S / 2});
    CHECK(out.f_ts[2].dims() == Dims{cfg.channels, S / 4, S / 4});
  }
}

TEST_CASE("zero features through zero parameters give 0.5 everywhere") {
  const ModelConfig cfg = ModelConfig::micro();
  const auto p = init_params<double>(cfg, 1);
  for (const auto& [name, t] : p) {
    if (name.rfind("sp.", 0) != 0) continue;
    Tensor<double> h = t;
    for (double& v : h.mutable_values()) v = 0.0;
  }
  const int c = cfg.channels, S = cfg.input_size;
  const auto maps = decode(Tensor<double>::zeros({c, S, S}), Tensor<double>::zeros({c, S / 2, S / 2}),
                           Tensor<double>::zeros({c, S / 4, S / 4}), cfg, p);
  for (const auto* m : {&maps.s2, &maps.s3, &maps.s4})
    for (double v : m->values()) CHECK(v == 0.5);
}

TEST_CASE("eval mode is deterministic, training dropout follows the seed") {
  const ModelConfig cfg = ModelConfig::micro();
  const auto p = init_params<double>(cfg, 4);
  const auto in = level_inputs(cfg, 10);
  const auto a = decode(in.f2, in.f3, in.f4, cfg, p);
  const auto b = decode(in.f2, in.f3, in.f4, cfg, p);
  CHECK(same_values(a.s2, b.s2));
  CHECK(same_values(a.s4, b.s4));
  // The seed is ignored outside training.
  const auto e = decode(in.f2, in.f3, in.f4, cfg, p, {false, 99});
  CHECK(same_values(a.s2, e.s2));

  const auto t1 = decode(in.f2, in.f3, in.f4, cfg, p, {true, 5});
  const auto t2 = decode(in.f2, in.f3, in.f4, cfg, p, {true, 5});
  const auto t3 = decode(in.f2, in.f3, in.f4, cfg, p, {true, 6});
  CHECK(same_values(t1.s2, t2.s2));
  CHECK_FALSE(same_values(t1.s2, t3.s2));
  CHECK_FALSE(same_values(t1.s4, a.s4));

  ModelConfig no_drop = cfg;
  no_drop.dropout = 0.0;
  CHECK(same_values(decode(in.f2, in.f3, in.f4, no_drop, p, {true, 5}).s2, a.s2));
}

TEST_CASE("fusion of mismatched levels throws") {
  const ModelConfig cfg = ModelConfig::micro();
  const auto p = init_params<double>(cfg, 1);
  const auto in = level_inputs(cfg, 1);
  CHECK_THROWS_AS(decode(in.f2, in.f2, in.f4, cfg, p), ContractError);
  CHECK_THROWS_AS(decode(in.f3, in.f3, in.f4, cfg, p), ContractError);
}

TEST_CASE("gradient reaches every decoder parameter") {
  const ModelConfig cfg = ModelConfig::micro();
  const auto p = init_params<double>(cfg, 5);
  const auto in = level_inputs(cfg, 20);
  const auto maps = decode(in.f2, in.f3, in.f4, cfg, p);
  core::backward(core::add(core::add(core::sum(maps.s2), core::sum(maps.s3)), core::sum(maps.s4)));
  int checked = 0;
  for (const auto& [name, t] : p) {
    if (name.rfind("sp.", 0) != 0) continue;
    CAPTURE(name);
    REQUIRE(t.has_grad());
    CHECK(std::any_of(t.grad().begin(), t.grad().end(), [](double g) { return g != 0.0; }));
    ++checked;
  }
  CHECK(checked == 22);
}

TEST_CASE("network input normalisation") {
  const auto x = Tensor<double>::from_values({3, 1, 1}, {0.0, 0.5, 1.0});
  const auto y = normalize_image(x);
  CHECK(y.values()[0] == -2.0);
  CHECK(y.values()[1] == 0.0);
  CHECK(y.values()[2] == 2.0);
}
