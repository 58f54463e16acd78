#include <doctest.h>

#include <cmath>
#include <fstream>

#include "core/error.hpp"
#include "data/io.hpp"
#include "data/synth.hpp"
#include "train/adam.hpp"
#include "train/checkpoint.hpp"
#include "train/run_config.hpp"
#include "train/tasks.hpp"
#include "train/trainer.hpp"
#include "test_support.hpp"

using namespace tscnet;
using namespace tscnet::train;

namespace {

RunConfig micro_run(const testing::TempDir& dir) {
  RunConfig cfg;
  cfg.apply_preset("micro");
  cfg.batch = 2;
  cfg.max_steps = 4;
  cfg.epochs = 10;
  cfg.checkpoint = dir.file("model.ckpt");
  cfg.log = dir.file("log.csv");
  return cfg;
}

std::string make_dataset(const testing::TempDir& dir, int size, int n, std::uint64_t seed = 3) {
  data::SynthConfig s;
  s.size = size;
  s.seed = seed;
  return data::generate_dataset(s, n, (dir.path() / "data").string());
}

}  // namespace

TEST_CASE("config: presets, keys and errors") {
  RunConfig cfg;
  cfg.load_text("# comment\nbase_lr = 0.001\nchannels=8 # trailing\npreset=micro\n");
  // The preset is applied first, so the explicit channel count wins.
  CHECK(cfg.model.input_size == 32);
  CHECK(cfg.model.channels == 8);
  CHECK(cfg.base_lr == 0.001);

  cfg.set("ablation", "pau+riu");
  CHECK((cfg.model.pau && !cfg.model.tru && cfg.model.riu));
  cfg.set("preset", "desk");
  CHECK((cfg.model.pau && !cfg.model.tru && cfg.model.riu));
  CHECK(cfg.model.channels == 16);

  cfg.set("widths", "4,8,16,32,32");
  CHECK(cfg.model.widths == std::array<int, 5>{4, 8, 16, 32, 32});
  cfg.set("convs", "2");
  CHECK(cfg.model.convs == std::array<int, 5>{2, 2, 2, 2, 2});
  cfg.set("bench.sizes", "32x16, 8x4");
  CHECK(cfg.bench_sizes == std::vector<std::pair<int, int>>{{32, 16}, {8, 4}});

  CHECK_THROWS_AS(cfg.set("no_such_key", "1"), ConfigError);
  CHECK_THROWS_AS(cfg.set("batch", "four"), ConfigError);
  CHECK_THROWS_AS(cfg.set("base_lr", "1e-3x"), ConfigError);
  CHECK_THROWS_AS(cfg.set("pau", "maybe"), ConfigError);
  CHECK_THROWS_AS(cfg.set("widths", "1,2,3"), ConfigError);
  CHECK_THROWS_AS(cfg.set("preset", "huge"), ConfigError);
  CHECK_THROWS_AS(cfg.load_text("just a line"), ConfigError);

  RunConfig bad;
  bad.base_lr = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.model.vit_heads = 3;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  testing::TempDir d("cfg");
  testing::spit(d.file("run.cfg"), "preset=desk\nseed=9\n");
  RunConfig from_file;
  from_file.load_file(d.file("run.cfg"));
  from_file.set("seed", "11");
  CHECK(from_file.seed == 11);
  CHECK(from_file.model.input_size == 64);
  CHECK_THROWS_AS(from_file.load_file(d.file("missing.cfg")), ConfigError);
}

TEST_CASE("learning-rate schedule") {
  RunConfig cfg;
  CHECK(cfg.lr_at_epoch(0) == cfg.base_lr);
  CHECK(cfg.lr_at_epoch(29) == cfg.base_lr);
  CHECK(cfg.lr_at_epoch(30) == doctest::Approx(cfg.base_lr / 10).epsilon(1e-12));
  CHECK(cfg.lr_at_epoch(59) == doctest::Approx(cfg.base_lr / 10).epsilon(1e-12));
  CHECK(cfg.lr_at_epoch(60) == doctest::Approx(cfg.base_lr / 100).epsilon(1e-12));
}

TEST_CASE("checkpoint round trip, corruption and name diff") {
  testing::TempDir d("ckpt");
  const model::ModelConfig cfg = model::ModelConfig::micro();
  const auto params = model::init_params<float>(cfg, 5);
  save_checkpoint(d.file("a.ckpt"), params);
  const auto loaded = load_checkpoint<float>(d.file("a.ckpt"), cfg);
  CHECK(serialize_checkpoint(loaded) == testing::slurp(d.file("a.ckpt")));
  save_checkpoint(d.file("b.ckpt"), loaded);
  CHECK(testing::slurp(d.file("a.ckpt")) == testing::slurp(d.file("b.ckpt")));

  std::string bytes = testing::slurp(d.file("a.ckpt"));
  bytes[bytes.size() / 2] ^= 0x10;
  CHECK_THROWS_AS(parse_checkpoint(bytes), DataError);
  CHECK_THROWS_AS(parse_checkpoint(bytes.substr(0, 20)), DataError);
  CHECK_THROWS_AS(parse_checkpoint("NOTACKPT0000"), DataError);
  CHECK_THROWS_AS(load_checkpoint<float>(d.file("none.ckpt"), cfg), DataError);

  model::ModelConfig other = cfg;
  other.tru = false;
  try {
    load_checkpoint<float>(d.file("a.ckpt"), other);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("tscm.2.tru.q.weight") != std::string::npos);
  }
  model::ModelConfig wider = cfg;
  wider.channels = 8;
  CHECK_THROWS_AS(load_checkpoint<float>(d.file("a.ckpt"), wider), DataError);
}

TEST_CASE("adam step matches a hand computation") {
  model::ParamStore<float> params;
  params.insert("w", core::Tensor<float>::from_values({2}, {1.0f, -2.0f}, true));
  params.insert("frozen", core::Tensor<float>::from_values({1}, {3.0f}, true));
  Adam adam({0.9, 0.999, 1e-8});
  const double g1[2] = {0.5, -0.25};
  const double g2[2] = {-1.0, 2.0};
  double p[2] = {1.0, -2.0}, m[2] = {0, 0}, v[2] = {0, 0};
  const double lr = 0.01;
  int t = 0;
  for (const double* g : {g1, g2}) {
    ++t;
    params.zero_grad();
    core::Tensor<float> w = params.at("w");
    auto buf = w.node()->grad_buffer();
    buf[0] = static_cast<float>(g[0]);
    buf[1] = static_cast<float>(g[1]);
    adam.step(params, lr);
    for (int i = 0; i < 2; ++i) {
      m[i] = 0.9 * m[i] + 0.1 * g[i];
      v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
      const double mh = m[i] / (1 - std::pow(0.9, t));
      const double vh = v[i] / (1 - std::pow(0.999, t));
      p[i] -= lr * mh / (std::sqrt(vh) + 1e-8);
      CHECK(params.at("w").values()[i] == doctest::Approx(p[i]).epsilon(1e-6));
    }
  }
  CHECK(params.at("frozen").values()[0] == 3.0f);
  CHECK(adam.steps() == 2);
}

TEST_CASE("training is bit-reproducible for a fixed seed") {
  testing::TempDir d("repro");
  RunConfig cfg = micro_run(d);
  cfg.manifest = make_dataset(d, 32, 3);
  const auto first = train::train(cfg);
  const std::string ckpt1 = testing::slurp(cfg.checkpoint);
  const std::string log1 = testing::slurp(cfg.log);
  const auto second = train::train(cfg);
  CHECK(first.steps == 4);
  CHECK(second.steps == 4);
  CHECK(ckpt1 == testing::slurp(cfg.checkpoint));
  CHECK(log1 == testing::slurp(cfg.log));
  CHECK(log1.rfind("step,bce2,bce3,bce4,iou2,iou3,iou4,total\n", 0) == 0);
  CHECK(std::count(log1.begin(), log1.end(), '\n') == 5);

  cfg.seed = 2;
  train::train(cfg);
  CHECK(ckpt1 != testing::slurp(cfg.checkpoint));
}

TEST_CASE("training resumes from an initial checkpoint and writes epoch checkpoints") {
  testing::TempDir d("resume");
  RunConfig cfg = micro_run(d);
  cfg.manifest = make_dataset(d, 32, 2);
  cfg.checkpoint_every = 1;
  cfg.max_steps = 2;
  train::train(cfg);
  CHECK(std::filesystem::exists(cfg.checkpoint + ".epoch1"));
  RunConfig resume = cfg;
  resume.init_checkpoint = cfg.checkpoint;
  resume.checkpoint = d.file("resumed.ckpt");
  resume.checkpoint_every = 0;
  resume.max_steps = 1;
  const auto r = train::train(resume);
  CHECK(r.steps == 1);
  CHECK(testing::slurp(resume.checkpoint) != testing::slurp(cfg.checkpoint));
}

TEST_CASE("divergence aborts and keeps the last good checkpoint") {
  testing::TempDir d("nan");
  RunConfig cfg = micro_run(d);
  cfg.manifest = make_dataset(d, 32, 2);
  cfg.base_lr = 1e37;
  cfg.max_steps = 20;
  CHECK_THROWS_AS(train::train(cfg), NumericError);
  const auto params = load_checkpoint<float>(cfg.checkpoint, cfg.model);
  for (const auto& [name, t] : params)
    for (float v : t.values()) REQUIRE(std::isfinite(v));
  const std::string log = testing::slurp(cfg.log);
  CHECK(std::count(log.begin(), log.end(), '\n') < 21);
}

TEST_CASE("evaluation pipeline") {
  testing::TempDir d("eval");
  RunConfig cfg = micro_run(d);
  const auto manifest = make_dataset(d, 32, 3);
  const auto samples = load_dataset(manifest, 32);
  for (const auto& s : samples) {
    const std::vector<double> gt(s.mask.begin(), s.mask.end());
    const auto m = eval::evaluate_map(s.id, {gt, s.height, s.width}, {gt, s.height, s.width});
    CHECK(std::fabs(m.s_alpha - 1.0) < 1e-9);
    CHECK(m.mae == 0.0);
  }
  const auto params = model::init_params<float>(cfg.model, 1);
  const auto report = evaluate(cfg, params, manifest);
  CHECK(report.images.size() == 3);
  CHECK(report.images[0].id == "synth_00000");
  for (const auto& m : report.images)
    for (double v : {m.s_alpha, m.f_mean, m.e_mean, m.mae}) CHECK((v >= 0.0 && v <= 1.0));

  testing::spit(d.file("empty.txt"), "\n");
  CHECK_THROWS_AS(evaluate(cfg, params, d.file("empty.txt")), DataError);
  CHECK_THROWS_AS(load_dataset(manifest, 64), DataError);
}

TEST_CASE("inference writes deterministic maps of the right size") {
  testing::TempDir d("infer");
  RunConfig cfg = micro_run(d);
  const auto manifest = make_dataset(d, 32, 1);
  save_checkpoint(cfg.checkpoint, model::init_params<float>(cfg.model, 4));
  const auto image = data::read_manifest(manifest)[0].image;
  const auto written = infer(cfg, cfg.checkpoint, image, d.file("pred.png"), true);
  REQUIRE(written.size() == 3);
  const std::string first = testing::slurp(d.file("pred.png"));
  infer(cfg, cfg.checkpoint, image, d.file("pred.png"), false);
  CHECK(first == testing::slurp(d.file("pred.png")));
  const auto s2 = data::read_png(d.file("pred.png"), 1);
  CHECK((s2.height == 32 && s2.width == 32));
  const auto s3 = data::read_png(d.file("pred_s3.png"), 1);
  CHECK((s3.height == 32 && s3.width == 32));
  const auto s4 = data::read_png(d.file("pred_s4.png"), 1);
  CHECK((s4.height == 16 && s4.width == 16));

  data::write_png(d.file("small.png"), {16, 16, 3, std::vector<std::uint8_t>(16 * 16 * 3, 80)});
  CHECK_THROWS_AS(infer(cfg, cfg.checkpoint, d.file("small.png"), d.file("x.png"), false), DataError);
}

TEST_CASE("baseline gradcheck covers only the enabled groups") {
  RunConfig cfg;
  cfg.apply_preset("micro");
  cfg.set("ablation", "baseline");
  const auto run = run_gradcheck(cfg);
  std::vector<std::string> groups;
  for (const auto& g : run.groups) groups.push_back(g.group);
  CHECK(groups == std::vector<std::string>{"backbone", "decoder", "fuse"});
  CHECK(run.passed);
  CHECK(run.beta_grad == 0.0);
  CHECK(format_gradcheck(run, cfg.gradcheck_threshold).find("PASS") != std::string::npos);
  CHECK(param_group("tscm.shared_vit.layer0.attn.qkv.weight") == "riu");
  CHECK(param_group("tscm.3.msp.branch2.conv1.bias") == "riu");
  CHECK(param_group("tscm.3.tru.beta") == "tru");
  CHECK(param_group("tscm.3.pau.fc_r.weight") == "pau");
}

TEST_CASE("attention benchmark counts") {
  const auto rows = bench_attention({{32, 16}, {16, 4}, {32, 32}}, 1, (std::size_t{1} << 20) - 1);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].channelwise_elements == 8192);
  CHECK(rows[0].standard_elements == 65536);
  CHECK(rows[0].ratio_exact);
  CHECK(rows[1].channelwise_elements == rows[1].standard_elements);
  CHECK(rows[1].ratio_exact);
  CHECK(rows[2].channelwise_elements == 32768);
  CHECK(rows[2].skipped);
  const std::string csv = format_bench(rows);
  CHECK(csv.find("skipped (cap)") != std::string::npos);
  CHECK_THROWS_AS(bench_attention({{32, 16}}, 0, 1), ConfigError);
}
