#include <doctest.h>

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "test_support.hpp"
#include "tscnet/tscnet.h"

namespace {

struct Handle {
  tscnet_config* cfg = nullptr;
  Handle() { REQUIRE(tscnet_config_new(&cfg) == TSCNET_OK); }
  ~Handle() { tscnet_config_free(cfg); }
  tscnet_status set(const char* k, const char* v) { return tscnet_config_set(cfg, k, v); }
};

void collect(const char* line, void* user) { static_cast<std::vector<std::string>*>(user)->push_back(line); }

}  // namespace

TEST_CASE("version and error state") {
  CHECK(std::strlen(tscnet_version()) > 0);
  Handle h;
  CHECK(h.set("no_such_key", "1") == TSCNET_ERR_USAGE);
  CHECK(std::string(tscnet_last_error()).find("no_such_key") != std::string::npos);
  CHECK(h.set("batch", "four") == TSCNET_ERR_USAGE);
  CHECK(h.set("batch", "2") == TSCNET_OK);
  CHECK(std::string(tscnet_last_error()).empty());
  CHECK(tscnet_config_set(nullptr, "batch", "2") == TSCNET_ERR_USAGE);
  CHECK(tscnet_config_new(nullptr) == TSCNET_ERR_USAGE);
  CHECK(tscnet_config_load_file(h.cfg, "/nonexistent/tscnet.cfg") != TSCNET_OK);
}

TEST_CASE("config file, overrides and dump") {
  testing::TempDir dir("capi_cfg");
  testing::spit(dir.file("run.cfg"), "preset=micro\n# comment\nbatch=3\nbase_lr=0.01\n");
  Handle h;
  REQUIRE(tscnet_config_load_file(h.cfg, dir.file("run.cfg").c_str()) == TSCNET_OK);
  REQUIRE(h.set("batch", "5") == TSCNET_OK);
  char* text = nullptr;
  REQUIRE(tscnet_config_dump(h.cfg, &text) == TSCNET_OK);
  const std::string dump = text;
  tscnet_string_free(text);
  CHECK(dump.find("batch=5\n") != std::string::npos);
  CHECK(dump.find("base_lr=0.01\n") != std::string::npos);
  CHECK(dump.find("input_size=32\n") != std::string::npos);
}

TEST_CASE("data, training, evaluation and inference through the C API") {
  testing::TempDir dir("capi_run");
  std::vector<std::string> lines;
  tscnet_set_log_callback(collect, &lines);

  Handle h;
  REQUIRE(h.set("preset", "micro") == TSCNET_OK);
  REQUIRE(h.set("synth.count", "3") == TSCNET_OK);
  REQUIRE(tscnet_gen_data(h.cfg, dir.file("data").c_str(), 0) == TSCNET_OK);
  const std::string manifest = dir.file("data/manifest.txt");
  CHECK(!lines.empty());

  REQUIRE(h.set("manifest", manifest.c_str()) == TSCNET_OK);
  REQUIRE(h.set("checkpoint", dir.file("m.ckpt").c_str()) == TSCNET_OK);
  REQUIRE(h.set("log", dir.file("log.csv").c_str()) == TSCNET_OK);
  REQUIRE(h.set("max_steps", "2") == TSCNET_OK);
  REQUIRE(h.set("batch", "2") == TSCNET_OK);
  tscnet_train_summary summary{};
  REQUIRE(tscnet_train(h.cfg, &summary) == TSCNET_OK);
  CHECK(summary.steps == 2);
  CHECK(std::isfinite(summary.first_loss));
  CHECK(summary.first_loss > 0.0);

  tscnet_metrics mean{};
  char* csv = nullptr;
  REQUIRE(tscnet_evaluate(h.cfg, dir.file("m.ckpt").c_str(), manifest.c_str(), &mean, &csv) == TSCNET_OK);
  CHECK(std::string(csv).rfind("image_id,s_alpha,f_mean,e_mean,mae\n", 0) == 0);
  tscnet_string_free(csv);
  for (double v : {mean.s_alpha, mean.f_mean, mean.e_mean, mean.mae}) CHECK((v >= 0.0 && v <= 1.0));

  CHECK(tscnet_evaluate(h.cfg, dir.file("missing.ckpt").c_str(), manifest.c_str(), &mean, nullptr) ==
        TSCNET_ERR_DATA);

  const std::string image = dir.file("data/images/synth_00000.png");
  CHECK(tscnet_infer(h.cfg, dir.file("m.ckpt").c_str(), image.c_str(), dir.file("out.png").c_str(), 1) ==
        TSCNET_OK);
  CHECK(std::filesystem::exists(dir.file("out.png")));
  CHECK(std::filesystem::exists(dir.file("out_s3.png")));
  CHECK(std::filesystem::exists(dir.file("out_s4.png")));
  CHECK(tscnet_infer(h.cfg, dir.file("m.ckpt").c_str(), dir.file("nope.png").c_str(), dir.file("x.png").c_str(),
                     0) == TSCNET_ERR_DATA);

  tscnet_model* model = nullptr;
  REQUIRE(tscnet_model_load(h.cfg, dir.file("m.ckpt").c_str(), &model) == TSCNET_OK);
  const int s = tscnet_model_input_size(model);
  CHECK(s == 32);
  std::vector<float> rgb(3 * s * s, 0.5f), a(s * s), b(s * s);
  REQUIRE(tscnet_model_predict(model, rgb.data(), a.data()) == TSCNET_OK);
  REQUIRE(tscnet_model_predict(model, rgb.data(), b.data()) == TSCNET_OK);
  CHECK(a == b);
  for (float v : a) CHECK((v > 0.0f && v < 1.0f));
  tscnet_model_free(model);

  Handle other;
  REQUIRE(other.set("preset", "desk") == TSCNET_OK);
  CHECK(tscnet_model_load(other.cfg, dir.file("m.ckpt").c_str(), &model) == TSCNET_ERR_DATA);
  tscnet_set_log_callback(nullptr, nullptr);
}

TEST_CASE("divergence reports a numeric failure") {
  testing::TempDir dir("capi_nan");
  Handle h;
  REQUIRE(h.set("preset", "micro") == TSCNET_OK);
  REQUIRE(h.set("synth.count", "2") == TSCNET_OK);
  REQUIRE(tscnet_gen_data(h.cfg, dir.file("data").c_str(), 0) == TSCNET_OK);
  REQUIRE(h.set("manifest", dir.file("data/manifest.txt").c_str()) == TSCNET_OK);
  REQUIRE(h.set("checkpoint", dir.file("m.ckpt").c_str()) == TSCNET_OK);
  REQUIRE(h.set("log", dir.file("log.csv").c_str()) == TSCNET_OK);
  REQUIRE(h.set("base_lr", "1e37") == TSCNET_OK);
  REQUIRE(h.set("max_steps", "20") == TSCNET_OK);
  CHECK(tscnet_train(h.cfg, nullptr) == TSCNET_ERR_NUMERIC);
  CHECK(std::filesystem::exists(dir.file("m.ckpt")));
}

TEST_CASE("bench and argument checks") {
  Handle h;
  REQUIRE(h.set("bench.sizes", "8x8") == TSCNET_OK);
  REQUIRE(h.set("bench.repeats", "1") == TSCNET_OK);
  char* csv = nullptr;
  REQUIRE(tscnet_bench_attention(h.cfg, &csv) == TSCNET_OK);
  CHECK(std::string(csv).find("8,8,512,4096,8,8,") != std::string::npos);
  tscnet_string_free(csv);
  CHECK(tscnet_bench_attention(h.cfg, nullptr) == TSCNET_ERR_USAGE);
  CHECK(tscnet_gen_data(h.cfg, nullptr, 1) == TSCNET_ERR_USAGE);
  CHECK(tscnet_model_input_size(nullptr) == 0);
}
