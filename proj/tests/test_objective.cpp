#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "core/error.hpp"
#include "core/gradcheck.hpp"
#include "core/ops.hpp"
#include "oracles/metric_oracles.hpp"
#include "oracles/naive_ops.hpp"
#include "train/objective.hpp"

using namespace tscnet;
using namespace tscnet::train;
using core::Dims;
using core::Tensor;

namespace {

std::vector<double> half_ones(int h, int w) {
  std::vector<double> g(static_cast<std::size_t>(h * w), 0.0);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w / 2; ++c) g[r * w + c] = 1.0;
  return g;
}

Tensor<double> map(Dims dims, std::vector<double> v, bool grad = false) {
  return Tensor<double>::from_values(std::move(dims), std::move(v), grad);
}

std::vector<double> random_mask(std::size_t n, std::uint64_t seed) {
  auto v = oracle::random_values(n, seed, 0.0, 1.0);
  for (double& x : v) x = x < 0.4 ? 1.0 : 0.0;
  return v;
}

}  // namespace

TEST_CASE("bce anchors") {
  const auto gt = half_ones(4, 4);
  CHECK(std::fabs(bce_loss(map({1, 4, 4}, std::vector<double>(16, 0.5)), map({1, 4, 4}, gt)).item() - std::log(2.0)) <
        1e-9);
  const double perfect = bce_loss(map({1, 4, 4}, gt), map({1, 4, 4}, gt)).item();
  CHECK(perfect >= 0.0);
  CHECK(perfect <= -std::log(1.0 - 1e-7) * (1 + 1e-9));
  CHECK(perfect > 0.0);
}

TEST_CASE("iou anchors") {
  const auto gt = half_ones(16, 16);
  const double loss = iou_loss(map({1, 16, 16}, std::vector<double>(256, 0.5)), map({1, 16, 16}, gt)).item();
  CHECK(std::fabs(loss - (1.0 - 65.0 / 193.0)) < 1e-9);

  const auto g8 = half_ones(8, 8);
  CHECK(iou_loss(map({1, 8, 8}, g8), map({1, 8, 8}, g8)).item() < 1e-6);
  CHECK(iou_loss(map({1, 8, 8}, std::vector<double>(64, 0.0)), map({1, 8, 8}, std::vector<double>(64, 0.0))).item() ==
        0.0);
}

TEST_CASE("bce and iou match summation oracles on random 4x4 maps") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto p = oracle::random_values(16, seed, 0.0, 1.0);
    const auto g = random_mask(16, seed + 500);
    CHECK(std::fabs(bce_loss(map({1, 4, 4}, p), map({1, 4, 4}, g)).item() - oracle::bce(p, g)) < 1e-12);
    CHECK(std::fabs(iou_loss(map({1, 4, 4}, p), map({1, 4, 4}, g)).item() - oracle::iou(p, g)) < 1e-12);
  }
}

TEST_CASE("loss oracles on 50 random 8x8 cases") {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto p = oracle::random_values(64, seed * 3, 0.0, 1.0);
    const auto g = random_mask(64, seed * 3 + 1);
    const double b = bce_loss(map({1, 8, 8}, p), map({1, 8, 8}, g)).item();
    const double i = iou_loss(map({1, 8, 8}, p), map({1, 8, 8}, g)).item();
    CHECK(std::fabs(b - oracle::bce(p, g)) < 1e-9);
    CHECK(std::fabs(i - oracle::iou(p, g)) < 1e-9);
    CHECK(b >= 0.0);
    CHECK((i >= 0.0 && i <= 1.0));
  }
}

TEST_CASE("total loss composition") {
  const auto gt = map({1, 16, 16}, half_ones(16, 16));
  model::SaliencyMaps<double> maps{map({1, 16, 16}, std::vector<double>(256, 0.5)),
                                   map({1, 16, 16}, std::vector<double>(256, 0.5)),
                                   map({1, 8, 8}, std::vector<double>(64, 0.5))};
  const auto rep = total_loss(maps, gt);
  const double expected = 3.0 * (oracle::bce(std::vector<double>(256, 0.5), half_ones(16, 16)) +
                                 oracle::iou(std::vector<double>(256, 0.5), half_ones(16, 16)));
  CHECK(std::fabs(expected - 3.0 * (std::log(2.0) + 1.0 - 65.0 / 193.0)) < 1e-12);
  CHECK(std::fabs(rep.total - expected) < 1e-9);
  CHECK(std::fabs(rep.loss.item() - rep.total) < 1e-12);
  double sum = 0.0;
  for (int k = 0; k < 3; ++k) {
    sum += rep.bce[k] + rep.iou[k];
    CHECK(rep.bce[k] >= 0.0);
    CHECK(rep.iou[k] >= 0.0);
  }
  CHECK(std::fabs(sum - rep.total) < 1e-9);

  // S4 is scored after bilinear upsampling, which smears any edge; a map equal
  // to gt everywhere needs a gt that survives the resize.
  model::SaliencyMaps<double> perfect{gt, gt, map({1, 8, 8}, half_ones(8, 8))};
  const auto near = total_loss(perfect, gt);
  for (int k = 0; k < 2; ++k) CHECK(near.bce[k] + near.iou[k] < 1e-6);
  const auto ones = map({1, 16, 16}, std::vector<double>(256, 1.0));
  model::SaliencyMaps<double> exact{ones, ones, map({1, 8, 8}, std::vector<double>(64, 1.0))};
  CHECK(total_loss(exact, ones).total < 1e-5);
}

TEST_CASE("only maps smaller than the ground truth are upsampled") {
  const auto g = half_ones(8, 8);
  const auto gt = map({1, 8, 8}, g);
  const auto p = oracle::random_values(64, 3, 0.05, 0.95);
  const auto small = oracle::random_values(16, 4, 0.05, 0.95);
  model::SaliencyMaps<double> maps{map({1, 8, 8}, p), map({1, 8, 8}, p), map({1, 4, 4}, small)};
  const auto rep = total_loss(maps, gt);
  CHECK(std::fabs(rep.bce[0] - oracle::bce(p, g)) < 1e-12);
  CHECK(rep.bce[0] == rep.bce[1]);
  const auto up = oracle::bilinear(small, 1, 4, 4, 8, 8);
  CHECK(std::fabs(rep.bce[2] - oracle::bce(up, g)) < 1e-12);
  CHECK(std::fabs(rep.iou[2] - oracle::iou(up, g)) < 1e-12);
}

TEST_CASE("total loss gradient matches finite differences per map") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto gt = map({1, 8, 8}, random_mask(64, seed + 70));
    model::SaliencyMaps<double> maps{map({1, 8, 8}, oracle::random_values(64, seed, 0.05, 0.95), true),
                                     map({1, 8, 8}, oracle::random_values(64, seed + 10, 0.05, 0.95), true),
                                     map({1, 4, 4}, oracle::random_values(16, seed + 20, 0.05, 0.95), true)};
    const auto report = core::finite_diff_check([&] { return total_loss(maps, gt).loss; },
                                                {{"s2", maps.s2}, {"s3", maps.s3}, {"s4", maps.s4}});
    CHECK(report.max_error() < 1e-5);
    CHECK(report.nonfinite() == 0);
  }
}

TEST_CASE("losses are invariant to pixel permutations") {
  const auto p = oracle::random_values(64, 9, 0.0, 1.0);
  const auto g = random_mask(64, 10);
  std::vector<int> perm(64);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(4));
  std::vector<double> pp(64), gp(64);
  for (int i = 0; i < 64; ++i) {
    pp[i] = p[perm[i]];
    gp[i] = g[perm[i]];
  }
  CHECK(bce_loss(map({1, 8, 8}, pp), map({1, 8, 8}, gp)).item() ==
        doctest::Approx(bce_loss(map({1, 8, 8}, p), map({1, 8, 8}, g)).item()).epsilon(1e-12));
  CHECK(iou_loss(map({1, 8, 8}, pp), map({1, 8, 8}, gp)).item() ==
        doctest::Approx(iou_loss(map({1, 8, 8}, p), map({1, 8, 8}, g)).item()).epsilon(1e-12));
}

TEST_CASE("size mismatches are contract violations") {
  const auto a = map({1, 4, 4}, std::vector<double>(16, 0.5));
  const auto b = map({1, 8, 2}, std::vector<double>(16, 1.0));
  CHECK_THROWS_AS(bce_loss(a, b), ContractError);
  CHECK_THROWS_AS(iou_loss(a, b), ContractError);
  model::SaliencyMaps<double> maps{a, a, a};
  CHECK_THROWS_AS(total_loss(maps, map({2, 4, 4}, std::vector<double>(32, 1.0))), ContractError);
}
