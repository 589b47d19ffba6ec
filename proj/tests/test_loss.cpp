#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fvk/loss.hpp"
#include "fvk/rng.hpp"

using namespace fvk;

namespace {
Tensor ones1() { return Tensor::from_data({1}, {1.0f}); }
Tensor val1(float v) { return Tensor::from_data({1}, {v}); }
}  // namespace

TEST_CASE("bce hand values") {
  LossConfig cfg;
  CHECK(bce_loss(ones1(), val1(1.0f), cfg).item() < 1e-6f);
  CHECK(bce_loss(ones1(), val1(0.5f), cfg).item() ==
        doctest::Approx(std::log(2.0)).epsilon(1e-6));
  CHECK(bce_loss(val1(0.0f), val1(0.5f), cfg).item() ==
        doctest::Approx(std::log(2.0)).epsilon(1e-6));
}

TEST_CASE("dice hand values") {
  LossConfig cfg;
  const i64 n = 12;
  Tensor ones = Tensor::full({n}, 1.0f);
  Tensor zeros = Tensor::zeros({n});
  CHECK(dice_loss(ones, ones, cfg).item() == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(dice_loss(ones, zeros, cfg).item() == doctest::Approx(1.0));
  // the smoothing lives only in the denominator: empty vs empty scores 1
  CHECK(dice_loss(zeros, zeros, cfg).item() == doctest::Approx(1.0));
}

TEST_CASE("dice_bce single-pixel case") {
  LossConfig cfg;
  const float v = dice_bce_loss(ones1(), val1(0.5f), cfg).item();
  // ln 2 + (1 - 1/(1.5 + eps)) = 0.6931 + 0.3333
  CHECK(v == doctest::Approx(1.0265).epsilon(1e-3));
  CHECK(dice_bce_loss(ones1(), val1(1.0f), cfg).item() < 1e-5f);
}

TEST_CASE("dice_bce equals the sum of its terms and is non-negative") {
  LossConfig cfg;
  Rng rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    const i64 n = 32;
    std::vector<float> yv(static_cast<std::size_t>(n)), pv(static_cast<std::size_t>(n));
    for (auto& v : yv) v = rng.uniform() < 0.5 ? 1.0f : 0.0f;
    for (auto& v : pv) v = static_cast<float>(rng.uniform(0.0, 1.0));
    Tensor y = Tensor::from_data({n}, yv);
    Tensor p = Tensor::from_data({n}, pv);
    const float b = bce_loss(y, p, cfg).item();
    const float d = dice_loss(y, p, cfg).item();
    const float bd = dice_bce_loss(y, p, cfg).item();
    CHECK(bd == b + d);
    CHECK(bd >= 0.0f);
  }
}

TEST_CASE("loss input validation") {
  LossConfig cfg;
  CHECK_THROWS_AS(bce_loss(Tensor::zeros({2}), Tensor::zeros({3}), cfg), ShapeError);
  CHECK_THROWS_AS(bce_loss(val1(0.5f), val1(0.5f), cfg), ValueError);  // non-binary target
  CHECK_THROWS_AS(dice_loss(ones1(), val1(1.5f), cfg), ValueError);    // p outside [0,1]
  LossConfig bad;
  bad.eps_dice = 0.0f;
  CHECK_THROWS_AS(dice_loss(ones1(), val1(0.5f), bad), ValueError);
  bad = LossConfig{};
  bad.bce_clamp = 0.5f;
  CHECK_THROWS_AS(bce_loss(ones1(), val1(0.5f), bad), ValueError);
}

TEST_CASE("loss gradients match central differences on random batches") {
  LossConfig cfg;
  Rng rng(13);
  for (int rep = 0; rep < 5; ++rep) {
    const i64 n = 24;
    std::vector<float> yv(static_cast<std::size_t>(n)), pv(static_cast<std::size_t>(n));
    for (auto& v : yv) v = rng.uniform() < 0.4 ? 1.0f : 0.0f;
    for (auto& v : pv) v = static_cast<float>(rng.uniform(0.05, 0.95));
    Tensor y = Tensor::from_data({n}, yv);
    Tensor p = Tensor::from_data({n}, pv).set_requires_grad(true);
    Tensor loss = dice_bce_loss(y, p, cfg);
    backward(loss);

    auto pd = p.mutable_data();
    const auto g = p.grad();
    for (i64 i = 0; i < n; ++i) {
      const float saved = pd[i];
      const double h = 1e-4;
      pd[i] = static_cast<float>(saved + h);
      std::vector<double> yd(yv.begin(), yv.end());
      std::vector<double> pdd(pd.begin(), pd.end());
      const double fp = dice_bce_ref(yd, pdd, cfg.bce_clamp, cfg.eps_dice);
      pd[i] = static_cast<float>(saved - h);
      std::vector<double> pdd2(pd.begin(), pd.end());
      const double fm = dice_bce_ref(yd, pdd2, cfg.bce_clamp, cfg.eps_dice);
      const double step = static_cast<double>(static_cast<float>(saved + h)) -
                          static_cast<double>(static_cast<float>(saved - h));
      pd[i] = saved;
      const double fd = (fp - fm) / step;
      const double rel = std::abs(g[i] - fd) / std::max({std::abs(fd), 1e-3});
      CHECK(rel < 1e-3);
    }
  }
}
