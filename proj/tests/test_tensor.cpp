#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "fvk/ops.hpp"
#include "fvk/rng.hpp"
#include "fvk/tensor.hpp"

using namespace fvk;
using ops::Mode;

TEST_CASE("shape validation") {
  CHECK(Shape({2, 3, 4, 5}).numel() == 120);
  CHECK(Shape({2, 3, 4, 5}).str() == "(2,3,4,5)");
  CHECK_THROWS_AS(Shape({1, 0, 4, 4}), ShapeError);
  CHECK_THROWS_AS(Shape({-1}), ShapeError);
  CHECK_THROWS_AS(Shape(std::vector<i64>{}), ShapeError);
  CHECK_THROWS_AS(Shape({1, 2, 3}).n(), ShapeError);
}

TEST_CASE("conv2d: all-ones 3x3 input and kernel") {
  Tensor x = Tensor::full({1, 1, 3, 3}, 1.0f);
  Tensor w = Tensor::full({1, 1, 3, 3}, 1.0f);
  Tensor b = Tensor::zeros({1});
  Tensor y = ops::conv2d(x, w, b);
  const auto d = y.data();
  // corners see 4 taps, edges 6, center all 9
  CHECK(d[4] == 9.0f);
  for (int corner : {0, 2, 6, 8}) CHECK(d[corner] == 4.0f);
  for (int edge : {1, 3, 5, 7}) CHECK(d[edge] == 6.0f);
}

TEST_CASE("conv2d: centered delta kernel is the identity") {
  Rng rng(1);
  std::vector<float> xs(2 * 3 * 5 * 7);
  for (auto& v : xs) v = static_cast<float>(rng.uniform(-1, 1));
  Tensor x = Tensor::from_data({2, 3, 5, 7}, xs);
  // one delta kernel per input channel would mix channels; use C=1 slices
  Tensor x1 = Tensor::from_data({1, 1, 4, 4}, std::vector<float>{
      0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15});
  std::vector<float> wd(9, 0.0f);
  wd[4] = 1.0f;
  Tensor w = Tensor::from_data({1, 1, 3, 3}, wd);
  Tensor y = ops::conv2d(x1, w, Tensor::zeros({1}));
  for (i64 i = 0; i < 16; ++i) CHECK(y.data()[i] == x1.data()[i]);
}

TEST_CASE("conv2d: zero input yields the bias everywhere") {
  Tensor x = Tensor::zeros({1, 2, 4, 4});
  Rng rng(2);
  std::vector<float> wd(3 * 2 * 9);
  for (auto& v : wd) v = static_cast<float>(rng.uniform(-1, 1));
  Tensor w = Tensor::from_data({3, 2, 3, 3}, wd);
  Tensor b = Tensor::from_data({3}, {0.5f, -1.5f, 2.0f});
  Tensor y = ops::conv2d(x, w, b);
  for (i64 k = 0; k < 3; ++k)
    for (i64 p = 0; p < 16; ++p)
      CHECK(y.data()[k * 16 + p] == b.data()[k]);
}

TEST_CASE("conv2d: channel mismatch names both shapes") {
  Tensor x = Tensor::zeros({1, 2, 4, 4});
  Tensor w = Tensor::zeros({1, 3, 3, 3});
  try {
    ops::conv2d(x, w, Tensor::zeros({1}));
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("(1,2,4,4)") != std::string::npos);
    CHECK(msg.find("(1,3,3,3)") != std::string::npos);
  }
}

TEST_CASE("relu examples") {
  Tensor x = Tensor::from_data({3}, {-1.0f, 0.0f, 2.5f});
  Tensor y = ops::relu(x);
  CHECK(y.data()[0] == 0.0f);
  CHECK(y.data()[1] == 0.0f);
  CHECK(y.data()[2] == 2.5f);

  Tensor neg_out = ops::relu(Tensor::full({2, 2}, -3.0f));
  for (float v : neg_out.data()) CHECK(v == 0.0f);
  Tensor pos_out = ops::relu(Tensor::full({2, 2}, 3.0f));
  for (float v : pos_out.data()) CHECK(v == 3.0f);
}

TEST_CASE("batchnorm: constant input normalizes to zero") {
  Tensor x = Tensor::full({1, 1, 2, 2}, 3.25f);
  auto st = ops::BatchNormState::init(1);
  Tensor y = ops::batchnorm2d(x, st, Mode::train);
  for (float v : y.data()) CHECK(std::abs(v) <= 1e-6f);
}

TEST_CASE("batchnorm: two-point batch normalizes to -1/+1") {
  Tensor x = Tensor::from_data({1, 1, 1, 2}, {0.0f, 2.0f});
  auto st = ops::BatchNormState::init(1, 0.1f, 1e-12f);
  Tensor y = ops::batchnorm2d(x, st, Mode::train);
  CHECK(y.data()[0] == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(y.data()[1] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("batchnorm: gamma=0 yields beta everywhere") {
  Rng rng(3);
  std::vector<float> xs(2 * 2 * 4 * 4);
  for (auto& v : xs) v = static_cast<float>(rng.uniform(-2, 2));
  Tensor x = Tensor::from_data({2, 2, 4, 4}, xs);
  auto st = ops::BatchNormState::init(2);
  st.gamma.mutable_data()[0] = 0.0f;
  st.gamma.mutable_data()[1] = 0.0f;
  st.beta.mutable_data()[0] = 0.75f;
  st.beta.mutable_data()[1] = -0.25f;
  Tensor y = ops::batchnorm2d(x, st, Mode::train);
  for (i64 ni = 0; ni < 2; ++ni)
    for (i64 ci = 0; ci < 2; ++ci)
      for (i64 p = 0; p < 16; ++p)
        CHECK(y.data()[(ni * 2 + ci) * 16 + p] == st.beta.data()[ci]);
}

TEST_CASE("batchnorm: degenerate train batch is rejected") {
  Tensor x = Tensor::full({1, 3, 1, 1}, 1.0f);
  auto st = ops::BatchNormState::init(3);
  CHECK_THROWS_AS(ops::batchnorm2d(x, st, Mode::train), ValueError);
  // eval mode has no such restriction
  CHECK_NOTHROW(ops::batchnorm2d(x, st, Mode::eval));
}

TEST_CASE("batchnorm: train output statistics match gamma/beta") {
  Rng rng(4);
  std::vector<float> xs(1 * 2 * 8 * 8);
  for (auto& v : xs) v = static_cast<float>(rng.uniform(-3, 5));
  Tensor x = Tensor::from_data({1, 2, 8, 8}, xs);
  auto st = ops::BatchNormState::init(2, 0.1f, 1e-6f);
  st.beta.mutable_data()[0] = 0.5f;
  st.beta.mutable_data()[1] = -1.0f;
  Tensor y = ops::batchnorm2d(x, st, Mode::train);
  for (i64 ci = 0; ci < 2; ++ci) {
    double mean = 0.0, var = 0.0;
    for (i64 p = 0; p < 64; ++p) mean += y.data()[ci * 64 + p];
    mean /= 64.0;
    for (i64 p = 0; p < 64; ++p) {
      const double d = y.data()[ci * 64 + p] - mean;
      var += d * d;
    }
    var /= 64.0;
    CHECK(mean == doctest::Approx(st.beta.data()[ci]).epsilon(1e-4));
    CHECK(var == doctest::Approx(1.0).epsilon(1e-4));
  }
}

TEST_CASE("batchnorm: running statistics update and drive eval mode") {
  Tensor x = Tensor::from_data({1, 1, 1, 2}, {0.0f, 2.0f});
  auto st = ops::BatchNormState::init(1, 0.5f, 1e-12f);
  ops::batchnorm2d(x, st, Mode::train);
  // running <- 0.5*init + 0.5*batch with batch mean 1, var 1
  CHECK(st.running_mean.data()[0] == doctest::Approx(0.5));
  CHECK(st.running_var.data()[0] == doctest::Approx(1.0));

  const auto before_m = st.running_mean.data()[0];
  Tensor ye = ops::batchnorm2d(x, st, Mode::eval);
  CHECK(st.running_mean.data()[0] == before_m);  // eval never mutates
}

TEST_CASE("maxpool examples") {
  Tensor x = Tensor::from_data({1, 1, 2, 2}, {1, 2, 3, 4});
  CHECK(ops::maxpool2x2(x).data()[0] == 4.0f);

  std::vector<float> ramp(16);
  for (int i = 0; i < 16; ++i) ramp[static_cast<std::size_t>(i)] = static_cast<float>(i);
  Tensor r = Tensor::from_data({1, 1, 4, 4}, ramp);
  Tensor y = ops::maxpool2x2(r);
  CHECK(y.data()[0] == 5.0f);
  CHECK(y.data()[1] == 7.0f);
  CHECK(y.data()[2] == 13.0f);
  CHECK(y.data()[3] == 15.0f);

  CHECK_THROWS_AS(ops::maxpool2x2(Tensor::zeros({1, 1, 3, 4})), ShapeError);
  CHECK_THROWS_AS(ops::maxpool2x2(Tensor::zeros({1, 1, 4, 5})), ShapeError);
}

TEST_CASE("maxpool: constant block routes gradient only to the first element") {
  Tensor x = Tensor::full({1, 1, 2, 2}, 7.0f).set_requires_grad(true);
  Tensor loss = ops::sum(ops::maxpool2x2(x));
  backward(loss);
  const auto g = x.grad();
  CHECK(g[0] == 1.0f);
  CHECK(g[1] == 0.0f);
  CHECK(g[2] == 0.0f);
  CHECK(g[3] == 0.0f);
}

TEST_CASE("conv_transpose2d examples") {
  // single input value sprayed through an all-ones kernel
  Tensor x = Tensor::from_data({1, 1, 1, 1}, {2.5f});
  Tensor w = Tensor::full({1, 1, 2, 2}, 1.0f);
  Tensor y = ops::conv_transpose2d(x, w, Tensor::zeros({1}));
  CHECK(y.shape() == Shape({1, 1, 2, 2}));
  for (float v : y.data()) CHECK(v == 2.5f);

  // zero input -> bias
  Tensor z = ops::conv_transpose2d(Tensor::zeros({1, 2, 3, 3}),
                                   Tensor::full({2, 1, 2, 2}, 0.3f),
                                   Tensor::from_data({1}, {-0.75f}));
  for (float v : z.data()) CHECK(v == -0.75f);

  // zero kernel, zero bias -> zero output
  Rng rng(5);
  std::vector<float> xs(9);
  for (auto& v : xs) v = static_cast<float>(rng.uniform(-1, 1));
  Tensor q = ops::conv_transpose2d(Tensor::from_data({1, 1, 3, 3}, xs),
                                   Tensor::zeros({1, 1, 2, 2}), Tensor::zeros({1}));
  for (float v : q.data()) CHECK(v == 0.0f);

  CHECK_THROWS_AS(ops::conv_transpose2d(Tensor::zeros({1, 3, 4, 4}),
                                        Tensor::zeros({2, 1, 2, 2}),
                                        Tensor::zeros({1})),
                  ShapeError);
}

TEST_CASE("maxpool then transpose-conv restores even shapes") {
  for (i64 h : {2, 4, 8, 16}) {
    Tensor x = Tensor::zeros({1, 1, h, h + 2});
    Tensor pooled = ops::maxpool2x2(x);
    Tensor up = ops::conv_transpose2d(pooled, Tensor::zeros({1, 1, 2, 2}),
                                      Tensor::zeros({1}));
    CHECK(up.shape() == x.shape());
  }
}

TEST_CASE("concat_channels contract") {
  Tensor a = Tensor::full({1, 2, 4, 4}, 1.0f);
  Tensor b = Tensor::full({1, 3, 4, 4}, 2.0f);
  Tensor y = ops::concat_channels(a, b);
  CHECK(y.shape() == Shape({1, 5, 4, 4}));
  // channel C1 of the output is the first channel of b
  for (i64 p = 0; p < 16; ++p) CHECK(y.data()[2 * 16 + p] == 2.0f);
  for (i64 p = 0; p < 16; ++p) CHECK(y.data()[p] == 1.0f);

  CHECK_THROWS_AS(ops::concat_channels(a, Tensor::zeros({1, 3, 4, 5})), ShapeError);
  CHECK_THROWS_AS(ops::concat_channels(a, Tensor::zeros({2, 3, 4, 4})), ShapeError);
}

TEST_CASE("conv1x1 examples") {
  // C=1, w=1, b=0 is the identity
  Rng rng(6);
  std::vector<float> xs(16);
  for (auto& v : xs) v = static_cast<float>(rng.uniform(-1, 1));
  Tensor x = Tensor::from_data({1, 1, 4, 4}, xs);
  Tensor y = ops::conv1x1(x, Tensor::full({1, 1, 1, 1}, 1.0f), Tensor::zeros({1}));
  for (i64 i = 0; i < 16; ++i) CHECK(y.data()[i] == x.data()[i]);

  // per-pixel channel sum
  Tensor x2 = Tensor::from_data({1, 2, 1, 2}, {1.0f, 2.0f, 10.0f, 20.0f});
  Tensor s = ops::conv1x1(x2, Tensor::full({1, 2, 1, 1}, 1.0f), Tensor::zeros({1}));
  CHECK(s.data()[0] == 11.0f);
  CHECK(s.data()[1] == 22.0f);

  // w=0, b=c
  Tensor c = ops::conv1x1(x2, Tensor::zeros({1, 2, 1, 1}), Tensor::from_data({1}, {4.5f}));
  CHECK(c.data()[0] == 4.5f);
  CHECK(c.data()[1] == 4.5f);
}

TEST_CASE("sigmoid saturates without NaN") {
  Tensor x = Tensor::from_data({3}, {0.0f, 100.0f, -100.0f});
  Tensor y = ops::sigmoid(x);
  CHECK(y.data()[0] == 0.5f);
  CHECK(y.data()[1] == 1.0f);
  CHECK(y.data()[2] <= 1e-40f);  // saturates to a subnormal, not NaN
  CHECK(y.data()[2] >= 0.0f);
  for (float v : y.data()) CHECK(std::isfinite(v));

  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    Tensor t = Tensor::from_data({1}, {static_cast<float>(rng.uniform(-6, 6))});
    const float s = ops::sigmoid(t).data()[0];
    CHECK(s > 0.0f);
    CHECK(s < 1.0f);
  }
}

TEST_CASE("dropout2d: identity cases and domain checks") {
  Rng rng(8);
  Tensor x = Tensor::full({1, 4, 2, 2}, 3.0f);
  Tensor y0 = ops::dropout2d(x, 0.0f, Mode::train, rng);
  for (i64 i = 0; i < x.numel(); ++i) CHECK(y0.data()[i] == x.data()[i]);
  Tensor ye = ops::dropout2d(x, 0.9f, Mode::eval, rng);
  for (i64 i = 0; i < x.numel(); ++i) CHECK(ye.data()[i] == x.data()[i]);
  CHECK_THROWS_AS(ops::dropout2d(x, 1.0f, Mode::train, rng), ValueError);
  CHECK_THROWS_AS(ops::dropout2d(x, -0.1f, Mode::train, rng), ValueError);
}

TEST_CASE("dropout2d: Monte-Carlo expectation over 10000 trials") {
  Rng rng(9);
  Tensor x = Tensor::from_data({1, 1, 1, 1}, {1.0f});
  double total = 0.0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t)
    total += ops::dropout2d(x, 0.5f, Mode::train, rng).data()[0];
  const double mean = total / trials;
  // single-trial sd is 1.0, so the mean has sd 0.01; allow 3 sigma
  CHECK(std::abs(mean - 1.0) <= 0.03);
}

TEST_CASE("dropout2d: zeroes whole channels and scales survivors") {
  Rng rng(10);
  Tensor x = Tensor::full({2, 8, 3, 3}, 1.0f);
  Tensor y = ops::dropout2d(x, 0.5f, Mode::train, rng);
  for (i64 nc = 0; nc < 16; ++nc) {
    const float first = y.data()[nc * 9];
    CHECK((first == 0.0f || first == 2.0f));
    for (i64 p = 0; p < 9; ++p) CHECK(y.data()[nc * 9 + p] == first);
  }
}

TEST_CASE("backward: spec-level examples") {
  Tensor x = Tensor::from_data({2}, {-1.0f, 2.0f}).set_requires_grad(true);
  Tensor loss = ops::sum(ops::relu(x));
  backward(loss);
  CHECK(x.grad()[0] == 0.0f);
  CHECK(x.grad()[1] == 1.0f);

  Tensor z = Tensor::from_data({1}, {0.0f}).set_requires_grad(true);
  Tensor l2 = ops::sum(ops::sigmoid(z));
  backward(l2);
  CHECK(z.grad()[0] == 0.25f);

  Tensor nonscalar = Tensor::zeros({2, 2}).set_requires_grad(true);
  CHECK_THROWS_AS(backward(ops::relu(nonscalar)), ValueError);
}

TEST_CASE("backward: gradients accumulate across fan-out") {
  Tensor x = Tensor::from_data({3}, {1.0f, 2.0f, 3.0f}).set_requires_grad(true);
  Tensor loss = ops::sum(ops::add(x, x));
  backward(loss);
  for (i64 i = 0; i < 3; ++i) CHECK(x.grad()[i] == 2.0f);

  // deeper fan-out: x feeds two separate relu branches
  Tensor y = Tensor::from_data({2}, {1.0f, 4.0f}).set_requires_grad(true);
  Tensor branch = ops::add(ops::relu(y), ops::relu(y));
  backward(ops::sum(branch));
  CHECK(y.grad()[0] == 2.0f);
  CHECK(y.grad()[1] == 2.0f);
}

TEST_CASE("deterministic repeat: same seed, same bits") {
  auto run = [](u64 seed) {
    Rng rng(seed);
    std::vector<float> xs(1 * 2 * 6 * 6);
    for (auto& v : xs) v = static_cast<float>(rng.uniform(-1, 1));
    Tensor x = Tensor::from_data({1, 2, 6, 6}, xs);
    std::vector<float> ws(3 * 2 * 9);
    for (auto& v : ws) v = static_cast<float>(rng.uniform(-1, 1));
    Tensor w = Tensor::from_data({3, 2, 3, 3}, ws);
    Tensor y = ops::conv2d(x, w, Tensor::zeros({3}));
    Tensor d = ops::dropout2d(y, 0.3f, Mode::train, rng);
    return std::vector<float>(d.data().begin(), d.data().end());
  };
  CHECK(run(77) == run(77));
  CHECK(run(77) != run(78));
}
