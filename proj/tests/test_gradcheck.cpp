#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fvk/gradcheck.hpp"
#include "fvk/kernels/ref.hpp"
#include "fvk/ops.hpp"
#include "fvk/rng.hpp"

using namespace fvk;

TEST_CASE("standard gradient checks stay under 1e-3") {
  const auto reports = grad::run_standard_checks(12345);
  REQUIRE(reports.size() == 9);
  for (const auto& r : reports) {
    INFO(r.name, " worst=", r.worst, " max_rel=", r.max_rel);
    CHECK(r.pass(1e-3));
  }
}

TEST_CASE("linear graph sits at the float-precision floor") {
  // conv1x1 -> sum is linear in every parameter, so central differences are
  // exact up to float32 quantization of the analytic side
  Rng rng(42);
  std::vector<float> xs(1 * 2 * 4 * 4);
  for (auto& v : xs) v = static_cast<float>(rng.uniform(-1, 1));
  Tensor x = Tensor::from_data({1, 2, 4, 4}, xs).set_requires_grad(true);
  std::vector<float> ws(2 * 2);
  for (auto& v : ws) v = static_cast<float>(rng.uniform(-1, 1));
  Tensor w = Tensor::from_data({2, 2, 1, 1}, ws).set_requires_grad(true);
  Tensor b = Tensor::zeros({2}).set_requires_grad(true);
  Tensor loss = ops::sum(ops::conv1x1(x, w, b));
  backward(loss);

  auto ref = [&] {
    std::vector<double> xd(x.data().begin(), x.data().end());
    std::vector<double> wd(w.data().begin(), w.data().end());
    std::vector<double> bd(b.data().begin(), b.data().end());
    std::vector<double> y(2 * 16);
    kern::conv1x1_fwd(xd.data(), wd.data(), bd.data(), y.data(), 1, 2, 16, 2, 0, 2);
    return kern::sum_acc(y.data(), y.size());
  };
  std::vector<grad::NamedParam> params{{"x", x}, {"w", w}, {"b", b}};
  const auto report = grad::fd_compare("linear", params, ref);
  INFO("max_rel=", report.max_rel, " at ", report.worst);
  CHECK(report.max_rel < 1e-5);
}
