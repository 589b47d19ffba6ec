#include "fvk/gradcheck.hpp"

#include <cmath>

#include "fvk/kernels/ref.hpp"
#include "fvk/loss.hpp"
#include "fvk/ops.hpp"
#include "fvk/rng.hpp"
#include "fvk/unet.hpp"

namespace fvk::grad {

CheckReport fd_compare(std::string name, std::span<NamedParam> params,
                       const std::function<double()>& ref_eval, double h,
                       double floor) {
  CheckReport report;
  report.name = std::move(name);
  for (auto& np : params) {
    auto data = np.tensor.mutable_data();
    const auto analytic = np.tensor.grad();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const float saved = data[i];
      const float plus = static_cast<float>(static_cast<double>(saved) + h);
      const float minus = static_cast<float>(static_cast<double>(saved) - h);
      data[i] = plus;
      const double f_plus = ref_eval();
      data[i] = minus;
      const double f_minus = ref_eval();
      data[i] = saved;
      // actual step after float quantization
      const double step = static_cast<double>(plus) - static_cast<double>(minus);
      const double fd = (f_plus - f_minus) / step;
      const double a = static_cast<double>(analytic[i]);
      const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), floor});
      ++report.elements;
      if (rel > report.max_rel) {
        report.max_rel = rel;
        report.worst = np.name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return report;
}

namespace {

Tensor random_tensor(Rng& rng, const Shape& s, double lo, double hi) {
  std::vector<float> v(static_cast<std::size_t>(s.numel()));
  for (auto& x : v) x = static_cast<float>(rng.uniform(lo, hi));
  return Tensor::from_data(s, std::move(v));
}

std::vector<double> as_double(const Tensor& t) {
  return std::vector<double>(t.data().begin(), t.data().end());
}

double ref_sum_relu_conv2d(const Tensor& x, const Tensor& w, const Tensor& b) {
  const i64 n = x.shape().n(), c = x.shape().c(), h = x.shape().h(), wd = x.shape().w();
  const i64 k = w.shape()[0];
  auto xd = as_double(x);
  auto wdd = as_double(w);
  auto bd = as_double(b);
  std::vector<double> y(static_cast<std::size_t>(n * k * h * wd));
  kern::conv2d_fwd(xd.data(), wdd.data(), bd.data(), y.data(), n, c, h, wd, k, 0, k);
  double acc = 0.0;
  for (double v : y) acc += v > 0.0 ? v : 0.0;
  return acc;
}

CheckReport check_conv2d(Rng& rng) {
  Tensor x = random_tensor(rng, {1, 3, 8, 8}, -1.0, 1.0).set_requires_grad(true);
  Tensor w = random_tensor(rng, {2, 3, 3, 3}, -0.7, 0.7).set_requires_grad(true);
  Tensor b = random_tensor(rng, {2}, -0.3, 0.3).set_requires_grad(true);
  Tensor loss = ops::sum(ops::relu(ops::conv2d(x, w, b)));
  backward(loss);
  std::vector<NamedParam> params{{"x", x}, {"w", w}, {"b", b}};
  return fd_compare("conv2d", params, [&] { return ref_sum_relu_conv2d(x, w, b); });
}

CheckReport check_conv1x1(Rng& rng) {
  Tensor x = random_tensor(rng, {1, 3, 6, 6}, -1.0, 1.0).set_requires_grad(true);
  Tensor w = random_tensor(rng, {2, 3, 1, 1}, -0.7, 0.7).set_requires_grad(true);
  Tensor b = random_tensor(rng, {2}, -0.3, 0.3).set_requires_grad(true);
  Tensor loss = ops::sum(ops::conv1x1(x, w, b));
  backward(loss);
  auto ref = [&] {
    auto xd = as_double(x);
    auto wd = as_double(w);
    auto bd = as_double(b);
    std::vector<double> y(static_cast<std::size_t>(2 * 36));
    kern::conv1x1_fwd(xd.data(), wd.data(), bd.data(), y.data(), 1, 3, 36, 2, 0, 2);
    return kern::sum_acc(y.data(), y.size());
  };
  std::vector<NamedParam> params{{"x", x}, {"w", w}, {"b", b}};
  return fd_compare("conv1x1", params, ref);
}

CheckReport check_conv_transpose(Rng& rng) {
  Tensor x = random_tensor(rng, {1, 3, 5, 5}, -1.0, 1.0).set_requires_grad(true);
  Tensor w = random_tensor(rng, {3, 2, 2, 2}, -0.7, 0.7).set_requires_grad(true);
  Tensor b = random_tensor(rng, {2}, -0.3, 0.3).set_requires_grad(true);
  Tensor loss = ops::sum(ops::relu(ops::conv_transpose2d(x, w, b)));
  backward(loss);
  auto ref = [&] {
    auto xd = as_double(x);
    auto wd = as_double(w);
    auto bd = as_double(b);
    std::vector<double> y(static_cast<std::size_t>(2 * 100));
    kern::convt2x2_fwd(xd.data(), wd.data(), bd.data(), y.data(), 1, 3, 5, 5, 2, 0, 2);
    double acc = 0.0;
    for (double v : y) acc += v > 0.0 ? v : 0.0;
    return acc;
  };
  std::vector<NamedParam> params{{"x", x}, {"w", w}, {"b", b}};
  return fd_compare("conv_transpose2d", params, ref);
}

CheckReport check_batchnorm(Rng& rng) {
  const i64 c = 3;
  Tensor x = random_tensor(rng, {2, c, 4, 4}, -1.5, 1.5).set_requires_grad(true);
  auto st = ops::BatchNormState::init(c);
  {
    auto g = st.gamma.mutable_data();
    auto be = st.beta.mutable_data();
    for (i64 ci = 0; ci < c; ++ci) {
      g[static_cast<std::size_t>(ci)] = static_cast<float>(rng.uniform(0.5, 1.5));
      be[static_cast<std::size_t>(ci)] = static_cast<float>(rng.uniform(-0.5, 0.5));
    }
  }
  // fresh state per eval: the ref path never touches running stats, and the
  // float path's running-stat update does not feed the output
  Tensor loss = ops::sum(ops::sigmoid(ops::batchnorm2d(x, st, ops::Mode::train)));
  backward(loss);
  auto ref = [&] {
    const i64 hw = 16;
    auto xd = as_double(x);
    std::vector<double> mean(c), var(c);
    kern::channel_mean_var(xd.data(), 2, c, hw, mean.data(), var.data());
    double acc = 0.0;
    for (i64 ni = 0; ni < 2; ++ni)
      for (i64 ci = 0; ci < c; ++ci) {
        const double inv = 1.0 / std::sqrt(var[ci] + static_cast<double>(st.eps));
        for (i64 p = 0; p < hw; ++p) {
          const double xhat = (xd[static_cast<std::size_t>((ni * c + ci) * hw + p)] - mean[ci]) * inv;
          acc += kern::sigmoid_at(st.gamma.data()[static_cast<std::size_t>(ci)] * xhat +
                                  st.beta.data()[static_cast<std::size_t>(ci)]);
        }
      }
    return acc;
  };
  std::vector<NamedParam> params{{"x", x}, {"gamma", st.gamma}, {"beta", st.beta}};
  return fd_compare("batchnorm2d(train)", params, ref);
}

CheckReport check_relu(Rng& rng) {
  // inputs bounded away from the kink at 0
  std::vector<float> vals(64);
  for (auto& v : vals) {
    const double u = rng.uniform(0.05, 1.0);
    v = static_cast<float>(rng.uniform() < 0.5 ? -u : u);
  }
  Tensor x = Tensor::from_data({1, 4, 4, 4}, std::move(vals)).set_requires_grad(true);
  Tensor loss = ops::sum(ops::relu(x));
  backward(loss);
  auto ref = [&] {
    double acc = 0.0;
    for (float v : x.data()) acc += v > 0.0f ? static_cast<double>(v) : 0.0;
    return acc;
  };
  std::vector<NamedParam> params{{"x", x}};
  return fd_compare("relu", params, ref);
}

CheckReport check_sigmoid(Rng& rng) {
  Tensor x = random_tensor(rng, {1, 2, 4, 4}, -3.0, 3.0).set_requires_grad(true);
  Tensor loss = ops::sum(ops::sigmoid(x));
  backward(loss);
  auto ref = [&] {
    double acc = 0.0;
    for (float v : x.data()) acc += kern::sigmoid_at(static_cast<double>(v));
    return acc;
  };
  std::vector<NamedParam> params{{"x", x}};
  return fd_compare("sigmoid", params, ref);
}

CheckReport check_maxpool(Rng& rng) {
  // distinct values with gaps well above 2h so the argmax never flips
  std::vector<float> vals(64);
  for (std::size_t i = 0; i < vals.size(); ++i)
    vals[i] = static_cast<float>(i) * 0.01f;
  for (std::size_t i = vals.size(); i > 1; --i)
    std::swap(vals[i - 1], vals[rng.below(i)]);
  Tensor x = Tensor::from_data({1, 1, 8, 8}, std::move(vals)).set_requires_grad(true);
  Tensor loss = ops::sum(ops::maxpool2x2(x));
  backward(loss);
  auto ref = [&] {
    auto xd = as_double(x);
    std::vector<double> y(16);
    std::vector<u8> arg(16);
    kern::maxpool2x2_fwd(xd.data(), y.data(), arg.data(), 1, 1, 8, 8);
    return kern::sum_acc(y.data(), y.size());
  };
  std::vector<NamedParam> params{{"x", x}};
  return fd_compare("maxpool2x2", params, ref);
}

CheckReport check_dice_bce(Rng& rng) {
  const i64 n = 48;
  LossConfig cfg;
  std::vector<float> yv(static_cast<std::size_t>(n)), pv(static_cast<std::size_t>(n));
  for (auto& v : yv) v = rng.uniform() < 0.4 ? 1.0f : 0.0f;
  for (auto& v : pv) v = static_cast<float>(rng.uniform(0.05, 0.95));
  Tensor target = Tensor::from_data({1, 1, 6, 8}, std::move(yv));
  Tensor pred = Tensor::from_data({1, 1, 6, 8}, std::move(pv)).set_requires_grad(true);
  Tensor loss = dice_bce_loss(target, pred, cfg);
  backward(loss);
  auto ref = [&] {
    auto yd = as_double(target);
    auto pd = as_double(pred);
    return dice_bce_ref(yd, pd, cfg.bce_clamp, cfg.eps_dice);
  };
  std::vector<NamedParam> params{{"pred", pred}};
  return fd_compare("dice_bce_loss", params, ref);
}

CheckReport check_unet_end_to_end(Rng& rng) {
  unet::UNetConfig cfg;
  cfg.depth = 1;
  cfg.base_channels = 2;
  cfg.dropout_sites = unet::DropoutSites::none;
  unet::UNet net = unet::UNet::build(cfg, rng.next_u64());

  Tensor input = random_tensor(rng, {1, 1, 16, 16}, 0.0, 1.0);
  std::vector<float> tv(256);
  for (auto& v : tv) v = rng.uniform() < 0.3 ? 1.0f : 0.0f;
  Tensor target = Tensor::from_data({1, 1, 16, 16}, std::move(tv));
  LossConfig loss_cfg;

  Tensor prob = net.forward(input, ops::Mode::train);
  Tensor loss = dice_bce_loss(target, prob, loss_cfg);
  backward(loss);

  std::vector<NamedParam> params;
  for (const auto& p : net.parameters())
    if (p.trainable) params.push_back({p.name, p.tensor});
  auto ref = [&] {
    return net.ref_loss(input, target, loss_cfg, ops::Mode::train);
  };
  // smaller step: the deep graph has relu kinks that an h=1e-3 probe can
  // cross; the double-precision reference keeps the quotient noise ~1e-9
  return fd_compare("unet(depth1,end-to-end)", params, ref, 1e-4);
}

}  // namespace

std::vector<CheckReport> run_standard_checks(u64 seed) {
  Rng rng(seed);
  std::vector<CheckReport> out;
  out.push_back(check_conv2d(rng));
  out.push_back(check_conv1x1(rng));
  out.push_back(check_conv_transpose(rng));
  out.push_back(check_batchnorm(rng));
  out.push_back(check_relu(rng));
  out.push_back(check_sigmoid(rng));
  out.push_back(check_maxpool(rng));
  out.push_back(check_dice_bce(rng));
  out.push_back(check_unet_end_to_end(rng));
  return out;
}

}  // namespace fvk::grad
