#include "fvk/ops.hpp"

#include <cmath>
#include <cstring>

#include "fvk/kernels/dispatch.hpp"
#include "fvk/kernels/ref.hpp"
#include "fvk/parallel.hpp"

namespace fvk::ops {

namespace {

void require_rank4(const Tensor& t, const char* what) {
  if (t.shape().rank() != 4)
    throw ShapeError(std::string(what) + ": expected rank-4 NCHW tensor, got " +
                     t.shape().str());
}

bool any_needs_grad(std::initializer_list<const Tensor*> ts) {
  if (!grad_enabled()) return false;
  for (const Tensor* t : ts)
    if (t->needs_grad()) return true;
  return false;
}

bool flows(const Tensor& t) { return grad_enabled() && t.needs_grad(); }

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b) {
  require_rank4(x, "conv2d input");
  if (w.shape().rank() != 4 || w.shape()[2] != 3 || w.shape()[3] != 3)
    throw ShapeError("conv2d: weights must be (K,C,3,3), got " + w.shape().str());
  const i64 n = x.shape().n(), c = x.shape().c(), h = x.shape().h(), wd = x.shape().w();
  const i64 k = w.shape()[0];
  if (w.shape()[1] != c)
    throw ShapeError("conv2d: input channels " + x.shape().str() +
                     " do not match weights " + w.shape().str());
  if (b.numel() != k)
    throw ShapeError("conv2d: bias length " + std::to_string(b.numel()) +
                     " does not match K=" + std::to_string(k));

  Tensor y = Tensor::zeros({n, k, h, wd});
  const auto& kt = kern::active();
  parallel_for(0, k, [&](i64 k0, i64 k1) {
    kt.conv2d_fwd(x.data().data(), w.data().data(), b.data().data(),
                  y.mutable_data().data(), n, c, h, wd, k, k0, k1);
  });

  if (any_needs_grad({&x, &w, &b})) {
    Tensor xc = x, wc = w, bc = b;
    y.attach_node("conv2d", {x, w, b}, [xc, wc, bc, n, c, h, wd, k](const Tensor& out) mutable {
      const float* gy = out.grad().data();
      const auto& kb = kern::active();
      if (xc.needs_grad()) {
        float* gx = xc.grad_accum().data();
        parallel_for(0, c, [&](i64 c0, i64 c1) {
          kb.conv2d_bwd_input(gy, wc.data().data(), gx, n, c, h, wd, k, c0, c1);
        });
      }
      if (wc.needs_grad() || bc.needs_grad()) {
        float* gw = wc.grad_accum().data();
        float* gb = bc.needs_grad() ? bc.grad_accum().data() : nullptr;
        parallel_for(0, k, [&](i64 k0, i64 k1) {
          kb.conv2d_bwd_wb(xc.data().data(), gy, gw, gb, n, c, h, wd, k, k0, k1);
        });
      }
    });
  }
  return y;
}

Tensor conv1x1(const Tensor& x, const Tensor& w, const Tensor& b) {
  require_rank4(x, "conv1x1 input");
  const i64 n = x.shape().n(), c = x.shape().c(), h = x.shape().h(), wd = x.shape().w();
  i64 k = 0;
  if (w.shape().rank() == 4 && w.shape()[2] == 1 && w.shape()[3] == 1)
    k = w.shape()[0];
  else if (w.shape().rank() == 2)
    k = w.shape()[0];
  else
    throw ShapeError("conv1x1: weights must be (K,C,1,1) or (K,C), got " + w.shape().str());
  if (w.shape()[1] != c)
    throw ShapeError("conv1x1: input channels " + x.shape().str() +
                     " do not match weights " + w.shape().str());
  if (b.numel() != k)
    throw ShapeError("conv1x1: bias length mismatch");

  const i64 hw = h * wd;
  Tensor y = Tensor::zeros({n, k, h, wd});
  const auto& kt = kern::active();
  parallel_for(0, k, [&](i64 k0, i64 k1) {
    kt.conv1x1_fwd(x.data().data(), w.data().data(), b.data().data(),
                   y.mutable_data().data(), n, c, hw, k, k0, k1);
  });

  if (any_needs_grad({&x, &w, &b})) {
    Tensor xc = x, wc = w, bc = b;
    y.attach_node("conv1x1", {x, w, b}, [xc, wc, bc, n, c, hw, k](const Tensor& out) mutable {
      const float* gy = out.grad().data();
      const auto& kb = kern::active();
      if (xc.needs_grad()) {
        float* gx = xc.grad_accum().data();
        parallel_for(0, c, [&](i64 c0, i64 c1) {
          kb.conv1x1_bwd_input(gy, wc.data().data(), gx, n, c, hw, k, c0, c1);
        });
      }
      if (wc.needs_grad() || bc.needs_grad()) {
        float* gw = wc.grad_accum().data();
        float* gb = bc.needs_grad() ? bc.grad_accum().data() : nullptr;
        kb.conv1x1_bwd_wb(xc.data().data(), gy, gw, gb, n, c, hw, k, 0, k);
      }
    });
  }
  return y;
}

Tensor conv_transpose2d(const Tensor& x, const Tensor& w, const Tensor& b) {
  require_rank4(x, "conv_transpose2d input");
  if (w.shape().rank() != 4 || w.shape()[2] != 2 || w.shape()[3] != 2)
    throw ShapeError("conv_transpose2d: weights must be (C,K,2,2), got " + w.shape().str());
  const i64 n = x.shape().n(), c = x.shape().c(), h = x.shape().h(), wd = x.shape().w();
  if (w.shape()[0] != c)
    throw ShapeError("conv_transpose2d: input channels " + x.shape().str() +
                     " do not match weights " + w.shape().str());
  const i64 k = w.shape()[1];
  if (b.numel() != k)
    throw ShapeError("conv_transpose2d: bias length mismatch");

  Tensor y = Tensor::zeros({n, k, 2 * h, 2 * wd});
  const auto& kt = kern::active();
  parallel_for(0, k, [&](i64 k0, i64 k1) {
    kt.convt2x2_fwd(x.data().data(), w.data().data(), b.data().data(),
                    y.mutable_data().data(), n, c, h, wd, k, k0, k1);
  });

  if (any_needs_grad({&x, &w, &b})) {
    Tensor xc = x, wc = w, bc = b;
    y.attach_node("conv_transpose2d", {x, w, b},
                  [xc, wc, bc, n, c, h, wd, k](const Tensor& out) mutable {
      const float* gy = out.grad().data();
      const auto& kb = kern::active();
      if (xc.needs_grad()) {
        float* gx = xc.grad_accum().data();
        parallel_for(0, c, [&](i64 c0, i64 c1) {
          kb.convt2x2_bwd_input(gy, wc.data().data(), gx, n, c, h, wd, k, c0, c1);
        });
      }
      if (wc.needs_grad() || bc.needs_grad()) {
        float* gw = wc.grad_accum().data();
        float* gb = bc.needs_grad() ? bc.grad_accum().data() : nullptr;
        kb.convt2x2_bwd_wb(xc.data().data(), gy, gw, gb, n, c, h, wd, k, 0, k);
      }
    });
  }
  return y;
}

Tensor relu(const Tensor& x) {
  Tensor y = Tensor::zeros(x.shape());
  kern::active().relu_fwd(x.data().data(), y.mutable_data().data(),
                          static_cast<std::size_t>(x.numel()));
  if (flows(x)) {
    Tensor xc = x;
    y.attach_node("relu", {x}, [xc](const Tensor& out) mutable {
      kern::active().relu_bwd(xc.data().data(), out.grad().data(),
                              xc.grad_accum().data(),
                              static_cast<std::size_t>(xc.numel()));
    });
  }
  return y;
}

Tensor sigmoid(const Tensor& x) {
  Tensor y = Tensor::zeros(x.shape());
  kern::sigmoid_fwd(x.data().data(), y.mutable_data().data(),
                    static_cast<std::size_t>(x.numel()));
  if (flows(x)) {
    Tensor xc = x, yc = y;
    y.attach_node("sigmoid", {x}, [xc, yc](const Tensor& out) mutable {
      const float* gy = out.grad().data();
      const float* s = yc.data().data();
      float* gx = xc.grad_accum().data();
      const i64 n = xc.numel();
      for (i64 i = 0; i < n; ++i) gx[i] += gy[i] * (s[i] * (1.0f - s[i]));
    });
  }
  return y;
}

Tensor maxpool2x2(const Tensor& x) {
  require_rank4(x, "maxpool2x2");
  const i64 n = x.shape().n(), c = x.shape().c(), h = x.shape().h(), wd = x.shape().w();
  if (h % 2 != 0 || wd % 2 != 0)
    throw ShapeError("maxpool2x2: H and W must be even, got " + x.shape().str());
  Tensor y = Tensor::zeros({n, c, h / 2, wd / 2});
  auto argmax = std::make_shared<std::vector<u8>>(static_cast<std::size_t>(y.numel()));
  kern::maxpool2x2_fwd(x.data().data(), y.mutable_data().data(), argmax->data(), n, c, h, wd);
  if (flows(x)) {
    Tensor xc = x;
    y.attach_node("maxpool2x2", {x}, [xc, argmax, n, c, h, wd](const Tensor& out) mutable {
      kern::maxpool2x2_bwd(out.grad().data(), argmax->data(),
                           xc.grad_accum().data(), n, c, h, wd);
    });
  }
  return y;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  require_rank4(a, "concat_channels");
  require_rank4(b, "concat_channels");
  const i64 n = a.shape().n(), c1 = a.shape().c(), h = a.shape().h(), wd = a.shape().w();
  const i64 c2 = b.shape().c();
  if (b.shape().n() != n || b.shape().h() != h || b.shape().w() != wd)
    throw ShapeError("concat_channels: " + a.shape().str() + " vs " +
                     b.shape().str() + " disagree outside the channel axis");
  Tensor y = Tensor::zeros({n, c1 + c2, h, wd});
  const i64 hw = h * wd;
  float* yd = y.mutable_data().data();
  const float* ad = a.data().data();
  const float* bd = b.data().data();
  for (i64 ni = 0; ni < n; ++ni) {
    std::memcpy(yd + ni * (c1 + c2) * hw, ad + ni * c1 * hw,
                static_cast<std::size_t>(c1 * hw) * sizeof(float));
    std::memcpy(yd + (ni * (c1 + c2) + c1) * hw, bd + ni * c2 * hw,
                static_cast<std::size_t>(c2 * hw) * sizeof(float));
  }
  if (any_needs_grad({&a, &b})) {
    Tensor ac = a, bc = b;
    y.attach_node("concat_channels", {a, b},
                  [ac, bc, n, c1, c2, hw](const Tensor& out) mutable {
      const float* gy = out.grad().data();
      if (ac.needs_grad()) {
        float* ga = ac.grad_accum().data();
        for (i64 ni = 0; ni < n; ++ni)
          for (i64 p = 0; p < c1 * hw; ++p)
            ga[ni * c1 * hw + p] += gy[ni * (c1 + c2) * hw + p];
      }
      if (bc.needs_grad()) {
        float* gb = bc.grad_accum().data();
        for (i64 ni = 0; ni < n; ++ni)
          for (i64 p = 0; p < c2 * hw; ++p)
            gb[ni * c2 * hw + p] += gy[(ni * (c1 + c2) + c1) * hw + p];
      }
    });
  }
  return y;
}

BatchNormState BatchNormState::init(i64 channels, float momentum, float eps) {
  if (channels < 1) throw ValueError("BatchNormState: channels must be >= 1");
  if (momentum <= 0.0f || momentum >= 1.0f)
    throw ValueError("BatchNormState: momentum must lie in (0,1)");
  if (eps <= 0.0f) throw ValueError("BatchNormState: eps must be positive");
  BatchNormState st;
  st.gamma = Tensor::full({channels}, 1.0f).set_requires_grad(true);
  st.beta = Tensor::zeros({channels}).set_requires_grad(true);
  st.running_mean = Tensor::zeros({channels});
  st.running_var = Tensor::full({channels}, 1.0f);
  st.momentum = momentum;
  st.eps = eps;
  return st;
}

namespace {

Tensor batchnorm_affine(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                        const std::vector<float>& mean,
                        const std::vector<float>& invstd) {
  const i64 n = x.shape().n(), c = x.shape().c(), hw = x.shape().h() * x.shape().w();
  Tensor y = Tensor::zeros(x.shape());
  float* yd = y.mutable_data().data();
  const float* xd = x.data().data();
  const float* g = gamma.data().data();
  const float* be = beta.data().data();
  for (i64 ni = 0; ni < n; ++ni)
    for (i64 ci = 0; ci < c; ++ci) {
      const float* xp = xd + (ni * c + ci) * hw;
      float* yp = yd + (ni * c + ci) * hw;
      const float mu = mean[static_cast<std::size_t>(ci)];
      const float is = invstd[static_cast<std::size_t>(ci)];
      const float gc = g[ci], bc = be[ci];
      for (i64 p = 0; p < hw; ++p) yp[p] = gc * ((xp[p] - mu) * is) + bc;
    }

  if (flows(x) || flows(gamma) || flows(beta)) {
    Tensor xc = x, gc = gamma, bc = beta;
    // captures mean/invstd by value; the train overload adds the batch-stat
    // terms, this closure covers the frozen-statistics case
    y.attach_node("batchnorm2d_eval", {x, gamma, beta},
                  [xc, gc, bc, mean, invstd, n, c, hw](const Tensor& out) mutable {
      const float* gy = out.grad().data();
      const float* xd = xc.data().data();
      float* gx = xc.needs_grad() ? xc.grad_accum().data() : nullptr;
      float* gg = gc.needs_grad() ? gc.grad_accum().data() : nullptr;
      float* gb = bc.needs_grad() ? bc.grad_accum().data() : nullptr;
      for (i64 ci = 0; ci < c; ++ci) {
        const float mu = mean[static_cast<std::size_t>(ci)];
        const float is = invstd[static_cast<std::size_t>(ci)];
        const float gcv = gc.data()[static_cast<std::size_t>(ci)];
        double sum_gy = 0.0, sum_gy_xhat = 0.0;
        for (i64 ni = 0; ni < n; ++ni) {
          const i64 base = (ni * c + ci) * hw;
          for (i64 p = 0; p < hw; ++p) {
            const float xhat = (xd[base + p] - mu) * is;
            sum_gy += gy[base + p];
            sum_gy_xhat += static_cast<double>(gy[base + p]) * xhat;
            if (gx) gx[base + p] += gy[base + p] * gcv * is;
          }
        }
        if (gg) gg[ci] += static_cast<float>(sum_gy_xhat);
        if (gb) gb[ci] += static_cast<float>(sum_gy);
      }
    });
  }
  return y;
}

}  // namespace

Tensor batchnorm2d(const Tensor& x, const BatchNormState& st) {
  require_rank4(x, "batchnorm2d");
  const i64 c = x.shape().c();
  if (st.channels() != c)
    throw ShapeError("batchnorm2d: state has " + std::to_string(st.channels()) +
                     " channels, input " + x.shape().str());
  std::vector<float> mean(static_cast<std::size_t>(c)), invstd(static_cast<std::size_t>(c));
  for (i64 ci = 0; ci < c; ++ci) {
    mean[static_cast<std::size_t>(ci)] = st.running_mean.data()[static_cast<std::size_t>(ci)];
    const double rv = st.running_var.data()[static_cast<std::size_t>(ci)];
    invstd[static_cast<std::size_t>(ci)] =
        static_cast<float>(1.0 / std::sqrt(rv + static_cast<double>(st.eps)));
  }
  return batchnorm_affine(x, st.gamma, st.beta, mean, invstd);
}

Tensor batchnorm2d(const Tensor& x, BatchNormState& st, Mode mode) {
  if (mode == Mode::eval) return batchnorm2d(x, static_cast<const BatchNormState&>(st));
  require_rank4(x, "batchnorm2d");
  const i64 n = x.shape().n(), c = x.shape().c(), hw = x.shape().h() * x.shape().w();
  if (st.channels() != c)
    throw ShapeError("batchnorm2d: state has " + std::to_string(st.channels()) +
                     " channels, input " + x.shape().str());
  const i64 count = n * hw;
  if (count < 2)
    throw ValueError("batchnorm2d: train mode needs N*H*W >= 2 per channel "
                     "(degenerate batch)");

  std::vector<double> mu(static_cast<std::size_t>(c)), var(static_cast<std::size_t>(c));
  kern::channel_mean_var(x.data().data(), n, c, hw, mu.data(), var.data());

  std::vector<float> mean(static_cast<std::size_t>(c)), invstd(static_cast<std::size_t>(c));
  for (i64 ci = 0; ci < c; ++ci) {
    mean[static_cast<std::size_t>(ci)] = static_cast<float>(mu[static_cast<std::size_t>(ci)]);
    invstd[static_cast<std::size_t>(ci)] = static_cast<float>(
        1.0 / std::sqrt(var[static_cast<std::size_t>(ci)] + static_cast<double>(st.eps)));
  }

  // forward math shared with the eval path; the lineage record is replaced
  // below with the batch-statistics backward
  Tensor y = batchnorm_affine(x, st.gamma, st.beta, mean, invstd);

  {
    // running <- (1 - momentum) * running + momentum * batch
    auto rm = st.running_mean.mutable_data();
    auto rv = st.running_var.mutable_data();
    for (i64 ci = 0; ci < c; ++ci) {
      rm[static_cast<std::size_t>(ci)] =
          (1.0f - st.momentum) * rm[static_cast<std::size_t>(ci)] +
          st.momentum * static_cast<float>(mu[static_cast<std::size_t>(ci)]);
      rv[static_cast<std::size_t>(ci)] =
          (1.0f - st.momentum) * rv[static_cast<std::size_t>(ci)] +
          st.momentum * static_cast<float>(var[static_cast<std::size_t>(ci)]);
    }
  }

  if (flows(x) || flows(st.gamma) || flows(st.beta)) {
    Tensor xc = x, gc = st.gamma, bc = st.beta;
    y.attach_node("batchnorm2d_train", {x, st.gamma, st.beta},
                  [xc, gc, bc, mean, invstd, n, c, hw](const Tensor& out) mutable {
      // dx = gamma*invstd*(gy - mean(gy) - xhat * mean(gy*xhat))
      const float* gy = out.grad().data();
      const float* xd = xc.data().data();
      const double m = static_cast<double>(n) * static_cast<double>(hw);
      float* gx = xc.needs_grad() ? xc.grad_accum().data() : nullptr;
      float* gg = gc.needs_grad() ? gc.grad_accum().data() : nullptr;
      float* gb = bc.needs_grad() ? bc.grad_accum().data() : nullptr;
      for (i64 ci = 0; ci < c; ++ci) {
        const float muc = mean[static_cast<std::size_t>(ci)];
        const float is = invstd[static_cast<std::size_t>(ci)];
        double sum_gy = 0.0, sum_gy_xhat = 0.0;
        for (i64 ni = 0; ni < n; ++ni) {
          const i64 base = (ni * c + ci) * hw;
          for (i64 p = 0; p < hw; ++p) {
            const float xhat = (xd[base + p] - muc) * is;
            sum_gy += gy[base + p];
            sum_gy_xhat += static_cast<double>(gy[base + p]) * xhat;
          }
        }
        if (gg) gg[ci] += static_cast<float>(sum_gy_xhat);
        if (gb) gb[ci] += static_cast<float>(sum_gy);
        if (gx) {
          const float gcv = gc.data()[static_cast<std::size_t>(ci)];
          const float mean_gy = static_cast<float>(sum_gy / m);
          const float mean_gy_xhat = static_cast<float>(sum_gy_xhat / m);
          for (i64 ni = 0; ni < n; ++ni) {
            const i64 base = (ni * c + ci) * hw;
            for (i64 p = 0; p < hw; ++p) {
              const float xhat = (xd[base + p] - muc) * is;
              gx[base + p] += gcv * is * (gy[base + p] - mean_gy - xhat * mean_gy_xhat);
            }
          }
        }
      }
    });
  }
  return y;
}

Tensor dropout2d(const Tensor& x, float p, Mode mode, Rng& rng) {
  require_rank4(x, "dropout2d");
  if (p < 0.0f || p >= 1.0f)
    throw ValueError("dropout2d: p must lie in [0,1), got " + std::to_string(p));
  if (mode == Mode::eval || p == 0.0f) return x;

  const i64 n = x.shape().n(), c = x.shape().c(), hw = x.shape().h() * x.shape().w();
  auto factors = std::make_shared<std::vector<float>>(static_cast<std::size_t>(n * c));
  const float scale = 1.0f / (1.0f - p);
  for (auto& f : *factors) f = rng.uniform() < p ? 0.0f : scale;

  Tensor y = Tensor::zeros(x.shape());
  float* yd = y.mutable_data().data();
  const float* xd = x.data().data();
  for (i64 nc = 0; nc < n * c; ++nc) {
    const float f = (*factors)[static_cast<std::size_t>(nc)];
    for (i64 pidx = 0; pidx < hw; ++pidx) yd[nc * hw + pidx] = xd[nc * hw + pidx] * f;
  }
  if (flows(x)) {
    Tensor xc = x;
    y.attach_node("dropout2d", {x}, [xc, factors, n, c, hw](const Tensor& out) mutable {
      const float* gy = out.grad().data();
      float* gx = xc.grad_accum().data();
      for (i64 nc = 0; nc < n * c; ++nc) {
        const float f = (*factors)[static_cast<std::size_t>(nc)];
        for (i64 p = 0; p < hw; ++p) gx[nc * hw + p] += gy[nc * hw + p] * f;
      }
    });
  }
  return y;
}

Tensor sum(const Tensor& x) {
  const double total = kern::sum_acc(x.data().data(), static_cast<std::size_t>(x.numel()));
  Tensor y = Tensor::scalar(static_cast<float>(total));
  if (flows(x)) {
    Tensor xc = x;
    y.attach_node("sum", {x}, [xc](const Tensor& out) mutable {
      const float g = out.grad()[0];
      float* gx = xc.grad_accum().data();
      const i64 n = xc.numel();
      for (i64 i = 0; i < n; ++i) gx[i] += g;
    });
  }
  return y;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (!(a.shape() == b.shape()))
    throw ShapeError("add: shape mismatch " + a.shape().str() + " vs " + b.shape().str());
  Tensor y = Tensor::zeros(a.shape());
  float* yd = y.mutable_data().data();
  const float* ad = a.data().data();
  const float* bd = b.data().data();
  const i64 n = a.numel();
  for (i64 i = 0; i < n; ++i) yd[i] = ad[i] + bd[i];
  if (any_needs_grad({&a, &b})) {
    Tensor ac = a, bc = b;
    y.attach_node("add", {a, b}, [ac, bc](const Tensor& out) mutable {
      const float* gy = out.grad().data();
      const i64 n = ac.numel();
      if (ac.needs_grad()) {
        float* ga = ac.grad_accum().data();
        for (i64 i = 0; i < n; ++i) ga[i] += gy[i];
      }
      if (bc.needs_grad()) {
        float* gb = bc.grad_accum().data();
        for (i64 i = 0; i < n; ++i) gb[i] += gy[i];
      }
    });
  }
  return y;
}

}  // namespace fvk::ops
