#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "fvk/kernels/dispatch.hpp"
#include "fvk/kernels/ref.hpp"
#include "fvk/rng.hpp"

// Naive-loop oracles, written against the op contracts and kept independent
// of include/fvk/kernels. The convolution oracles build an explicitly
// zero-padded copy of the input and accumulate every tap, including the pad
// zeros, in bias, c, kernel-row, kernel-column order.

using fvk::i64;
using fvk::Rng;
namespace kern = fvk::kern;

namespace {

std::vector<float> random_vec(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.uniform(lo, hi));
  return v;
}

std::vector<float> oracle_conv2d(const std::vector<float>& x,
                                 const std::vector<float>& w,
                                 const std::vector<float>& b, i64 n, i64 c,
                                 i64 h, i64 wd, i64 k) {
  const i64 ph = h + 2, pw = wd + 2;
  std::vector<float> pad(static_cast<std::size_t>(n * c * ph * pw), 0.0f);
  for (i64 ni = 0; ni < n; ++ni)
    for (i64 ci = 0; ci < c; ++ci)
      for (i64 i = 0; i < h; ++i)
        for (i64 j = 0; j < wd; ++j)
          pad[((ni * c + ci) * ph + i + 1) * pw + j + 1] =
              x[((ni * c + ci) * h + i) * wd + j];
  std::vector<float> y(static_cast<std::size_t>(n * k * h * wd));
  for (i64 ni = 0; ni < n; ++ni)
    for (i64 kk = 0; kk < k; ++kk)
      for (i64 i = 0; i < h; ++i)
        for (i64 j = 0; j < wd; ++j) {
          float acc = b[kk];
          for (i64 ci = 0; ci < c; ++ci)
            for (i64 m = 0; m < 3; ++m)
              for (i64 nn = 0; nn < 3; ++nn)
                acc += pad[((ni * c + ci) * ph + i + m) * pw + j + nn] *
                       w[((kk * c + ci) * 3 + m) * 3 + nn];
          y[((ni * k + kk) * h + i) * wd + j] = acc;
        }
  return y;
}

std::vector<float> oracle_convt2x2(const std::vector<float>& x,
                                   const std::vector<float>& w,
                                   const std::vector<float>& b, i64 n, i64 c,
                                   i64 h, i64 wd, i64 k) {
  // scatter formulation: every input element sprays through the 2x2 kernel
  const i64 oh = 2 * h, ow = 2 * wd;
  std::vector<float> y(static_cast<std::size_t>(n * k * oh * ow));
  for (i64 ni = 0; ni < n; ++ni)
    for (i64 kk = 0; kk < k; ++kk)
      for (i64 p = 0; p < oh * ow; ++p)
        y[(ni * k + kk) * oh * ow + p] = b[kk];
  for (i64 ni = 0; ni < n; ++ni)
    for (i64 ci = 0; ci < c; ++ci)
      for (i64 i = 0; i < h; ++i)
        for (i64 j = 0; j < wd; ++j)
          for (i64 kk = 0; kk < k; ++kk)
            for (i64 m = 0; m < 2; ++m)
              for (i64 nn = 0; nn < 2; ++nn)
                y[((ni * k + kk) * oh + 2 * i + m) * ow + 2 * j + nn] +=
                    x[((ni * c + ci) * h + i) * wd + j] *
                    w[((ci * k + kk) * 2 + m) * 2 + nn];
  return y;
}

std::vector<float> oracle_maxpool(const std::vector<float>& x, i64 n, i64 c,
                                  i64 h, i64 wd) {
  const i64 oh = h / 2, ow = wd / 2;
  std::vector<float> y(static_cast<std::size_t>(n * c * oh * ow));
  for (i64 nc = 0; nc < n * c; ++nc)
    for (i64 i = 0; i < oh; ++i)
      for (i64 j = 0; j < ow; ++j) {
        float best = -std::numeric_limits<float>::infinity();
        for (i64 m = 0; m < 2; ++m)
          for (i64 nn = 0; nn < 2; ++nn)
            best = std::max(best, x[(nc * h + 2 * i + m) * wd + 2 * j + nn]);
        y[(nc * oh + i) * ow + j] = best;
      }
  return y;
}

struct ConvCase {
  i64 n, c, h, w, k;
};

const ConvCase kConvCases[] = {
    {1, 1, 1, 1, 1}, {1, 1, 3, 3, 1},  {1, 2, 4, 5, 3},  {2, 3, 8, 8, 2},
    {1, 4, 7, 13, 2}, {2, 4, 16, 16, 4}, {1, 2, 5, 24, 2}, {1, 1, 6, 32, 1},
};

}  // namespace

TEST_CASE("conv2d matches the zero-padded naive oracle exactly") {
  Rng rng(101);
  for (const auto& cs : kConvCases) {
    for (int rep = 0; rep < 13; ++rep) {
      auto x = random_vec(rng, static_cast<std::size_t>(cs.n * cs.c * cs.h * cs.w));
      auto w = random_vec(rng, static_cast<std::size_t>(cs.k * cs.c * 9));
      auto b = random_vec(rng, static_cast<std::size_t>(cs.k));
      auto expect = oracle_conv2d(x, w, b, cs.n, cs.c, cs.h, cs.w, cs.k);
      std::vector<float> y(expect.size(), -999.0f);
      kern::scalar_table().conv2d_fwd(x.data(), w.data(), b.data(), y.data(),
                                      cs.n, cs.c, cs.h, cs.w, cs.k, 0, cs.k);
      for (std::size_t i = 0; i < y.size(); ++i) REQUIRE(y[i] == expect[i]);
    }
  }
}

TEST_CASE("conv_transpose2x2 matches the scatter oracle exactly") {
  Rng rng(202);
  for (const auto& cs : kConvCases) {
    for (int rep = 0; rep < 13; ++rep) {
      auto x = random_vec(rng, static_cast<std::size_t>(cs.n * cs.c * cs.h * cs.w));
      auto w = random_vec(rng, static_cast<std::size_t>(cs.c * cs.k * 4));
      auto b = random_vec(rng, static_cast<std::size_t>(cs.k));
      auto expect = oracle_convt2x2(x, w, b, cs.n, cs.c, cs.h, cs.w, cs.k);
      std::vector<float> y(expect.size(), -999.0f);
      kern::scalar_table().convt2x2_fwd(x.data(), w.data(), b.data(), y.data(),
                                        cs.n, cs.c, cs.h, cs.w, cs.k, 0, cs.k);
      // one tap per (output, input-channel): gather and scatter agree exactly
      // only up to the order bias enters; both add bias first, so exact
      for (std::size_t i = 0; i < y.size(); ++i) REQUIRE(y[i] == expect[i]);
    }
  }
}

TEST_CASE("maxpool2x2 matches the block-scan oracle exactly") {
  Rng rng(303);
  for (const auto& cs : kConvCases) {
    const i64 h = (cs.h / 2) * 2 + 2, w = (cs.w / 2) * 2 + 2;
    for (int rep = 0; rep < 13; ++rep) {
      auto x = random_vec(rng, static_cast<std::size_t>(cs.n * cs.c * h * w));
      auto expect = oracle_maxpool(x, cs.n, cs.c, h, w);
      std::vector<float> y(expect.size(), -999.0f);
      std::vector<fvk::u8> arg(expect.size());
      fvk::kern::maxpool2x2_fwd(x.data(), y.data(), arg.data(), cs.n, cs.c, h, w);
      for (std::size_t i = 0; i < y.size(); ++i) REQUIRE(y[i] == expect[i]);
    }
  }
}

TEST_CASE("maxpool tie routes gradient to the first block element only") {
  const std::vector<float> x = {3.0f, 3.0f, 3.0f, 3.0f};
  std::vector<float> y(1);
  std::vector<fvk::u8> arg(1);
  fvk::kern::maxpool2x2_fwd(x.data(), y.data(), arg.data(), 1, 1, 2, 2);
  CHECK(y[0] == 3.0f);
  CHECK(arg[0] == 0);
  std::vector<float> gx(4, 0.0f);
  const std::vector<float> gy = {1.0f};
  fvk::kern::maxpool2x2_bwd(gy.data(), arg.data(), gx.data(), 1, 1, 2, 2);
  CHECK(gx[0] == 1.0f);
  CHECK(gx[1] == 0.0f);
  CHECK(gx[2] == 0.0f);
  CHECK(gx[3] == 0.0f);
}

// ---- scalar vs SIMD equivalence --------------------------------------------

namespace {

template <class F>
void for_each_simd_table(F&& f) {
  for (auto b : kern::supported_backends()) {
    if (b == kern::Backend::scalar) continue;
    const kern::Kernels* t = b == kern::Backend::avx2 ? kern::avx2_table()
                                                      : kern::neon_table();
    REQUIRE(t != nullptr);
    f(*t);
  }
}

}  // namespace

TEST_CASE("SIMD conv kernels are bitwise-equal to scalar") {
  Rng rng(404);
  for_each_simd_table([&](const kern::Kernels& t) {
    for (const auto& cs : kConvCases) {
      auto x = random_vec(rng, static_cast<std::size_t>(cs.n * cs.c * cs.h * cs.w));
      auto w3 = random_vec(rng, static_cast<std::size_t>(cs.k * cs.c * 9));
      auto w1 = random_vec(rng, static_cast<std::size_t>(cs.k * cs.c));
      auto wt = random_vec(rng, static_cast<std::size_t>(cs.c * cs.k * 4));
      auto b = random_vec(rng, static_cast<std::size_t>(cs.k));
      const std::size_t out_sz = static_cast<std::size_t>(cs.n * cs.k * cs.h * cs.w);

      std::vector<float> ys(out_sz), yv(out_sz);
      kern::scalar_table().conv2d_fwd(x.data(), w3.data(), b.data(), ys.data(),
                                      cs.n, cs.c, cs.h, cs.w, cs.k, 0, cs.k);
      t.conv2d_fwd(x.data(), w3.data(), b.data(), yv.data(), cs.n, cs.c, cs.h,
                   cs.w, cs.k, 0, cs.k);
      CHECK(ys == yv);

      kern::scalar_table().conv1x1_fwd(x.data(), w1.data(), b.data(), ys.data(),
                                       cs.n, cs.c, cs.h * cs.w, cs.k, 0, cs.k);
      t.conv1x1_fwd(x.data(), w1.data(), b.data(), yv.data(), cs.n, cs.c,
                    cs.h * cs.w, cs.k, 0, cs.k);
      CHECK(ys == yv);

      const std::size_t tsz = static_cast<std::size_t>(cs.n * cs.k * 4 * cs.h * cs.w);
      std::vector<float> ts(tsz), tv(tsz);
      kern::scalar_table().convt2x2_fwd(x.data(), wt.data(), b.data(), ts.data(),
                                        cs.n, cs.c, cs.h, cs.w, cs.k, 0, cs.k);
      t.convt2x2_fwd(x.data(), wt.data(), b.data(), tv.data(), cs.n, cs.c, cs.h,
                     cs.w, cs.k, 0, cs.k);
      CHECK(ts == tv);

      // backward-input kernels accumulate; seed both with the same noise
      auto gy = random_vec(rng, out_sz);
      auto seed = random_vec(rng, x.size());
      std::vector<float> gxs = seed, gxv = seed;
      kern::scalar_table().conv2d_bwd_input(gy.data(), w3.data(), gxs.data(),
                                            cs.n, cs.c, cs.h, cs.w, cs.k, 0, cs.c);
      t.conv2d_bwd_input(gy.data(), w3.data(), gxv.data(), cs.n, cs.c, cs.h,
                         cs.w, cs.k, 0, cs.c);
      CHECK(gxs == gxv);

      gxs = seed;
      gxv = seed;
      kern::scalar_table().conv1x1_bwd_input(gy.data(), w1.data(), gxs.data(),
                                             cs.n, cs.c, cs.h * cs.w, cs.k, 0, cs.c);
      t.conv1x1_bwd_input(gy.data(), w1.data(), gxv.data(), cs.n, cs.c,
                          cs.h * cs.w, cs.k, 0, cs.c);
      CHECK(gxs == gxv);

      auto gyt = random_vec(rng, tsz);
      gxs = seed;
      gxv = seed;
      kern::scalar_table().convt2x2_bwd_input(gyt.data(), wt.data(), gxs.data(),
                                              cs.n, cs.c, cs.h, cs.w, cs.k, 0, cs.c);
      t.convt2x2_bwd_input(gyt.data(), wt.data(), gxv.data(), cs.n, cs.c, cs.h,
                           cs.w, cs.k, 0, cs.c);
      CHECK(gxs == gxv);
    }
  });
}

TEST_CASE("SIMD weight-gradient kernels agree with scalar to 1e-12") {
  Rng rng(505);
  for_each_simd_table([&](const kern::Kernels& t) {
    for (const auto& cs : kConvCases) {
      auto x = random_vec(rng, static_cast<std::size_t>(cs.n * cs.c * cs.h * cs.w));
      auto gy = random_vec(rng, static_cast<std::size_t>(cs.n * cs.k * cs.h * cs.w));
      std::vector<float> gws(static_cast<std::size_t>(cs.k * cs.c * 9), 0.0f);
      std::vector<float> gwv = gws;
      std::vector<float> gbs(static_cast<std::size_t>(cs.k), 0.0f), gbv = gbs;
      kern::scalar_table().conv2d_bwd_wb(x.data(), gy.data(), gws.data(),
                                         gbs.data(), cs.n, cs.c, cs.h, cs.w,
                                         cs.k, 0, cs.k);
      t.conv2d_bwd_wb(x.data(), gy.data(), gwv.data(), gbv.data(), cs.n, cs.c,
                      cs.h, cs.w, cs.k, 0, cs.k);
      for (std::size_t i = 0; i < gws.size(); ++i)
        CHECK(std::abs(gws[i] - gwv[i]) <=
              1e-12 * std::max(1.0f, std::abs(gws[i])));
      CHECK(gbs == gbv);

      std::vector<float> g1s(static_cast<std::size_t>(cs.k * cs.c), 0.0f), g1v = g1s;
      std::fill(gbs.begin(), gbs.end(), 0.0f);
      std::fill(gbv.begin(), gbv.end(), 0.0f);
      kern::scalar_table().conv1x1_bwd_wb(x.data(), gy.data(), g1s.data(),
                                          gbs.data(), cs.n, cs.c, cs.h * cs.w,
                                          cs.k, 0, cs.k);
      t.conv1x1_bwd_wb(x.data(), gy.data(), g1v.data(), gbv.data(), cs.n, cs.c,
                       cs.h * cs.w, cs.k, 0, cs.k);
      for (std::size_t i = 0; i < g1s.size(); ++i)
        CHECK(std::abs(g1s[i] - g1v[i]) <=
              1e-12 * std::max(1.0f, std::abs(g1s[i])));
      CHECK(gbs == gbv);
    }
  });
}

TEST_CASE("SIMD relu and adam are bitwise-equal to scalar") {
  Rng rng(606);
  for_each_simd_table([&](const kern::Kernels& t) {
    for (std::size_t n : {1u, 7u, 8u, 9u, 64u, 1000u, 1027u}) {
      auto x = random_vec(rng, n);
      std::vector<float> ys(n), yv(n);
      kern::scalar_table().relu_fwd(x.data(), ys.data(), n);
      t.relu_fwd(x.data(), yv.data(), n);
      CHECK(ys == yv);

      auto gy = random_vec(rng, n);
      auto seed = random_vec(rng, n);
      std::vector<float> gs = seed, gv = seed;
      kern::scalar_table().relu_bwd(x.data(), gy.data(), gs.data(), n);
      t.relu_bwd(x.data(), gy.data(), gv.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(gs[i] == gv[i]);

      auto p0 = random_vec(rng, n);
      auto g = random_vec(rng, n);
      auto m0 = random_vec(rng, n, 0.0, 0.5);
      auto v0 = random_vec(rng, n, 0.0, 0.5);
      std::vector<float> ps = p0, pv = p0, ms = m0, mv = m0, vs = v0, vv = v0;
      const float lr = 1e-3f, b1 = 0.9f, b2 = 0.999f, eps = 1e-8f;
      const float bc1 = 1.0f - 0.9f, bc2 = 1.0f - 0.999f;
      kern::scalar_table().adam_update(ps.data(), g.data(), ms.data(), vs.data(),
                                       n, lr, b1, b2, eps, bc1, bc2);
      t.adam_update(pv.data(), g.data(), mv.data(), vv.data(), n, lr, b1, b2,
                    eps, bc1, bc2);
      CHECK(ps == pv);
      CHECK(ms == mv);
      CHECK(vs == vv);
    }
  });
}

TEST_CASE("channel-range splits compose to the full kernel result") {
  // parallel mode chunks the output-channel axis; any split must reproduce
  // the single-call result bitwise
  Rng rng(707);
  const i64 n = 2, c = 3, h = 6, w = 10, k = 4;
  auto x = random_vec(rng, static_cast<std::size_t>(n * c * h * w));
  auto wt = random_vec(rng, static_cast<std::size_t>(k * c * 9));
  auto b = random_vec(rng, static_cast<std::size_t>(k));
  std::vector<float> whole(static_cast<std::size_t>(n * k * h * w));
  std::vector<float> split(whole.size());
  const auto& kt = kern::active();
  kt.conv2d_fwd(x.data(), wt.data(), b.data(), whole.data(), n, c, h, w, k, 0, k);
  kt.conv2d_fwd(x.data(), wt.data(), b.data(), split.data(), n, c, h, w, k, 0, 1);
  kt.conv2d_fwd(x.data(), wt.data(), b.data(), split.data(), n, c, h, w, k, 1, 3);
  kt.conv2d_fwd(x.data(), wt.data(), b.data(), split.data(), n, c, h, w, k, 3, 4);
  CHECK(whole == split);
}
