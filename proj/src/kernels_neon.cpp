#include "fvk/kernels/dispatch.hpp"
#include "fvk/kernels/ref.hpp"

// NEON variants, 4-wide mirrors of the AVX2 kernels. vmulq/vaddq are kept
// separate (vfmaq would fuse the rounding and break bitwise equality with
// the scalar path).

#if defined(__aarch64__) && defined(__ARM_NEON)

#include <arm_neon.h>

namespace fvk::kern {
namespace {

void conv2d_fwd_neon(const float* x, const float* w, const float* b, float* y,
                     i64 n, i64 c, i64 h, i64 wd, i64 k, i64 k0, i64 k1) {
  const i64 vec_end = wd - 5;  // strip [j, j+4) keeps taps j-1..j+4 in-row
  for (i64 ni = 0; ni < n; ++ni) {
    const float* xs = x + ni * c * h * wd;
    for (i64 kk = k0; kk < k1; ++kk) {
      const float* wk = w + kk * c * 9;
      float* ys = y + (ni * k + kk) * h * wd;
      for (i64 i = 0; i < h; ++i) {
        float* yr = ys + i * wd;
        i64 j = 0;
        if (wd >= 6) {
          yr[0] = conv2d_at(xs, wk, b[kk], c, h, wd, i, 0);
          for (j = 1; j <= vec_end; j += 4) {
            float32x4_t acc = vdupq_n_f32(b[kk]);
            for (i64 ci = 0; ci < c; ++ci) {
              const float* xp = xs + ci * h * wd;
              const float* wp = wk + ci * 9;
              for (i64 m = 0; m < 3; ++m) {
                const i64 si = i + m - 1;
                if (si < 0 || si >= h) continue;
                const float* xr = xp + si * wd + j - 1;
                for (i64 nn = 0; nn < 3; ++nn) {
                  const float32x4_t xv = vld1q_f32(xr + nn);
                  const float32x4_t wv = vdupq_n_f32(wp[m * 3 + nn]);
                  acc = vaddq_f32(acc, vmulq_f32(xv, wv));
                }
              }
            }
            vst1q_f32(yr + j, acc);
          }
        }
        for (; j < wd; ++j) yr[j] = conv2d_at(xs, wk, b[kk], c, h, wd, i, j);
      }
    }
  }
}

void conv2d_bwd_input_neon(const float* gy, const float* w, float* gx, i64 n,
                           i64 c, i64 h, i64 wd, i64 k, i64 c0, i64 c1) {
  const i64 vec_end = wd - 5;
  for (i64 ni = 0; ni < n; ++ni) {
    const float* gs = gy + ni * k * h * wd;
    for (i64 ci = c0; ci < c1; ++ci) {
      float* xs = gx + (ni * c + ci) * h * wd;
      for (i64 si = 0; si < h; ++si) {
        float* xr = xs + si * wd;
        i64 sj = 0;
        if (wd >= 6) {
          xr[0] += conv2d_bwd_input_at(gs, w, k, c, h, wd, ci, si, 0);
          for (sj = 1; sj <= vec_end; sj += 4) {
            float32x4_t acc = vdupq_n_f32(0.0f);
            for (i64 kk = 0; kk < k; ++kk) {
              const float* gp = gs + kk * h * wd;
              const float* wp = w + (kk * c + ci) * 9;
              for (i64 m = 0; m < 3; ++m) {
                const i64 i = si - m + 1;
                if (i < 0 || i >= h) continue;
                const float* gr = gp + i * wd + sj + 1;
                for (i64 nn = 0; nn < 3; ++nn) {
                  const float32x4_t gv = vld1q_f32(gr - nn);
                  const float32x4_t wv = vdupq_n_f32(wp[m * 3 + nn]);
                  acc = vaddq_f32(acc, vmulq_f32(gv, wv));
                }
              }
            }
            vst1q_f32(xr + sj, vaddq_f32(vld1q_f32(xr + sj), acc));
          }
        }
        for (; sj < wd; ++sj)
          xr[sj] += conv2d_bwd_input_at(gs, w, k, c, h, wd, ci, si, sj);
      }
    }
  }
}

void conv1x1_fwd_neon(const float* x, const float* w, const float* b, float* y,
                      i64 n, i64 c, i64 hw, i64 k, i64 k0, i64 k1) {
  for (i64 ni = 0; ni < n; ++ni) {
    const float* xs = x + ni * c * hw;
    for (i64 kk = k0; kk < k1; ++kk) {
      const float* wk = w + kk * c;
      float* ys = y + (ni * k + kk) * hw;
      i64 p = 0;
      for (; p + 4 <= hw; p += 4) {
        float32x4_t acc = vdupq_n_f32(b[kk]);
        for (i64 ci = 0; ci < c; ++ci) {
          const float32x4_t xv = vld1q_f32(xs + ci * hw + p);
          acc = vaddq_f32(acc, vmulq_f32(xv, vdupq_n_f32(wk[ci])));
        }
        vst1q_f32(ys + p, acc);
      }
      for (; p < hw; ++p) {
        float acc = b[kk];
        for (i64 ci = 0; ci < c; ++ci) acc += xs[ci * hw + p] * wk[ci];
        ys[p] = acc;
      }
    }
  }
}

void relu_fwd_neon(const float* x, float* y, std::size_t n) {
  const float32x4_t zero = vdupq_n_f32(0.0f);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) vst1q_f32(y + i, vmaxq_f32(vld1q_f32(x + i), zero));
  for (; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_bwd_neon(const float* x, const float* gy, float* gx, std::size_t n) {
  const float32x4_t zero = vdupq_n_f32(0.0f);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const uint32x4_t mask = vcgtq_f32(vld1q_f32(x + i), zero);
    const float32x4_t add = vreinterpretq_f32_u32(
        vandq_u32(mask, vreinterpretq_u32_f32(vld1q_f32(gy + i))));
    vst1q_f32(gx + i, vaddq_f32(vld1q_f32(gx + i), add));
  }
  for (; i < n; ++i)
    if (x[i] > 0.0f) gx[i] += gy[i];
}

void adam_update_neon(float* p, const float* g, float* m, float* v,
                      std::size_t n, float lr, float beta1, float beta2,
                      float eps, float bc1, float bc2) {
  const float omb1 = 1.0f - beta1;
  const float omb2 = 1.0f - beta2;
  const float32x4_t vb1 = vdupq_n_f32(beta1), vomb1 = vdupq_n_f32(omb1);
  const float32x4_t vb2 = vdupq_n_f32(beta2), vomb2 = vdupq_n_f32(omb2);
  const float32x4_t vbc1 = vdupq_n_f32(bc1), vbc2 = vdupq_n_f32(bc2);
  const float32x4_t vlr = vdupq_n_f32(lr), veps = vdupq_n_f32(eps);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float32x4_t gv = vld1q_f32(g + i);
    const float32x4_t mi =
        vaddq_f32(vmulq_f32(vb1, vld1q_f32(m + i)), vmulq_f32(vomb1, gv));
    const float32x4_t vi = vaddq_f32(vmulq_f32(vb2, vld1q_f32(v + i)),
                                     vmulq_f32(vomb2, vmulq_f32(gv, gv)));
    vst1q_f32(m + i, mi);
    vst1q_f32(v + i, vi);
    const float32x4_t mhat = vdivq_f32(mi, vbc1);
    const float32x4_t vhat = vdivq_f32(vi, vbc2);
    const float32x4_t den = vaddq_f32(vsqrtq_f32(vhat), veps);
    const float32x4_t upd = vdivq_f32(vmulq_f32(vlr, mhat), den);
    vst1q_f32(p + i, vsubq_f32(vld1q_f32(p + i), upd));
  }
  if (i < n) adam_update(p + i, g + i, m + i, v + i, n - i, lr, beta1, beta2, eps, bc1, bc2);
}

const Kernels neon_impl = {
    "neon",
    &conv2d_fwd_neon,
    &conv2d_bwd_input_neon,
    &conv2d_bwd_wb<float>,
    &conv1x1_fwd_neon,
    &conv1x1_bwd_input<float>,
    &conv1x1_bwd_wb<float>,
    &convt2x2_fwd<float>,
    &convt2x2_bwd_input<float>,
    &convt2x2_bwd_wb<float>,
    &relu_fwd_neon,
    &relu_bwd_neon,
    &adam_update_neon,
};

}  // namespace

const Kernels* neon_table() { return &neon_impl; }

}  // namespace fvk::kern

#else  // not aarch64 NEON

namespace fvk::kern {
const Kernels* neon_table() { return nullptr; }
}  // namespace fvk::kern

#endif
