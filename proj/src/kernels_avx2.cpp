#include "fvk/kernels/dispatch.hpp"
#include "fvk/kernels/ref.hpp"

// AVX2 variants of the hot kernels. Vectorization is across output elements:
// each lane accumulates its own output in the same term order as the scalar
// kernel, with separate mul and add (no FMA), so interior lanes are
// bitwise-identical to scalar. Border columns fall back to the shared scalar
// helpers. The *_bwd_wb reductions widen products to double and reassociate
// across lanes only.

#if defined(__AVX2__)

#include <immintrin.h>

namespace fvk::kern {
namespace {

inline double hsum_pd(__m256d v) {
  // fixed order: (d0 + d1) + (d2 + d3)
  alignas(32) double d[4];
  _mm256_storeu_pd(d, v);
  return (d[0] + d[1]) + (d[2] + d[3]);
}

void conv2d_fwd_avx2(const float* x, const float* w, const float* b, float* y,
                     i64 n, i64 c, i64 h, i64 wd, i64 k, i64 k0, i64 k1) {
  const i64 vec_end = wd - 9;  // strip [j, j+8) keeps taps j-1..j+8 in-row
  for (i64 ni = 0; ni < n; ++ni) {
    const float* xs = x + ni * c * h * wd;
    for (i64 kk = k0; kk < k1; ++kk) {
      const float* wk = w + kk * c * 9;
      float* ys = y + (ni * k + kk) * h * wd;
      for (i64 i = 0; i < h; ++i) {
        float* yr = ys + i * wd;
        i64 j = 0;
        if (wd >= 10) {
          yr[0] = conv2d_at(xs, wk, b[kk], c, h, wd, i, 0);
          for (j = 1; j <= vec_end; j += 8) {
            __m256 acc = _mm256_set1_ps(b[kk]);
            for (i64 ci = 0; ci < c; ++ci) {
              const float* xp = xs + ci * h * wd;
              const float* wp = wk + ci * 9;
              for (i64 m = 0; m < 3; ++m) {
                const i64 si = i + m - 1;
                if (si < 0 || si >= h) continue;
                const float* xr = xp + si * wd + j - 1;
                for (i64 nn = 0; nn < 3; ++nn) {
                  const __m256 xv = _mm256_loadu_ps(xr + nn);
                  const __m256 wv = _mm256_set1_ps(wp[m * 3 + nn]);
                  acc = _mm256_add_ps(acc, _mm256_mul_ps(xv, wv));
                }
              }
            }
            _mm256_storeu_ps(yr + j, acc);
          }
        }
        for (; j < wd; ++j) yr[j] = conv2d_at(xs, wk, b[kk], c, h, wd, i, j);
      }
    }
  }
}

void conv2d_bwd_input_avx2(const float* gy, const float* w, float* gx, i64 n,
                           i64 c, i64 h, i64 wd, i64 k, i64 c0, i64 c1) {
  const i64 vec_end = wd - 9;
  for (i64 ni = 0; ni < n; ++ni) {
    const float* gs = gy + ni * k * h * wd;
    for (i64 ci = c0; ci < c1; ++ci) {
      float* xs = gx + (ni * c + ci) * h * wd;
      for (i64 si = 0; si < h; ++si) {
        float* xr = xs + si * wd;
        i64 sj = 0;
        if (wd >= 10) {
          xr[0] += conv2d_bwd_input_at(gs, w, k, c, h, wd, ci, si, 0);
          for (sj = 1; sj <= vec_end; sj += 8) {
            __m256 acc = _mm256_setzero_ps();
            for (i64 kk = 0; kk < k; ++kk) {
              const float* gp = gs + kk * h * wd;
              const float* wp = w + (kk * c + ci) * 9;
              for (i64 m = 0; m < 3; ++m) {
                const i64 i = si - m + 1;
                if (i < 0 || i >= h) continue;
                const float* gr = gp + i * wd + sj + 1;
                for (i64 nn = 0; nn < 3; ++nn) {
                  const __m256 gv = _mm256_loadu_ps(gr - nn);
                  const __m256 wv = _mm256_set1_ps(wp[m * 3 + nn]);
                  acc = _mm256_add_ps(acc, _mm256_mul_ps(gv, wv));
                }
              }
            }
            const __m256 prev = _mm256_loadu_ps(xr + sj);
            _mm256_storeu_ps(xr + sj, _mm256_add_ps(prev, acc));
          }
        }
        for (; sj < wd; ++sj)
          xr[sj] += conv2d_bwd_input_at(gs, w, k, c, h, wd, ci, si, sj);
      }
    }
  }
}

void conv2d_bwd_wb_avx2(const float* x, const float* gy, float* gw, float* gb,
                        i64 n, i64 c, i64 h, i64 wd, i64 k, i64 k0, i64 k1) {
  for (i64 kk = k0; kk < k1; ++kk) {
    for (i64 ci = 0; ci < c; ++ci) {
      for (i64 m = 0; m < 3; ++m) {
        for (i64 nn = 0; nn < 3; ++nn) {
          __m256d acc_lo = _mm256_setzero_pd();
          __m256d acc_hi = _mm256_setzero_pd();
          double tail = 0.0;
          for (i64 ni = 0; ni < n; ++ni) {
            const float* gp = gy + (ni * k + kk) * h * wd;
            const float* xp = x + (ni * c + ci) * h * wd;
            const i64 ilo = std::max<i64>(0, 1 - m);
            const i64 ihi = std::min<i64>(h, h + 1 - m);
            const i64 jlo = std::max<i64>(0, 1 - nn);
            const i64 jhi = std::min<i64>(wd, wd + 1 - nn);
            for (i64 i = ilo; i < ihi; ++i) {
              const float* gr = gp + i * wd;
              const float* xr = xp + (i + m - 1) * wd + (nn - 1);
              i64 j = jlo;
              for (; j + 8 <= jhi; j += 8) {
                const __m256 gv = _mm256_loadu_ps(gr + j);
                const __m256 xv = _mm256_loadu_ps(xr + j);
                const __m256d g_lo = _mm256_cvtps_pd(_mm256_castps256_ps128(gv));
                const __m256d g_hi = _mm256_cvtps_pd(_mm256_extractf128_ps(gv, 1));
                const __m256d x_lo = _mm256_cvtps_pd(_mm256_castps256_ps128(xv));
                const __m256d x_hi = _mm256_cvtps_pd(_mm256_extractf128_ps(xv, 1));
                acc_lo = _mm256_add_pd(acc_lo, _mm256_mul_pd(g_lo, x_lo));
                acc_hi = _mm256_add_pd(acc_hi, _mm256_mul_pd(g_hi, x_hi));
              }
              for (; j < jhi; ++j)
                tail += static_cast<double>(gr[j]) * static_cast<double>(xr[j]);
            }
          }
          const double total = hsum_pd(acc_lo) + hsum_pd(acc_hi) + tail;
          gw[((kk * c + ci) * 3 + m) * 3 + nn] += static_cast<float>(total);
        }
      }
    }
    if (gb) {
      double acc = 0.0;
      for (i64 ni = 0; ni < n; ++ni) {
        const float* gp = gy + (ni * k + kk) * h * wd;
        acc += sum_acc(gp, static_cast<std::size_t>(h * wd));
      }
      gb[kk] += static_cast<float>(acc);
    }
  }
}

void conv1x1_fwd_avx2(const float* x, const float* w, const float* b, float* y,
                      i64 n, i64 c, i64 hw, i64 k, i64 k0, i64 k1) {
  for (i64 ni = 0; ni < n; ++ni) {
    const float* xs = x + ni * c * hw;
    for (i64 kk = k0; kk < k1; ++kk) {
      const float* wk = w + kk * c;
      float* ys = y + (ni * k + kk) * hw;
      i64 p = 0;
      for (; p + 8 <= hw; p += 8) {
        __m256 acc = _mm256_set1_ps(b[kk]);
        for (i64 ci = 0; ci < c; ++ci) {
          const __m256 xv = _mm256_loadu_ps(xs + ci * hw + p);
          acc = _mm256_add_ps(acc, _mm256_mul_ps(xv, _mm256_set1_ps(wk[ci])));
        }
        _mm256_storeu_ps(ys + p, acc);
      }
      for (; p < hw; ++p) {
        float acc = b[kk];
        for (i64 ci = 0; ci < c; ++ci) acc += xs[ci * hw + p] * wk[ci];
        ys[p] = acc;
      }
    }
  }
}

void conv1x1_bwd_input_avx2(const float* gy, const float* w, float* gx, i64 n,
                            i64 c, i64 hw, i64 k, i64 c0, i64 c1) {
  for (i64 ni = 0; ni < n; ++ni) {
    const float* gs = gy + ni * k * hw;
    for (i64 ci = c0; ci < c1; ++ci) {
      float* xs = gx + (ni * c + ci) * hw;
      i64 p = 0;
      for (; p + 8 <= hw; p += 8) {
        __m256 acc = _mm256_setzero_ps();
        for (i64 kk = 0; kk < k; ++kk) {
          const __m256 gv = _mm256_loadu_ps(gs + kk * hw + p);
          acc = _mm256_add_ps(acc, _mm256_mul_ps(gv, _mm256_set1_ps(w[kk * c + ci])));
        }
        const __m256 prev = _mm256_loadu_ps(xs + p);
        _mm256_storeu_ps(xs + p, _mm256_add_ps(prev, acc));
      }
      for (; p < hw; ++p) {
        float acc = 0.0f;
        for (i64 kk = 0; kk < k; ++kk) acc += gs[kk * hw + p] * w[kk * c + ci];
        xs[p] += acc;
      }
    }
  }
}

void conv1x1_bwd_wb_avx2(const float* x, const float* gy, float* gw, float* gb,
                         i64 n, i64 c, i64 hw, i64 k, i64 k0, i64 k1) {
  for (i64 kk = k0; kk < k1; ++kk) {
    for (i64 ci = 0; ci < c; ++ci) {
      __m256d acc_lo = _mm256_setzero_pd();
      __m256d acc_hi = _mm256_setzero_pd();
      double tail = 0.0;
      for (i64 ni = 0; ni < n; ++ni) {
        const float* gp = gy + (ni * k + kk) * hw;
        const float* xp = x + (ni * c + ci) * hw;
        i64 p = 0;
        for (; p + 8 <= hw; p += 8) {
          const __m256 gv = _mm256_loadu_ps(gp + p);
          const __m256 xv = _mm256_loadu_ps(xp + p);
          acc_lo = _mm256_add_pd(
              acc_lo, _mm256_mul_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(gv)),
                                    _mm256_cvtps_pd(_mm256_castps256_ps128(xv))));
          acc_hi = _mm256_add_pd(
              acc_hi, _mm256_mul_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(gv, 1)),
                                    _mm256_cvtps_pd(_mm256_extractf128_ps(xv, 1))));
        }
        for (; p < hw; ++p)
          tail += static_cast<double>(gp[p]) * static_cast<double>(xp[p]);
      }
      gw[kk * c + ci] += static_cast<float>(hsum_pd(acc_lo) + hsum_pd(acc_hi) + tail);
    }
    if (gb) {
      double acc = 0.0;
      for (i64 ni = 0; ni < n; ++ni)
        acc += sum_acc(gy + (ni * k + kk) * hw, static_cast<std::size_t>(hw));
      gb[kk] += static_cast<float>(acc);
    }
  }
}

void convt2x2_fwd_avx2(const float* x, const float* w, const float* b, float* y,
                       i64 n, i64 c, i64 h, i64 wd, i64 k, i64 k0, i64 k1) {
  const i64 oh = 2 * h, ow = 2 * wd;
  const __m256i dup_idx = _mm256_setr_epi32(0, 0, 1, 1, 2, 2, 3, 3);
  for (i64 ni = 0; ni < n; ++ni) {
    const float* xs = x + ni * c * h * wd;
    for (i64 kk = k0; kk < k1; ++kk) {
      float* ys = y + (ni * k + kk) * oh * ow;
      for (i64 oy = 0; oy < oh; ++oy) {
        const i64 i = oy >> 1, m = oy & 1;
        float* yr = ys + oy * ow;
        i64 ox = 0;
        for (; ox + 8 <= ow; ox += 8) {
          __m256 acc = _mm256_set1_ps(b[kk]);
          const i64 j = ox >> 1;
          for (i64 ci = 0; ci < c; ++ci) {
            const __m128 x4 = _mm_loadu_ps(xs + ci * h * wd + i * wd + j);
            const __m256 xdup = _mm256_permutevar8x32_ps(
                _mm256_castps128_ps256(x4), dup_idx);
            const float* wp = w + ((ci * k + kk) * 2 + m) * 2;
            const __m256 wv = _mm256_blend_ps(_mm256_set1_ps(wp[0]),
                                              _mm256_set1_ps(wp[1]), 0xAA);
            acc = _mm256_add_ps(acc, _mm256_mul_ps(xdup, wv));
          }
          _mm256_storeu_ps(yr + ox, acc);
        }
        for (; ox < ow; ++ox) {
          const i64 j = ox >> 1, nn = ox & 1;
          float acc = b[kk];
          for (i64 ci = 0; ci < c; ++ci)
            acc += xs[ci * h * wd + i * wd + j] * w[((ci * k + kk) * 2 + m) * 2 + nn];
          yr[ox] = acc;
        }
      }
    }
  }
}

// Extracts lanes 0,2,4,..,14 of the 16 floats starting at p.
inline __m256 load_even16(const float* p) {
  const __m256 a = _mm256_loadu_ps(p);
  const __m256 b = _mm256_loadu_ps(p + 8);
  const __m256 mixed = _mm256_shuffle_ps(a, b, _MM_SHUFFLE(2, 0, 2, 0));
  return _mm256_castsi256_ps(_mm256_permute4x64_epi64(_mm256_castps_si256(mixed), 0xD8));
}

void convt2x2_bwd_input_avx2(const float* gy, const float* w, float* gx, i64 n,
                             i64 c, i64 h, i64 wd, i64 k, i64 c0, i64 c1) {
  const i64 oh = 2 * h, ow = 2 * wd;
  for (i64 ni = 0; ni < n; ++ni) {
    const float* gs = gy + ni * k * oh * ow;
    for (i64 ci = c0; ci < c1; ++ci) {
      float* xs = gx + (ni * c + ci) * h * wd;
      for (i64 i = 0; i < h; ++i) {
        float* xr = xs + i * wd;
        i64 j = 0;
        // strict margin so the nn=1 even-lane load stays inside the row
        for (; j + 8 <= wd - 1; j += 8) {
          __m256 acc = _mm256_setzero_ps();
          for (i64 kk = 0; kk < k; ++kk) {
            const float* gp = gs + kk * oh * ow;
            const float* wp = w + (ci * k + kk) * 4;
            for (i64 m = 0; m < 2; ++m) {
              const float* gr = gp + (2 * i + m) * ow + 2 * j;
              for (i64 nn = 0; nn < 2; ++nn) {
                const __m256 gv = load_even16(gr + nn);
                acc = _mm256_add_ps(acc, _mm256_mul_ps(gv, _mm256_set1_ps(wp[m * 2 + nn])));
              }
            }
          }
          const __m256 prev = _mm256_loadu_ps(xr + j);
          _mm256_storeu_ps(xr + j, _mm256_add_ps(prev, acc));
        }
        for (; j < wd; ++j) {
          float acc = 0.0f;
          for (i64 kk = 0; kk < k; ++kk) {
            const float* gp = gs + kk * oh * ow;
            const float* wp = w + (ci * k + kk) * 4;
            for (i64 m = 0; m < 2; ++m)
              for (i64 nn = 0; nn < 2; ++nn)
                acc += gp[(2 * i + m) * ow + (2 * j + nn)] * wp[m * 2 + nn];
          }
          xr[j] += acc;
        }
      }
    }
  }
}

void relu_fwd_avx2(const float* x, float* y, std::size_t n) {
  const __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, _mm256_max_ps(_mm256_loadu_ps(x + i), zero));
  for (; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_bwd_avx2(const float* x, const float* gy, float* gx, std::size_t n) {
  const __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 mask = _mm256_cmp_ps(_mm256_loadu_ps(x + i), zero, _CMP_GT_OQ);
    const __m256 add = _mm256_and_ps(mask, _mm256_loadu_ps(gy + i));
    _mm256_storeu_ps(gx + i, _mm256_add_ps(_mm256_loadu_ps(gx + i), add));
  }
  for (; i < n; ++i)
    if (x[i] > 0.0f) gx[i] += gy[i];
}

void adam_update_avx2(float* p, const float* g, float* m, float* v,
                      std::size_t n, float lr, float beta1, float beta2,
                      float eps, float bc1, float bc2) {
  const float omb1 = 1.0f - beta1;
  const float omb2 = 1.0f - beta2;
  const __m256 vb1 = _mm256_set1_ps(beta1), vomb1 = _mm256_set1_ps(omb1);
  const __m256 vb2 = _mm256_set1_ps(beta2), vomb2 = _mm256_set1_ps(omb2);
  const __m256 vbc1 = _mm256_set1_ps(bc1), vbc2 = _mm256_set1_ps(bc2);
  const __m256 vlr = _mm256_set1_ps(lr), veps = _mm256_set1_ps(eps);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 gv = _mm256_loadu_ps(g + i);
    const __m256 mi = _mm256_add_ps(_mm256_mul_ps(vb1, _mm256_loadu_ps(m + i)),
                                    _mm256_mul_ps(vomb1, gv));
    const __m256 vi = _mm256_add_ps(_mm256_mul_ps(vb2, _mm256_loadu_ps(v + i)),
                                    _mm256_mul_ps(vomb2, _mm256_mul_ps(gv, gv)));
    _mm256_storeu_ps(m + i, mi);
    _mm256_storeu_ps(v + i, vi);
    const __m256 mhat = _mm256_div_ps(mi, vbc1);
    const __m256 vhat = _mm256_div_ps(vi, vbc2);
    const __m256 den = _mm256_add_ps(_mm256_sqrt_ps(vhat), veps);
    const __m256 upd = _mm256_div_ps(_mm256_mul_ps(vlr, mhat), den);
    _mm256_storeu_ps(p + i, _mm256_sub_ps(_mm256_loadu_ps(p + i), upd));
  }
  if (i < n) adam_update(p + i, g + i, m + i, v + i, n - i, lr, beta1, beta2, eps, bc1, bc2);
}

const Kernels avx2_impl = {
    "avx2",
    &conv2d_fwd_avx2,
    &conv2d_bwd_input_avx2,
    &conv2d_bwd_wb_avx2,
    &conv1x1_fwd_avx2,
    &conv1x1_bwd_input_avx2,
    &conv1x1_bwd_wb_avx2,
    &convt2x2_fwd_avx2,
    &convt2x2_bwd_input_avx2,
    &convt2x2_bwd_wb<float>,  // scalar; 4*C*K small reductions
    &relu_fwd_avx2,
    &relu_bwd_avx2,
    &adam_update_avx2,
};

}  // namespace

const Kernels* avx2_table() {
#if defined(__GNUC__) || defined(__clang__)
  return __builtin_cpu_supports("avx2") ? &avx2_impl : nullptr;
#else
  return nullptr;
#endif
}

}  // namespace fvk::kern

#else  // !__AVX2__

namespace fvk::kern {
const Kernels* avx2_table() { return nullptr; }
}  // namespace fvk::kern

#endif
