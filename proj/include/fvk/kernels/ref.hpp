#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>

#include "fvk/common.hpp"

// Scalar reference kernels, templated so the gradient-check path can run the
// same math in double. The float instantiation is the scalar backend and the
// semantics anchor for every SIMD variant: per output element the term order
// below is the contract, and the equivalence tests compare against it
// bitwise wherever a SIMD kernel preserves that order.
//
// Layouts: tensors are dense row-major NCHW; conv weights are (K,C,3,3),
// transpose-conv weights (C,K,2,2), 1x1 weights (K,C).
//
// Accumulation order for one conv output: bias first, then c-major,
// kernel-row, kernel-column, skipping taps that fall in the zero pad.
// Backward kernels accumulate (+=) into pre-zeroed gradient buffers.

namespace fvk::kern {

// ---- 3x3 convolution, stride 1, zero pad 1 --------------------------------

template <class T>
inline T conv2d_at(const T* x, const T* w, T bias, i64 c, i64 h, i64 wd,
                   i64 i, i64 j) {
  // x points at one sample (C,H,W); w at one output channel's (C,3,3) block.
  T acc = bias;
  for (i64 ci = 0; ci < c; ++ci) {
    const T* xp = x + ci * h * wd;
    const T* wp = w + ci * 9;
    for (i64 m = 0; m < 3; ++m) {
      const i64 si = i + m - 1;
      if (si < 0 || si >= h) continue;
      for (i64 nn = 0; nn < 3; ++nn) {
        const i64 sj = j + nn - 1;
        if (sj < 0 || sj >= wd) continue;
        acc += xp[si * wd + sj] * wp[m * 3 + nn];
      }
    }
  }
  return acc;
}

template <class T>
void conv2d_fwd(const T* x, const T* w, const T* b, T* y, i64 n, i64 c, i64 h,
                i64 wd, i64 k, i64 k0, i64 k1) {
  for (i64 ni = 0; ni < n; ++ni) {
    const T* xs = x + ni * c * h * wd;
    for (i64 kk = k0; kk < k1; ++kk) {
      const T* wk = w + kk * c * 9;
      T* ys = y + (ni * k + kk) * h * wd;
      for (i64 i = 0; i < h; ++i)
        for (i64 j = 0; j < wd; ++j)
          ys[i * wd + j] = conv2d_at(xs, wk, b[kk], c, h, wd, i, j);
    }
  }
}

template <class T>
inline T conv2d_bwd_input_at(const T* gy, const T* w, i64 k, i64 c, i64 h,
                             i64 wd, i64 ci, i64 si, i64 sj) {
  // gy points at one sample (K,H,W); w at the full (K,C,3,3) block.
  T acc = T(0);
  for (i64 kk = 0; kk < k; ++kk) {
    const T* gp = gy + kk * h * wd;
    const T* wp = w + (kk * c + ci) * 9;
    for (i64 m = 0; m < 3; ++m) {
      const i64 i = si - m + 1;
      if (i < 0 || i >= h) continue;
      for (i64 nn = 0; nn < 3; ++nn) {
        const i64 j = sj - nn + 1;
        if (j < 0 || j >= wd) continue;
        acc += gp[i * wd + j] * wp[m * 3 + nn];
      }
    }
  }
  return acc;
}

template <class T>
void conv2d_bwd_input(const T* gy, const T* w, T* gx, i64 n, i64 c, i64 h,
                      i64 wd, i64 k, i64 c0, i64 c1) {
  for (i64 ni = 0; ni < n; ++ni) {
    const T* gs = gy + ni * k * h * wd;
    for (i64 ci = c0; ci < c1; ++ci) {
      T* xs = gx + (ni * c + ci) * h * wd;
      for (i64 si = 0; si < h; ++si)
        for (i64 sj = 0; sj < wd; ++sj)
          xs[si * wd + sj] += conv2d_bwd_input_at(gs, w, k, c, h, wd, ci, si, sj);
    }
  }
}

template <class T>
void conv2d_bwd_wb(const T* x, const T* gy, T* gw, T* gb, i64 n, i64 c, i64 h,
                   i64 wd, i64 k, i64 k0, i64 k1) {
  for (i64 kk = k0; kk < k1; ++kk) {
    for (i64 ci = 0; ci < c; ++ci) {
      for (i64 m = 0; m < 3; ++m) {
        for (i64 nn = 0; nn < 3; ++nn) {
          double acc = 0.0;
          for (i64 ni = 0; ni < n; ++ni) {
            const T* gp = gy + (ni * k + kk) * h * wd;
            const T* xp = x + (ni * c + ci) * h * wd;
            const i64 ilo = std::max<i64>(0, 1 - m);
            const i64 ihi = std::min<i64>(h, h + 1 - m);
            const i64 jlo = std::max<i64>(0, 1 - nn);
            const i64 jhi = std::min<i64>(wd, wd + 1 - nn);
            for (i64 i = ilo; i < ihi; ++i) {
              const T* gr = gp + i * wd;
              const T* xr = xp + (i + m - 1) * wd + (nn - 1);
              for (i64 j = jlo; j < jhi; ++j)
                acc += static_cast<double>(gr[j]) * static_cast<double>(xr[j]);
            }
          }
          gw[((kk * c + ci) * 3 + m) * 3 + nn] += static_cast<T>(acc);
        }
      }
    }
    if (gb) {
      double acc = 0.0;
      for (i64 ni = 0; ni < n; ++ni) {
        const T* gp = gy + (ni * k + kk) * h * wd;
        for (i64 p = 0; p < h * wd; ++p) acc += static_cast<double>(gp[p]);
      }
      gb[kk] += static_cast<T>(acc);
    }
  }
}

// ---- 1x1 convolution -------------------------------------------------------

template <class T>
void conv1x1_fwd(const T* x, const T* w, const T* b, T* y, i64 n, i64 c,
                 i64 hw, i64 k, i64 k0, i64 k1) {
  for (i64 ni = 0; ni < n; ++ni) {
    const T* xs = x + ni * c * hw;
    for (i64 kk = k0; kk < k1; ++kk) {
      const T* wk = w + kk * c;
      T* ys = y + (ni * k + kk) * hw;
      for (i64 p = 0; p < hw; ++p) {
        T acc = b[kk];
        for (i64 ci = 0; ci < c; ++ci) acc += xs[ci * hw + p] * wk[ci];
        ys[p] = acc;
      }
    }
  }
}

template <class T>
void conv1x1_bwd_input(const T* gy, const T* w, T* gx, i64 n, i64 c, i64 hw,
                       i64 k, i64 c0, i64 c1) {
  for (i64 ni = 0; ni < n; ++ni) {
    const T* gs = gy + ni * k * hw;
    for (i64 ci = c0; ci < c1; ++ci) {
      T* xs = gx + (ni * c + ci) * hw;
      for (i64 p = 0; p < hw; ++p) {
        T acc = T(0);
        for (i64 kk = 0; kk < k; ++kk) acc += gs[kk * hw + p] * w[kk * c + ci];
        xs[p] += acc;
      }
    }
  }
}

template <class T>
void conv1x1_bwd_wb(const T* x, const T* gy, T* gw, T* gb, i64 n, i64 c,
                    i64 hw, i64 k, i64 k0, i64 k1) {
  for (i64 kk = k0; kk < k1; ++kk) {
    for (i64 ci = 0; ci < c; ++ci) {
      double acc = 0.0;
      for (i64 ni = 0; ni < n; ++ni) {
        const T* gp = gy + (ni * k + kk) * hw;
        const T* xp = x + (ni * c + ci) * hw;
        for (i64 p = 0; p < hw; ++p)
          acc += static_cast<double>(gp[p]) * static_cast<double>(xp[p]);
      }
      gw[kk * c + ci] += static_cast<T>(acc);
    }
    if (gb) {
      double acc = 0.0;
      for (i64 ni = 0; ni < n; ++ni) {
        const T* gp = gy + (ni * k + kk) * hw;
        for (i64 p = 0; p < hw; ++p) acc += static_cast<double>(gp[p]);
      }
      gb[kk] += static_cast<T>(acc);
    }
  }
}

// ---- 2x2 transposed convolution, stride 2 ----------------------------------
// Every output pixel receives exactly one tap per input channel:
//   y[n,k,oy,ox] = b[k] + sum_c x[n,c,oy/2,ox/2] * w[c,k,oy&1,ox&1]

template <class T>
void convt2x2_fwd(const T* x, const T* w, const T* b, T* y, i64 n, i64 c,
                  i64 h, i64 wd, i64 k, i64 k0, i64 k1) {
  const i64 oh = 2 * h, ow = 2 * wd;
  for (i64 ni = 0; ni < n; ++ni) {
    const T* xs = x + ni * c * h * wd;
    for (i64 kk = k0; kk < k1; ++kk) {
      T* ys = y + (ni * k + kk) * oh * ow;
      for (i64 oy = 0; oy < oh; ++oy) {
        const i64 i = oy >> 1, m = oy & 1;
        for (i64 ox = 0; ox < ow; ++ox) {
          const i64 j = ox >> 1, nn = ox & 1;
          T acc = b[kk];
          for (i64 ci = 0; ci < c; ++ci)
            acc += xs[ci * h * wd + i * wd + j] * w[((ci * k + kk) * 2 + m) * 2 + nn];
          ys[oy * ow + ox] = acc;
        }
      }
    }
  }
}

template <class T>
void convt2x2_bwd_input(const T* gy, const T* w, T* gx, i64 n, i64 c, i64 h,
                        i64 wd, i64 k, i64 c0, i64 c1) {
  const i64 oh = 2 * h, ow = 2 * wd;
  for (i64 ni = 0; ni < n; ++ni) {
    const T* gs = gy + ni * k * oh * ow;
    for (i64 ci = c0; ci < c1; ++ci) {
      T* xs = gx + (ni * c + ci) * h * wd;
      for (i64 i = 0; i < h; ++i) {
        for (i64 j = 0; j < wd; ++j) {
          T acc = T(0);
          for (i64 kk = 0; kk < k; ++kk) {
            const T* gp = gs + kk * oh * ow;
            const T* wp = w + (ci * k + kk) * 4;
            for (i64 m = 0; m < 2; ++m)
              for (i64 nn = 0; nn < 2; ++nn)
                acc += gp[(2 * i + m) * ow + (2 * j + nn)] * wp[m * 2 + nn];
          }
          xs[i * wd + j] += acc;
        }
      }
    }
  }
}

template <class T>
void convt2x2_bwd_wb(const T* x, const T* gy, T* gw, T* gb, i64 n, i64 c,
                     i64 h, i64 wd, i64 k, i64 k0, i64 k1) {
  const i64 oh = 2 * h, ow = 2 * wd;
  for (i64 kk = k0; kk < k1; ++kk) {
    for (i64 ci = 0; ci < c; ++ci) {
      for (i64 m = 0; m < 2; ++m) {
        for (i64 nn = 0; nn < 2; ++nn) {
          double acc = 0.0;
          for (i64 ni = 0; ni < n; ++ni) {
            const T* xp = x + (ni * c + ci) * h * wd;
            const T* gp = gy + (ni * k + kk) * oh * ow;
            for (i64 i = 0; i < h; ++i)
              for (i64 j = 0; j < wd; ++j)
                acc += static_cast<double>(xp[i * wd + j]) *
                       static_cast<double>(gp[(2 * i + m) * ow + (2 * j + nn)]);
          }
          gw[((ci * k + kk) * 2 + m) * 2 + nn] += static_cast<T>(acc);
        }
      }
    }
    if (gb) {
      double acc = 0.0;
      for (i64 ni = 0; ni < n; ++ni) {
        const T* gp = gy + (ni * k + kk) * oh * ow;
        for (i64 p = 0; p < oh * ow; ++p) acc += static_cast<double>(gp[p]);
      }
      gb[kk] += static_cast<T>(acc);
    }
  }
}

// ---- 2x2 max pooling --------------------------------------------------------
// argmax stores 0..3 in row-major block scan order; ties keep the first, which
// is the gradient-routing rule.

template <class T>
void maxpool2x2_fwd(const T* x, T* y, u8* argmax, i64 n, i64 c, i64 h, i64 wd) {
  const i64 oh = h / 2, ow = wd / 2;
  for (i64 nc = 0; nc < n * c; ++nc) {
    const T* xs = x + nc * h * wd;
    T* ys = y + nc * oh * ow;
    u8* as = argmax + nc * oh * ow;
    for (i64 i = 0; i < oh; ++i) {
      for (i64 j = 0; j < ow; ++j) {
        const T* blk = xs + 2 * i * wd + 2 * j;
        T best = blk[0];
        u8 arg = 0;
        const T cands[3] = {blk[1], blk[wd], blk[wd + 1]};
        for (u8 t = 0; t < 3; ++t) {
          if (cands[t] > best) {
            best = cands[t];
            arg = static_cast<u8>(t + 1);
          }
        }
        ys[i * ow + j] = best;
        as[i * ow + j] = arg;
      }
    }
  }
}

template <class T>
void maxpool2x2_bwd(const T* gy, const u8* argmax, T* gx, i64 n, i64 c, i64 h,
                    i64 wd) {
  const i64 oh = h / 2, ow = wd / 2;
  for (i64 nc = 0; nc < n * c; ++nc) {
    const T* gs = gy + nc * oh * ow;
    const u8* as = argmax + nc * oh * ow;
    T* xs = gx + nc * h * wd;
    for (i64 i = 0; i < oh; ++i) {
      for (i64 j = 0; j < ow; ++j) {
        const u8 a = as[i * ow + j];
        const i64 di = a >> 1, dj = a & 1;
        xs[(2 * i + di) * wd + (2 * j + dj)] += gs[i * ow + j];
      }
    }
  }
}

// ---- elementwise ------------------------------------------------------------

template <class T>
void relu_fwd(const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
}

template <class T>
void relu_bwd(const T* x, const T* gy, T* gx, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (x[i] > T(0)) gx[i] += gy[i];
}

// Saturates cleanly at the float limits; no overflow for any input.
template <class T>
inline T sigmoid_at(T x) {
  if (x >= T(0)) {
    return T(1) / (T(1) + std::exp(-x));
  }
  const T e = std::exp(x);
  return e / (T(1) + e);
}

template <class T>
void sigmoid_fwd(const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = sigmoid_at(x[i]);
}

// One bias-corrected Adam step over a flat parameter block. The op sequence
// (mul, mul, add; divisions, sqrt) is mirrored exactly by the SIMD variants.
template <class T>
void adam_update(T* p, const T* g, T* m, T* v, std::size_t n, T lr, T beta1,
                 T beta2, T eps, T bc1, T bc2) {
  const T omb1 = T(1) - beta1;
  const T omb2 = T(1) - beta2;
  for (std::size_t i = 0; i < n; ++i) {
    const T gi = g[i];
    const T mi = beta1 * m[i] + omb1 * gi;
    const T vi = beta2 * v[i] + omb2 * (gi * gi);
    m[i] = mi;
    v[i] = vi;
    const T mhat = mi / bc1;
    const T vhat = vi / bc2;
    p[i] = p[i] - (lr * mhat) / (std::sqrt(vhat) + eps);
  }
}

// ---- reductions (double accumulation, fixed row-major order) ----------------

template <class T>
double sum_acc(const T* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += static_cast<double>(x[i]);
  return acc;
}

// Two-pass per-channel mean and biased variance over (N,H,W).
template <class T>
void channel_mean_var(const T* x, i64 n, i64 c, i64 hw, double* mean,
                      double* var) {
  for (i64 ci = 0; ci < c; ++ci) {
    double s = 0.0;
    for (i64 ni = 0; ni < n; ++ni) {
      const T* xp = x + (ni * c + ci) * hw;
      for (i64 p = 0; p < hw; ++p) s += static_cast<double>(xp[p]);
    }
    const double mu = s / static_cast<double>(n * hw);
    double ss = 0.0;
    for (i64 ni = 0; ni < n; ++ni) {
      const T* xp = x + (ni * c + ci) * hw;
      for (i64 p = 0; p < hw; ++p) {
        const double d = static_cast<double>(xp[p]) - mu;
        ss += d * d;
      }
    }
    mean[ci] = mu;
    var[ci] = ss / static_cast<double>(n * hw);
  }
}

}  // namespace fvk::kern
