#pragma once

#include "fvk/rng.hpp"
#include "fvk/tensor.hpp"

// Forward operations with reverse-mode gradients. Convolutions run through
// the dispatched kernel table; reductions accumulate in double in a fixed
// row-major order, so results are reproducible bit-for-bit across runs.

namespace fvk::ops {

enum class Mode { train, eval };

// 3x3 convolution, stride 1, one pixel of zero padding each side (spatial
// dims preserved). x: (N,C,H,W), w: (K,C,3,3), b: (K) -> (N,K,H,W).
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b);

// Per-pixel linear map over channels. x: (N,C,H,W), w: (K,C,1,1) or (K,C),
// b: (K) -> (N,K,H,W).
Tensor conv1x1(const Tensor& x, const Tensor& w, const Tensor& b);

// 2x2 transposed convolution, stride 2, doubles H and W.
// x: (N,C,H,W), w: (C,K,2,2), b: (K) -> (N,K,2H,2W).
Tensor conv_transpose2d(const Tensor& x, const Tensor& w, const Tensor& b);

Tensor relu(const Tensor& x);

// Numerically stable logistic; saturates to 0/1 at large |x| without NaN.
Tensor sigmoid(const Tensor& x);

// H and W must be even; gradient routes to the argmax, first element of the
// 2x2 block in row-major order on ties.
Tensor maxpool2x2(const Tensor& x);

// Channels of a first, then b. Both must agree on (N,H,W).
Tensor concat_channels(const Tensor& a, const Tensor& b);

struct BatchNormState {
  Tensor gamma, beta;              // trainable
  Tensor running_mean, running_var;  // buffers, updated by train-mode forward
  float momentum = 0.1f;
  float eps = 1e-5f;

  static BatchNormState init(i64 channels, float momentum = 0.1f, float eps = 1e-5f);
  i64 channels() const { return gamma.numel(); }
};

// Train mode normalizes by per-channel batch statistics over (N,H,W) with
// biased variance, then updates running stats in place:
//   running <- (1 - momentum) * running + momentum * batch.
// Requires N*H*W >= 2. The backward pass includes the mean/variance terms.
Tensor batchnorm2d(const Tensor& x, BatchNormState& st, Mode mode);
// Eval mode: normalizes by the running statistics; never mutates state.
Tensor batchnorm2d(const Tensor& x, const BatchNormState& st);

// Channel dropout: zeroes whole (n, c) planes with probability p and scales
// survivors by 1/(1-p). Identity in eval mode or at p = 0.
Tensor dropout2d(const Tensor& x, float p, Mode mode, Rng& rng);

// Scalar sum of all elements (double accumulation).
Tensor sum(const Tensor& x);

// Elementwise sum of two same-shape tensors.
Tensor add(const Tensor& a, const Tensor& b);

}  // namespace fvk::ops
