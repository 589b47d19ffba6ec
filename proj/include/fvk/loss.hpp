#pragma once

#include <span>

#include "fvk/tensor.hpp"

namespace fvk {

struct LossConfig {
  float eps_dice = 1e-7f;   // denominator smoothing of the Dice term
  float bce_clamp = 1e-7f;  // probability floor/ceiling before the logs

  void validate() const {
    if (!(eps_dice > 0.0f && eps_dice <= 1e-3f))
      throw ValueError("LossConfig: eps_dice must lie in (0, 1e-3]");
    if (!(bce_clamp > 0.0f && bce_clamp < 0.5f))
      throw ValueError("LossConfig: bce_clamp must lie in (0, 0.5)");
  }
};

// Mean over all pixels of -[y*log(p) + (1-y)*log(1-p)], with p clamped to
// [bce_clamp, 1-bce_clamp]. target must be binary, pred in [0,1].
Tensor bce_loss(const Tensor& target, const Tensor& pred, const LossConfig& cfg);

// 1 - 2*sum(y*p) / (sum(y) + sum(p) + eps_dice), pooled over the whole batch.
// The smoothing sits only in the denominator, so empty-vs-empty scores 1.
Tensor dice_loss(const Tensor& target, const Tensor& pred, const LossConfig& cfg);

// Sum of the two; gradient flows through both terms.
Tensor dice_bce_loss(const Tensor& target, const Tensor& pred, const LossConfig& cfg);

// Double-precision forward-only forms, used as the gradient-check reference
// path and by validation passes.
double bce_ref(std::span<const double> y, std::span<const double> p, double clamp);
double dice_ref(std::span<const double> y, std::span<const double> p, double eps);
double dice_bce_ref(std::span<const double> y, std::span<const double> p,
                    double clamp, double eps);

}  // namespace fvk
