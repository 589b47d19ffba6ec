#include "fvk/loss.hpp"

#include <cmath>

namespace fvk {

namespace {

void validate_pair(const Tensor& target, const Tensor& pred) {
  if (!(target.shape() == pred.shape()))
    throw ShapeError("loss: target " + target.shape().str() + " vs prediction " +
                     pred.shape().str());
  for (float v : target.data())
    if (v != 0.0f && v != 1.0f)
      throw ValueError("loss: target must be binary (found " + std::to_string(v) + ")");
  for (float v : pred.data())
    if (!(v >= 0.0f && v <= 1.0f))
      throw ValueError("loss: prediction outside [0,1] (found " + std::to_string(v) + ")");
}

}  // namespace

Tensor bce_loss(const Tensor& target, const Tensor& pred, const LossConfig& cfg) {
  cfg.validate();
  validate_pair(target, pred);
  const i64 n = pred.numel();
  const double c = cfg.bce_clamp;
  const float* y = target.data().data();
  const float* p = pred.data().data();

  double acc = 0.0;
  for (i64 i = 0; i < n; ++i) {
    const double pc = std::min(std::max(static_cast<double>(p[i]), c), 1.0 - c);
    acc -= y[i] * std::log(pc) + (1.0 - y[i]) * std::log(1.0 - pc);
  }
  Tensor out = Tensor::scalar(static_cast<float>(acc / static_cast<double>(n)));

  if (grad_enabled() && pred.needs_grad()) {
    Tensor tc = target, pc_t = pred;
    const float clamp = cfg.bce_clamp;
    out.attach_node("bce_loss", {pred}, [tc, pc_t, clamp, n](const Tensor& o) mutable {
      const float g = o.grad()[0];
      const float* y = tc.data().data();
      const float* p = pc_t.data().data();
      float* gp = pc_t.grad_accum().data();
      const float inv_n = 1.0f / static_cast<float>(n);
      for (i64 i = 0; i < n; ++i) {
        if (p[i] < clamp || p[i] > 1.0f - clamp) continue;  // clamp region: zero slope
        gp[i] += g * inv_n * (-y[i] / p[i] + (1.0f - y[i]) / (1.0f - p[i]));
      }
    });
  }
  return out;
}

Tensor dice_loss(const Tensor& target, const Tensor& pred, const LossConfig& cfg) {
  cfg.validate();
  validate_pair(target, pred);
  const i64 n = pred.numel();
  const float* y = target.data().data();
  const float* p = pred.data().data();

  double inter = 0.0, sum_y = 0.0, sum_p = 0.0;
  for (i64 i = 0; i < n; ++i) {
    inter += static_cast<double>(y[i]) * static_cast<double>(p[i]);
    sum_y += y[i];
    sum_p += p[i];
  }
  const double denom = sum_y + sum_p + cfg.eps_dice;
  Tensor out = Tensor::scalar(static_cast<float>(1.0 - 2.0 * inter / denom));

  if (grad_enabled() && pred.needs_grad()) {
    Tensor tc = target, pc = pred;
    out.attach_node("dice_loss", {pred}, [tc, pc, inter, denom, n](const Tensor& o) mutable {
      // d/dp_i [1 - 2I/D] = -2 (y_i * D - I) / D^2
      const float g = o.grad()[0];
      const float* y = tc.data().data();
      float* gp = pc.grad_accum().data();
      const double d2 = denom * denom;
      for (i64 i = 0; i < n; ++i)
        gp[i] += g * static_cast<float>(-2.0 * (y[i] * denom - inter) / d2);
    });
  }
  return out;
}

Tensor dice_bce_loss(const Tensor& target, const Tensor& pred, const LossConfig& cfg) {
  Tensor b = bce_loss(target, pred, cfg);
  Tensor d = dice_loss(target, pred, cfg);
  Tensor out = Tensor::scalar(b.item() + d.item());
  if (grad_enabled() && pred.needs_grad()) {
    Tensor bc = b, dc = d;
    out.attach_node("dice_bce_loss", {b, d}, [bc, dc](const Tensor& o) mutable {
      const float g = o.grad()[0];
      bc.grad_accum()[0] += g;
      dc.grad_accum()[0] += g;
    });
  }
  return out;
}

double bce_ref(std::span<const double> y, std::span<const double> p, double clamp) {
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pc = std::min(std::max(p[i], clamp), 1.0 - clamp);
    acc -= y[i] * std::log(pc) + (1.0 - y[i]) * std::log(1.0 - pc);
  }
  return acc / static_cast<double>(p.size());
}

double dice_ref(std::span<const double> y, std::span<const double> p, double eps) {
  double inter = 0.0, sum_y = 0.0, sum_p = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    inter += y[i] * p[i];
    sum_y += y[i];
    sum_p += p[i];
  }
  return 1.0 - 2.0 * inter / (sum_y + sum_p + eps);
}

double dice_bce_ref(std::span<const double> y, std::span<const double> p,
                    double clamp, double eps) {
  return bce_ref(y, p, clamp) + dice_ref(y, p, eps);
}

}  // namespace fvk
