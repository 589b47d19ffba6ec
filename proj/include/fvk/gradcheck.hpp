#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fvk/tensor.hpp"

// Central-difference gradient verification. The analytic gradients come from
// the float32 reverse sweep; the reference quotient is evaluated through a
// caller-supplied double-precision forward path, so the finite differences
// carry no float32 noise.

namespace fvk::grad {

struct CheckReport {
  std::string name;
  double max_rel = 0.0;  // worst |analytic - fd| / max(|analytic|, |fd|, floor)
  i64 elements = 0;
  std::string worst;  // parameter/index of the worst element

  bool pass(double tol = 1e-3) const { return max_rel < tol; }
};

struct NamedParam {
  std::string name;
  Tensor tensor;  // gradients must already be populated
};

// Perturbs every element of every parameter by +-h (after float quantization
// the actual step is re-measured in double) and compares the double-precision
// quotient against the element's analytic gradient. `floor` blends in an
// absolute tolerance for gradients near zero.
CheckReport fd_compare(std::string name, std::span<NamedParam> params,
                       const std::function<double()>& ref_eval, double h = 1e-3,
                       double floor = 1e-3);

// The standard suite: every differentiable op, the combined loss, and a
// small end-to-end network. Used by the CLI `gradcheck` subcommand and the
// acceptance suite.
std::vector<CheckReport> run_standard_checks(u64 seed);

}  // namespace fvk::grad
