#include "fvk/kernels/dispatch.hpp"
#include "fvk/kernels/ref.hpp"

namespace fvk::kern {

const Kernels& scalar_table() {
  static const Kernels table = {
      "scalar",
      &conv2d_fwd<float>,
      &conv2d_bwd_input<float>,
      &conv2d_bwd_wb<float>,
      &conv1x1_fwd<float>,
      &conv1x1_bwd_input<float>,
      &conv1x1_bwd_wb<float>,
      &convt2x2_fwd<float>,
      &convt2x2_bwd_input<float>,
      &convt2x2_bwd_wb<float>,
      &relu_fwd<float>,
      &relu_bwd<float>,
      &adam_update<float>,
  };
  return table;
}

}  // namespace fvk::kern
