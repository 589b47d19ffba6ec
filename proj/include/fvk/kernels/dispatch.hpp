#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fvk/common.hpp"

// Runtime-dispatched float kernels. The scalar table is the reference; the
// AVX2/NEON tables override the hot entries and leave the rest pointing at
// scalar. SIMD kernels that vectorize across output elements keep each
// element's accumulation order identical to the scalar kernel and are
// bitwise-equal; kernels that reassociate a reduction (the *_bwd_wb family)
// accumulate in double and agree with the scalar double path to ~1e-12.

namespace fvk::kern {

enum class Backend { scalar, avx2, neon };

struct Kernels {
  const char* name;
  void (*conv2d_fwd)(const float*, const float*, const float*, float*, i64, i64,
                     i64, i64, i64, i64, i64);
  void (*conv2d_bwd_input)(const float*, const float*, float*, i64, i64, i64,
                           i64, i64, i64, i64);
  void (*conv2d_bwd_wb)(const float*, const float*, float*, float*, i64, i64,
                        i64, i64, i64, i64, i64);
  void (*conv1x1_fwd)(const float*, const float*, const float*, float*, i64,
                      i64, i64, i64, i64, i64);
  void (*conv1x1_bwd_input)(const float*, const float*, float*, i64, i64, i64,
                            i64, i64, i64);
  void (*conv1x1_bwd_wb)(const float*, const float*, float*, float*, i64, i64,
                         i64, i64, i64, i64);
  void (*convt2x2_fwd)(const float*, const float*, const float*, float*, i64,
                       i64, i64, i64, i64, i64, i64);
  void (*convt2x2_bwd_input)(const float*, const float*, float*, i64, i64, i64,
                             i64, i64, i64, i64);
  void (*convt2x2_bwd_wb)(const float*, const float*, float*, float*, i64, i64,
                          i64, i64, i64, i64, i64);
  void (*relu_fwd)(const float*, float*, std::size_t);
  void (*relu_bwd)(const float*, const float*, float*, std::size_t);
  void (*adam_update)(float*, const float*, float*, float*, std::size_t, float,
                      float, float, float, float, float);
};

const Kernels& scalar_table();

// Defined in their own translation units; return nullptr when the build or
// the running CPU lacks the instruction set.
const Kernels* avx2_table();
const Kernels* neon_table();

// Active table; defaults to the best supported backend.
const Kernels& active();
Backend active_backend();
void force_backend(Backend b);  // throws ValueError if unsupported
std::vector<Backend> supported_backends();
std::string backend_name(Backend b);

}  // namespace fvk::kern
