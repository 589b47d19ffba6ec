#include "fvk/kernels/dispatch.hpp"

namespace fvk::kern {

namespace {

const Kernels* pick_default() {
  if (const Kernels* t = avx2_table()) return t;
  if (const Kernels* t = neon_table()) return t;
  return &scalar_table();
}

const Kernels*& active_ptr() {
  static const Kernels* ptr = pick_default();
  return ptr;
}

}  // namespace

const Kernels& active() { return *active_ptr(); }

Backend active_backend() {
  const Kernels* p = active_ptr();
  if (p == avx2_table()) return Backend::avx2;
  if (p == neon_table()) return Backend::neon;
  return Backend::scalar;
}

void force_backend(Backend b) {
  switch (b) {
    case Backend::scalar:
      active_ptr() = &scalar_table();
      return;
    case Backend::avx2:
      if (const Kernels* t = avx2_table()) {
        active_ptr() = t;
        return;
      }
      throw ValueError("avx2 backend not supported on this CPU/build");
    case Backend::neon:
      if (const Kernels* t = neon_table()) {
        active_ptr() = t;
        return;
      }
      throw ValueError("neon backend not supported on this CPU/build");
  }
  throw ValueError("unknown kernel backend");
}

std::vector<Backend> supported_backends() {
  std::vector<Backend> out{Backend::scalar};
  if (avx2_table()) out.push_back(Backend::avx2);
  if (neon_table()) out.push_back(Backend::neon);
  return out;
}

std::string backend_name(Backend b) {
  switch (b) {
    case Backend::scalar: return "scalar";
    case Backend::avx2: return "avx2";
    case Backend::neon: return "neon";
  }
  return "unknown";
}

}  // namespace fvk::kern
