#pragma once

#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fvk/common.hpp"

namespace fvk {

// Dense extents. Rank-4 tensors are laid out (N, C, H, W) row-major.
class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<i64> dims) : Shape(std::vector<i64>(dims)) {}
  explicit Shape(std::vector<i64> dims);

  i64 rank() const { return static_cast<i64>(dims_.size()); }
  i64 operator[](i64 i) const { return dims_[static_cast<std::size_t>(i)]; }
  i64 numel() const { return numel_; }
  bool operator==(const Shape&) const = default;
  std::string str() const;

  i64 n() const { return at4(0); }
  i64 c() const { return at4(1); }
  i64 h() const { return at4(2); }
  i64 w() const { return at4(3); }

 private:
  i64 at4(i64 i) const;
  static std::string str_of(const std::vector<i64>& dims);
  std::vector<i64> dims_;
  i64 numel_ = 0;
};

class Tensor;
using BackwardFn = std::function<void(const Tensor& out)>;

// Value handle with shared storage. Data is immutable by convention once an
// op has consumed the tensor; only grad buffers (and explicitly documented
// buffers like batch-norm running stats) are written in place.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(const Shape& s);
  static Tensor full(const Shape& s, float v);
  static Tensor from_data(const Shape& s, std::vector<float> data);
  static Tensor scalar(float v) { return full(Shape{1}, v); }

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  i64 numel() const { return impl_->shape.numel(); }
  float item() const;

  std::span<const float> data() const { return impl_->data; }
  std::span<float> mutable_data() { return impl_->data; }

  bool requires_grad() const { return impl_->requires_grad; }
  Tensor& set_requires_grad(bool v) {
    impl_->requires_grad = v;
    return *this;
  }

  bool has_node() const { return impl_->node != nullptr; }
  // whether gradient must propagate into this tensor
  bool needs_grad() const { return impl_->requires_grad || has_node(); }

  bool has_grad() const { return !impl_->grad.empty(); }
  std::span<const float> grad() const;
  // lazily-allocated zero buffer; backward functions accumulate into it
  std::span<float> grad_accum();
  void zero_grad() { impl_->grad.clear(); }

  // lineage record; inputs are retained for the topological sweep
  void attach_node(const char* tag, std::vector<Tensor> inputs, BackwardFn fn);
  const char* op_tag() const;

  const void* id() const { return impl_.get(); }

 private:
  struct Node {
    const char* tag;
    std::vector<Tensor> inputs;
    BackwardFn fn;
  };
  struct Impl {
    Shape shape;
    std::vector<float> data;
    std::vector<float> grad;
    std::unique_ptr<Node> node;
    bool requires_grad = false;
  };
  explicit Tensor(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<Impl> impl_;

  friend void backward(const Tensor& loss);
};

// Reverse topological sweep from a scalar loss; every tensor on the lineage
// graph that needs a gradient receives sum of its downstream contributions.
void backward(const Tensor& loss);

// While a guard is alive on this thread, ops skip lineage recording; forward
// passes become pure computations with no saved activations.
bool grad_enabled();
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

}  // namespace fvk
