#include "fvk/tensor.hpp"

#include <algorithm>
#include <limits>
#include <unordered_set>

namespace fvk {

Shape::Shape(std::vector<i64> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) throw ShapeError("Shape: rank must be >= 1");
  i64 n = 1;
  for (i64 d : dims_) {
    if (d < 1) throw ShapeError("Shape: all extents must be >= 1, got " + str_of(dims_));
    if (d != 0 && n > std::numeric_limits<i64>::max() / d)
      throw ShapeError("Shape: element count overflows addressable range");
    n *= d;
  }
  numel_ = n;
}

std::string Shape::str() const { return str_of(dims_); }

std::string Shape::str_of(const std::vector<i64>& dims) {
  std::string s = "(";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(dims[i]);
  }
  s += ")";
  return s;
}

i64 Shape::at4(i64 i) const {
  if (rank() != 4)
    throw ShapeError("expected rank-4 NCHW tensor, got shape " + str());
  return dims_[static_cast<std::size_t>(i)];
}

Tensor Tensor::zeros(const Shape& s) {
  auto impl = std::make_shared<Impl>();
  impl->shape = s;
  impl->data.assign(static_cast<std::size_t>(s.numel()), 0.0f);
  return Tensor(std::move(impl));
}

Tensor Tensor::full(const Shape& s, float v) {
  Tensor t = zeros(s);
  std::fill(t.impl_->data.begin(), t.impl_->data.end(), v);
  return t;
}

Tensor Tensor::from_data(const Shape& s, std::vector<float> data) {
  if (static_cast<i64>(data.size()) != s.numel())
    throw ShapeError("from_data: " + std::to_string(data.size()) +
                     " values for shape " + s.str());
  auto impl = std::make_shared<Impl>();
  impl->shape = s;
  impl->data = std::move(data);
  return Tensor(std::move(impl));
}

float Tensor::item() const {
  if (numel() != 1)
    throw ValueError("item: tensor of shape " + shape().str() + " is not scalar");
  return impl_->data[0];
}

std::span<const float> Tensor::grad() const {
  if (impl_->grad.empty())
    throw ValueError("grad: no gradient present (run backward first)");
  return impl_->grad;
}

std::span<float> Tensor::grad_accum() {
  if (impl_->grad.empty())
    impl_->grad.assign(impl_->data.size(), 0.0f);
  return impl_->grad;
}

void Tensor::attach_node(const char* tag, std::vector<Tensor> inputs, BackwardFn fn) {
  impl_->node = std::make_unique<Node>(Node{tag, std::move(inputs), std::move(fn)});
}

const char* Tensor::op_tag() const {
  return impl_->node ? impl_->node->tag : "leaf";
}

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1)
    throw ValueError("backward: loss must be a defined scalar tensor");

  // iterative post-order DFS; lineage is acyclic by construction
  std::vector<Tensor> order;
  std::unordered_set<const void*> seen;
  struct Frame {
    Tensor t;
    std::size_t next_child = 0;
  };
  std::vector<Frame> stack;
  stack.push_back({loss});
  seen.insert(loss.id());
  while (!stack.empty()) {
    Frame& f = stack.back();
    const auto* node = f.t.impl_->node.get();
    const std::size_t n_in = node ? node->inputs.size() : 0;
    if (f.next_child < n_in) {
      const Tensor& child = node->inputs[f.next_child++];
      if (child.impl_->node && !seen.count(child.id())) {
        seen.insert(child.id());
        stack.push_back({child});
      }
    } else {
      order.push_back(f.t);
      stack.pop_back();
    }
  }

  Tensor seed = loss;
  seed.grad_accum()[0] += 1.0f;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const auto* node = it->impl_->node.get();
    if (node && node->fn) node->fn(*it);
  }
}

}  // namespace fvk
