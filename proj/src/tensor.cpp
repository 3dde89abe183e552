#include "cdfm3sf/tensor.hpp"

#include <numeric>
#include <sstream>

namespace cdfm3sf {

int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << "]";
  return os.str();
}

Tensor::Tensor(Shape shape, real fill, bool requires_grad) {
  for (int64_t d : shape)
    check_shape(d > 0, "tensor extent must be positive, got shape " + shape_str(shape));
  impl_ = std::make_shared<Impl>();
  impl_->shape = std::move(shape);
  impl_->data.assign(shape_numel(impl_->shape), fill);
  impl_->requires_grad = requires_grad;
}

Tensor Tensor::from_data(Shape shape, std::vector<real> data, bool requires_grad) {
  check_shape(shape_numel(shape) == static_cast<int64_t>(data.size()),
              "data length " + std::to_string(data.size()) + " does not match shape " +
                  shape_str(shape));
  Tensor t;
  t.impl_ = std::make_shared<Impl>();
  t.impl_->shape = std::move(shape);
  t.impl_->data = std::move(data);
  t.impl_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::scalar(real v, bool requires_grad) {
  return from_data({1}, {v}, requires_grad);
}

const Shape& Tensor::shape() const { return impl_->shape; }
int Tensor::rank() const { return static_cast<int>(impl_->shape.size()); }

int64_t Tensor::dim(int axis) const {
  check_shape(axis >= 0 && axis < rank(), "axis out of range");
  return impl_->shape[axis];
}

int64_t Tensor::size() const { return static_cast<int64_t>(impl_->data.size()); }

real* Tensor::data() { return impl_->data.data(); }
const real* Tensor::data() const { return impl_->data.data(); }
std::vector<real>& Tensor::vec() { return impl_->data; }
const std::vector<real>& Tensor::vec() const { return impl_->data; }

bool Tensor::requires_grad() const { return impl_->requires_grad; }
void Tensor::set_requires_grad(bool v) { impl_->requires_grad = v; }

bool Tensor::has_grad() const { return !impl_->grad.empty(); }

real* Tensor::grad_data() { return grad_vec().data(); }

std::vector<real>& Tensor::grad_vec() {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0);
  return impl_->grad;
}

const std::vector<real>& Tensor::grad_vec() const { return impl_->grad; }

void Tensor::zero_grad() {
  if (!impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0);
}

real Tensor::item() const {
  check_shape(size() == 1, "item() requires a single-element tensor, got " + shape_str(shape()));
  return impl_->data[0];
}

Tensor Tensor::clone() const {
  Tensor t;
  t.impl_ = std::make_shared<Impl>(*impl_);
  t.impl_->tape = nullptr;
  return t;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return;
  for (int i = 0; i < std::min(a.rank(), b.rank()); ++i) {
    if (a.dim(i) != b.dim(i))
      throw ShapeError(std::string(op) + ": axis " + std::to_string(i) + " mismatch, " +
                       std::to_string(a.dim(i)) + " vs " + std::to_string(b.dim(i)));
  }
  throw ShapeError(std::string(op) + ": rank mismatch, " + shape_str(a.shape()) + " vs " +
                   shape_str(b.shape()));
}

}  // namespace cdfm3sf
