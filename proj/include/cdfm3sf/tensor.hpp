#pragma once

#include <memory>
#include <vector>

#include "cdfm3sf/common.hpp"

namespace cdfm3sf {

class Tape;

/// Dense N-D array of `real` scalars. Canonical model layout is channels-last
/// b,h,w,m. A Tensor is a cheap handle onto shared storage; values are treated
/// as immutable once an op has consumed them, except for gradient accumulation.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, real fill = 0, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<real> data, bool requires_grad = false);
  static Tensor scalar(real v, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  int rank() const;
  int64_t dim(int axis) const;
  int64_t size() const;

  real* data();
  const real* data() const;
  std::vector<real>& vec();
  const std::vector<real>& vec() const;

  bool requires_grad() const;
  void set_requires_grad(bool v);

  // Gradient buffer, lazily allocated (zero-filled) on first access.
  bool has_grad() const;
  real* grad_data();
  std::vector<real>& grad_vec();
  const std::vector<real>& grad_vec() const;
  void zero_grad();

  real item() const;  // rank-0 or single-element tensor only
  Tensor clone() const;

  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

 private:
  friend class Tape;
  struct Impl {
    Shape shape;
    std::vector<real> data;
    std::vector<real> grad;  // empty until touched
    bool requires_grad = false;
    const Tape* tape = nullptr;  // tape that recorded the producing op, if any
  };
  std::shared_ptr<Impl> impl_;
};

void check_same_shape(const Tensor& a, const Tensor& b, const char* op);

}  // namespace cdfm3sf
