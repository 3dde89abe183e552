#pragma once

#include <functional>
#include <vector>

#include "cdfm3sf/tensor.hpp"

namespace cdfm3sf {

/// Reverse-mode tape. Ops executed while a Tape is active (via Tape::Scope)
/// append one node each; nodes are created in execution order, so the node
/// vector is already topologically sorted and backward() simply walks it in
/// reverse, once. Gradients accumulate additively into each tensor's grad
/// buffer. A tape can be consumed by backward() exactly once; a second call
/// is rejected rather than silently doubling gradients.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* current();

  // Activates a tape for the enclosing scope (thread-local).
  class Scope {
   public:
    explicit Scope(Tape& t);
    ~Scope();

   private:
    Tape* prev_;
  };

  void record(Tensor output, std::function<void()> backward);
  void backward(const Tensor& loss);
  size_t node_count() const { return nodes_.size(); }

 private:
  std::vector<std::function<void()>> nodes_;
  bool consumed_ = false;
};

inline bool recording() { return Tape::current() != nullptr; }

}  // namespace cdfm3sf
