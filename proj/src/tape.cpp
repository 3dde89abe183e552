#include "cdfm3sf/tape.hpp"

namespace cdfm3sf {

namespace {
thread_local Tape* g_current = nullptr;
}

Tape* Tape::current() { return g_current; }

Tape::Scope::Scope(Tape& t) : prev_(g_current) { g_current = &t; }
Tape::Scope::~Scope() { g_current = prev_; }

void Tape::record(Tensor output, std::function<void()> backward) {
  output.impl_->tape = this;
  nodes_.push_back(std::move(backward));
}

void Tape::backward(const Tensor& loss) {
  check(loss.defined() && loss.size() == 1,
        "backward: loss must be a scalar tensor, got " +
            (loss.defined() ? shape_str(loss.shape()) : std::string("<undefined>")));
  check(loss.impl_->tape == this, "backward: loss was not produced on this tape");
  check(!consumed_, "backward: tape already consumed; rebuild the graph or reset gradients");
  consumed_ = true;
  const_cast<Tensor&>(loss).grad_data()[0] = 1;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
}

}  // namespace cdfm3sf
