#pragma once

// Dense NCHW tensors with reverse-mode automatic differentiation over a
// recording tape. The engine is deliberately small: it supports exactly the
// operation set the enhancement network needs, in float for production
// graphs and in double for finite-difference gradient checking.

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace uve {

[[noreturn]] void fail(const std::string& msg);

inline void check(bool ok, const std::string& msg) {
  if (!ok) fail(msg);
}

struct Shape {
  int64_t n = 0, c = 0, h = 0, w = 0;
  int64_t numel() const { return n * c * h * w; }
  bool operator==(const Shape&) const = default;
};

std::string to_string(const Shape& s);

namespace detail {

template <typename T>
struct TensorData {
  Shape shape;
  std::vector<T> values;
  std::vector<T> grad;         // allocated on first use, shape-sized
  bool requires_grad = false;  // leaf flag
  bool needs_grad = false;     // true when the tensor participates in a tape
};

}  // namespace detail

template <typename T>
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(const Shape& s);
  static Tensor full(const Shape& s, T v);
  static Tensor from_values(const Shape& s, std::vector<T> v);

  bool defined() const { return static_cast<bool>(d_); }
  const Shape& shape() const { return d_->shape; }
  int64_t numel() const { return d_->shape.numel(); }

  std::span<const T> values() const { return d_->values; }

  // Mutation seam for optimizer updates and checkpoint loading; tensors are
  // otherwise treated as immutable after construction.
  std::span<T> raw_values() { return d_->values; }

  Tensor& set_requires_grad(bool b = true);
  bool requires_grad() const { return d_->requires_grad; }
  bool needs_grad() const { return d_ && d_->needs_grad; }
  void mark_needs_grad() { d_->needs_grad = true; }

  bool has_grad() const { return d_ && !d_->grad.empty(); }
  // Gradient buffer, allocated as zeros on first access.
  std::span<T> grad() const;
  void zero_grad() const;

  T item() const;
  T at(int64_t n, int64_t c, int64_t y, int64_t x) const;
  int64_t index(int64_t n, int64_t c, int64_t y, int64_t x) const {
    const Shape& s = d_->shape;
    return ((n * s.c + c) * s.h + y) * s.w + x;
  }

  bool same_storage(const Tensor& other) const { return d_ == other.d_; }
  bool all_finite() const;

 private:
  std::shared_ptr<detail::TensorData<T>> d_;
};

// Tape of recorded operations. Nodes are appended in execution order, which
// is a topological order by construction; backward() replays them exactly
// once in reverse. Leaf gradients accumulate across backward calls and are
// zeroed explicitly by the caller.
template <typename T>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void record(std::vector<Tensor<T>> outputs, std::function<void()> backward) {
    nodes_.push_back(Node{std::move(outputs), std::move(backward)});
  }

  int64_t size() const { return static_cast<int64_t>(nodes_.size()); }

  void backward(const Tensor<T>& loss);

  static Tape* current() { return current_; }

  // RAII activation: ops record onto the innermost active tape of the
  // current thread. Independent graphs on separate threads never share state.
  class Scope {
   public:
    explicit Scope(Tape& t) : prev_(current_) { current_ = &t; }
    ~Scope() { current_ = prev_; }
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Tape* prev_;
  };

 private:
  struct Node {
    std::vector<Tensor<T>> outputs;
    std::function<void()> backward;
  };
  std::vector<Node> nodes_;
  static thread_local Tape* current_;
};

template <typename T>
inline bool tape_wants(const Tensor<T>& a) {
  return Tape<T>::current() != nullptr && a.needs_grad();
}

template <typename T>
inline bool tape_wants(const Tensor<T>& a, const Tensor<T>& b) {
  return Tape<T>::current() != nullptr && (a.needs_grad() || b.needs_grad());
}

extern template class Tensor<float>;
extern template class Tensor<double>;
extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace uve
