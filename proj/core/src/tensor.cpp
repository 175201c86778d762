#include "uve/tensor.hpp"

#include <cmath>
#include <sstream>

namespace uve {

void fail(const std::string& msg) { throw std::invalid_argument(msg); }

std::string to_string(const Shape& s) {
  std::ostringstream os;
  os << "(" << s.n << "," << s.c << "," << s.h << "," << s.w << ")";
  return os.str();
}

template <typename T>
Tensor<T> Tensor<T>::zeros(const Shape& s) {
  check(s.n >= 0 && s.c >= 0 && s.h >= 0 && s.w >= 0,
        "tensor dims must be non-negative, got " + to_string(s));
  Tensor t;
  t.d_ = std::make_shared<detail::TensorData<T>>();
  t.d_->shape = s;
  t.d_->values.assign(static_cast<size_t>(s.numel()), T(0));
  return t;
}

template <typename T>
Tensor<T> Tensor<T>::full(const Shape& s, T v) {
  Tensor t = zeros(s);
  for (auto& x : t.d_->values) x = v;
  return t;
}

template <typename T>
Tensor<T> Tensor<T>::from_values(const Shape& s, std::vector<T> v) {
  check(static_cast<int64_t>(v.size()) == s.numel(),
        "value count " + std::to_string(v.size()) + " does not match shape " +
            to_string(s));
  Tensor t;
  t.d_ = std::make_shared<detail::TensorData<T>>();
  t.d_->shape = s;
  t.d_->values = std::move(v);
  return t;
}

template <typename T>
Tensor<T>& Tensor<T>::set_requires_grad(bool b) {
  d_->requires_grad = b;
  if (b) d_->needs_grad = true;
  return *this;
}

template <typename T>
std::span<T> Tensor<T>::grad() const {
  if (d_->grad.empty()) d_->grad.assign(d_->values.size(), T(0));
  return d_->grad;
}

template <typename T>
void Tensor<T>::zero_grad() const {
  if (!d_->grad.empty()) d_->grad.assign(d_->values.size(), T(0));
}

template <typename T>
T Tensor<T>::item() const {
  check(numel() == 1, "item() requires a scalar tensor, got " + to_string(shape()));
  return d_->values[0];
}

template <typename T>
T Tensor<T>::at(int64_t n, int64_t c, int64_t y, int64_t x) const {
  return d_->values[static_cast<size_t>(index(n, c, y, x))];
}

template <typename T>
bool Tensor<T>::all_finite() const {
  for (T v : d_->values)
    if (!std::isfinite(static_cast<double>(v))) return false;
  return true;
}

template <typename T>
void Tape<T>::backward(const Tensor<T>& loss) {
  check(loss.defined() && loss.numel() == 1, "backward() requires a scalar loss");
  check(loss.needs_grad(), "loss is not connected to this tape");
  // Reset intermediate gradients so repeated backward calls accumulate
  // exactly one extra pass into the leaves.
  for (auto& node : nodes_)
    for (auto& out : node.outputs) out.zero_grad();
  loss.grad()[0] += T(1);
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) it->backward();
}

template <typename T>
thread_local Tape<T>* Tape<T>::current_ = nullptr;

template class Tensor<float>;
template class Tensor<double>;
template class Tape<float>;
template class Tape<double>;

}  // namespace uve
