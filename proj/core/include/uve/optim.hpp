#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "uve/tensor.hpp"

namespace uve {

// Bias-corrected Adam. Moment buffers are sized to the parameter list on the
// first step; the parameter list must stay stable across steps.
template <typename T>
struct AdamState {
  int64_t step = 0;
  T beta1 = T(0.9);
  T beta2 = T(0.999);
  T eps = T(1e-8);
  T lr = T(1e-3);
  std::vector<std::vector<T>> m, v;
};

// One update from the gradients currently stored on the parameters.
// A parameter whose gradient buffer was never touched is treated as zero.
template <typename T>
void adam_step(std::span<Tensor<T>> params, AdamState<T>& state);

struct CosineSchedule {
  double lr0 = 4e-4;
  double eta_min = 0.0;
  int64_t t_max = 1;
};

// eta_min + (lr0 - eta_min) * (1 + cos(pi * t / t_max)) / 2, t clamped to
// [0, t_max]. Monotone non-increasing, lr(0) = lr0, lr(t_max) = eta_min.
double cosine_lr(const CosineSchedule& sched, int64_t t);

extern template struct AdamState<float>;
extern template struct AdamState<double>;
extern template void adam_step<float>(std::span<Tensor<float>>, AdamState<float>&);
extern template void adam_step<double>(std::span<Tensor<double>>, AdamState<double>&);

}  // namespace uve
