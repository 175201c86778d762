#pragma once

// Differentiable operations over Tensor<T>. Every op is a pure function of
// its inputs; when a tape is active and an input participates in it, the op
// records a backward node routing output gradients to input gradients.
//
// Conventions fixed here and matched by the test oracles:
//  - conv2d zero-fills padding; output spatial dim = floor((H+2p-k)/s)+1.
//  - gelu uses the exact erf formulation.
//  - bilinear_upsample samples with half-pixel centers (align-corners=false).
//  - max_pool2d routes gradient to the first maximal element in row-major
//    window order.
//  - l1_loss subgradient at exact ties is 0.
//  - spatial_shift(dx,dy): output(h,w) = input(h-dy, w-dx), zero elsewhere.
//  - pixel_shuffle maps channel c*r*r + i*r + j to offset (i, j) of channel c.

#include <vector>

#include "uve/tensor.hpp"

namespace uve {

struct Conv2dOpts {
  int stride = 1;
  int padding = 0;
  int groups = 1;
};

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight,
                 const Tensor<T>& bias = {}, const Conv2dOpts& opts = {});

// 3x3 depthwise convolution (pad 1) followed by a 1x1 pointwise convolution.
template <typename T>
Tensor<T> depthwise_separable(const Tensor<T>& input, const Tensor<T>& dw_weight,
                              const Tensor<T>& dw_bias, const Tensor<T>& pw_weight,
                              const Tensor<T>& pw_bias);

// Normalizes each (sample, channel) plane by its spatial population
// statistics: gamma * (x - mean) / sqrt(var + eps) + beta.
template <typename T>
Tensor<T> instance_norm(const Tensor<T>& input, const Tensor<T>& gamma,
                        const Tensor<T>& beta, T eps = T(1e-5));

template <typename T>
Tensor<T> gelu(const Tensor<T>& input);

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& input);

template <typename T>
Tensor<T> bilinear_upsample(const Tensor<T>& input, int factor);

template <typename T>
Tensor<T> pixel_shuffle(const Tensor<T>& input, int r);

template <typename T>
Tensor<T> spatial_shift(const Tensor<T>& input, int dx, int dy);

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& input);

template <typename T>
Tensor<T> max_pool2d(const Tensor<T>& input, int k = 2, int stride = 2);

template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& inputs);

template <typename T>
std::vector<Tensor<T>> split_channels(const Tensor<T>& input, int parts);

// Mean absolute error over all elements; returns a scalar tensor.
template <typename T>
Tensor<T> l1_loss(const Tensor<T>& pred, const Tensor<T>& target);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

// x * gate with gate shaped (N, C, 1, 1), broadcast over space.
template <typename T>
Tensor<T> mul_gate(const Tensor<T>& x, const Tensor<T>& gate);

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T s);

template <typename T>
Tensor<T> clamp01(const Tensor<T>& x);

template <typename T>
Tensor<T> sum(const Tensor<T>& x);

template <typename T>
Tensor<T> mean(const Tensor<T>& x);

// Mirror padding with edge pixels included (period-2H fold), so any pad
// amount is valid.
template <typename T>
Tensor<T> reflect_pad(const Tensor<T>& x, int top, int bottom, int left, int right);

template <typename T>
Tensor<T> crop(const Tensor<T>& x, int top, int left, int height, int width);

// Reinterprets (N, C, H, W) as (n2, c2, H, W) with n2*c2 == N*C. Row-major
// order makes this a pure relabeling of the same element sequence.
template <typename T>
Tensor<T> reshape_channels(const Tensor<T>& x, int64_t n2, int64_t c2);

#define UVE_DECL_OPS(T)                                                          \
  extern template Tensor<T> conv2d<T>(const Tensor<T>&, const Tensor<T>&,        \
                                      const Tensor<T>&, const Conv2dOpts&);      \
  extern template Tensor<T> depthwise_separable<T>(                              \
      const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,    \
      const Tensor<T>&);                                                         \
  extern template Tensor<T> instance_norm<T>(const Tensor<T>&, const Tensor<T>&, \
                                             const Tensor<T>&, T);               \
  extern template Tensor<T> gelu<T>(const Tensor<T>&);                           \
  extern template Tensor<T> sigmoid<T>(const Tensor<T>&);                        \
  extern template Tensor<T> bilinear_upsample<T>(const Tensor<T>&, int);         \
  extern template Tensor<T> pixel_shuffle<T>(const Tensor<T>&, int);             \
  extern template Tensor<T> spatial_shift<T>(const Tensor<T>&, int, int);        \
  extern template Tensor<T> global_avg_pool<T>(const Tensor<T>&);                \
  extern template Tensor<T> max_pool2d<T>(const Tensor<T>&, int, int);           \
  extern template Tensor<T> concat_channels<T>(const std::vector<Tensor<T>>&);   \
  extern template std::vector<Tensor<T>> split_channels<T>(const Tensor<T>&,     \
                                                           int);                 \
  extern template Tensor<T> l1_loss<T>(const Tensor<T>&, const Tensor<T>&);      \
  extern template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);          \
  extern template Tensor<T> mul<T>(const Tensor<T>&, const Tensor<T>&);          \
  extern template Tensor<T> mul_gate<T>(const Tensor<T>&, const Tensor<T>&);     \
  extern template Tensor<T> scale<T>(const Tensor<T>&, T);                       \
  extern template Tensor<T> clamp01<T>(const Tensor<T>&);                        \
  extern template Tensor<T> sum<T>(const Tensor<T>&);                            \
  extern template Tensor<T> mean<T>(const Tensor<T>&);                           \
  extern template Tensor<T> reflect_pad<T>(const Tensor<T>&, int, int, int, int);\
  extern template Tensor<T> crop<T>(const Tensor<T>&, int, int, int, int);       \
  extern template Tensor<T> reshape_channels<T>(const Tensor<T>&, int64_t, int64_t);

UVE_DECL_OPS(float)
UVE_DECL_OPS(double)
#undef UVE_DECL_OPS

}  // namespace uve
