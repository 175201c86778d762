#include "uve/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "uve/parallel.hpp"

namespace uve {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

int64_t div_floor(int64_t a, int64_t b) {
  return a >= 0 ? a / b : -((-a + b - 1) / b);
}

int64_t div_ceil(int64_t a, int64_t b) {
  return a > 0 ? (a + b - 1) / b : -((-a) / b);
}

// Valid output range [lo, hi) such that o*stride + k - pad lands in [0, limit).
void tap_range(int64_t out_dim, int64_t limit, int64_t stride, int64_t k,
               int64_t pad, int64_t& lo, int64_t& hi) {
  lo = std::max<int64_t>(0, div_ceil(pad - k, stride));
  hi = std::min<int64_t>(out_dim, div_floor(limit - 1 + pad - k, stride) + 1);
}

template <typename T>
void record1(const Tensor<T>& out, std::function<void()> fn) {
  Tape<T>::current()->record({out}, std::move(fn));
}

}  // namespace

// ---------------------------------------------------------------------------
// conv2d

namespace {

template <typename T>
void conv2d_forward_kernel(const Tensor<T>& x, const Tensor<T>& w,
                           const Tensor<T>& bias, const Conv2dOpts& o,
                           Tensor<T>& y) {
  const auto [N, Cin, H, W] = x.shape();
  const auto [Cout, Cg, KH, KW] = w.shape();
  const int64_t OH = y.shape().h, OW = y.shape().w;
  const int64_t Mg = Cout / o.groups;
  const T* xp = x.values().data();
  const T* wp = w.values().data();
  const T* bp = bias.defined() ? bias.values().data() : nullptr;
  T* yp = y.raw_values().data();

  auto run = [&](int64_t item_lo, int64_t item_hi) {
    for (int64_t item = item_lo; item < item_hi; ++item) {
      const int64_t n = item / Cout, oc = item % Cout;
      const int64_t g = oc / Mg;
      T* ybase = yp + (n * Cout + oc) * OH * OW;
      for (int64_t icl = 0; icl < Cg; ++icl) {
        const int64_t ic = g * Cg + icl;
        const T* xbase = xp + (n * Cin + ic) * H * W;
        for (int64_t kh = 0; kh < KH; ++kh) {
          int64_t oh_lo, oh_hi;
          tap_range(OH, H, o.stride, kh, o.padding, oh_lo, oh_hi);
          for (int64_t kw = 0; kw < KW; ++kw) {
            const T wv = wp[((oc * Cg + icl) * KH + kh) * KW + kw];
            int64_t ow_lo, ow_hi;
            tap_range(OW, W, o.stride, kw, o.padding, ow_lo, ow_hi);
            for (int64_t oh = oh_lo; oh < oh_hi; ++oh) {
              const int64_t ih = oh * o.stride + kh - o.padding;
              const T* xrow = xbase + ih * W + (kw - o.padding);
              T* yrow = ybase + oh * OW;
              if (o.stride == 1) {
                for (int64_t ow = ow_lo; ow < ow_hi; ++ow)
                  yrow[ow] += wv * xrow[ow];
              } else {
                for (int64_t ow = ow_lo; ow < ow_hi; ++ow)
                  yrow[ow] += wv * xrow[ow * o.stride];
              }
            }
          }
        }
      }
      if (bp) {
        const T bv = bp[oc];
        for (int64_t i = 0; i < OH * OW; ++i) ybase[i] += bv;
      }
    }
  };

  const int64_t work = N * Cout * Cg * KH * KW * OH * OW;
  if (work < 16384) {
    run(0, N * Cout);
  } else {
    parallel_for(N * Cout, run);
  }
}

template <typename T>
void conv2d_backward_input(const Tensor<T>& x, const Tensor<T>& w,
                           const Conv2dOpts& o, const Tensor<T>& y) {
  const auto [N, Cin, H, W] = x.shape();
  const auto [Cout, Cg, KH, KW] = w.shape();
  const int64_t OH = y.shape().h, OW = y.shape().w;
  const int64_t Mg = Cout / o.groups;
  const T* wp = w.values().data();
  const T* gyp = y.grad().data();
  T* gxp = x.grad().data();

  auto run = [&](int64_t item_lo, int64_t item_hi) {
    for (int64_t item = item_lo; item < item_hi; ++item) {
      const int64_t n = item / Cin, ic = item % Cin;
      const int64_t g = ic / Cg, icl = ic % Cg;
      T* gxbase = gxp + (n * Cin + ic) * H * W;
      for (int64_t m = 0; m < Mg; ++m) {
        const int64_t oc = g * Mg + m;
        const T* gybase = gyp + (n * Cout + oc) * OH * OW;
        for (int64_t kh = 0; kh < KH; ++kh) {
          int64_t oh_lo, oh_hi;
          tap_range(OH, H, o.stride, kh, o.padding, oh_lo, oh_hi);
          for (int64_t kw = 0; kw < KW; ++kw) {
            const T wv = wp[((oc * Cg + icl) * KH + kh) * KW + kw];
            int64_t ow_lo, ow_hi;
            tap_range(OW, W, o.stride, kw, o.padding, ow_lo, ow_hi);
            for (int64_t oh = oh_lo; oh < oh_hi; ++oh) {
              const int64_t ih = oh * o.stride + kh - o.padding;
              T* gxrow = gxbase + ih * W + (kw - o.padding);
              const T* gyrow = gybase + oh * OW;
              if (o.stride == 1) {
                for (int64_t ow = ow_lo; ow < ow_hi; ++ow)
                  gxrow[ow] += wv * gyrow[ow];
              } else {
                for (int64_t ow = ow_lo; ow < ow_hi; ++ow)
                  gxrow[ow * o.stride] += wv * gyrow[ow];
              }
            }
          }
        }
      }
    }
  };
  parallel_for(N * Cin, run);
}

template <typename T>
void conv2d_backward_weight(const Tensor<T>& x, const Tensor<T>& w,
                            const Tensor<T>& bias, const Conv2dOpts& o,
                            const Tensor<T>& y, bool want_w, bool want_b) {
  const auto [N, Cin, H, W] = x.shape();
  const auto [Cout, Cg, KH, KW] = w.shape();
  const int64_t OH = y.shape().h, OW = y.shape().w;
  const int64_t Mg = Cout / o.groups;
  const T* xp = x.values().data();
  const T* gyp = y.grad().data();
  T* gwp = want_w ? w.grad().data() : nullptr;
  T* gbp = want_b ? bias.grad().data() : nullptr;

  auto run = [&](int64_t oc_lo, int64_t oc_hi) {
    for (int64_t oc = oc_lo; oc < oc_hi; ++oc) {
      const int64_t g = oc / Mg;
      if (gwp) {
        for (int64_t icl = 0; icl < Cg; ++icl) {
          const int64_t ic = g * Cg + icl;
          for (int64_t kh = 0; kh < KH; ++kh) {
            int64_t oh_lo, oh_hi;
            tap_range(OH, H, o.stride, kh, o.padding, oh_lo, oh_hi);
            for (int64_t kw = 0; kw < KW; ++kw) {
              int64_t ow_lo, ow_hi;
              tap_range(OW, W, o.stride, kw, o.padding, ow_lo, ow_hi);
              T acc = 0;
              for (int64_t n = 0; n < N; ++n) {
                const T* xbase = xp + (n * Cin + ic) * H * W;
                const T* gybase = gyp + (n * Cout + oc) * OH * OW;
                for (int64_t oh = oh_lo; oh < oh_hi; ++oh) {
                  const int64_t ih = oh * o.stride + kh - o.padding;
                  const T* xrow = xbase + ih * W + (kw - o.padding);
                  const T* gyrow = gybase + oh * OW;
                  if (o.stride == 1) {
                    for (int64_t ow = ow_lo; ow < ow_hi; ++ow)
                      acc += gyrow[ow] * xrow[ow];
                  } else {
                    for (int64_t ow = ow_lo; ow < ow_hi; ++ow)
                      acc += gyrow[ow] * xrow[ow * o.stride];
                  }
                }
              }
              gwp[((oc * Cg + icl) * KH + kh) * KW + kw] += acc;
            }
          }
        }
      }
      if (gbp) {
        T acc = 0;
        for (int64_t n = 0; n < N; ++n) {
          const T* gybase = gyp + (n * Cout + oc) * OH * OW;
          for (int64_t i = 0; i < OH * OW; ++i) acc += gybase[i];
        }
        gbp[oc] += acc;
      }
    }
  };
  parallel_for(Cout, run);
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight,
                 const Tensor<T>& bias, const Conv2dOpts& opts) {
  check(input.defined() && weight.defined(), "conv2d: undefined operand");
  const Shape xs = input.shape(), ws = weight.shape();
  check(opts.stride >= 1 && opts.padding >= 0 && opts.groups >= 1,
        "conv2d: bad stride/padding/groups");
  check(xs.c % opts.groups == 0,
        "conv2d: input channels " + std::to_string(xs.c) +
            " not divisible by groups " + std::to_string(opts.groups));
  check(ws.n % opts.groups == 0,
        "conv2d: output channels " + std::to_string(ws.n) +
            " not divisible by groups " + std::to_string(opts.groups));
  check(ws.c == xs.c / opts.groups,
        "conv2d: weight expects " + std::to_string(ws.c) +
            " channels per group, input provides " +
            std::to_string(xs.c / opts.groups));
  const int64_t oh = (xs.h + 2 * opts.padding - ws.h) / opts.stride + 1;
  const int64_t ow = (xs.w + 2 * opts.padding - ws.w) / opts.stride + 1;
  check(oh >= 1 && ow >= 1, "conv2d: kernel larger than padded input");
  if (bias.defined())
    check(bias.shape() == Shape{1, ws.n, 1, 1},
          "conv2d: bias must be (1," + std::to_string(ws.n) + ",1,1)");

  Tensor<T> y = Tensor<T>::zeros({xs.n, ws.n, oh, ow});
  conv2d_forward_kernel(input, weight, bias, opts, y);

  const bool rec = Tape<T>::current() &&
                   (input.needs_grad() || weight.needs_grad() ||
                    (bias.defined() && bias.needs_grad()));
  if (rec) {
    y.mark_needs_grad();
    record1(y, [input, weight, bias, opts, y]() {
      if (!y.has_grad()) return;
      if (input.needs_grad()) conv2d_backward_input(input, weight, opts, y);
      const bool want_w = weight.needs_grad();
      const bool want_b = bias.defined() && bias.needs_grad();
      if (want_w || want_b)
        conv2d_backward_weight(input, weight, bias, opts, y, want_w, want_b);
    });
  }
  return y;
}

template <typename T>
Tensor<T> depthwise_separable(const Tensor<T>& input, const Tensor<T>& dw_weight,
                              const Tensor<T>& dw_bias, const Tensor<T>& pw_weight,
                              const Tensor<T>& pw_bias) {
  const int64_t c = input.shape().c;
  check(dw_weight.shape().n == c && dw_weight.shape().c == 1,
        "depthwise_separable: dw weight must be (C,1,k,k)");
  Tensor<T> mid = conv2d(input, dw_weight, dw_bias,
                         {.stride = 1, .padding = 1, .groups = static_cast<int>(c)});
  return conv2d(mid, pw_weight, pw_bias, {});
}

// ---------------------------------------------------------------------------
// instance_norm

template <typename T>
Tensor<T> instance_norm(const Tensor<T>& input, const Tensor<T>& gamma,
                        const Tensor<T>& beta, T eps) {
  const Shape s = input.shape();
  check(s.h * s.w >= 1, "instance_norm: empty spatial extent");
  check(gamma.shape() == Shape{1, s.c, 1, 1} && beta.shape() == Shape{1, s.c, 1, 1},
        "instance_norm: gamma/beta must be (1,C,1,1)");
  const int64_t m = s.h * s.w;
  Tensor<T> y = Tensor<T>::zeros(s);
  std::vector<T> mu(static_cast<size_t>(s.n * s.c)), inv(mu.size());
  {
    const T* xp = input.values().data();
    const T* gp = gamma.values().data();
    const T* bp = beta.values().data();
    T* yp = y.raw_values().data();
    for (int64_t nc = 0; nc < s.n * s.c; ++nc) {
      const T* plane = xp + nc * m;
      double acc = 0;
      for (int64_t i = 0; i < m; ++i) acc += plane[i];
      const T mean_v = static_cast<T>(acc / static_cast<double>(m));
      double var = 0;
      for (int64_t i = 0; i < m; ++i) {
        const double d = static_cast<double>(plane[i] - mean_v);
        var += d * d;
      }
      const T inv_v =
          static_cast<T>(1.0 / std::sqrt(var / static_cast<double>(m) +
                                         static_cast<double>(eps)));
      mu[nc] = mean_v;
      inv[nc] = inv_v;
      const int64_t c = nc % s.c;
      T* out = yp + nc * m;
      for (int64_t i = 0; i < m; ++i)
        out[i] = gp[c] * (plane[i] - mean_v) * inv_v + bp[c];
    }
  }

  if (Tape<T>::current() &&
      (input.needs_grad() || gamma.needs_grad() || beta.needs_grad())) {
    y.mark_needs_grad();
    record1(y, [input, gamma, beta, y, mu = std::move(mu), inv = std::move(inv),
                m]() {
      if (!y.has_grad()) return;
      const Shape s = input.shape();
      const T* xp = input.values().data();
      const T* gp = gamma.values().data();
      const T* gyp = y.grad().data();
      T* ggamma = gamma.needs_grad() ? gamma.grad().data() : nullptr;
      T* gbeta = beta.needs_grad() ? beta.grad().data() : nullptr;
      T* gx = input.needs_grad() ? input.grad().data() : nullptr;
      for (int64_t nc = 0; nc < s.n * s.c; ++nc) {
        const int64_t c = nc % s.c;
        const T* plane = xp + nc * m;
        const T* gy = gyp + nc * m;
        double s1 = 0, s2 = 0;
        for (int64_t i = 0; i < m; ++i) {
          const double xhat = (plane[i] - mu[nc]) * inv[nc];
          s1 += gy[i];
          s2 += gy[i] * xhat;
        }
        if (gbeta) gbeta[c] += static_cast<T>(s1);
        if (ggamma) ggamma[c] += static_cast<T>(s2);
        if (gx) {
          const T k = gp[c] * inv[nc];
          const T m1 = static_cast<T>(s1 / static_cast<double>(m));
          const T m2 = static_cast<T>(s2 / static_cast<double>(m));
          T* out = gx + nc * m;
          for (int64_t i = 0; i < m; ++i) {
            const T xhat = (plane[i] - mu[nc]) * inv[nc];
            out[i] += k * (gy[i] - m1 - xhat * m2);
          }
        }
      }
    });
  }
  return y;
}

// ---------------------------------------------------------------------------
// pointwise activations

template <typename T>
Tensor<T> gelu(const Tensor<T>& input) {
  Tensor<T> y = Tensor<T>::zeros(input.shape());
  {
    const T* xp = input.values().data();
    T* yp = y.raw_values().data();
    for (int64_t i = 0; i < input.numel(); ++i) {
      const double x = xp[i];
      yp[i] = static_cast<T>(0.5 * x * (1.0 + std::erf(x * kInvSqrt2)));
    }
  }
  if (tape_wants(input)) {
    y.mark_needs_grad();
    record1(y, [input, y]() {
      if (!y.has_grad() || !input.needs_grad()) return;
      const T* xp = input.values().data();
      const T* gyp = y.grad().data();
      T* gx = input.grad().data();
      for (int64_t i = 0; i < input.numel(); ++i) {
        const double x = xp[i];
        const double phi = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
        const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
        gx[i] += gyp[i] * static_cast<T>(phi + x * pdf);
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& input) {
  Tensor<T> y = Tensor<T>::zeros(input.shape());
  {
    const T* xp = input.values().data();
    T* yp = y.raw_values().data();
    for (int64_t i = 0; i < input.numel(); ++i)
      yp[i] = static_cast<T>(1.0 / (1.0 + std::exp(-static_cast<double>(xp[i]))));
  }
  if (tape_wants(input)) {
    y.mark_needs_grad();
    record1(y, [input, y]() {
      if (!y.has_grad() || !input.needs_grad()) return;
      const T* yp = y.values().data();
      const T* gyp = y.grad().data();
      T* gx = input.grad().data();
      for (int64_t i = 0; i < y.numel(); ++i)
        gx[i] += gyp[i] * yp[i] * (T(1) - yp[i]);
    });
  }
  return y;
}

// ---------------------------------------------------------------------------
// resampling

namespace {

struct LerpTap {
  int64_t i0, i1;
  double w1;  // weight of i1; i0 gets 1-w1
};

LerpTap upsample_tap(int64_t o, int factor, int64_t limit) {
  double src = (static_cast<double>(o) + 0.5) / factor - 0.5;
  src = std::clamp(src, 0.0, static_cast<double>(limit - 1));
  const int64_t i0 = static_cast<int64_t>(std::floor(src));
  return {i0, std::min(i0 + 1, limit - 1), src - static_cast<double>(i0)};
}

}  // namespace

template <typename T>
Tensor<T> bilinear_upsample(const Tensor<T>& input, int factor) {
  check(factor >= 1, "bilinear_upsample: factor must be >= 1");
  const Shape s = input.shape();
  check(s.h >= 1 && s.w >= 1, "bilinear_upsample: empty input");
  const Shape os{s.n, s.c, s.h * factor, s.w * factor};
  Tensor<T> y = Tensor<T>::zeros(os);
  {
    const T* xp = input.values().data();
    T* yp = y.raw_values().data();
    for (int64_t nc = 0; nc < s.n * s.c; ++nc) {
      const T* plane = xp + nc * s.h * s.w;
      T* out = yp + nc * os.h * os.w;
      for (int64_t oh = 0; oh < os.h; ++oh) {
        const LerpTap ty = upsample_tap(oh, factor, s.h);
        for (int64_t ow = 0; ow < os.w; ++ow) {
          const LerpTap tx = upsample_tap(ow, factor, s.w);
          const double v =
              (1 - ty.w1) * ((1 - tx.w1) * plane[ty.i0 * s.w + tx.i0] +
                             tx.w1 * plane[ty.i0 * s.w + tx.i1]) +
              ty.w1 * ((1 - tx.w1) * plane[ty.i1 * s.w + tx.i0] +
                       tx.w1 * plane[ty.i1 * s.w + tx.i1]);
          out[oh * os.w + ow] = static_cast<T>(v);
        }
      }
    }
  }
  if (tape_wants(input)) {
    y.mark_needs_grad();
    record1(y, [input, y, factor]() {
      if (!y.has_grad() || !input.needs_grad()) return;
      const Shape s = input.shape();
      const Shape os = y.shape();
      const T* gyp = y.grad().data();
      T* gx = input.grad().data();
      for (int64_t nc = 0; nc < s.n * s.c; ++nc) {
        const T* gy = gyp + nc * os.h * os.w;
        T* out = gx + nc * s.h * s.w;
        for (int64_t oh = 0; oh < os.h; ++oh) {
          const LerpTap ty = upsample_tap(oh, factor, s.h);
          for (int64_t ow = 0; ow < os.w; ++ow) {
            const LerpTap tx = upsample_tap(ow, factor, s.w);
            const T g = gy[oh * os.w + ow];
            out[ty.i0 * s.w + tx.i0] += static_cast<T>((1 - ty.w1) * (1 - tx.w1)) * g;
            out[ty.i0 * s.w + tx.i1] += static_cast<T>((1 - ty.w1) * tx.w1) * g;
            out[ty.i1 * s.w + tx.i0] += static_cast<T>(ty.w1 * (1 - tx.w1)) * g;
            out[ty.i1 * s.w + tx.i1] += static_cast<T>(ty.w1 * tx.w1) * g;
          }
        }
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> pixel_shuffle(const Tensor<T>& input, int r) {
  const Shape s = input.shape();
  check(r >= 1, "pixel_shuffle: r must be >= 1");
  check(s.c % (static_cast<int64_t>(r) * r) == 0,
        "pixel_shuffle: channels " + std::to_string(s.c) +
            " not divisible by r^2 = " + std::to_string(r * r));
  const Shape os{s.n, s.c / (r * r), s.h * r, s.w * r};
  Tensor<T> y = Tensor<T>::zeros(os);
  {
    const T* xp = input.values().data();
    T* yp = y.raw_values().data();
    for (int64_t n = 0; n < s.n; ++n)
      for (int64_t c = 0; c < os.c; ++c)
        for (int64_t i = 0; i < r; ++i)
          for (int64_t j = 0; j < r; ++j) {
            const T* src = xp + ((n * s.c + c * r * r + i * r + j) * s.h) * s.w;
            T* dst = yp + (n * os.c + c) * os.h * os.w;
            for (int64_t h = 0; h < s.h; ++h)
              for (int64_t w = 0; w < s.w; ++w)
                dst[(h * r + i) * os.w + (w * r + j)] = src[h * s.w + w];
          }
  }
  if (tape_wants(input)) {
    y.mark_needs_grad();
    record1(y, [input, y, r]() {
      if (!y.has_grad() || !input.needs_grad()) return;
      const Shape s = input.shape();
      const Shape os = y.shape();
      const T* gyp = y.grad().data();
      T* gx = input.grad().data();
      for (int64_t n = 0; n < s.n; ++n)
        for (int64_t c = 0; c < os.c; ++c)
          for (int64_t i = 0; i < r; ++i)
            for (int64_t j = 0; j < r; ++j) {
              T* dst = gx + ((n * s.c + c * r * r + i * r + j) * s.h) * s.w;
              const T* src = gyp + (n * os.c + c) * os.h * os.w;
              for (int64_t h = 0; h < s.h; ++h)
                for (int64_t w = 0; w < s.w; ++w)
                  dst[h * s.w + w] += src[(h * r + i) * os.w + (w * r + j)];
            }
    });
  }
  return y;
}

template <typename T>
Tensor<T> spatial_shift(const Tensor<T>& input, int dx, int dy) {
  const Shape s = input.shape();
  Tensor<T> y = Tensor<T>::zeros(s);
  {
    const T* xp = input.values().data();
    T* yp = y.raw_values().data();
    for (int64_t nc = 0; nc < s.n * s.c; ++nc) {
      const T* plane = xp + nc * s.h * s.w;
      T* out = yp + nc * s.h * s.w;
      for (int64_t h = 0; h < s.h; ++h) {
        const int64_t sh = h - dy;
        if (sh < 0 || sh >= s.h) continue;
        const int64_t w_lo = std::max<int64_t>(0, dx);
        const int64_t w_hi = std::min<int64_t>(s.w, s.w + dx);
        for (int64_t w = w_lo; w < w_hi; ++w)
          out[h * s.w + w] = plane[sh * s.w + (w - dx)];
      }
    }
  }
  if (tape_wants(input)) {
    y.mark_needs_grad();
    record1(y, [input, y, dx, dy]() {
      if (!y.has_grad() || !input.needs_grad()) return;
      const Shape s = input.shape();
      const T* gyp = y.grad().data();
      T* gx = input.grad().data();
      for (int64_t nc = 0; nc < s.n * s.c; ++nc) {
        const T* gy = gyp + nc * s.h * s.w;
        T* out = gx + nc * s.h * s.w;
        for (int64_t h = 0; h < s.h; ++h) {
          const int64_t sh = h - dy;  // grad flows back to the source pixel
          if (sh < 0 || sh >= s.h) continue;
          const int64_t w_lo = std::max<int64_t>(0, dx);
          const int64_t w_hi = std::min<int64_t>(s.w, s.w + dx);
          for (int64_t w = w_lo; w < w_hi; ++w)
            out[sh * s.w + (w - dx)] += gy[h * s.w + w];
        }
      }
    });
  }
  return y;
}

// ---------------------------------------------------------------------------
// pooling

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& input) {
  const Shape s = input.shape();
  const int64_t m = s.h * s.w;
  check(m >= 1, "global_avg_pool: empty spatial extent");
  Tensor<T> y = Tensor<T>::zeros({s.n, s.c, 1, 1});
  {
    const T* xp = input.values().data();
    T* yp = y.raw_values().data();
    for (int64_t nc = 0; nc < s.n * s.c; ++nc) {
      double acc = 0;
      const T* plane = xp + nc * m;
      for (int64_t i = 0; i < m; ++i) acc += plane[i];
      yp[nc] = static_cast<T>(acc / static_cast<double>(m));
    }
  }
  if (tape_wants(input)) {
    y.mark_needs_grad();
    record1(y, [input, y, m]() {
      if (!y.has_grad() || !input.needs_grad()) return;
      const Shape s = input.shape();
      const T* gyp = y.grad().data();
      T* gx = input.grad().data();
      for (int64_t nc = 0; nc < s.n * s.c; ++nc) {
        const T g = gyp[nc] / static_cast<T>(m);
        T* out = gx + nc * m;
        for (int64_t i = 0; i < m; ++i) out[i] += g;
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> max_pool2d(const Tensor<T>& input, int k, int stride) {
  const Shape s = input.shape();
  check(k >= 1 && stride >= 1, "max_pool2d: bad kernel/stride");
  const int64_t oh = (s.h - k) / stride + 1;
  const int64_t ow = (s.w - k) / stride + 1;
  check(oh >= 1 && ow >= 1, "max_pool2d: window larger than input");
  Tensor<T> y = Tensor<T>::zeros({s.n, s.c, oh, ow});
  std::vector<int64_t> argmax(static_cast<size_t>(y.numel()));
  {
    const T* xp = input.values().data();
    T* yp = y.raw_values().data();
    for (int64_t nc = 0; nc < s.n * s.c; ++nc) {
      const T* plane = xp + nc * s.h * s.w;
      for (int64_t r = 0; r < oh; ++r)
        for (int64_t c = 0; c < ow; ++c) {
          int64_t best = (r * stride) * s.w + c * stride;
          T best_v = plane[best];
          for (int64_t i = 0; i < k; ++i)
            for (int64_t j = 0; j < k; ++j) {
              const int64_t idx = (r * stride + i) * s.w + (c * stride + j);
              if (plane[idx] > best_v) {  // strict: ties keep the first
                best_v = plane[idx];
                best = idx;
              }
            }
          const int64_t oidx = nc * oh * ow + r * ow + c;
          yp[oidx] = best_v;
          argmax[static_cast<size_t>(oidx)] = best;
        }
    }
  }
  if (tape_wants(input)) {
    y.mark_needs_grad();
    record1(y, [input, y, argmax = std::move(argmax)]() {
      if (!y.has_grad() || !input.needs_grad()) return;
      const Shape s = input.shape();
      const int64_t m = s.h * s.w;
      const int64_t om = y.shape().h * y.shape().w;
      const T* gyp = y.grad().data();
      T* gx = input.grad().data();
      for (int64_t nc = 0; nc < s.n * s.c; ++nc)
        for (int64_t i = 0; i < om; ++i)
          gx[nc * m + argmax[static_cast<size_t>(nc * om + i)]] +=
              gyp[nc * om + i];
    });
  }
  return y;
}

// ---------------------------------------------------------------------------
// channel plumbing

template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& inputs) {
  check(!inputs.empty(), "concat_channels: no inputs");
  const Shape first = inputs[0].shape();
  int64_t ctotal = 0;
  for (const auto& t : inputs) {
    const Shape s = t.shape();
    check(s.n == first.n && s.h == first.h && s.w == first.w,
          "concat_channels: mismatched N/H/W");
    ctotal += s.c;
  }
  const Shape os{first.n, ctotal, first.h, first.w};
  Tensor<T> y = Tensor<T>::zeros(os);
  const int64_t m = first.h * first.w;
  {
    T* yp = y.raw_values().data();
    for (int64_t n = 0; n < first.n; ++n) {
      int64_t coff = 0;
      for (const auto& t : inputs) {
        const int64_t c = t.shape().c;
        std::memcpy(yp + (n * ctotal + coff) * m,
                    t.values().data() + n * c * m,
                    sizeof(T) * static_cast<size_t>(c * m));
        coff += c;
      }
    }
  }
  bool any = false;
  for (const auto& t : inputs) any = any || t.needs_grad();
  if (Tape<T>::current() && any) {
    y.mark_needs_grad();
    record1(y, [inputs, y]() {
      if (!y.has_grad()) return;
      const Shape os = y.shape();
      const int64_t m = os.h * os.w;
      const T* gyp = y.grad().data();
      for (int64_t n = 0; n < os.n; ++n) {
        int64_t coff = 0;
        for (const auto& t : inputs) {
          const int64_t c = t.shape().c;
          if (t.needs_grad()) {
            T* gx = t.grad().data() + n * c * m;
            const T* gy = gyp + (n * os.c + coff) * m;
            for (int64_t i = 0; i < c * m; ++i) gx[i] += gy[i];
          }
          coff += c;
        }
      }
    });
  }
  return y;
}

template <typename T>
std::vector<Tensor<T>> split_channels(const Tensor<T>& input, int parts) {
  const Shape s = input.shape();
  check(parts >= 1 && s.c % parts == 0,
        "split_channels: channels " + std::to_string(s.c) +
            " not divisible into " + std::to_string(parts) + " parts");
  const int64_t c = s.c / parts;
  const int64_t m = s.h * s.w;
  std::vector<Tensor<T>> outs;
  outs.reserve(static_cast<size_t>(parts));
  const T* xp = input.values().data();
  for (int p = 0; p < parts; ++p) {
    Tensor<T> y = Tensor<T>::zeros({s.n, c, s.h, s.w});
    T* yp = y.raw_values().data();
    for (int64_t n = 0; n < s.n; ++n)
      std::memcpy(yp + n * c * m, xp + (n * s.c + p * c) * m,
                  sizeof(T) * static_cast<size_t>(c * m));
    outs.push_back(std::move(y));
  }
  if (tape_wants(input)) {
    for (auto& o : outs) o.mark_needs_grad();
    Tape<T>::current()->record(outs, [input, outs, parts]() {
      if (!input.needs_grad()) return;
      const Shape s = input.shape();
      const int64_t c = s.c / parts;
      const int64_t m = s.h * s.w;
      T* gx = input.grad().data();
      for (int p = 0; p < parts; ++p) {
        if (!outs[static_cast<size_t>(p)].has_grad()) continue;
        const T* gy = outs[static_cast<size_t>(p)].grad().data();
        for (int64_t n = 0; n < s.n; ++n) {
          T* dst = gx + (n * s.c + p * c) * m;
          const T* src = gy + n * c * m;
          for (int64_t i = 0; i < c * m; ++i) dst[i] += src[i];
        }
      }
    });
  }
  return outs;
}

// ---------------------------------------------------------------------------
// losses and elementwise

template <typename T>
Tensor<T> l1_loss(const Tensor<T>& pred, const Tensor<T>& target) {
  check(pred.shape() == target.shape(), "l1_loss: shape mismatch " +
                                            to_string(pred.shape()) + " vs " +
                                            to_string(target.shape()));
  const int64_t n = pred.numel();
  check(n >= 1, "l1_loss: empty input");
  double acc = 0;
  {
    const T* pp = pred.values().data();
    const T* tp = target.values().data();
    for (int64_t i = 0; i < n; ++i)
      acc += std::abs(static_cast<double>(pp[i]) - static_cast<double>(tp[i]));
  }
  Tensor<T> y = Tensor<T>::full({1, 1, 1, 1}, static_cast<T>(acc / n));
  if (tape_wants(pred, target)) {
    y.mark_needs_grad();
    record1(y, [pred, target, y, n]() {
      if (!y.has_grad()) return;
      const T g = y.grad()[0] / static_cast<T>(n);
      const T* pp = pred.values().data();
      const T* tp = target.values().data();
      T* gp = pred.needs_grad() ? pred.grad().data() : nullptr;
      T* gt = target.needs_grad() ? target.grad().data() : nullptr;
      for (int64_t i = 0; i < n; ++i) {
        const T d = pp[i] - tp[i];
        const T sg = d > T(0) ? g : (d < T(0) ? -g : T(0));
        if (gp) gp[i] += sg;
        if (gt) gt[i] -= sg;
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  check(a.shape() == b.shape(), "add: shape mismatch");
  Tensor<T> y = Tensor<T>::zeros(a.shape());
  {
    const T* ap = a.values().data();
    const T* bp = b.values().data();
    T* yp = y.raw_values().data();
    for (int64_t i = 0; i < a.numel(); ++i) yp[i] = ap[i] + bp[i];
  }
  if (tape_wants(a, b)) {
    y.mark_needs_grad();
    record1(y, [a, b, y]() {
      if (!y.has_grad()) return;
      const T* gy = y.grad().data();
      if (a.needs_grad()) {
        T* ga = a.grad().data();
        for (int64_t i = 0; i < a.numel(); ++i) ga[i] += gy[i];
      }
      if (b.needs_grad()) {
        T* gb = b.grad().data();
        for (int64_t i = 0; i < b.numel(); ++i) gb[i] += gy[i];
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  check(a.shape() == b.shape(), "mul: shape mismatch");
  Tensor<T> y = Tensor<T>::zeros(a.shape());
  {
    const T* ap = a.values().data();
    const T* bp = b.values().data();
    T* yp = y.raw_values().data();
    for (int64_t i = 0; i < a.numel(); ++i) yp[i] = ap[i] * bp[i];
  }
  if (tape_wants(a, b)) {
    y.mark_needs_grad();
    record1(y, [a, b, y]() {
      if (!y.has_grad()) return;
      const T* gy = y.grad().data();
      const T* ap = a.values().data();
      const T* bp = b.values().data();
      if (a.needs_grad()) {
        T* ga = a.grad().data();
        for (int64_t i = 0; i < a.numel(); ++i) ga[i] += gy[i] * bp[i];
      }
      if (b.needs_grad()) {
        T* gb = b.grad().data();
        for (int64_t i = 0; i < b.numel(); ++i) gb[i] += gy[i] * ap[i];
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> mul_gate(const Tensor<T>& x, const Tensor<T>& gate) {
  const Shape s = x.shape();
  check(gate.shape() == Shape{s.n, s.c, 1, 1},
        "mul_gate: gate must be (N,C,1,1), got " + to_string(gate.shape()));
  const int64_t m = s.h * s.w;
  Tensor<T> y = Tensor<T>::zeros(s);
  {
    const T* xp = x.values().data();
    const T* gp = gate.values().data();
    T* yp = y.raw_values().data();
    for (int64_t nc = 0; nc < s.n * s.c; ++nc) {
      const T g = gp[nc];
      for (int64_t i = 0; i < m; ++i) yp[nc * m + i] = xp[nc * m + i] * g;
    }
  }
  if (tape_wants(x, gate)) {
    y.mark_needs_grad();
    record1(y, [x, gate, y, m]() {
      if (!y.has_grad()) return;
      const Shape s = x.shape();
      const T* gyp = y.grad().data();
      const T* xp = x.values().data();
      const T* gp = gate.values().data();
      T* gx = x.needs_grad() ? x.grad().data() : nullptr;
      T* gg = gate.needs_grad() ? gate.grad().data() : nullptr;
      for (int64_t nc = 0; nc < s.n * s.c; ++nc) {
        if (gx) {
          const T g = gp[nc];
          for (int64_t i = 0; i < m; ++i) gx[nc * m + i] += gyp[nc * m + i] * g;
        }
        if (gg) {
          double acc = 0;
          for (int64_t i = 0; i < m; ++i) acc += gyp[nc * m + i] * xp[nc * m + i];
          gg[nc] += static_cast<T>(acc);
        }
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T s) {
  Tensor<T> y = Tensor<T>::zeros(x.shape());
  {
    const T* xp = x.values().data();
    T* yp = y.raw_values().data();
    for (int64_t i = 0; i < x.numel(); ++i) yp[i] = xp[i] * s;
  }
  if (tape_wants(x)) {
    y.mark_needs_grad();
    record1(y, [x, y, s]() {
      if (!y.has_grad() || !x.needs_grad()) return;
      const T* gy = y.grad().data();
      T* gx = x.grad().data();
      for (int64_t i = 0; i < x.numel(); ++i) gx[i] += gy[i] * s;
    });
  }
  return y;
}

template <typename T>
Tensor<T> clamp01(const Tensor<T>& x) {
  Tensor<T> y = Tensor<T>::zeros(x.shape());
  {
    const T* xp = x.values().data();
    T* yp = y.raw_values().data();
    for (int64_t i = 0; i < x.numel(); ++i)
      yp[i] = std::clamp(xp[i], T(0), T(1));
  }
  if (tape_wants(x)) {
    y.mark_needs_grad();
    record1(y, [x, y]() {
      if (!y.has_grad() || !x.needs_grad()) return;
      const T* xp = x.values().data();
      const T* gy = y.grad().data();
      T* gx = x.grad().data();
      for (int64_t i = 0; i < x.numel(); ++i)
        if (xp[i] >= T(0) && xp[i] <= T(1)) gx[i] += gy[i];
    });
  }
  return y;
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  double acc = 0;
  for (const T v : x.values()) acc += v;
  Tensor<T> y = Tensor<T>::full({1, 1, 1, 1}, static_cast<T>(acc));
  if (tape_wants(x)) {
    y.mark_needs_grad();
    record1(y, [x, y]() {
      if (!y.has_grad() || !x.needs_grad()) return;
      const T g = y.grad()[0];
      T* gx = x.grad().data();
      for (int64_t i = 0; i < x.numel(); ++i) gx[i] += g;
    });
  }
  return y;
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  check(x.numel() >= 1, "mean: empty input");
  double acc = 0;
  for (const T v : x.values()) acc += v;
  Tensor<T> y =
      Tensor<T>::full({1, 1, 1, 1}, static_cast<T>(acc / x.numel()));
  if (tape_wants(x)) {
    y.mark_needs_grad();
    record1(y, [x, y]() {
      if (!y.has_grad() || !x.needs_grad()) return;
      const T g = y.grad()[0] / static_cast<T>(x.numel());
      T* gx = x.grad().data();
      for (int64_t i = 0; i < x.numel(); ++i) gx[i] += g;
    });
  }
  return y;
}

// ---------------------------------------------------------------------------
// padding / cropping / reshaping

namespace {

int64_t mirror_fold(int64_t t, int64_t limit) {
  const int64_t period = 2 * limit;
  int64_t m = t % period;
  if (m < 0) m += period;
  return m < limit ? m : period - 1 - m;
}

}  // namespace

template <typename T>
Tensor<T> reflect_pad(const Tensor<T>& x, int top, int bottom, int left,
                      int right) {
  check(top >= 0 && bottom >= 0 && left >= 0 && right >= 0,
        "reflect_pad: negative padding");
  const Shape s = x.shape();
  check(s.h >= 1 && s.w >= 1, "reflect_pad: empty input");
  const Shape os{s.n, s.c, s.h + top + bottom, s.w + left + right};
  Tensor<T> y = Tensor<T>::zeros(os);
  {
    const T* xp = x.values().data();
    T* yp = y.raw_values().data();
    for (int64_t nc = 0; nc < s.n * s.c; ++nc) {
      const T* plane = xp + nc * s.h * s.w;
      T* out = yp + nc * os.h * os.w;
      for (int64_t h = 0; h < os.h; ++h) {
        const int64_t sh = mirror_fold(h - top, s.h);
        for (int64_t w = 0; w < os.w; ++w)
          out[h * os.w + w] = plane[sh * s.w + mirror_fold(w - left, s.w)];
      }
    }
  }
  if (tape_wants(x)) {
    y.mark_needs_grad();
    record1(y, [x, y, top, left]() {
      if (!y.has_grad() || !x.needs_grad()) return;
      const Shape s = x.shape();
      const Shape os = y.shape();
      const T* gyp = y.grad().data();
      T* gx = x.grad().data();
      for (int64_t nc = 0; nc < s.n * s.c; ++nc) {
        const T* gy = gyp + nc * os.h * os.w;
        T* out = gx + nc * s.h * s.w;
        for (int64_t h = 0; h < os.h; ++h) {
          const int64_t sh = mirror_fold(h - top, s.h);
          for (int64_t w = 0; w < os.w; ++w)
            out[sh * s.w + mirror_fold(w - left, s.w)] += gy[h * os.w + w];
        }
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> crop(const Tensor<T>& x, int top, int left, int height, int width) {
  const Shape s = x.shape();
  check(top >= 0 && left >= 0 && height >= 1 && width >= 1 &&
            top + height <= s.h && left + width <= s.w,
        "crop: region out of bounds");
  const Shape os{s.n, s.c, height, width};
  Tensor<T> y = Tensor<T>::zeros(os);
  {
    const T* xp = x.values().data();
    T* yp = y.raw_values().data();
    for (int64_t nc = 0; nc < s.n * s.c; ++nc)
      for (int64_t h = 0; h < height; ++h)
        std::memcpy(yp + (nc * height + h) * width,
                    xp + (nc * s.h + top + h) * s.w + left,
                    sizeof(T) * static_cast<size_t>(width));
  }
  if (tape_wants(x)) {
    y.mark_needs_grad();
    record1(y, [x, y, top, left, height, width]() {
      if (!y.has_grad() || !x.needs_grad()) return;
      const Shape s = x.shape();
      const T* gyp = y.grad().data();
      T* gx = x.grad().data();
      for (int64_t nc = 0; nc < s.n * s.c; ++nc)
        for (int64_t h = 0; h < height; ++h) {
          const T* gy = gyp + (nc * height + h) * width;
          T* out = gx + (nc * s.h + top + h) * s.w + left;
          for (int64_t w = 0; w < width; ++w) out[w] += gy[w];
        }
    });
  }
  return y;
}

template <typename T>
Tensor<T> reshape_channels(const Tensor<T>& x, int64_t n2, int64_t c2) {
  const Shape s = x.shape();
  check(n2 * c2 == s.n * s.c, "reshape_channels: element count mismatch");
  Tensor<T> y = Tensor<T>::from_values(
      {n2, c2, s.h, s.w}, std::vector<T>(x.values().begin(), x.values().end()));
  if (tape_wants(x)) {
    y.mark_needs_grad();
    record1(y, [x, y]() {
      if (!y.has_grad() || !x.needs_grad()) return;
      const T* gy = y.grad().data();
      T* gx = x.grad().data();
      for (int64_t i = 0; i < x.numel(); ++i) gx[i] += gy[i];
    });
  }
  return y;
}

// ---------------------------------------------------------------------------

#define UVE_INST_OPS(T)                                                        \
  template Tensor<T> conv2d<T>(const Tensor<T>&, const Tensor<T>&,             \
                               const Tensor<T>&, const Conv2dOpts&);           \
  template Tensor<T> depthwise_separable<T>(const Tensor<T>&, const Tensor<T>&,\
                                            const Tensor<T>&, const Tensor<T>&,\
                                            const Tensor<T>&);                 \
  template Tensor<T> instance_norm<T>(const Tensor<T>&, const Tensor<T>&,      \
                                      const Tensor<T>&, T);                    \
  template Tensor<T> gelu<T>(const Tensor<T>&);                                \
  template Tensor<T> sigmoid<T>(const Tensor<T>&);                             \
  template Tensor<T> bilinear_upsample<T>(const Tensor<T>&, int);              \
  template Tensor<T> pixel_shuffle<T>(const Tensor<T>&, int);                  \
  template Tensor<T> spatial_shift<T>(const Tensor<T>&, int, int);             \
  template Tensor<T> global_avg_pool<T>(const Tensor<T>&);                     \
  template Tensor<T> max_pool2d<T>(const Tensor<T>&, int, int);                \
  template Tensor<T> concat_channels<T>(const std::vector<Tensor<T>>&);        \
  template std::vector<Tensor<T>> split_channels<T>(const Tensor<T>&, int);    \
  template Tensor<T> l1_loss<T>(const Tensor<T>&, const Tensor<T>&);           \
  template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);               \
  template Tensor<T> mul<T>(const Tensor<T>&, const Tensor<T>&);               \
  template Tensor<T> mul_gate<T>(const Tensor<T>&, const Tensor<T>&);          \
  template Tensor<T> scale<T>(const Tensor<T>&, T);                            \
  template Tensor<T> clamp01<T>(const Tensor<T>&);                             \
  template Tensor<T> sum<T>(const Tensor<T>&);                                 \
  template Tensor<T> mean<T>(const Tensor<T>&);                                \
  template Tensor<T> reflect_pad<T>(const Tensor<T>&, int, int, int, int);     \
  template Tensor<T> crop<T>(const Tensor<T>&, int, int, int, int);            \
  template Tensor<T> reshape_channels<T>(const Tensor<T>&, int64_t, int64_t);

UVE_INST_OPS(float)
UVE_INST_OPS(double)
#undef UVE_INST_OPS

}  // namespace uve
