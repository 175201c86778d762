#pragma once

// Naive reference implementations used to cross-check the engine kernels and
// the metric implementations. Everything here is written as a direct
// transcription of the defining formula (quadruple loops, per-window scans,
// explicit bounds checks) and shares no code with the implementations under
// test.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "uve/image.hpp"

namespace oracle {

struct Dims {
  int64_t n = 0, c = 0, h = 0, w = 0;
  int64_t numel() const { return n * c * h * w; }
};

inline int64_t idx(const Dims& d, int64_t n, int64_t c, int64_t y, int64_t x) {
  return ((n * d.c + c) * d.h + y) * d.w + x;
}

// ---------------------------------------------------------------------------
// engine kernels

inline std::vector<double> conv2d(const std::vector<double>& x, const Dims& xd,
                                  const std::vector<double>& w, const Dims& wd,
                                  const std::vector<double>& bias, int stride,
                                  int pad, int groups, Dims& out_dims) {
  const int64_t cg = xd.c / groups;
  const int64_t mg = wd.n / groups;
  out_dims = {xd.n, wd.n, (xd.h + 2 * pad - wd.h) / stride + 1,
              (xd.w + 2 * pad - wd.w) / stride + 1};
  std::vector<double> y(static_cast<size_t>(out_dims.numel()), 0.0);
  for (int64_t n = 0; n < xd.n; ++n)
    for (int64_t oc = 0; oc < wd.n; ++oc) {
      const int64_t g = oc / mg;
      for (int64_t oh = 0; oh < out_dims.h; ++oh)
        for (int64_t ow = 0; ow < out_dims.w; ++ow) {
          double acc = bias.empty() ? 0.0 : bias[static_cast<size_t>(oc)];
          for (int64_t icl = 0; icl < cg; ++icl)
            for (int64_t kh = 0; kh < wd.h; ++kh)
              for (int64_t kw = 0; kw < wd.w; ++kw) {
                const int64_t ih = oh * stride + kh - pad;
                const int64_t iw = ow * stride + kw - pad;
                if (ih < 0 || ih >= xd.h || iw < 0 || iw >= xd.w) continue;
                acc += w[static_cast<size_t>(
                           idx(wd, oc, icl, kh, kw))] *
                       x[static_cast<size_t>(idx(xd, n, g * cg + icl, ih, iw))];
              }
          y[static_cast<size_t>(idx(out_dims, n, oc, oh, ow))] = acc;
        }
    }
  return y;
}

inline std::vector<double> max_pool2d(const std::vector<double>& x,
                                      const Dims& xd, int k, int stride,
                                      Dims& out_dims) {
  out_dims = {xd.n, xd.c, (xd.h - k) / stride + 1, (xd.w - k) / stride + 1};
  std::vector<double> y(static_cast<size_t>(out_dims.numel()));
  for (int64_t n = 0; n < xd.n; ++n)
    for (int64_t c = 0; c < xd.c; ++c)
      for (int64_t oh = 0; oh < out_dims.h; ++oh)
        for (int64_t ow = 0; ow < out_dims.w; ++ow) {
          double best = -1e300;
          for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j)
              best = std::max(best, x[static_cast<size_t>(idx(
                                        xd, n, c, oh * stride + i,
                                        ow * stride + j))]);
          y[static_cast<size_t>(idx(out_dims, n, c, oh, ow))] = best;
        }
  return y;
}

inline std::vector<double> global_avg_pool(const std::vector<double>& x,
                                           const Dims& xd) {
  std::vector<double> y(static_cast<size_t>(xd.n * xd.c));
  for (int64_t n = 0; n < xd.n; ++n)
    for (int64_t c = 0; c < xd.c; ++c) {
      double acc = 0;
      for (int64_t h = 0; h < xd.h; ++h)
        for (int64_t w = 0; w < xd.w; ++w)
          acc += x[static_cast<size_t>(idx(xd, n, c, h, w))];
      y[static_cast<size_t>(n * xd.c + c)] =
          acc / static_cast<double>(xd.h * xd.w);
    }
  return y;
}

// Half-pixel-center bilinear sampling, written per output pixel.
inline std::vector<double> bilinear_upsample(const std::vector<double>& x,
                                             const Dims& xd, int factor,
                                             Dims& out_dims) {
  out_dims = {xd.n, xd.c, xd.h * factor, xd.w * factor};
  std::vector<double> y(static_cast<size_t>(out_dims.numel()));
  auto sample = [&](int64_t n, int64_t c, double sy, double sx) {
    sy = std::clamp(sy, 0.0, static_cast<double>(xd.h - 1));
    sx = std::clamp(sx, 0.0, static_cast<double>(xd.w - 1));
    const int64_t y0 = static_cast<int64_t>(std::floor(sy));
    const int64_t x0 = static_cast<int64_t>(std::floor(sx));
    const int64_t y1 = std::min(y0 + 1, xd.h - 1);
    const int64_t x1 = std::min(x0 + 1, xd.w - 1);
    const double fy = sy - static_cast<double>(y0);
    const double fx = sx - static_cast<double>(x0);
    const double v00 = x[static_cast<size_t>(idx(xd, n, c, y0, x0))];
    const double v01 = x[static_cast<size_t>(idx(xd, n, c, y0, x1))];
    const double v10 = x[static_cast<size_t>(idx(xd, n, c, y1, x0))];
    const double v11 = x[static_cast<size_t>(idx(xd, n, c, y1, x1))];
    return (1 - fy) * ((1 - fx) * v00 + fx * v01) +
           fy * ((1 - fx) * v10 + fx * v11);
  };
  for (int64_t n = 0; n < xd.n; ++n)
    for (int64_t c = 0; c < xd.c; ++c)
      for (int64_t oh = 0; oh < out_dims.h; ++oh)
        for (int64_t ow = 0; ow < out_dims.w; ++ow)
          y[static_cast<size_t>(idx(out_dims, n, c, oh, ow))] =
              sample(n, c, (oh + 0.5) / factor - 0.5, (ow + 0.5) / factor - 0.5);
  return y;
}

inline std::vector<double> pixel_shuffle(const std::vector<double>& x,
                                         const Dims& xd, int r,
                                         Dims& out_dims) {
  out_dims = {xd.n, xd.c / (r * r), xd.h * r, xd.w * r};
  std::vector<double> y(static_cast<size_t>(out_dims.numel()));
  for (int64_t n = 0; n < out_dims.n; ++n)
    for (int64_t c = 0; c < out_dims.c; ++c)
      for (int64_t oh = 0; oh < out_dims.h; ++oh)
        for (int64_t ow = 0; ow < out_dims.w; ++ow) {
          const int64_t i = oh % r, j = ow % r;
          y[static_cast<size_t>(idx(out_dims, n, c, oh, ow))] =
              x[static_cast<size_t>(
                  idx(xd, n, c * r * r + i * r + j, oh / r, ow / r))];
        }
  return y;
}

inline std::vector<double> spatial_shift(const std::vector<double>& x,
                                         const Dims& xd, int dx, int dy) {
  std::vector<double> y(static_cast<size_t>(xd.numel()), 0.0);
  for (int64_t n = 0; n < xd.n; ++n)
    for (int64_t c = 0; c < xd.c; ++c)
      for (int64_t h = 0; h < xd.h; ++h)
        for (int64_t w = 0; w < xd.w; ++w) {
          const int64_t sh = h - dy, sw = w - dx;
          if (sh < 0 || sh >= xd.h || sw < 0 || sw >= xd.w) continue;
          y[static_cast<size_t>(idx(xd, n, c, h, w))] =
              x[static_cast<size_t>(idx(xd, n, c, sh, sw))];
        }
  return y;
}

// ---------------------------------------------------------------------------
// metric formulas

inline double luma(const uve::Image& img, int y, int x) {
  return 0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) +
         0.114 * img.at(y, x, 2);
}

inline double psnr(const uve::Image& a, const uve::Image& b) {
  double mse = 0;
  for (size_t i = 0; i < a.rgb.size(); ++i) {
    const double d = static_cast<double>(a.rgb[i]) - b.rgb[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.rgb.size());
  if (mse <= 0) return 100.0;
  return std::min(100.0, 10.0 * std::log10(1.0 / mse));
}

inline int mirror(int t, int limit) {
  const int period = 2 * limit;
  int m = t % period;
  if (m < 0) m += period;
  return m < limit ? m : period - 1 - m;
}

// Direct windowed SSIM: every center gathers its own 11x11 weighted stats.
inline double ssim(const uve::Image& a, const uve::Image& b) {
  constexpr int kR = 5;
  constexpr double kSigma = 1.5, kC1 = 1e-4, kC2 = 9e-4;
  double kern[11][11];
  double ksum = 0;
  for (int i = -kR; i <= kR; ++i)
    for (int j = -kR; j <= kR; ++j) {
      kern[i + kR][j + kR] = std::exp(-0.5 * (i * i + j * j) / (kSigma * kSigma));
      ksum += kern[i + kR][j + kR];
    }
  for (auto& row : kern)
    for (auto& v : row) v /= ksum;

  double acc = 0;
  for (int y = 0; y < a.h; ++y)
    for (int x = 0; x < a.w; ++x) {
      double mx = 0, my = 0;
      for (int i = -kR; i <= kR; ++i)
        for (int j = -kR; j <= kR; ++j) {
          const int sy = mirror(y + i, a.h), sx = mirror(x + j, a.w);
          mx += kern[i + kR][j + kR] * luma(a, sy, sx);
          my += kern[i + kR][j + kR] * luma(b, sy, sx);
        }
      double vx = 0, vy = 0, cov = 0;
      for (int i = -kR; i <= kR; ++i)
        for (int j = -kR; j <= kR; ++j) {
          const int sy = mirror(y + i, a.h), sx = mirror(x + j, a.w);
          const double dx = luma(a, sy, sx) - mx;
          const double dy = luma(b, sy, sx) - my;
          vx += kern[i + kR][j + kR] * dx * dx;
          vy += kern[i + kR][j + kR] * dy * dy;
          cov += kern[i + kR][j + kR] * dx * dy;
        }
      acc += ((2 * mx * my + kC1) * (2 * cov + kC2)) /
             ((mx * mx + my * my + kC1) * (vx + vy + kC2));
    }
  return acc / static_cast<double>(a.h * a.w);
}

inline double trimmed_mean(std::vector<double> v, double alpha) {
  std::sort(v.begin(), v.end());
  const size_t k = static_cast<size_t>(std::floor(alpha * v.size()));
  double acc = 0;
  size_t n = 0;
  for (size_t i = k; i + k < v.size(); ++i, ++n) acc += v[i];
  return n ? acc / static_cast<double>(n) : 0.0;
}

inline double uicm(const uve::Image& img) {
  std::vector<double> rg, yb;
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) {
      rg.push_back(img.at(y, x, 0) - img.at(y, x, 1));
      yb.push_back((img.at(y, x, 0) + img.at(y, x, 1)) / 2.0 - img.at(y, x, 2));
    }
  const double mu_rg = trimmed_mean(rg, 0.1), mu_yb = trimmed_mean(yb, 0.1);
  double s_rg = 0, s_yb = 0;  // second moments about zero, full population
  for (size_t i = 0; i < rg.size(); ++i) {
    s_rg += rg[i] * rg[i];
    s_yb += yb[i] * yb[i];
  }
  s_rg /= static_cast<double>(rg.size());
  s_yb /= static_cast<double>(yb.size());
  return -0.0268 * std::sqrt(mu_rg * mu_rg + mu_yb * mu_yb) +
         0.1586 * std::sqrt(s_rg + s_yb);
}

inline double uism(const uve::Image& img) {
  const double wts[3] = {0.299, 0.587, 0.114};
  double total = 0;
  for (int c = 0; c < 3; ++c) {
    auto px = [&](int y, int x) {
      return static_cast<double>(img.at(mirror(y, img.h), mirror(x, img.w), c));
    };
    std::vector<double> edge(static_cast<size_t>(img.h) * img.w);
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x) {
        const double gx = px(y - 1, x + 1) + 2 * px(y, x + 1) + px(y + 1, x + 1) -
                          px(y - 1, x - 1) - 2 * px(y, x - 1) - px(y + 1, x - 1);
        const double gy = px(y + 1, x - 1) + 2 * px(y + 1, x) + px(y + 1, x + 1) -
                          px(y - 1, x - 1) - 2 * px(y - 1, x) - px(y - 1, x + 1);
        edge[static_cast<size_t>(y) * img.w + x] =
            std::sqrt(gx * gx + gy * gy) * px(y, x);
      }
    const int bh = img.h / 8, bw = img.w / 8;
    if (bh == 0 || bw == 0) continue;
    double eme = 0;
    for (int by = 0; by < bh; ++by)
      for (int bx = 0; bx < bw; ++bx) {
        double lo = 1e300, hi = -1e300;
        for (int y = by * 8; y < by * 8 + 8; ++y)
          for (int x = bx * 8; x < bx * 8 + 8; ++x) {
            lo = std::min(lo, edge[static_cast<size_t>(y) * img.w + x]);
            hi = std::max(hi, edge[static_cast<size_t>(y) * img.w + x]);
          }
        if (lo > 0 && hi != lo) eme += std::log(hi / lo);
      }
    total += wts[c] * 2.0 * eme / static_cast<double>(bh * bw);
  }
  return total;
}

inline double uiconm(const uve::Image& img) {
  const int bh = img.h / 8, bw = img.w / 8;
  if (bh == 0 || bw == 0) return 0.0;
  double acc = 0;
  for (int by = 0; by < bh; ++by)
    for (int bx = 0; bx < bw; ++bx) {
      double lo = 1e300, hi = -1e300;
      for (int y = by * 8; y < by * 8 + 8; ++y)
        for (int x = bx * 8; x < bx * 8 + 8; ++x) {
          lo = std::min(lo, luma(img, y, x));
          hi = std::max(hi, luma(img, y, x));
        }
      if (hi + lo <= 0) continue;
      const double m = (hi - lo) / (hi + lo);
      if (m > 0) acc += m * std::log(m);
    }
  return acc / static_cast<double>(bh * bw);
}

inline double uiqm(const uve::Image& img) {
  return 0.0282 * uicm(img) + 0.2953 * uism(img) + 3.5753 * uiconm(img);
}

inline void lab_pixel(double r, double g, double b, double& L, double& A,
                      double& B) {
  auto lin = [](double c) {
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
  };
  const double m[3][3] = {{0.4124564, 0.3575761, 0.1804375},
                          {0.2126729, 0.7151522, 0.0721750},
                          {0.0193339, 0.1191920, 0.9503041}};
  const double rl = lin(r), gl = lin(g), bl = lin(b);
  double xyz[3], wn[3];
  for (int i = 0; i < 3; ++i) {
    xyz[i] = m[i][0] * rl + m[i][1] * gl + m[i][2] * bl;
    wn[i] = m[i][0] + m[i][1] + m[i][2];
  }
  auto f = [](double t) {
    const double d = 6.0 / 29.0;
    return t > d * d * d ? std::cbrt(t) : t / (3 * d * d) + 4.0 / 29.0;
  };
  const double fx = f(xyz[0] / wn[0]), fy = f(xyz[1] / wn[1]),
               fz = f(xyz[2] / wn[2]);
  L = 116 * fy - 16;
  A = 500 * (fx - fy);
  B = 200 * (fy - fz);
}

inline double uciqe(const uve::Image& img) {
  std::vector<double> chroma, lum;
  double sacc = 0;
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) {
      double L, A, B;
      lab_pixel(img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2), L, A, B);
      const double c = std::sqrt(A * A + B * B);
      chroma.push_back(c);
      lum.push_back(L);
      const double d = std::sqrt(c * c + L * L);
      sacc += d > 0 ? c / d : 0.0;
    }
  const size_t n = chroma.size();
  double mc = 0;
  for (double c : chroma) mc += c;
  mc /= static_cast<double>(n);
  double var = 0;
  for (double c : chroma) var += (c - mc) * (c - mc);
  const double sigma_c = std::sqrt(var / static_cast<double>(n)) / 100.0;
  std::sort(lum.begin(), lum.end());
  auto pct = [&](double p) {
    const double i = p / 100.0 * static_cast<double>(n - 1);
    const size_t lo = static_cast<size_t>(std::floor(i));
    const size_t hi = std::min(lo + 1, n - 1);
    return lum[lo] * (1.0 - (i - lo)) + lum[hi] * (i - lo);
  };
  const double con_l = (pct(99) - pct(1)) / 100.0;
  return 0.4680 * sigma_c + 0.2745 * con_l + 0.2576 * (sacc / static_cast<double>(n));
}

inline double mse_mabd(const uve::Video& enh, const uve::Video& gt) {
  const int h = enh[0].h, w = enh[0].w;
  const size_t n = enh.size();
  double acc = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double me = 0, mg = 0;
      for (size_t t = 0; t + 1 < n; ++t) {
        me += std::abs(luma(enh[t + 1], y, x) - luma(enh[t], y, x));
        mg += std::abs(luma(gt[t + 1], y, x) - luma(gt[t], y, x));
      }
      me /= static_cast<double>(n - 1);
      mg /= static_cast<double>(n - 1);
      acc += (me - mg) * (me - mg);
    }
  return 1e4 * acc / static_cast<double>(h * w);
}

inline double cdc(const uve::Video& video) {
  auto hist = [](const uve::Image& img, int c) {
    std::vector<double> h(256, 0.0);
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x) {
        int bin = static_cast<int>(std::floor(img.at(y, x, c) * 256.0f));
        bin = std::clamp(bin, 0, 255);
        h[static_cast<size_t>(bin)] += 1.0;
      }
    for (auto& v : h) v /= static_cast<double>(img.h) * img.w;
    return h;
  };
  auto kl = [](const std::vector<double>& p, const std::vector<double>& q) {
    double acc = 0;
    for (size_t i = 0; i < p.size(); ++i)
      if (p[i] > 0) acc += p[i] * std::log(p[i] / q[i]);
    return acc;
  };
  double stride_acc = 0;
  int strides = 0;
  for (int tau : {1, 2, 4}) {
    if (static_cast<size_t>(tau) >= video.size()) continue;
    double acc = 0;
    int pairs = 0;
    for (size_t t = 0; t + static_cast<size_t>(tau) < video.size(); ++t)
      for (int c = 0; c < 3; ++c) {
        const auto p = hist(video[t], c);
        const auto q = hist(video[t + static_cast<size_t>(tau)], c);
        std::vector<double> m(256);
        for (size_t i = 0; i < 256; ++i) m[i] = 0.5 * (p[i] + q[i]);
        acc += 0.5 * kl(p, m) + 0.5 * kl(q, m);
        ++pairs;
      }
    stride_acc += acc / pairs;
    ++strides;
  }
  return stride_acc / strides;
}

}  // namespace oracle
