#include "uve/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace uve {

namespace {

constexpr double kPsnrCap = 100.0;

int mirror_index(int t, int limit) {
  const int period = 2 * limit;
  int m = t % period;
  if (m < 0) m += period;
  return m < limit ? m : period - 1 - m;
}

std::vector<double> luma_plane(const Image& img) {
  std::vector<double> y(static_cast<size_t>(img.h) * img.w);
  for (int r = 0; r < img.h; ++r)
    for (int c = 0; c < img.w; ++c)
      y[static_cast<size_t>(r) * img.w + c] =
          luma(img.at(r, c, 0), img.at(r, c, 1), img.at(r, c, 2));
  return y;
}

}  // namespace

double luma(float r, float g, float b) {
  return 0.299 * r + 0.587 * g + 0.114 * b;
}

double psnr(const Image& pred, const Image& ref) {
  check(pred.same_size(ref), "psnr: size mismatch");
  check(!pred.rgb.empty(), "psnr: empty image");
  double mse = 0;
  for (size_t i = 0; i < pred.rgb.size(); ++i) {
    const double d = static_cast<double>(pred.rgb[i]) - ref.rgb[i];
    mse += d * d;
  }
  mse /= static_cast<double>(pred.rgb.size());
  if (mse <= 0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double ssim(const Image& pred, const Image& ref) {
  check(pred.same_size(ref), "ssim: size mismatch");
  constexpr int kRadius = 5;  // 11x11 window
  constexpr double kSigma = 1.5;
  constexpr double kC1 = 0.01 * 0.01;
  constexpr double kC2 = 0.03 * 0.03;

  double kernel[2 * kRadius + 1];
  double ksum = 0;
  for (int i = -kRadius; i <= kRadius; ++i) {
    kernel[i + kRadius] = std::exp(-0.5 * i * i / (kSigma * kSigma));
    ksum += kernel[i + kRadius];
  }
  for (auto& k : kernel) k /= ksum;

  const int h = pred.h, w = pred.w;
  const std::vector<double> x = luma_plane(pred);
  const std::vector<double> y = luma_plane(ref);

  // Separable Gaussian over the five moment planes, symmetric padding.
  auto blur = [&](const std::vector<double>& src) {
    std::vector<double> tmp(src.size()), dst(src.size());
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) {
        double acc = 0;
        for (int i = -kRadius; i <= kRadius; ++i)
          acc += kernel[i + kRadius] *
                 src[static_cast<size_t>(r) * w + mirror_index(c + i, w)];
        tmp[static_cast<size_t>(r) * w + c] = acc;
      }
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) {
        double acc = 0;
        for (int i = -kRadius; i <= kRadius; ++i)
          acc += kernel[i + kRadius] *
                 tmp[static_cast<size_t>(mirror_index(r + i, h)) * w + c];
        dst[static_cast<size_t>(r) * w + c] = acc;
      }
    return dst;
  };

  std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const std::vector<double> mx = blur(x), my = blur(y);
  const std::vector<double> mxx = blur(xx), myy = blur(yy), mxy = blur(xy);

  double acc = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double vx = mxx[i] - mx[i] * mx[i];
    const double vy = myy[i] - my[i] * my[i];
    const double cov = mxy[i] - mx[i] * my[i];
    acc += ((2 * mx[i] * my[i] + kC1) * (2 * cov + kC2)) /
           ((mx[i] * mx[i] + my[i] * my[i] + kC1) * (vx + vy + kC2));
  }
  return acc / static_cast<double>(x.size());
}

// ---------------------------------------------------------------------------
// UIQM components

namespace {

double alpha_trimmed_mean(std::vector<double> v, double alpha) {
  std::sort(v.begin(), v.end());
  const size_t k = static_cast<size_t>(
      std::floor(alpha * static_cast<double>(v.size())));
  double acc = 0;
  size_t count = 0;
  for (size_t i = k; i + k < v.size(); ++i) {
    acc += v[i];
    ++count;
  }
  return count ? acc / static_cast<double>(count) : 0.0;
}

// Sobel gradient magnitude with symmetric padding.
std::vector<double> sobel_magnitude(const std::vector<double>& p, int h, int w) {
  std::vector<double> mag(p.size());
  auto at = [&](int y, int x) {
    return p[static_cast<size_t>(mirror_index(y, h)) * w + mirror_index(x, w)];
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double gx = (at(y - 1, x + 1) + 2 * at(y, x + 1) + at(y + 1, x + 1)) -
                        (at(y - 1, x - 1) + 2 * at(y, x - 1) + at(y + 1, x - 1));
      const double gy = (at(y + 1, x - 1) + 2 * at(y + 1, x) + at(y + 1, x + 1)) -
                        (at(y - 1, x - 1) + 2 * at(y - 1, x) + at(y - 1, x + 1));
      mag[static_cast<size_t>(y) * w + x] = std::sqrt(gx * gx + gy * gy);
    }
  return mag;
}

// EME over 8x8 blocks: (2 / blocks) * sum ln(max/min); blocks where
// min <= 0 or max == min contribute nothing. Trailing partials are dropped.
double eme8(const std::vector<double>& p, int h, int w) {
  const int bh = h / 8, bw = w / 8;
  if (bh == 0 || bw == 0) return 0.0;
  double acc = 0;
  for (int by = 0; by < bh; ++by)
    for (int bx = 0; bx < bw; ++bx) {
      double lo = p[static_cast<size_t>(by * 8) * w + bx * 8], hi = lo;
      for (int y = by * 8; y < by * 8 + 8; ++y)
        for (int x = bx * 8; x < bx * 8 + 8; ++x) {
          const double v = p[static_cast<size_t>(y) * w + x];
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
      if (lo > 0 && hi != lo) acc += std::log(hi / lo);
    }
  return 2.0 * acc / static_cast<double>(bh * bw);
}

std::vector<double> channel_plane(const Image& img, int c) {
  std::vector<double> p(static_cast<size_t>(img.h) * img.w);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x)
      p[static_cast<size_t>(y) * img.w + x] = img.at(y, x, c);
  return p;
}

}  // namespace

double uicm(const Image& frame) {
  check(!frame.rgb.empty(), "uicm: empty image");
  const size_t n = static_cast<size_t>(frame.h) * frame.w;
  std::vector<double> rg(n), yb(n);
  for (int y = 0; y < frame.h; ++y)
    for (int x = 0; x < frame.w; ++x) {
      const double r = frame.at(y, x, 0), g = frame.at(y, x, 1),
                   b = frame.at(y, x, 2);
      rg[static_cast<size_t>(y) * frame.w + x] = r - g;
      yb[static_cast<size_t>(y) * frame.w + x] = (r + g) / 2.0 - b;
    }
  const double mu_rg = alpha_trimmed_mean(rg, 0.1);
  const double mu_yb = alpha_trimmed_mean(yb, 0.1);
  // Full-population second moments about zero: a uniform color cast scores
  // through this term, not only through the trimmed means.
  double m2_rg = 0, m2_yb = 0;
  for (size_t i = 0; i < n; ++i) {
    m2_rg += rg[i] * rg[i];
    m2_yb += yb[i] * yb[i];
  }
  m2_rg /= static_cast<double>(n);
  m2_yb /= static_cast<double>(n);
  return -0.0268 * std::sqrt(mu_rg * mu_rg + mu_yb * mu_yb) +
         0.1586 * std::sqrt(m2_rg + m2_yb);
}

double uism(const Image& frame) {
  check(!frame.rgb.empty(), "uism: empty image");
  const double weights[3] = {0.299, 0.587, 0.114};
  double acc = 0;
  for (int c = 0; c < 3; ++c) {
    const std::vector<double> p = channel_plane(frame, c);
    std::vector<double> edge = sobel_magnitude(p, frame.h, frame.w);
    for (size_t i = 0; i < edge.size(); ++i) edge[i] *= p[i];
    acc += weights[c] * eme8(edge, frame.h, frame.w);
  }
  return acc;
}

double uiconm(const Image& frame) {
  check(!frame.rgb.empty(), "uiconm: empty image");
  const std::vector<double> y = luma_plane(frame);
  const int bh = frame.h / 8, bw = frame.w / 8;
  if (bh == 0 || bw == 0) return 0.0;
  double acc = 0;
  for (int by = 0; by < bh; ++by)
    for (int bx = 0; bx < bw; ++bx) {
      double lo = y[static_cast<size_t>(by * 8) * frame.w + bx * 8], hi = lo;
      for (int r = by * 8; r < by * 8 + 8; ++r)
        for (int c = bx * 8; c < bx * 8 + 8; ++c) {
          const double v = y[static_cast<size_t>(r) * frame.w + c];
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
      if (hi + lo <= 0) continue;
      const double m = (hi - lo) / (hi + lo);
      if (m > 0) acc += m * std::log(m);
    }
  return acc / static_cast<double>(bh * bw);
}

double uiqm(const Image& frame) {
  return 0.0282 * uicm(frame) + 0.2953 * uism(frame) + 3.5753 * uiconm(frame);
}

// ---------------------------------------------------------------------------
// Lab / UCIQE

namespace {

double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

constexpr double kRgbToXyz[3][3] = {
    {0.4124564, 0.3575761, 0.1804375},
    {0.2126729, 0.7151522, 0.0721750},
    {0.0193339, 0.1191920, 0.9503041}};

double lab_f(double t) {
  constexpr double kDelta = 6.0 / 29.0;
  return t > kDelta * kDelta * kDelta
             ? std::cbrt(t)
             : t / (3.0 * kDelta * kDelta) + 4.0 / 29.0;
}

double percentile(std::vector<double> sorted_vals, double p) {
  const double idx = p / 100.0 * static_cast<double>(sorted_vals.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(idx));
  const size_t hi = std::min(lo + 1, sorted_vals.size() - 1);
  const double frac = idx - static_cast<double>(lo);
  return sorted_vals[lo] * (1.0 - frac) + sorted_vals[hi] * frac;
}

}  // namespace

LabImage rgb_to_lab(const Image& frame) {
  LabImage out;
  out.h = frame.h;
  out.w = frame.w;
  out.lab.resize(frame.rgb.size());
  // White point = matrix image of RGB white, so white maps to exactly
  // L=100, a=b=0.
  double wn[3];
  for (int i = 0; i < 3; ++i)
    wn[i] = kRgbToXyz[i][0] + kRgbToXyz[i][1] + kRgbToXyz[i][2];
  for (int y = 0; y < frame.h; ++y)
    for (int x = 0; x < frame.w; ++x) {
      const double lin[3] = {srgb_to_linear(frame.at(y, x, 0)),
                             srgb_to_linear(frame.at(y, x, 1)),
                             srgb_to_linear(frame.at(y, x, 2))};
      double xyz[3];
      for (int i = 0; i < 3; ++i)
        xyz[i] = kRgbToXyz[i][0] * lin[0] + kRgbToXyz[i][1] * lin[1] +
                 kRgbToXyz[i][2] * lin[2];
      const double fx = lab_f(xyz[0] / wn[0]);
      const double fy = lab_f(xyz[1] / wn[1]);
      const double fz = lab_f(xyz[2] / wn[2]);
      const size_t base = (static_cast<size_t>(y) * frame.w + x) * 3;
      out.lab[base] = 116.0 * fy - 16.0;
      out.lab[base + 1] = 500.0 * (fx - fy);
      out.lab[base + 2] = 200.0 * (fy - fz);
    }
  return out;
}

double uciqe(const Image& frame) {
  check(!frame.rgb.empty(), "uciqe: empty image");
  const LabImage lab = rgb_to_lab(frame);
  const size_t n = static_cast<size_t>(frame.h) * frame.w;
  std::vector<double> chroma(n), lum(n);
  double sat_acc = 0;
  for (size_t i = 0; i < n; ++i) {
    const double l = lab.lab[i * 3];
    const double a = lab.lab[i * 3 + 1];
    const double b = lab.lab[i * 3 + 2];
    const double c = std::sqrt(a * a + b * b);
    chroma[i] = c;
    lum[i] = l;
    const double denom = std::sqrt(c * c + l * l);
    sat_acc += denom > 0 ? c / denom : 0.0;
  }
  double mean_c = std::accumulate(chroma.begin(), chroma.end(), 0.0) /
                  static_cast<double>(n);
  double var_c = 0;
  for (double c : chroma) var_c += (c - mean_c) * (c - mean_c);
  const double sigma_c = std::sqrt(var_c / static_cast<double>(n)) / 100.0;

  std::sort(lum.begin(), lum.end());
  const double con_l = (percentile(lum, 99.0) - percentile(lum, 1.0)) / 100.0;
  const double mu_s = sat_acc / static_cast<double>(n);
  return 0.4680 * sigma_c + 0.2745 * con_l + 0.2576 * mu_s;
}

// ---------------------------------------------------------------------------
// video-level metrics

std::vector<double> mabd_map(const Video& video) {
  check(video.size() >= 2, "mabd_map: need at least 2 frames");
  const int h = video[0].h, w = video[0].w;
  std::vector<double> m(static_cast<size_t>(h) * w, 0.0);
  for (size_t t = 0; t + 1 < video.size(); ++t) {
    check(video[t].same_size(video[t + 1]), "mabd_map: frame size mismatch");
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double d =
            luma(video[t + 1].at(y, x, 0), video[t + 1].at(y, x, 1),
                 video[t + 1].at(y, x, 2)) -
            luma(video[t].at(y, x, 0), video[t].at(y, x, 1), video[t].at(y, x, 2));
        m[static_cast<size_t>(y) * w + x] += std::abs(d);
      }
  }
  const double inv = 1.0 / static_cast<double>(video.size() - 1);
  for (auto& v : m) v *= inv;
  return m;
}

double mse_mabd(const Video& enhanced, const Video& reference) {
  check(enhanced.size() == reference.size(), "mse_mabd: length mismatch");
  check(!enhanced.empty() && enhanced[0].same_size(reference[0]),
        "mse_mabd: size mismatch");
  const std::vector<double> me = mabd_map(enhanced);
  const std::vector<double> mg = mabd_map(reference);
  double acc = 0;
  for (size_t i = 0; i < me.size(); ++i)
    acc += (me[i] - mg[i]) * (me[i] - mg[i]);
  return 1e4 * acc / static_cast<double>(me.size());
}

namespace {

std::array<std::vector<double>, 3> color_histograms(const Image& img) {
  std::array<std::vector<double>, 3> hist;
  for (auto& h : hist) h.assign(256, 0.0);
  const double inv = 1.0 / (static_cast<double>(img.h) * img.w);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x)
      for (int c = 0; c < 3; ++c) {
        const int bin = std::clamp(
            static_cast<int>(std::floor(img.at(y, x, c) * 256.0f)), 0, 255);
        hist[static_cast<size_t>(c)][static_cast<size_t>(bin)] += inv;
      }
  return hist;
}

double jsd(const std::vector<double>& p, const std::vector<double>& q) {
  double acc = 0;
  for (size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0) acc += 0.5 * p[i] * std::log(p[i] / m);
    if (q[i] > 0) acc += 0.5 * q[i] * std::log(q[i] / m);
  }
  return acc;
}

}  // namespace

double cdc(const Video& video) {
  check(video.size() >= 2, "cdc: need at least 2 frames");
  std::vector<std::array<std::vector<double>, 3>> hists;
  hists.reserve(video.size());
  for (const auto& f : video) hists.push_back(color_histograms(f));

  const int strides[3] = {1, 2, 4};
  double stride_acc = 0;
  int stride_count = 0;
  for (int tau : strides) {
    if (static_cast<size_t>(tau) >= video.size()) continue;
    double acc = 0;
    int64_t pairs = 0;
    for (size_t t = 0; t + static_cast<size_t>(tau) < video.size(); ++t)
      for (int c = 0; c < 3; ++c) {
        acc += jsd(hists[t][static_cast<size_t>(c)],
                   hists[t + static_cast<size_t>(tau)][static_cast<size_t>(c)]);
        ++pairs;
      }
    stride_acc += acc / static_cast<double>(pairs);
    ++stride_count;
  }
  check(stride_count > 0, "cdc: video too short for any stride");
  return stride_acc / static_cast<double>(stride_count);
}

VideoMetrics evaluate_video(const Video& enhanced, const Video* reference) {
  check(!enhanced.empty(), "evaluate_video: empty video");
  if (reference) {
    check(reference->size() == enhanced.size(),
          "evaluate_video: reference length mismatch");
  }
  VideoMetrics out;
  double psnr_acc = 0, ssim_acc = 0, uiqm_acc = 0, uciqe_acc = 0;
  for (size_t i = 0; i < enhanced.size(); ++i) {
    FrameMetrics fm;
    fm.uiqm = uiqm(enhanced[i]);
    fm.uciqe = uciqe(enhanced[i]);
    if (reference) {
      fm.psnr = psnr(enhanced[i], (*reference)[i]);
      fm.ssim = ssim(enhanced[i], (*reference)[i]);
      psnr_acc += *fm.psnr;
      ssim_acc += *fm.ssim;
    }
    uiqm_acc += fm.uiqm;
    uciqe_acc += fm.uciqe;
    out.frames.push_back(fm);
  }
  const double n = static_cast<double>(enhanced.size());
  out.mean_uiqm = uiqm_acc / n;
  out.mean_uciqe = uciqe_acc / n;
  if (reference) {
    out.mean_psnr = psnr_acc / n;
    out.mean_ssim = ssim_acc / n;
    if (enhanced.size() >= 2) out.mse_mabd = mse_mabd(enhanced, *reference);
  }
  if (enhanced.size() >= 2) out.cdc = cdc(enhanced);
  return out;
}

std::string metrics_to_json(const VideoMetrics& m) {
  nlohmann::json j;
  nlohmann::json frames = nlohmann::json::array();
  for (const auto& f : m.frames) {
    nlohmann::json jf;
    if (f.psnr) jf["psnr"] = *f.psnr;
    if (f.ssim) jf["ssim"] = *f.ssim;
    jf["uiqm"] = f.uiqm;
    jf["uciqe"] = f.uciqe;
    frames.push_back(std::move(jf));
  }
  j["frames"] = std::move(frames);
  nlohmann::json mean;
  if (m.mean_psnr) mean["psnr"] = *m.mean_psnr;
  if (m.mean_ssim) mean["ssim"] = *m.mean_ssim;
  mean["uiqm"] = m.mean_uiqm;
  mean["uciqe"] = m.mean_uciqe;
  j["mean"] = std::move(mean);
  nlohmann::json video;
  if (m.mse_mabd) video["mse_mabd"] = *m.mse_mabd;
  if (m.cdc) video["cdc"] = *m.cdc;
  j["video"] = std::move(video);
  return j.dump(2) + "\n";
}

std::string metrics_to_csv(const VideoMetrics& m, const std::string& name) {
  std::ostringstream os;
  os.precision(17);
  os << "name";
  if (m.mean_psnr) os << ",psnr";
  if (m.mean_ssim) os << ",ssim";
  os << ",uiqm,uciqe";
  if (m.mse_mabd) os << ",mse_mabd";
  if (m.cdc) os << ",cdc";
  os << "\n" << name;
  if (m.mean_psnr) os << "," << *m.mean_psnr;
  if (m.mean_ssim) os << "," << *m.mean_ssim;
  os << "," << m.mean_uiqm << "," << m.mean_uciqe;
  if (m.mse_mabd) os << "," << *m.mse_mabd;
  if (m.cdc) os << "," << *m.cdc;
  os << "\n";
  return os.str();
}

}  // namespace uve
