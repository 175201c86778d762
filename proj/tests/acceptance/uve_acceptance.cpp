// Acceptance suite: one binary, eight criteria, one PASS/FAIL line each.
// Exit code is the number of failed criteria. `--only N` runs a single
// criterion; `--list` prints the roster.

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <vector>

#include "support/oracles.hpp"
#include "support/test_util.hpp"
#include "uve/gradcheck.hpp"
#include "uve/ops.hpp"
#include "uve/optim.hpp"
#include "uve/pipeline.hpp"

using namespace uve;
namespace fs = std::filesystem;

namespace {

using testutil::random_tensor;
using testutil::to_doubles;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string read_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("missing file: " + path);
  return std::string((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
}

oracle::Dims dims_of(const Shape& s) { return {s.n, s.c, s.h, s.w}; }

Image random_image(int h, int w, Rng& rng) {
  Image img;
  img.h = h;
  img.w = w;
  img.rgb.resize(static_cast<size_t>(h) * w * 3);
  for (auto& v : img.rgb) v = static_cast<float>(rng.uniform());
  return img;
}

// ---------------------------------------------------------------------------
// 1. Gradient suite

Outcome criterion_gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto results = run_gradcheck_suite(2024);
  double worst_op = 0, worst_e2e = 0;
  bool ok = true;
  for (const auto& r : results) {
    if (r.op == "end_to_end_micro")
      worst_e2e = r.max_rel_err;
    else
      worst_op = std::max(worst_op, r.max_rel_err);
    ok = ok && r.pass;
  }
  const double wall = seconds_since(t0);
  std::ostringstream os;
  os << "worst op rel err " << worst_op << " (tol 1e-4), end-to-end "
     << worst_e2e << " (tol 1e-3), " << wall << " s";
  return {ok && wall < 120.0, os.str()};
}

// ---------------------------------------------------------------------------
// 2. Oracle equivalence, >= 100 randomized cases per op

Outcome criterion_oracles() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(31337);
  double worst_engine = 0;
  // conv2d / max_pool / global_avg_pool / upsample / pixel_shuffle / shift
  for (int i = 0; i < 100; ++i) {
    const int groups = (i % 3 == 0) ? 2 : 1;
    const int stride = (i % 2) + 1;
    const int pad = static_cast<int>(rng.uniform_int(0, 2));
    const int64_t cin = (i % 4 < 2) ? 4 : 8;
    const int64_t cout = (i % 2) ? 6 : 8;
    const int64_t h = rng.uniform_int(8, 16), w = rng.uniform_int(8, 16);
    Tensor<double> x = random_tensor<double>({2, cin, h, w}, rng);
    Tensor<double> wt =
        random_tensor<double>({cout, cin / groups, 3, 3}, rng);
    Tensor<double> b = random_tensor<double>({1, cout, 1, 1}, rng);
    oracle::Dims od;
    const auto ref = oracle::conv2d(to_doubles(x), dims_of(x.shape()),
                                    to_doubles(wt), dims_of(wt.shape()),
                                    to_doubles(b), stride, pad, groups, od);
    Tensor<double> y =
        conv2d(x, wt, b, {.stride = stride, .padding = pad, .groups = groups});
    worst_engine = std::max(worst_engine, testutil::max_abs_diff(y, ref));

    const auto pool_ref = oracle::max_pool2d(to_doubles(x), dims_of(x.shape()),
                                             2, 2, od);
    worst_engine =
        std::max(worst_engine, testutil::max_abs_diff(max_pool2d(x), pool_ref));
    worst_engine = std::max(
        worst_engine,
        testutil::max_abs_diff(global_avg_pool(x),
                               oracle::global_avg_pool(to_doubles(x),
                                                       dims_of(x.shape()))));
    const int factor = (i % 3) + 1;
    const auto up_ref = oracle::bilinear_upsample(to_doubles(x),
                                                  dims_of(x.shape()), factor, od);
    worst_engine = std::max(
        worst_engine, testutil::max_abs_diff(bilinear_upsample(x, factor), up_ref));
    const auto ps_ref =
        oracle::pixel_shuffle(to_doubles(x), dims_of(x.shape()), 2, od);
    worst_engine = std::max(
        worst_engine, testutil::max_abs_diff(pixel_shuffle(x, 2), ps_ref));
    const int dx = static_cast<int>(rng.uniform_int(-5, 5));
    const int dy = static_cast<int>(rng.uniform_int(-5, 5));
    worst_engine = std::max(
        worst_engine,
        testutil::max_abs_diff(spatial_shift(x, dx, dy),
                               oracle::spatial_shift(to_doubles(x),
                                                     dims_of(x.shape()), dx, dy)));
  }

  // Six metrics against their direct-formula oracles.
  double worst_metric = 0, worst_ssim = 0, worst_mabd = 0;
  for (int i = 0; i < 100; ++i) {
    Image a = random_image(16, 16, rng);
    Image b = random_image(16, 16, rng);
    worst_metric = std::max(worst_metric, std::abs(psnr(a, b) - oracle::psnr(a, b)));
    worst_metric = std::max(worst_metric, std::abs(uicm(a) - oracle::uicm(a)));
    worst_metric = std::max(worst_metric, std::abs(uism(a) - oracle::uism(a)));
    worst_metric =
        std::max(worst_metric, std::abs(uiconm(a) - oracle::uiconm(a)));
    worst_metric = std::max(worst_metric, std::abs(uiqm(a) - oracle::uiqm(a)));
    worst_metric = std::max(worst_metric, std::abs(uciqe(a) - oracle::uciqe(a)));
    worst_ssim = std::max(worst_ssim, std::abs(ssim(a, b) - oracle::ssim(a, b)));
  }
  for (int i = 0; i < 100; ++i) {
    Video va, vb;
    const int frames = 2 + static_cast<int>(rng.uniform_int(0, 6));
    for (int t = 0; t < frames; ++t) {
      va.push_back(random_image(12, 12, rng));
      vb.push_back(random_image(12, 12, rng));
    }
    worst_metric = std::max(worst_metric, std::abs(cdc(va) - oracle::cdc(va)));
    worst_mabd =
        std::max(worst_mabd, std::abs(mse_mabd(va, vb) - oracle::mse_mabd(va, vb)));
  }

  const double wall = seconds_since(t0);
  const bool ok = worst_engine < 1e-6 && worst_metric < 1e-9 &&
                  worst_ssim < 1e-7 && worst_mabd < 1e-6 && wall < 300.0;
  std::ostringstream os;
  os << "engine worst " << worst_engine << " (tol 1e-6), metrics worst "
     << worst_metric << " (tol 1e-9), ssim " << worst_ssim
     << " (tol 1e-7), mabd " << worst_mabd << " (tol 1e-6), " << wall << " s";
  return {ok, os.str()};
}

// ---------------------------------------------------------------------------
// 3. Tiny overfit

Outcome criterion_overfit() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string dir = "acceptance_overfit";
  fs::remove_all(dir);
  CleanClip clip = gen_procedural_clip(12, 16, 64, 64, 1, 0);
  clip.id = "overfit";
  build_dataset({clip}, 1, 1.0, 4, dir);

  TrainConfig cfg = TrainConfig::tiny();
  cfg.model.t = 5;
  cfg.model.shift_len = 3;
  cfg.total_iters = 1200;  // within the <= 2000 budget
  cfg.batch_size = 4;
  cfg.crop_size = 64;
  cfg.seed = 7;
  cfg.log_every = 50;
  cfg.manifest_path = dir + "/manifest.json";
  cfg.checkpoint_out = dir + "/model.uvew";
  const RunReport report = train(cfg);

  DatasetManifest manifest = read_manifest(cfg.manifest_path);
  const DatasetEntry& e = manifest.entries.front();
  const Video degraded = read_video(dir + "/" + e.underwater_dir);
  const Video clean = read_video(dir + "/" + e.clean_dir);
  auto [params, model_cfg] = load_model(cfg.checkpoint_out);
  const Video enhanced = enhance_frames(degraded, params, model_cfg);

  double raw_psnr = 0, enh_psnr = 0;
  for (size_t i = 0; i < clean.size(); ++i) {
    raw_psnr += psnr(degraded[i], clean[i]);
    enh_psnr += psnr(enhanced[i], clean[i]);
  }
  raw_psnr /= static_cast<double>(clean.size());
  enh_psnr /= static_cast<double>(clean.size());
  const double gain = enh_psnr - raw_psnr;
  const double wall = seconds_since(t0);

  fs::remove_all(dir);
  std::ostringstream os;
  os << "final L1 " << report.final_loss << " (< 0.02), raw " << raw_psnr
     << " dB -> enhanced " << enh_psnr << " dB, gain " << gain
     << " dB (>= 6), " << wall << " s";
  return {report.final_loss < 0.02 && gain >= 6.0 && wall < 1800.0, os.str()};
}

// ---------------------------------------------------------------------------
// 4. Temporal consistency on a static clip

Outcome criterion_static() {
  ModelConfig cfg = ModelConfig::tiny();
  cfg.t = 5;
  UVENetParams<float> params = init_params<float>(cfg, 99);
  CleanClip clip = gen_procedural_clip(400, 6, 64, 64, 0, 0);  // static
  WaterParams water = sample_water(uint64_t{21});
  Video degraded = synth_clip(clip, water);
  for (auto& f : degraded) f = quantize_roundtrip(f);

  const Video enhanced = enhance_frames(degraded, params, cfg);
  bool identical = true;
  for (size_t t = 1; t < enhanced.size(); ++t)
    identical = identical && enhanced[t].rgb == enhanced[0].rgb;

  // Quantize exactly as the PNG writer would before computing the metrics.
  Video quantized;
  for (const auto& f : enhanced) quantized.push_back(quantize_roundtrip(f));
  const double cdc_value = cdc(quantized);
  Video static_gt(clip.frames.size(), quantize_roundtrip(clip.frames[0]));
  const double mabd_value = mse_mabd(quantized, static_gt);

  std::ostringstream os;
  os << (identical ? "frames bit-identical" : "FRAMES DIFFER") << ", cdc "
     << cdc_value << " (== 0), mse_mabd " << mabd_value << " (== 0)";
  return {identical && cdc_value == 0.0 && mabd_value == 0.0, os.str()};
}

// ---------------------------------------------------------------------------
// 5. Ablation smoke matrix

Outcome criterion_ablation() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::array<std::array<bool, 4>, 5> scale_sets{{
      {false, false, false, false},
      {true, false, false, false},
      {true, true, false, false},
      {true, true, true, false},
      {true, true, true, true}}};
  const std::array<Aggregation, 4> aggs{
      Aggregation::kDepthwiseOnly, Aggregation::kPointwiseOnly,
      Aggregation::kDsc, Aggregation::kDscCa};

  CleanClip clip = gen_procedural_clip(55, 7, 32, 32, 1, 0);
  WaterParams water = sample_water(uint64_t{56});
  const Video degraded = synth_clip(clip, water);

  int combos = 0;
  for (int t : {1, 3, 5, 7})
    for (const auto& scales : scale_sets)
      for (int l : {1, 2, 3, 4})
        for (Aggregation agg : aggs) {
          ModelConfig cfg;
          cfg.t = t;
          cfg.dims = {16, 32, 64, 128};
          cfg.depths = {1, 1, 1, 1};
          cfg.decoder_dim = 16;
          cfg.grm_dim = 16;
          cfg.shift_len = l;
          cfg.faam_scales = scales;
          cfg.aggregation = agg;
          cfg.validate();
          UVENetParams<float> params =
              init_params<float>(cfg, static_cast<uint64_t>(combos));

          // One optimizer step on one window.
          std::vector<Image> window(degraded.begin(),
                                    degraded.begin() + t);
          Tensor<float> frames = tensor_from_images<float>(window);
          Tensor<float> gt =
              tensor_from_images<float>({clip.frames[static_cast<size_t>(t / 2)]});
          AdamState<float> adam;
          adam.lr = 4e-4f;
          Tape<float> tape;
          {
            Tape<float>::Scope scope(tape);
            Tensor<float> loss = l1_loss(forward(frames, 1, params, cfg), gt);
            if (!std::isfinite(static_cast<double>(loss.item())))
              return {false, "non-finite loss in combo " + std::to_string(combos)};
            tape.backward(loss);
          }
          adam_step<float>(params.tensors(), adam);
          for (auto& p : params.tensors()) p.zero_grad();

          // Correctly-shaped inference on a short clip.
          Video out = enhance_frames({degraded[0], degraded[1], degraded[2]},
                                     params, cfg);
          if (out.size() != 3 || out[0].h != 32 || out[0].w != 32)
            return {false, "bad inference shape in combo " + std::to_string(combos)};
          ++combos;
        }
  const double wall = seconds_since(t0);
  std::ostringstream os;
  os << combos << " combos (4 T x 5 scale sets x 4 l x 4 aggregations), "
     << wall << " s (< 600)";
  return {combos == 320 && wall < 600.0, os.str()};
}

// ---------------------------------------------------------------------------
// 6. Multi-frame benefit trend

Outcome criterion_trend() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string dir = "acceptance_trend";
  int wins = 0;
  std::ostringstream os;
  for (uint64_t seed : {1u, 2u, 3u}) {
    fs::remove_all(dir);
    CleanClip clip = gen_procedural_clip(Rng::mix(600, seed), 16, 64, 64, 2, 1);
    clip.id = "trend";
    build_dataset({clip}, 1, 1.0, Rng::mix(601, seed), dir);

    auto run_t = [&](int t) {
      TrainConfig cfg = TrainConfig::tiny();
      cfg.model.t = t;
      cfg.total_iters = 220;
      cfg.batch_size = 2;
      cfg.crop_size = 64;
      cfg.seed = seed;
      cfg.log_every = 1;
      cfg.manifest_path = dir + "/manifest.json";
      const RunReport r = train(cfg);
      // Mean of the last 10 logged batch losses as the final training loss.
      double acc = 0;
      int n = 0;
      for (size_t i = r.losses.size() >= 10 ? r.losses.size() - 10 : 0;
           i < r.losses.size(); ++i, ++n)
        acc += r.losses[i].second;
      return acc / std::max(n, 1);
    };
    const double loss5 = run_t(5);
    const double loss1 = run_t(1);
    if (loss5 <= loss1) ++wins;
    os << "seed " << seed << ": T=5 " << loss5 << (loss5 <= loss1 ? " <= " : " > ")
       << "T=1 " << loss1 << "; ";
  }
  fs::remove_all(dir);
  os << wins << "/3 seeds favor T=5 (need >= 2), " << seconds_since(t0) << " s";
  return {wins >= 2, os.str()};
}

// ---------------------------------------------------------------------------
// 7. Dataset pipeline at the published scale

Outcome criterion_dataset() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string dir = "acceptance_dataset";
  fs::remove_all(dir);
  std::vector<CleanClip> clips;
  clips.reserve(280);
  for (int i = 0; i < 280; ++i) {
    CleanClip c = gen_procedural_clip(Rng::mix(700, static_cast<uint64_t>(i)),
                                      16, 64, 64, 1, 0);
    c.id = "clip" + std::to_string(i);
    clips.push_back(std::move(c));
  }
  const DatasetManifest manifest =
      build_dataset(clips, 3, 220.0 / 280.0, 9, dir);

  int train_pairs = 0, test_pairs = 0;
  std::map<std::string, std::string> clip_split;
  bool leak_free = true;
  for (const auto& e : manifest.entries) {
    (e.split == "train" ? train_pairs : test_pairs) += 1;
    auto [it, inserted] = clip_split.emplace(e.id, e.split);
    if (!inserted && it->second != e.split) leak_free = false;
  }
  const double wall = seconds_since(t0);
  fs::remove_all(dir);
  std::ostringstream os;
  os << train_pairs << " train / " << test_pairs
     << " test pairs (need 660/180), leakage-free="
     << (leak_free ? "yes" : "NO") << ", " << wall << " s (< 600)";
  return {train_pairs == 660 && test_pairs == 180 && leak_free && wall < 600.0,
          os.str()};
}

// ---------------------------------------------------------------------------
// 8. Determinism and checkpoint round-trip

Outcome criterion_determinism() {
  auto run_pipeline = [](const std::string& dir) {
    fs::remove_all(dir);
    SynthConfig synth;
    synth.out_dir = dir + "/data";
    synth.procedural = 2;
    synth.frames = 8;
    synth.height = 64;
    synth.width = 64;
    synth.styles = 1;
    synth.train_fraction = 0.5;
    synth.seed = 17;
    const DatasetManifest manifest = run_synth(synth);

    TrainConfig cfg;
    cfg.model.t = 3;
    cfg.model.dims = {8, 16, 32, 64};
    cfg.model.depths = {1, 1, 1, 1};
    cfg.model.decoder_dim = 8;
    cfg.model.grm_dim = 16;
    cfg.model.aggregation = Aggregation::kDsc;
    cfg.total_iters = 16;
    cfg.batch_size = 2;
    cfg.crop_size = 32;
    cfg.seed = 5;
    cfg.manifest_path = synth.out_dir + "/manifest.json";
    cfg.checkpoint_out = dir + "/model.uvew";
    train(cfg);

    std::string test_dir;
    for (const auto& e : manifest.entries)
      if (e.split == "test") test_dir = synth.out_dir + "/" + e.underwater_dir;
    enhance_video(cfg.checkpoint_out, test_dir, dir + "/enhanced");
    std::string gt_dir;
    for (const auto& e : manifest.entries)
      if (e.split == "test") gt_dir = synth.out_dir + "/" + e.clean_dir;
    evaluate_dirs(dir + "/enhanced", gt_dir, dir + "/metrics.json",
                  dir + "/metrics.csv");
  };

  run_pipeline("acceptance_det_a");
  run_pipeline("acceptance_det_b");

  bool same = true;
  std::string first_diff;
  auto compare = [&](const std::string& rel) {
    const std::string a = read_bytes("acceptance_det_a/" + rel);
    const std::string b = read_bytes("acceptance_det_b/" + rel);
    if (a != b && first_diff.empty()) first_diff = rel;
    same = same && a == b;
  };
  compare("data/manifest.json");
  compare("model.uvew");
  compare("metrics.json");
  compare("metrics.csv");
  for (const auto& frame : list_frames("acceptance_det_a/enhanced")) {
    const std::string rel = "enhanced/" + fs::path(frame).filename().string();
    compare(rel);
  }

  // Checkpoint save/load preserves the forward pass bit-exactly.
  auto [params, cfg] = load_model("acceptance_det_a/model.uvew");
  Rng rng(77);
  Tensor<float> frames = random_tensor<float>({cfg.t, 3, 64, 64}, rng, 0.0, 1.0);
  Tensor<float> before = forward(frames, 1, params, cfg);
  save_model("acceptance_det_a/resaved.uvew", params, cfg);
  auto [again, cfg2] = load_model("acceptance_det_a/resaved.uvew");
  Tensor<float> after = forward(frames, 1, again, cfg2);
  const bool forward_exact = std::equal(
      before.values().begin(), before.values().end(), after.values().begin());

  fs::remove_all("acceptance_det_a");
  fs::remove_all("acceptance_det_b");
  std::ostringstream os;
  os << (same ? "all artifacts byte-identical across runs"
              : "DIFFERS at " + first_diff)
     << ", checkpoint forward " << (forward_exact ? "bit-exact" : "DRIFTED");
  return {same && forward_exact, os.str()};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "gradient suite (ops < 1e-4, end-to-end < 1e-3)", criterion_gradients},
      {2, "oracle equivalence (kernels and all six metrics)", criterion_oracles},
      {3, "tiny overfit (L1 < 0.02, PSNR gain >= 6 dB)", criterion_overfit},
      {4, "temporal consistency (static clip: CDC = 0, MSE(MABD) = 0)",
       criterion_static},
      {5, "ablation smoke matrix (T x scales x l x aggregation)",
       criterion_ablation},
      {6, "multi-frame trend (T=5 <= T=1 loss in >= 2/3 seeds)", criterion_trend},
      {7, "dataset pipeline (280 clips -> 660/180 pairs, no leakage)",
       criterion_dataset},
      {8, "determinism and checkpoint round-trip", criterion_determinism},
  };

  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc)
      only = std::atoi(argv[++i]);
    if (std::strcmp(argv[i], "--list") == 0) {
      for (const auto& c : criteria)
        std::cout << c.id << ": " << c.name << "\n";
      return 0;
    }
  }

  int failures = 0;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (out.pass ? "[PASS]" : "[FAIL]") << " criterion " << c.id
              << ": " << c.name << " -- " << out.detail << "\n"
              << std::flush;
    if (!out.pass) ++failures;
  }
  return failures;
}
