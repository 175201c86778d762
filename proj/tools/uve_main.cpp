// Command-line front end: dataset synthesis, training, sliding-window
// inference, evaluation, and the finite-difference gradient check.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "uve/gradcheck.hpp"
#include "uve/pipeline.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read config file: " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Underwater video enhancement toolkit"};
  app.require_subcommand(1);

  // synth ------------------------------------------------------------------
  auto* synth = app.add_subcommand(
      "synth", "Generate a paired dataset of clean/underwater clips");
  std::string synth_config_path;
  uve::SynthConfig synth_cfg;
  bool synth_seed_set = false;
  uint64_t synth_seed = 0;
  std::string split_spec;
  synth->add_option("--config", synth_config_path, "JSON config file");
  synth->add_option("--out", synth_cfg.out_dir, "Output directory");
  synth->add_option("--procedural", synth_cfg.procedural,
                    "Number of procedural clean clips to generate");
  synth->add_option("--frames", synth_cfg.frames, "Frames per clip");
  synth->add_option("--height", synth_cfg.height, "Frame height");
  synth->add_option("--width", synth_cfg.width, "Frame width");
  synth->add_option("--motion", synth_cfg.motion, "Pixels/frame of motion");
  synth->add_option("--styles", synth_cfg.styles, "Underwater styles per clip");
  synth->add_option("--split", split_spec,
                    "Train:test clip ratio, e.g. 220:60");
  synth->add_option("--seed", synth_seed, "Random seed")
      ->each([&](const std::string&) { synth_seed_set = true; });

  // train ------------------------------------------------------------------
  auto* train = app.add_subcommand("train", "Train a model on a dataset");
  std::string train_config_path, preset = "tiny";
  std::string manifest_flag, ckpt_flag, report_flag;
  int64_t iters_flag = -1;
  int batch_flag = -1, crop_flag = -1, t_flag = -1;
  double lr_flag = -1;
  bool train_seed_set = false;
  uint64_t train_seed = 0;
  train->add_option("--config", train_config_path, "JSON config file");
  train->add_option("--preset", preset, "Named preset: tiny or paper");
  train->add_option("--manifest", manifest_flag, "Dataset manifest path");
  train->add_option("--out", ckpt_flag, "Checkpoint output path");
  train->add_option("--report", report_flag, "Run report output path");
  train->add_option("--iters", iters_flag, "Total iterations");
  train->add_option("--batch", batch_flag, "Batch size");
  train->add_option("--crop", crop_flag, "Training crop size");
  train->add_option("--frames-per-window", t_flag, "Window size T");
  train->add_option("--lr", lr_flag, "Initial learning rate");
  train->add_option("--seed", train_seed, "Random seed")
      ->each([&](const std::string&) { train_seed_set = true; });

  // enhance ----------------------------------------------------------------
  auto* enhance = app.add_subcommand(
      "enhance", "Enhance a directory of frames with a trained model");
  std::string enh_ckpt, enh_in, enh_out;
  bool enh_parallel = false;
  enhance->add_option("--checkpoint", enh_ckpt, "Model checkpoint")->required();
  enhance->add_option("--input", enh_in, "Input frame directory")->required();
  enhance->add_option("--output", enh_out, "Output frame directory")->required();
  enhance->add_flag("--parallel", enh_parallel,
                    "Process windows across worker threads");

  // evaluate ---------------------------------------------------------------
  auto* evaluate = app.add_subcommand(
      "evaluate", "Compute frame- and video-level quality metrics");
  std::string eval_enh, eval_ref, eval_json, eval_csv;
  evaluate->add_option("--enhanced", eval_enh, "Enhanced frame directory")
      ->required();
  evaluate->add_option("--reference", eval_ref,
                       "Ground-truth frame directory (optional)");
  evaluate->add_option("--out-json", eval_json, "Per-frame JSON report path");
  evaluate->add_option("--out-csv", eval_csv, "Single-row CSV report path");

  // gradcheck --------------------------------------------------------------
  auto* gradcheck = app.add_subcommand(
      "gradcheck", "Finite-difference check of every differentiable op");
  uint64_t gc_seed = 1;
  gradcheck->add_option("--seed", gc_seed, "Random seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      if (!synth_config_path.empty()) {
        uve::SynthConfig from_file =
            uve::SynthConfig::from_json_text(slurp(synth_config_path));
        // Flags override file values.
        if (synth->count("--out") == 0) synth_cfg.out_dir = from_file.out_dir;
        if (synth->count("--procedural") == 0)
          synth_cfg.procedural = from_file.procedural;
        if (synth->count("--frames") == 0) synth_cfg.frames = from_file.frames;
        if (synth->count("--height") == 0) synth_cfg.height = from_file.height;
        if (synth->count("--width") == 0) synth_cfg.width = from_file.width;
        if (synth->count("--motion") == 0) synth_cfg.motion = from_file.motion;
        if (synth->count("--styles") == 0) synth_cfg.styles = from_file.styles;
        if (synth->count("--split") == 0)
          synth_cfg.train_fraction = from_file.train_fraction;
        if (!synth_seed_set) synth_cfg.seed = from_file.seed;
      }
      if (synth_seed_set) synth_cfg.seed = synth_seed;
      if (!split_spec.empty()) {
        const auto colon = split_spec.find(':');
        if (colon == std::string::npos)
          throw std::runtime_error("--split expects a:b, got " + split_spec);
        const double a = std::stod(split_spec.substr(0, colon));
        const double b = std::stod(split_spec.substr(colon + 1));
        if (a < 0 || b < 0 || a + b <= 0)
          throw std::runtime_error("--split ratio must be non-negative");
        synth_cfg.train_fraction = a / (a + b);
      }
      const uve::DatasetManifest manifest = uve::run_synth(synth_cfg);
      int train_n = 0, test_n = 0;
      for (const auto& e : manifest.entries)
        (e.split == "train" ? train_n : test_n) += 1;
      std::cout << "synth: wrote " << manifest.entries.size() << " pairs ("
                << train_n << " train, " << test_n << " test) under "
                << synth_cfg.out_dir << "\n";
    } else if (*train) {
      uve::TrainConfig cfg;
      if (preset == "tiny") {
        cfg = uve::TrainConfig::tiny();
      } else if (preset == "paper") {
        cfg = uve::TrainConfig::paper();
      } else {
        throw std::runtime_error("unknown preset: " + preset);
      }
      if (!train_config_path.empty())
        cfg = uve::TrainConfig::from_json_text(slurp(train_config_path));
      if (!manifest_flag.empty()) cfg.manifest_path = manifest_flag;
      if (!ckpt_flag.empty()) cfg.checkpoint_out = ckpt_flag;
      if (!report_flag.empty()) cfg.report_out = report_flag;
      if (iters_flag >= 0) cfg.total_iters = iters_flag;
      if (batch_flag > 0) cfg.batch_size = batch_flag;
      if (crop_flag > 0) cfg.crop_size = crop_flag;
      if (t_flag > 0) cfg.model.t = t_flag;
      if (lr_flag > 0) cfg.lr0 = lr_flag;
      if (train_seed_set) cfg.seed = train_seed;
      const uve::RunReport report = uve::train(cfg);
      std::cout << "train: " << cfg.total_iters << " iterations, final L1 "
                << report.final_loss << " (wall " << report.wall_seconds
                << " s)\n";
      if (!cfg.checkpoint_out.empty())
        std::cout << "train: checkpoint at " << cfg.checkpoint_out << "\n";
    } else if (*enhance) {
      uve::enhance_video(enh_ckpt, enh_in, enh_out, enh_parallel);
      std::cout << "enhance: wrote frames to " << enh_out << "\n";
    } else if (*evaluate) {
      const uve::VideoMetrics m =
          uve::evaluate_dirs(eval_enh, eval_ref, eval_json, eval_csv);
      std::cout << "evaluate: uiqm " << m.mean_uiqm << ", uciqe "
                << m.mean_uciqe;
      if (m.mean_psnr) std::cout << ", psnr " << *m.mean_psnr;
      if (m.mean_ssim) std::cout << ", ssim " << *m.mean_ssim;
      if (m.mse_mabd) std::cout << ", mse_mabd " << *m.mse_mabd;
      if (m.cdc) std::cout << ", cdc " << *m.cdc;
      std::cout << "\n";
    } else if (*gradcheck) {
      const auto results = uve::run_gradcheck_suite(gc_seed);
      uve::print_gradcheck_report(results, std::cout);
      if (!uve::all_passed(results)) {
        std::cerr << "gradcheck: FAILED\n";
        return 1;
      }
      std::cout << "gradcheck: all ops passed\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
