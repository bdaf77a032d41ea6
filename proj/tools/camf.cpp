// camf: train, evaluate and inspect coordinate-aware neural fields.

#include <cblas.h>

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "camf/analysis.hpp"
#include "camf/checkpoint.hpp"
#include "camf/config.hpp"
#include "camf/tasks.hpp"

namespace fs = std::filesystem;
using namespace camf;

namespace {

struct Options {
  std::string config;
  std::string checkpoint;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool force = false;
  int bits = 32;
  int threads = 0;
};

TrainConfig load(const Options& o) {
  TrainConfig c = load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (!o.out.empty()) c.out_dir = o.out;
  if (o.bits != 32) c.bits = o.bits;
  c.validate();
  return c;
}

fs::path prepare_out_dir(const Options& o, const TrainConfig& c, const std::string& fallback) {
  fs::path dir = !o.out.empty() ? fs::path(o.out) : !c.out_dir.empty() ? fs::path(c.out_dir) : fs::path(fallback);
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!o.force) throw std::runtime_error(dir.string() + " already exists; pass --force to overwrite");
    fs::remove_all(dir);
  }
  fs::create_directories(dir);
  return dir;
}

std::string default_dir(const TrainConfig& c) {
  return std::string("runs/") + task_name(c.task) + "-" + variant_name(c.cam) + "-seed" + std::to_string(c.seed);
}

TrainRun run_training(const TrainConfig& c, const TaskData& data) {
  const std::size_t every = std::max<std::size_t>(1, c.iterations / 20);
  return train(c, data, [&](const MetricRecord& r) {
    if (r.iteration % every == 0 || r.iteration == c.iterations)
      std::printf("  [%s] iter %5zu  loss %.6g  psnr %.3f dB  lr %.3g\n", variant_name(c.cam), r.iteration,
                  r.loss, r.psnr, r.lr);
  });
}

void print_summary_header() { std::printf("variant\ttrain_psnr\teval_psnr\tbest_loss\tparameters\n"); }
void print_summary(const TrainRun& run) {
  std::printf("%s\t%.4f\t%.4f\t%.6g\t%zu\n", variant_name(run.config.cam), run.final_train_psnr,
              run.final_eval_psnr, run.best_loss, run.model.parameter_count());
}

int cmd_train(const Options& o) {
  const TrainConfig c = load(o);
  const fs::path dir = prepare_out_dir(o, c, default_dir(c));
  const TaskData data = make_task_data(c);
  const TrainRun run = run_training(c, data);
  write_run_artifacts(dir, run);
  print_summary_header();
  print_summary(run);
  if (c.bits != 32)
    std::printf("quantized %d-bit eval psnr: %.4f dB\n", c.bits, eval_quantized(run.model, c.bits, data.eval));
  std::printf("artifacts in %s\n", dir.string().c_str());
  return 0;
}

int cmd_eval(const Options& o) {
  const TrainConfig c = load(o);
  const FieldModel model = load_model(fs::path(o.checkpoint));
  const TaskData data = make_task_data(c);
  std::printf("train_psnr\t%.6f\n", evaluate_psnr(model, data.train));
  std::printf("eval_psnr\t%.6f\n", evaluate_psnr(model, data.eval));
  if (c.bits != 32) std::printf("eval_psnr_%dbit\t%.6f\n", c.bits, eval_quantized(model, c.bits, data.eval));
  return 0;
}

int cmd_analyze(const Options& o) {
  const TrainConfig c = load(o);
  FieldModel model = load_model(fs::path(o.checkpoint));
  const TaskData data = make_task_data(c);
  TrainConfig where = c;
  where.out_dir.clear();  // the config's directory holds the training run
  const fs::path dir = prepare_out_dir(o, where, (fs::path(o.checkpoint).parent_path() / "analysis").string());

  std::ofstream report(dir / "analysis.tsv");
  report.precision(9);
  report << "metric\tvalue\n";
  report << "eval_psnr\t" << evaluate_psnr(model, data.eval) << '\n';
  report << "pixel_feature_variance\t" << pixel_feature_variance(final_hidden_features(model, data.eval)) << '\n';

  const auto& stages = model.stages();
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const auto* cs = std::get_if<CamStage>(&stages[i]);
    if (!cs || cs->layer.gamma.rank() != 2) continue;
    for (std::size_t ch = 0; ch < cs->layer.gamma.channels; ++ch) {
      const std::string suffix = "stage" + std::to_string(i) + "_ch" + std::to_string(ch) + ".pgm";
      export_grid_image(cs->layer.gamma, dir / ("gamma_" + suffix), ch);
      export_grid_image(cs->layer.beta, dir / ("beta_" + suffix), ch);
    }
  }

  if (data.image_height > 0) {
    const std::size_t h = data.image_height, w = data.image_width;
    const Image pred = render_image(predict(model, data.eval), h, w);
    const Image target = render_image(data.eval.targets, h, w);
    const SpectrumMap err = freq_error_map(pred, target);
    if (pred.channels == 1 || pred.channels == 3) write_pnm(dir / "prediction.ppm", pred);
    export_spectrum_image(err, dir / "error_spectrum.pgm");
    report << "error_energy\t" << err.energy() << '\n';
    report << "high_band_error_energy\t" << err.high_band_energy() << '\n';
    report << "high_frequency_ratio\t" << err.high_frequency_ratio() << '\n';
  }
  for (int bits : {8, 6}) report << "eval_psnr_" << bits << "bit\t" << eval_quantized(model, bits, data.eval) << '\n';
  report.close();
  std::ifstream in(dir / "analysis.tsv");
  std::cout << in.rdbuf();
  std::printf("artifacts in %s\n", dir.string().c_str());
  return 0;
}

int cmd_ablate(const Options& o) {
  const TrainConfig base = load(o);
  const fs::path dir = prepare_out_dir(o, base, std::string("runs/ablate-") + task_name(base.task) + "-seed" +
                                                    std::to_string(base.seed));
  const TaskData data = make_task_data(base);
  std::vector<TrainRun> runs;
  for (CamVariant v : {CamVariant::None, CamVariant::CamN, CamVariant::Cam}) {
    TrainConfig c = base.with_variant(v);
    c.out_dir = (dir / variant_name(v)).string();
    runs.push_back(run_training(c, data));
    write_run_artifacts(c.out_dir, runs.back());
  }
  std::ofstream table(dir / "ablation.tsv");
  table << "variant\ttrain_psnr\teval_psnr\tbest_loss\tparameters\n";
  print_summary_header();
  for (const auto& r : runs) {
    print_summary(r);
    table << variant_name(r.config.cam) << '\t' << r.final_train_psnr << '\t' << r.final_eval_psnr << '\t'
          << r.best_loss << '\t' << r.model.parameter_count() << '\n';
  }
  const double b = runs[0].final_eval_psnr, n = runs[1].final_eval_psnr, m = runs[2].final_eval_psnr;
  std::printf("ordering baseline <= cam-n <= cam: %s\n", (b <= n + 0.2 && n <= m) ? "holds" : "violated");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coordinate-aware modulation for neural fields"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "Override the config seed");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_flag("--force", o.force, "Overwrite an existing output directory");
    sub->add_option("--bits", o.bits, "Quantized evaluation width")->check(CLI::IsMember({32, 8, 6}));
    sub->add_option("--threads", o.threads, "BLAS thread count")->check(CLI::PositiveNumber);
  };
  auto* train_cmd = app.add_subcommand("train", "Train a model from a config");
  train_cmd->add_option("config", o.config)->required()->check(CLI::ExistingFile);
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval_cmd->add_option("checkpoint", o.checkpoint)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("config", o.config)->required()->check(CLI::ExistingFile);
  auto* analyze_cmd = app.add_subcommand("analyze", "Export grids, error spectra and feature statistics");
  analyze_cmd->add_option("checkpoint", o.checkpoint)->required()->check(CLI::ExistingFile);
  analyze_cmd->add_option("config", o.config)->required()->check(CLI::ExistingFile);
  auto* ablate_cmd = app.add_subcommand("ablate", "Train baseline, CAM-N and CAM with a shared seed");
  ablate_cmd->add_option("config", o.config)->required()->check(CLI::ExistingFile);
  for (auto* sub : {train_cmd, eval_cmd, analyze_cmd, ablate_cmd}) common(sub);

  CLI11_PARSE(app, argc, argv);
  if (o.threads > 0) openblas_set_num_threads(o.threads);

  try {
    if (train_cmd->parsed()) return cmd_train(o);
    if (eval_cmd->parsed()) return cmd_eval(o);
    if (analyze_cmd->parsed()) return cmd_analyze(o);
    if (ablate_cmd->parsed()) return cmd_ablate(o);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "camf: %s\n", e.what());
    return 1;
  }
  return 1;
}
