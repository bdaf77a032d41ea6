#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "camf/config.hpp"
#include "camf/image.hpp"
#include "camf/nn.hpp"
#include "camf/optim.hpp"
#include "camf/tensor.hpp"

namespace camf {

/// f(x) = sum_i sin(2*pi*k_i*x + phi_i), k = 5, 10, ..., 50.
struct Signal1DSpec {
  std::array<int, 10> k{};
  std::array<double, 10> phase{};
  std::uint64_t seed = 0;
  std::size_t samples = 1000;
};

Signal1DSpec make_signal1d(std::uint64_t seed, std::size_t samples = 1000);
double eval_signal1d(const Signal1DSpec& spec, double x);

/// Returned by psnr() when the two arrays are identical.
inline constexpr double kPsnrInfinite = std::numeric_limits<double>::infinity();

double psnr_from_mse(double mse, double peak = 1.0);
double psnr(std::span<const Real> pred, std::span<const Real> target, double peak = 1.0);
double psnr(const Tensor& pred, const Tensor& target, double peak = 1.0);

/// Coordinates [N x D] in [0,1] and targets [N x out]. Rows come in groups
/// of `group` consecutive rows (rays) that batching never splits.
struct Dataset {
  Tensor coords;
  Tensor targets;
  std::size_t group = 1;

  std::size_t rows() const { return coords.dim(0); }
  std::size_t groups() const { return rows() / group; }
};

/// Pixel (r, c) maps to ((c + 0.5) / W, (r + 0.5) / H); targets are the
/// pixel's channels in row-major pixel order.
Dataset image_dataset(const Image& img);

/// Train set: pixels at even (r, c), keeping their full-lattice coordinates.
/// Eval set: every pixel. Odd extents are rejected.
std::pair<Dataset, Dataset> split_generalization(const Image& img);

/// Resolves "synthetic:<natural|checker|noise>:<size>" or reads a PPM/PGM.
Image load_task_image(const std::string& source, std::uint64_t seed);

/// Rays of `samples` points over inputs (x, y, z, u, v); (u, v) is the ray's
/// direction, constant within a ray. Color depends on position and direction.
Dataset synthetic_rays(std::size_t rays, std::size_t samples, std::uint64_t seed);

/// One row per frame: t = f / (frames - 1), target = size x size RGB frame
/// flattened channel-major (3 x size x size).
Dataset synthetic_video(std::size_t frames, std::size_t size, std::uint64_t seed);

struct TaskData {
  Dataset train;
  Dataset eval;
  std::size_t image_height = 0;  // eval lattice for image tasks
  std::size_t image_width = 0;
};

TaskData make_task_data(const TrainConfig& config);

/// Model description for a config: variant, dimensions and seed applied.
MlpSpec model_spec(const TrainConfig& config);

struct MetricRecord {
  std::size_t iteration = 0;  // 1-based
  double loss = 0;
  double psnr = 0;  // of the minibatch loss
  double lr = 0;    // network group rate
};

struct TrainRun {
  TrainConfig config;
  FieldModel model;
  Adam optimizer;
  std::size_t iteration = 0;
  std::vector<MetricRecord> log;
  double best_loss = 0;
  double final_train_psnr = 0;  // whole train set after the last step
  double final_eval_psnr = 0;
};

using ProgressFn = std::function<void(const MetricRecord&)>;

/// Full training loop. Throws std::runtime_error naming the iteration when
/// the loss becomes non-finite.
TrainRun train(const TrainConfig& config, const TaskData& data, const ProgressFn& progress = {});
TrainRun train(const TrainConfig& config, const ProgressFn& progress = {});

/// Model predictions for every row, evaluated in chunks.
Tensor predict(const FieldModel& model, const Dataset& data, std::size_t chunk = 8192);
double evaluate_psnr(const FieldModel& model, const Dataset& data);
double evaluate_mse(const FieldModel& model, const Dataset& data);

/// Tab-separated "iteration loss psnr lr" with a header line.
void write_metric_log(const std::filesystem::path& path, std::span<const MetricRecord> log);

/// Writes checkpoint.bin, log.tsv, config.ini and summary.tsv into `dir`.
void write_run_artifacts(const std::filesystem::path& dir, const TrainRun& run);

}  // namespace camf
