#include "camf/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

#include "camf/checkpoint.hpp"
#include "camf/ops.hpp"
#include "camf/seed.hpp"

namespace camf {
namespace {

// seed streams
constexpr std::uint64_t kModelStream = 0;
constexpr std::uint64_t kDataStream = 1;
constexpr std::uint64_t kBatchStream = 2;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Tensor gather_groups(const Tensor& src, std::span<const std::size_t> groups, std::size_t group) {
  const std::size_t width = src.dim(1);
  const std::size_t stride = group * width;
  std::vector<Real> out(groups.size() * stride);
  const auto s = src.data();
  for (std::size_t i = 0; i < groups.size(); ++i)
    std::copy_n(s.begin() + groups[i] * stride, stride, out.begin() + i * stride);
  return Tensor(Shape{groups.size() * group, width}, std::move(out));
}

Tensor slice_rows(const Tensor& src, std::size_t begin, std::size_t end) {
  const std::size_t width = src.dim(1);
  const auto s = src.data();
  return Tensor(Shape{end - begin, width},
                std::vector<Real>(s.begin() + begin * width, s.begin() + end * width));
}

}  // namespace

Signal1DSpec make_signal1d(std::uint64_t seed, std::size_t samples) {
  Signal1DSpec spec;
  spec.seed = seed;
  spec.samples = samples;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  for (std::size_t i = 0; i < spec.k.size(); ++i) {
    spec.k[i] = 5 * static_cast<int>(i + 1);
    spec.phase[i] = phase(rng);
  }
  return spec;
}

double eval_signal1d(const Signal1DSpec& spec, double x) {
  double f = 0.0;
  for (std::size_t i = 0; i < spec.k.size(); ++i) f += std::sin(kTwoPi * spec.k[i] * x + spec.phase[i]);
  return f;
}

double psnr_from_mse(double mse, double peak) {
  if (mse <= 0.0) return kPsnrInfinite;
  return 10.0 * std::log10(peak * peak / mse);
}

double psnr(std::span<const Real> pred, std::span<const Real> target, double peak) {
  if (pred.size() != target.size() || pred.empty()) {
    throw std::invalid_argument("psnr needs equal, non-empty arrays (" + std::to_string(pred.size()) +
                                " vs " + std::to_string(target.size()) + ")");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = static_cast<double>(pred[i]) - target[i];
    acc += d * d;
  }
  return psnr_from_mse(acc / static_cast<double>(pred.size()), peak);
}

double psnr(const Tensor& pred, const Tensor& target, double peak) {
  if (pred.shape() != target.shape()) {
    throw std::invalid_argument("psnr shape mismatch: " + to_string(pred.shape()) + " vs " +
                                to_string(target.shape()));
  }
  return psnr(pred.data(), target.data(), peak);
}

Dataset image_dataset(const Image& img) {
  const std::size_t h = img.height, w = img.width, ch = img.channels;
  std::vector<Real> coords(h * w * 2);
  std::vector<Real> targets(img.pixels.begin(), img.pixels.end());
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) {
      coords[(r * w + c) * 2] = static_cast<Real>((c + 0.5) / static_cast<double>(w));
      coords[(r * w + c) * 2 + 1] = static_cast<Real>((r + 0.5) / static_cast<double>(h));
    }
  return {Tensor(Shape{h * w, 2}, std::move(coords)), Tensor(Shape{h * w, ch}, std::move(targets)), 1};
}

std::pair<Dataset, Dataset> split_generalization(const Image& img) {
  if (img.height % 2 || img.width % 2) {
    throw std::invalid_argument("generalization split needs even image extents, got " +
                                std::to_string(img.height) + "x" + std::to_string(img.width));
  }
  Dataset eval = image_dataset(img);
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < img.height; r += 2)
    for (std::size_t c = 0; c < img.width; c += 2) rows.push_back(r * img.width + c);
  Dataset train{gather_groups(eval.coords, rows, 1), gather_groups(eval.targets, rows, 1), 1};
  return {std::move(train), std::move(eval)};
}

Image load_task_image(const std::string& source, std::uint64_t seed) {
  const std::string prefix = "synthetic:";
  if (source.rfind(prefix, 0) != 0) return read_pnm(source);
  const std::string rest = source.substr(prefix.size());
  const auto colon = rest.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("bad synthetic image spec '" + source + "'");
  const std::string kind = rest.substr(0, colon);
  std::size_t size = 0;
  try {
    size = std::stoul(rest.substr(colon + 1));
  } catch (const std::exception&) {
    throw std::invalid_argument("bad synthetic image size in '" + source + "'");
  }
  if (size < 2) throw std::invalid_argument("synthetic image size must be at least 2");
  if (kind == "natural") return natural_scene(size, seed);
  if (kind == "checker") return checkerboard(size, std::max<std::size_t>(1, size / 8));
  if (kind == "noise") return band_limited_noise(size, std::max<std::size_t>(1, size / 8), seed);
  throw std::invalid_argument("unknown synthetic image '" + kind + "'");
}

Dataset synthetic_rays(std::size_t rays, std::size_t samples, std::uint64_t seed) {
  if (rays == 0 || samples == 0) throw std::invalid_argument("ray dataset needs rays and samples");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Real> coords, targets;
  coords.reserve(rays * samples * 5);
  targets.reserve(rays * samples * 3);
  for (std::size_t r = 0; r < rays; ++r) {
    const double o[3] = {0.2 + 0.6 * u(rng), 0.2 + 0.6 * u(rng), 0.2 + 0.6 * u(rng)};
    const double du = u(rng), dv = u(rng);
    const double theta = std::numbers::pi * du, phi = kTwoPi * dv;
    const double d[3] = {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
    for (std::size_t s = 0; s < samples; ++s) {
      const double t = samples > 1 ? static_cast<double>(s) / (samples - 1) : 0.0;
      double p[3];
      for (int k = 0; k < 3; ++k) p[k] = std::clamp(o[k] + 0.2 * t * d[k], 0.0, 1.0);
      for (double v : {p[0], p[1], p[2], du, dv}) coords.push_back(static_cast<Real>(v));
      for (int ch = 0; ch < 3; ++ch) {
        const double spatial = std::sin(kTwoPi * (2.0 * p[0] + 1.5 * p[1] - p[2]) + ch);
        const double view = std::cos(kTwoPi * (du + 0.5 * dv) + 2.0 * ch);
        targets.push_back(static_cast<Real>(0.5 + 0.25 * spatial + 0.2 * view));
      }
    }
  }
  return {Tensor(Shape{rays * samples, 5}, std::move(coords)),
          Tensor(Shape{rays * samples, 3}, std::move(targets)), samples};
}

Dataset synthetic_video(std::size_t frames, std::size_t size, std::uint64_t seed) {
  if (frames < 2 || size == 0) throw std::invalid_argument("video needs >= 2 frames and a frame size");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double tint[3] = {0.4 + 0.6 * u(rng), 0.4 + 0.6 * u(rng), 0.4 + 0.6 * u(rng)};
  const double bg[3] = {0.2 * u(rng), 0.2 * u(rng), 0.2 * u(rng)};
  const double wobble = 1.0 + 2.0 * u(rng);
  std::vector<Real> coords(frames), targets;
  targets.reserve(frames * 3 * size * size);
  for (std::size_t f = 0; f < frames; ++f) {
    const double t = static_cast<double>(f) / (frames - 1);
    coords[f] = static_cast<Real>(t);
    const double cx = 0.2 + 0.6 * t, cy = 0.5 + 0.3 * std::sin(kTwoPi * wobble * t);
    for (int ch = 0; ch < 3; ++ch)
      for (std::size_t r = 0; r < size; ++r)
        for (std::size_t c = 0; c < size; ++c) {
          const double x = (c + 0.5) / size, y = (r + 0.5) / size;
          const double blob = std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (2 * 0.15 * 0.15));
          targets.push_back(static_cast<Real>(bg[ch] + 0.1 * y + 0.65 * tint[ch] * blob));
        }
  }
  return {Tensor(Shape{frames, 1}, std::move(coords)),
          Tensor(Shape{frames, 3 * size * size}, std::move(targets)), 1};
}

TaskData make_task_data(const TrainConfig& config) {
  const std::uint64_t seed = derive_seed(config.seed, kDataStream);
  TaskData data;
  switch (config.task) {
    case TaskKind::Signal1D: {
      const Signal1DSpec spec = make_signal1d(seed, config.samples);
      auto lattice = [&](std::size_t n) {
        std::vector<Real> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
          const double xi = static_cast<double>(i) / (n - 1);
          x[i] = static_cast<Real>(xi);
          y[i] = static_cast<Real>(eval_signal1d(spec, xi));
        }
        return Dataset{Tensor(Shape{n, 1}, std::move(x)), Tensor(Shape{n, 1}, std::move(y)), 1};
      };
      data.train = lattice(config.samples);
      data.eval = lattice(4 * config.samples);
      break;
    }
    case TaskKind::ImageRegression: {
      const Image img = load_task_image(config.image, seed);
      data.train = image_dataset(img);
      data.eval = data.train;
      data.image_height = img.height;
      data.image_width = img.width;
      break;
    }
    case TaskKind::ImageGeneralization: {
      const Image img = load_task_image(config.image, seed);
      std::tie(data.train, data.eval) = split_generalization(img);
      data.image_height = img.height;
      data.image_width = img.width;
      break;
    }
    case TaskKind::SyntheticRay:
      data.train = synthetic_rays(config.rays, config.model.samples_per_ray, seed);
      data.eval = synthetic_rays(config.rays, config.model.samples_per_ray, derive_seed(seed, 1));
      break;
    case TaskKind::SyntheticVideo:
      data.train = synthetic_video(config.frames, config.frame_size, seed);
      data.eval = data.train;
      break;
  }
  return data;
}

MlpSpec model_spec(const TrainConfig& config) {
  MlpSpec spec = config.model;
  spec.cam = config.cam != CamVariant::None;
  spec.cam_normalize = config.cam != CamVariant::CamN;
  spec.seed = derive_seed(config.seed, kModelStream);
  return spec;
}

Tensor predict(const FieldModel& model, const Dataset& data, std::size_t chunk) {
  const std::size_t rows = data.rows();
  const std::size_t step = std::max<std::size_t>(1, chunk / data.group) * data.group;
  std::vector<Real> out;
  out.reserve(rows * model.output_dim());
  for (std::size_t b = 0; b < rows; b += step) {
    const Tensor y = model.forward(slice_rows(data.coords, b, std::min(rows, b + step)));
    out.insert(out.end(), y.data().begin(), y.data().end());
  }
  return Tensor(Shape{rows, model.output_dim()}, std::move(out));
}

double evaluate_mse(const FieldModel& model, const Dataset& data) {
  const Tensor pred = predict(model, data);
  const auto p = pred.data(), t = data.targets.data();
  if (p.size() != t.size()) throw std::invalid_argument("model output does not match targets");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = static_cast<double>(p[i]) - t[i];
    acc += d * d;
  }
  return acc / static_cast<double>(p.size());
}

double evaluate_psnr(const FieldModel& model, const Dataset& data) {
  return psnr_from_mse(evaluate_mse(model, data));
}

TrainRun train(const TrainConfig& config, const TaskData& data, const ProgressFn& progress) {
  config.validate();
  MlpSpec spec = model_spec(config);
  spec.input_dim = data.train.coords.dim(1);
  spec.output_dim = data.train.targets.dim(1);
  FieldModel model = build_mlp(spec);
  auto params = model.parameters();

  std::vector<Shape> shapes;
  std::vector<std::string> names;
  for (const auto& p : params) {
    shapes.push_back(p.value->shape());
    names.push_back(p.name);
  }
  TrainRun run{config, std::move(model), Adam(shapes), 0, {}, kPsnrInfinite, 0, 0};
  run.log.reserve(config.iterations);
  params = run.model.parameters();
  std::vector<Tensor*> values;
  for (const auto& p : params) values.push_back(p.value);

  const Dataset& train = data.train;
  const std::size_t groups = train.groups();
  const bool full = config.batch_size == 0 || config.batch_size >= train.rows();
  const std::size_t batch_groups =
      full ? groups : std::max<std::size_t>(1, config.batch_size / train.group);

  // Encodings are constant, so the whole train set is encoded once.
  const bool has_encoding = !run.model.stages().empty() &&
                            std::holds_alternative<FourierEncoding>(run.model.stages().front());
  const Tensor encoded = run.model.encode(train.coords);

  std::vector<std::size_t> order(groups);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(derive_seed(config.seed, kBatchStream));
  std::size_t cursor = groups;

  std::vector<double> lrs(params.size());
  std::vector<std::vector<Real>> grads(params.size());
  for (std::size_t it = 0; it < config.iterations; ++it) {
    Tensor xb = train.coords, yb = train.targets, eb = encoded;
    if (!full) {
      if (cursor + batch_groups > groups) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      const std::span<const std::size_t> pick(order.data() + cursor, batch_groups);
      cursor += batch_groups;
      xb = gather_groups(train.coords, pick, train.group);
      yb = gather_groups(train.targets, pick, train.group);
      if (has_encoding) eb = gather_groups(encoded, pick, train.group);
    }

    Tape tape;
    std::vector<Tensor> bound;
    bound.reserve(values.size());
    for (Tensor* v : values) bound.push_back(tape.watch(*v));
    const Tensor pred = run.model.forward(xb, bound, nullptr, has_encoding ? &eb : nullptr);
    const Tensor loss = ops::mse(pred, yb);
    const double l = loss.item();
    if (!std::isfinite(l)) {
      throw std::runtime_error("non-finite loss at iteration " + std::to_string(it + 1));
    }
    tape.backward(loss);
    for (std::size_t i = 0; i < bound.size(); ++i) grads[i] = tape.grad(bound[i]);

    const GroupRates rates = lr_at(config.schedule, it);
    for (std::size_t i = 0; i < params.size(); ++i) lrs[i] = rates.for_group(params[i].group);
    run.optimizer.step(values, grads, lrs, names);

    run.iteration = it + 1;
    run.best_loss = std::min(run.best_loss, l);
    run.log.push_back({it + 1, l, psnr_from_mse(l), rates.network});
    if (progress) progress(run.log.back());
  }
  run.final_train_psnr = evaluate_psnr(run.model, data.train);
  run.final_eval_psnr = evaluate_psnr(run.model, data.eval);
  return run;
}

TrainRun train(const TrainConfig& config, const ProgressFn& progress) {
  return train(config, make_task_data(config), progress);
}

void write_metric_log(const std::filesystem::path& path, std::span<const MetricRecord> log) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os.precision(9);
  os << "iteration\tloss\tpsnr\tlr\n";
  for (const auto& r : log) os << r.iteration << '\t' << r.loss << '\t' << r.psnr << '\t' << r.lr << '\n';
}

void write_run_artifacts(const std::filesystem::path& dir, const TrainRun& run) {
  std::filesystem::create_directories(dir);
  save_model(dir / "checkpoint.bin", run.model);
  write_metric_log(dir / "log.tsv", run.log);
  {
    std::ofstream os(dir / "config.ini");
    if (!os) throw std::runtime_error("cannot write " + (dir / "config.ini").string());
    os << serialize_config(run.config);
  }
  std::ofstream os(dir / "summary.tsv");
  if (!os) throw std::runtime_error("cannot write " + (dir / "summary.tsv").string());
  os.precision(9);
  os << "task\tvariant\tseed\titerations\tbest_loss\ttrain_psnr\teval_psnr\tparameters\n"
     << task_name(run.config.task) << '\t' << variant_name(run.config.cam) << '\t' << run.config.seed
     << '\t' << run.iteration << '\t' << run.best_loss << '\t' << run.final_train_psnr << '\t'
     << run.final_eval_psnr << '\t' << run.model.parameter_count() << '\n';
}

}  // namespace camf
