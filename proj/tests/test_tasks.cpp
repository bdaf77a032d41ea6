#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "camf/checkpoint.hpp"
#include "camf/tasks.hpp"

using namespace camf;

namespace {

TrainConfig small_image_config(CamVariant variant, std::size_t iterations) {
  TrainConfig c = TrainConfig::defaults(TaskKind::ImageRegression);
  c.image = "synthetic:natural:32";
  c.model.width = 32;
  c.model.frequencies = 16;
  c.model.grid_resolution = {8, 8};
  c.iterations = iterations;
  c.batch_size = 256;
  c.schedule.milestones = {};
  c.cam = variant;
  return c;
}

}  // namespace

TEST_CASE("1d signal") {
  Signal1DSpec zero = make_signal1d(3);
  zero.phase.fill(0);
  CHECK(eval_signal1d(zero, 0) == 0);
  CHECK(eval_signal1d(zero, 1) == doctest::Approx(0).scale(1));

  const Signal1DSpec spec = make_signal1d(5);
  for (std::size_t i = 0; i < 10; ++i) CHECK(spec.k[i] == 5 * static_cast<int>(i + 1));
  double direct = 0;
  for (std::size_t i = 0; i < 10; ++i) direct += std::sin(2 * std::numbers::pi * spec.k[i] * 0.1 + spec.phase[i]);
  CHECK(eval_signal1d(spec, 0.1) == doctest::Approx(direct).epsilon(1e-12));
  CHECK(make_signal1d(5).phase == spec.phase);
  CHECK(make_signal1d(6).phase != spec.phase);
}

TEST_CASE("psnr") {
  const std::vector<Real> a{0.1f, 0.2f, 0.3f};
  CHECK(psnr(a, a) == kPsnrInfinite);
  CHECK(psnr_from_mse(0.01) == doctest::Approx(20));
  CHECK(psnr_from_mse(0.001) == doctest::Approx(30));
  const std::vector<Real> b{0.2f, 0.3f, 0.4f};
  CHECK(psnr(a, b) == doctest::Approx(20).epsilon(1e-5));
  CHECK_THROWS_AS(psnr(Tensor::vector({1, 2}), Tensor::matrix(1, 2, {1, 2})), std::invalid_argument);
}

TEST_CASE("image coordinates and the generalization split") {
  Image img(4, 4, 3);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<float>(i) / 48.0f;
  const Dataset all = image_dataset(img);
  CHECK(all.rows() == 16);
  // pixel (r=1, c=2)
  CHECK(all.coords[(1 * 4 + 2) * 2] == doctest::Approx(2.5 / 4));
  CHECK(all.coords[(1 * 4 + 2) * 2 + 1] == doctest::Approx(1.5 / 4));
  CHECK(all.targets[(1 * 4 + 2) * 3 + 1] == img.at(1, 2, 1));

  const auto [train, eval] = split_generalization(img);
  CHECK(train.rows() == 4);
  CHECK(eval.rows() == 16);
  for (std::size_t i = 0; i < train.rows(); ++i) {
    bool found = false;
    for (std::size_t j = 0; j < eval.rows(); ++j)
      found |= train.coords[2 * i] == eval.coords[2 * j] && train.coords[2 * i + 1] == eval.coords[2 * j + 1];
    CHECK(found);
    CHECK(train.coords[2 * i] > 0);
    CHECK(train.coords[2 * i] < 1);
  }
  CHECK_THROWS_AS(split_generalization(Image(5, 4, 3)), std::invalid_argument);

  const auto [big_train, big_eval] = split_generalization(Image(512, 512, 3));
  CHECK(big_train.rows() == 256 * 256);
  CHECK(big_eval.rows() == 512 * 512);
}

TEST_CASE("task data shapes") {
  const Dataset rays = synthetic_rays(6, 4, 1);
  CHECK(rays.coords.shape() == Shape{24, 5});
  CHECK(rays.group == 4);
  for (std::size_t r = 0; r < 6; ++r)
    for (std::size_t s = 1; s < 4; ++s)
      CHECK(rays.coords[(r * 4 + s) * 5 + 3] == rays.coords[r * 4 * 5 + 3]);
  const Dataset video = synthetic_video(5, 4, 1);
  CHECK(video.coords.shape() == Shape{5, 1});
  CHECK(video.targets.shape() == Shape{5, 48});
  CHECK(video.coords[4] == 1);

  TrainConfig c = TrainConfig::defaults(TaskKind::Signal1D);
  const TaskData d = make_task_data(c);
  CHECK(d.train.rows() == 1000);
  CHECK(d.eval.rows() == 4000);
  CHECK_THROWS(load_task_image("synthetic:marble:32", 0));
  CHECK_THROWS(load_task_image("/nonexistent/image.ppm", 0));
}

TEST_CASE("a constant image is learned quickly") {
  // default image models; a target far from the sigmoid midpoint
  for (CamVariant v : {CamVariant::None, CamVariant::Cam}) {
    TrainConfig c = TrainConfig::defaults(TaskKind::ImageRegression).with_variant(v);
    c.iterations = 50;
    c.batch_size = 0;
    TaskData data;
    data.train = image_dataset(Image(16, 16, 3, 0.3f));
    data.eval = data.train;
    CHECK(train(c, data).final_train_psnr > 40);
  }
}

TEST_CASE("training is reproducible and improves") {
  for (CamVariant v : {CamVariant::None, CamVariant::Cam}) {
    const TrainConfig c = small_image_config(v, 60);
    const TaskData data = make_task_data(c);
    const TrainRun a = train(c, data), b = train(c, data);
    CHECK(std::abs(a.final_train_psnr - b.final_train_psnr) < 0.05);
    CHECK(a.log.size() == 60);
    CHECK(a.best_loss < a.log[9].loss);
    CHECK(a.log.front().iteration == 1);
  }
  for (TaskKind kind : {TaskKind::Signal1D, TaskKind::SyntheticRay, TaskKind::SyntheticVideo}) {
    TrainConfig c = TrainConfig::defaults(kind);
    c.iterations = 40;
    c.rays = 64;
    const TrainRun run = train(c);
    CHECK(run.best_loss < run.log[9].loss);
  }
}

TEST_CASE("non-finite losses abort with the iteration") {
  TrainConfig c = small_image_config(CamVariant::None, 5);
  TaskData data;
  Image img(4, 4, 3, 0.5f);
  data.train = image_dataset(img);
  data.train.targets.mutable_data()[3] = std::nanf("");
  data.eval = data.train;
  try {
    train(c, data);
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("iteration 1") != std::string::npos);
  }
}

TEST_CASE("evaluating a saved checkpoint matches the training summary") {
  const TrainConfig c = small_image_config(CamVariant::Cam, 30);
  const TaskData data = make_task_data(c);
  const TrainRun run = train(c, data);
  const auto dir = std::filesystem::temp_directory_path() / "camf_test_run";
  std::filesystem::remove_all(dir);
  write_run_artifacts(dir, run);
  for (const char* f : {"checkpoint.bin", "log.tsv", "config.ini", "summary.tsv"})
    CHECK(std::filesystem::exists(dir / f));
  const FieldModel back = load_model(dir / "checkpoint.bin");
  CHECK(std::abs(evaluate_psnr(back, data.train) - run.final_train_psnr) < 1e-4);
  CHECK(load_config((dir / "config.ini").string()) == c);
  std::ifstream log(dir / "log.tsv");
  std::string header;
  std::getline(log, header);
  CHECK(header == "iteration\tloss\tpsnr\tlr");
  std::filesystem::remove_all(dir);
}
