#include <doctest.h>

#include "camf/cam.hpp"
#include "camf/ops.hpp"
#include "equation_suite.hpp"

using namespace camf;

namespace {

constexpr Real kTinyEps = Real(1e-12);

void check_close(const Tensor& t, std::vector<double> want, double tol = 1e-5) {
  REQUIRE(t.size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i) CHECK(t[i] == doctest::Approx(want[i]).epsilon(tol));
}

CamLayer constant_layer(CamMode mode, std::vector<std::size_t> res, Real gamma, Real beta, Real eps,
                        std::size_t k = 1) {
  CamLayer layer = CamLayer::make(mode, res, {}, k, true, eps);
  layer.gamma = ModulationGrid::constant(res, k, gamma);
  layer.beta = ModulationGrid::constant(res, k, beta);
  return layer;
}

}  // namespace

TEST_CASE("cam_scalar examples") {
  const Tensor x = Tensor::matrix(1, 2, {0.3f, 0.6f});
  check_close(cam_scalar(constant_layer(CamMode::Scalar, {4, 4}, 1, 0, kTinyEps), Tensor::matrix(1, 3, {1, 2, 3}), x),
              {-1.2247449, 0, 1.2247449});
  const Tensor flat =
      cam_scalar(constant_layer(CamMode::Scalar, {4, 4}, 9, Real(0.7), Real(1e-5)), Tensor::matrix(1, 3, {5, 5, 5}), x);
  for (std::size_t i = 0; i < 3; ++i) CHECK(flat[i] == Real(0.7));
  check_close(cam_scalar(constant_layer(CamMode::Scalar, {4, 4}, 3, -1, kTinyEps), Tensor::matrix(1, 2, {0, 2}), x),
              {-4, 2});
}

TEST_CASE("cam_ray examples") {
  const Tensor f(Shape{1, 2, 2}, {1, 2, 3, 4});
  const Tensor dirs = Tensor::matrix(1, 2, {0.2f, 0.9f});
  const Tensor one = cam_ray(constant_layer(CamMode::Ray, {3, 3}, 1, 0, kTinyEps), f, dirs);
  check_close(one, {-1.3416408, -0.4472136, 0.4472136, 1.3416408});
  const Tensor two = cam_ray(constant_layer(CamMode::Ray, {3, 3}, 2, 0, kTinyEps), f, dirs);
  for (std::size_t i = 0; i < 4; ++i) CHECK(two[i] == 2 * one[i]);
  const Tensor flat = cam_ray(constant_layer(CamMode::Ray, {3, 3}, 5, Real(-0.25), Real(1e-5)),
                              Tensor(Shape{1, 3, 2}, Real(4)), dirs);
  for (std::size_t i = 0; i < 6; ++i) CHECK(flat[i] == Real(-0.25));
  CHECK_THROWS_AS(cam_ray(constant_layer(CamMode::Ray, {3, 3}, 1, 0, kTinyEps), Tensor(Shape{1, 0, 2}), dirs),
                  std::invalid_argument);
}

TEST_CASE("cam_channel examples") {
  const Tensor t = Tensor::matrix(1, 1, {0.4f});
  check_close(cam_channel(constant_layer(CamMode::Channel, {5}, 1, 0, kTinyEps), Tensor(Shape{1, 1, 2, 2}, {1, 3, 5, 7}),
                          t),
              {-1.3416408, -0.4472136, 0.4472136, 1.3416408});
  const Tensor flat = cam_channel(constant_layer(CamMode::Channel, {5}, 3, Real(0.125), Real(1e-5)),
                                  Tensor(Shape{1, 1, 2, 2}, Real(2)), t);
  for (std::size_t i = 0; i < 4; ++i) CHECK(flat[i] == Real(0.125));

  CamLayer layer = CamLayer::make(CamMode::Channel, {3}, {}, 2, true, kTinyEps);
  layer.gamma.values = Tensor(Shape{3, 2}, {1, 2, 1, 2, 1, 2});
  const Tensor twin(Shape{1, 2, 2, 2}, {1, 3, 5, 7, 1, 3, 5, 7});
  const Tensor out = cam_channel(layer, twin, t);
  for (std::size_t i = 0; i < 4; ++i) CHECK(out[4 + i] == 2 * out[i]);
  CHECK_THROWS_AS(cam_channel(CamLayer::make(CamMode::Channel, {3}, {}, 3), twin, t), std::invalid_argument);
}

TEST_CASE("select_coords") {
  const Tensor x = Tensor::matrix(2, 6, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11});
  const Tensor x5 = ops::reshape(Tensor::vector({0, 1, 2, 3, 4, 5, 6, 7, 8, 9}), {2, 5});
  check_close(select_coords(x5, {3, 4}), {3, 4, 8, 9});
  const Tensor same = select_coords(x, {});
  CHECK(same.shape() == x.shape());
  CHECK(same.data().data() == x.data().data());
  const Tensor time = select_coords(x, {5});
  CHECK(time.shape() == Shape{2, 1});
  check_close(time, {5, 11});
  check_close(select_coords(x, {2, 0}), {2, 0, 8, 6});
  CHECK_THROWS_AS(select_coords(x, {6}), std::invalid_argument);
}

TEST_CASE("identity start and standardization statistics") {
  std::mt19937_64 rng(21);
  const Tensor f = oracle::random_tensor({6, 8}, rng);
  const Tensor x = oracle::random_tensor({6, 2}, rng, 0, 1);

  const CamLayer fresh = CamLayer::make(CamMode::Scalar, {5, 5});
  const Tensor standardized = ops::standardize(f, 1, fresh.epsilon);
  const Tensor out = cam_scalar(fresh, f, x);
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(out[i] == doctest::Approx(standardized[i]).epsilon(1e-6));

  const CamLayer identity = CamLayer::make(CamMode::Scalar, {5, 5}, {}, 1, false);
  const Tensor same = cam_scalar(identity, f, x);
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(same[i] == f[i]);

  for (std::size_t r = 0; r < 6; ++r) {
    double mu = 0, var = 0;
    for (std::size_t c = 0; c < 8; ++c) mu += out[r * 8 + c];
    mu /= 8;
    for (std::size_t c = 0; c < 8; ++c) var += (out[r * 8 + c] - mu) * (out[r * 8 + c] - mu);
    var /= 8;
    CHECK(std::abs(mu) < 1e-5);
    CHECK(std::abs(var - 1) < 1e-3);
  }
}

TEST_CASE("configuration errors") {
  CHECK_THROWS_AS(CamLayer::make(CamMode::Scalar, {4, 4}, {}, 2), std::invalid_argument);
  CHECK_THROWS_AS(CamLayer::make(CamMode::Scalar, {4, 4}, {0}), std::invalid_argument);
  CHECK_THROWS_AS(CamLayer::make(CamMode::Scalar, {4, 4}, {}, 1, true, 0), std::invalid_argument);
  const CamLayer ray = CamLayer::make(CamMode::Ray, {3, 3});
  CHECK_THROWS_AS(cam_scalar(ray, Tensor(Shape{2, 2}), Tensor(Shape{2, 2})), std::invalid_argument);
  const CamLayer scalar = CamLayer::make(CamMode::Scalar, {3, 3});
  CHECK_THROWS_AS(cam_scalar(scalar, Tensor(Shape{2, 2}), Tensor(Shape{3, 2})), std::invalid_argument);
}

TEST_CASE("all modes match the nested-loop equations") {
  const auto res = eqsuite::run(17);
  for (const auto& [mode, worst] : res.worst_by_mode) {
    INFO(mode << " worst relative error " << worst);
    CHECK(worst < 1e-6);
  }
  CHECK(res.instances > 500);
}
