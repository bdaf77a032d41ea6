#include <doctest.h>

#include "camf/grid.hpp"
#include "oracles.hpp"

using namespace camf;

namespace {

ModulationGrid grid1(std::vector<Real> v) {
  ModulationGrid g;
  const std::size_t d = v.size();
  g.resolution = {d};
  g.values = Tensor(Shape{d, 1}, std::move(v));
  return g;
}

ModulationGrid grid2(std::size_t d1, std::size_t d2, std::vector<Real> v) {
  ModulationGrid g;
  g.resolution = {d1, d2};
  g.values = Tensor(Shape{d1, d2, 1}, std::move(v));
  return g;
}

}  // namespace

TEST_CASE("interp1 examples") {
  const auto constant = ModulationGrid::constant({4}, 1, 2);
  CHECK(interp1(constant, Tensor::vector({0.37f}))[0] == doctest::Approx(2.0));
  CHECK(interp1(grid1({0, 1}), Tensor::vector({0.25f}))[0] == doctest::Approx(0.25));
  CHECK(interp1(grid1({1, 3, 2}), Tensor::vector({0.75f}))[0] == doctest::Approx(2.5));
}

TEST_CASE("interp2 examples") {
  const auto constant = ModulationGrid::constant({3, 5}, 2, Real(-0.5));
  const Tensor c = interp2(constant, Tensor::matrix(1, 2, {0.3f, 0.8f}));
  CHECK(c.shape() == Shape{1, 2});
  CHECK(c[0] == doctest::Approx(-0.5));
  CHECK(c[1] == doctest::Approx(-0.5));
  const auto g = grid2(2, 2, {0, 1, 2, 3});
  CHECK(interp2(g, Tensor::matrix(1, 2, {0, 0}))[0] == 0);
  CHECK(interp2(g, Tensor::matrix(1, 2, {0.5f, 0.5f}))[0] == doctest::Approx(1.5));
  // the first coordinate runs along the first axis
  CHECK(interp2(g, Tensor::matrix(1, 2, {1, 0}))[0] == 2);
}

TEST_CASE("domain and shape errors") {
  const auto g = ModulationGrid::constant({4}, 1, 0);
  CHECK_THROWS_AS(interp1(g, Tensor::vector({1.01f})), std::invalid_argument);
  CHECK_THROWS_AS(interp1(g, Tensor::vector({-0.01f})), std::invalid_argument);
  CHECK_NOTHROW(interp1(g, Tensor::vector({1.0000005f})));
  ModulationGrid bad;
  bad.resolution = {1};
  bad.values = Tensor(Shape{1, 1});
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS(interp2(ModulationGrid::constant({3, 3}, 1, 0), Tensor::matrix(1, 3, {0, 0, 0})),
                  std::invalid_argument);
}

TEST_CASE("stencil weights") {
  const auto g1 = ModulationGrid::constant({5}, 1, 0);
  auto at_node = grid_grad_weights(g1, Tensor::vector({0.5f}));
  REQUIRE(at_node[0].count == 1);
  CHECK(at_node[0].node[0] == 2);
  CHECK(at_node[0].weight[0] == 1);
  auto mid = grid_grad_weights(g1, Tensor::vector({0.125f}));
  REQUIRE(mid[0].count == 2);
  CHECK(mid[0].weight[0] == doctest::Approx(0.5));
  CHECK(mid[0].weight[1] == doctest::Approx(0.5));

  // rank-2 weights equal the finite-difference sensitivity to each node
  std::mt19937_64 rng(2);
  const Tensor values = oracle::random_tensor({4, 3, 1}, rng);
  const Tensor xy = Tensor::matrix(1, 2, {0.41f, 0.77f});
  ModulationGrid g2;
  g2.resolution = {4, 3};
  g2.values = values;
  const auto st = grid_grad_weights(g2, xy)[0];
  std::vector<double> w(12, 0.0);
  for (std::size_t i = 0; i < st.count; ++i) w[st.node[i]] += st.weight[i];
  for (std::size_t node = 0; node < 12; ++node) {
    Tensor up = values.clone(), down = values.clone();
    up.mutable_data()[node] += Real(1e-2);
    down.mutable_data()[node] -= Real(1e-2);
    const double fd = (interp2(up, xy)[0] - interp2(down, xy)[0]) / 2e-2;
    CHECK(fd == doctest::Approx(w[node]).epsilon(1e-3).scale(1));
  }
}

TEST_CASE("partition of unity, node exactness and bounds") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 1);
  const std::vector<std::size_t> res{5, 7};
  ModulationGrid g;
  g.resolution = res;
  g.values = oracle::random_tensor({5, 7, 1}, rng);
  std::vector<Real> pts;
  for (int i = 0; i < 200; ++i) pts.push_back(static_cast<Real>(u(rng)));
  const Tensor xy(Shape{100, 2}, pts);
  const auto st = grid_grad_weights(g, xy);
  const Tensor out = interp2(g, xy);
  for (std::size_t q = 0; q < st.size(); ++q) {
    double s = 0, lo = 1e9, hi = -1e9;
    for (std::size_t i = 0; i < st[q].count; ++i) {
      s += st[q].weight[i];
      lo = std::min<double>(lo, g.values[st[q].node[i]]);
      hi = std::max<double>(hi, g.values[st[q].node[i]]);
    }
    CHECK(std::abs(s - 1) < 1e-6);
    CHECK(out[q] >= lo - 1e-6);
    CHECK(out[q] <= hi + 1e-6);
  }
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 7; ++j) {
      const Tensor node = Tensor::matrix(1, 2, {static_cast<Real>(i / 4.0), static_cast<Real>(j / 6.0)});
      CHECK(interp2(g, node)[0] == g.values[i * 7 + j]);
    }
}

TEST_CASE("interp matches the nested-loop oracle") {
  std::mt19937_64 rng(4);
  const Tensor values = oracle::random_tensor({3, 6, 2}, rng);
  const Tensor xy = oracle::random_tensor({20, 2}, rng, 0, 1);
  const Tensor out = interp2(values, xy);
  const auto g = oracle::to_double(values.data());
  for (std::size_t q = 0; q < 20; ++q)
    for (std::size_t ch = 0; ch < 2; ++ch)
      CHECK(out[q * 2 + ch] ==
            doctest::Approx(oracle::bilerp_grid(g, 3, 6, 2, ch, xy[2 * q], xy[2 * q + 1])).epsilon(1e-5));
}
