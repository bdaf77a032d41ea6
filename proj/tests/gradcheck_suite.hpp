// Randomized finite-difference checks over every differentiable op, the CAM
// modes and a complete FieldModel. Shared by the unit tests (single and
// double precision builds) and the acceptance runner.
#pragma once

#include <map>
#include <string>

#include "camf/cam.hpp"
#include "camf/grid.hpp"
#include "camf/nn.hpp"
#include "camf/ops.hpp"
#include "oracles.hpp"

namespace gradsuite {

using namespace camf;

struct Result {
  std::size_t instances = 0;
  std::size_t failures = 0;
  double worst = 0;
  std::map<std::string, double> worst_by_case;
};

using Fn = std::function<Tensor(const std::vector<Tensor>&)>;

// Scalar loss with random weights so every output element matters.
inline Tensor weighted_sum(const Tensor& y, const Tensor& w) {
  return ops::sum(ops::mul(y, w), ops::all_axes(y));
}

inline Tensor unit_coords(std::size_t n, std::size_t d, std::mt19937_64& rng) {
  return oracle::random_tensor({n, d}, rng, 0.0, 1.0);
}

inline Result run(std::uint64_t seed, std::size_t rounds, double step, double tol) {
  Result res;
  std::mt19937_64 rng(seed);
  auto check = [&](const std::string& name, const Fn& f, const std::vector<Tensor>& inputs) {
    const auto g = oracle::check_gradients(f, inputs, step);
    ++res.instances;
    if (!(g.worst < tol)) ++res.failures;
    res.worst = std::max(res.worst, g.worst);
    res.worst_by_case[name] = std::max(res.worst_by_case[name], g.worst);
  };
  std::uniform_int_distribution<std::size_t> ext(1, 4);

  for (std::size_t round = 0; round < rounds; ++round) {
    const std::size_t n = ext(rng) + 1, c = ext(rng) + 1;
    const Tensor w = oracle::random_tensor({n, c}, rng);

    const std::pair<const char*, ops::UnaryOp> unary[] = {
        {"relu", ops::UnaryOp::Relu},       {"sin", ops::UnaryOp::Sin},
        {"cos", ops::UnaryOp::Cos},         {"sigmoid", ops::UnaryOp::Sigmoid},
        {"sqrt", ops::UnaryOp::Sqrt},       {"square", ops::UnaryOp::Square}};
    for (const auto& [name, op] : unary) {
      const Tensor x = op == ops::UnaryOp::Sqrt ? oracle::random_tensor({n, c}, rng, 0.5, 2.0)
                                                : oracle::random_away_from_zero({n, c}, rng);
      check(name, [&, op](const auto& in) { return weighted_sum(ops::elementwise(op, in[0]), w); }, {x});
    }

    const std::pair<const char*, ops::BinaryOp> binary[] = {{"add", ops::BinaryOp::Add},
                                                            {"sub", ops::BinaryOp::Sub},
                                                            {"mul", ops::BinaryOp::Mul},
                                                            {"div", ops::BinaryOp::Div}};
    for (const auto& [name, op] : binary) {
      // alternate full-shape, row-broadcast and column-broadcast operands
      const Shape bs = round % 3 == 0 ? Shape{n, c} : round % 3 == 1 ? Shape{c} : Shape{n, 1};
      const Tensor a = oracle::random_tensor({n, c}, rng);
      const Tensor b = oracle::random_away_from_zero(bs, rng, 0.5);
      check(name, [&, op](const auto& in) { return weighted_sum(ops::elementwise(op, in[0], in[1]), w); },
            {a, b});
    }

    check("affine", [&](const auto& in) { return weighted_sum(ops::affine(in[0], Real(-1.5), Real(0.25)), w); },
          {oracle::random_tensor({n, c}, rng)});

    const std::size_t k = ext(rng);
    check("matmul", [&](const auto& in) { return weighted_sum(ops::matmul(in[0], in[1]), w); },
          {oracle::random_tensor({n, k}, rng), oracle::random_tensor({k, c}, rng)});
    check("linear", [&](const auto& in) { return weighted_sum(ops::linear(in[0], in[1], in[2]), w); },
          {oracle::random_tensor({n, k}, rng), oracle::random_tensor({c, k}, rng),
           oracle::random_tensor({c}, rng)});

    const Tensor cube = oracle::random_tensor({n, c, 3}, rng);
    const Tensor w2 = oracle::random_tensor({n, 1, 3}, rng);
    for (auto op : {ops::ReduceOp::Sum, ops::ReduceOp::Mean, ops::ReduceOp::Variance}) {
      const std::string name = op == ops::ReduceOp::Sum ? "sum" : op == ops::ReduceOp::Mean ? "mean" : "variance";
      check(name, [&, op](const auto& in) { return weighted_sum(ops::reduce(op, in[0], {1}, true), w2); }, {cube});
    }

    const Tensor wcat = oracle::random_tensor({c, n + 2}, rng);
    check("reshape+concat",
          [&](const auto& in) {
            const Tensor r = ops::reshape(in[0], {c, n});
            return weighted_sum(ops::square(ops::concat({r, in[1]}, 1)), wcat);
          },
          {oracle::random_tensor({n, c}, rng), oracle::random_tensor({c, 2}, rng)});

    // Normalization units get at least three elements: a two-element unit
    // standardizes to +-1 and its true gradient is O(eps), below what
    // single-precision differencing resolves.
    const std::size_t cu = c + 1;
    const Tensor wu = oracle::random_tensor({n, cu}, rng);
    check("standardize", [&](const auto& in) { return weighted_sum(ops::standardize(in[0], 1, Real(1e-3)), wu); },
          {oracle::random_tensor({n, cu}, rng)});
    check("mse", [&](const auto& in) { return ops::mse(in[0], in[1]); },
          {oracle::random_tensor({n, c}, rng), oracle::random_tensor({n, c}, rng)});
    check("unit_affine", [&](const auto& in) { return weighted_sum(ops::unit_affine(in[0], in[1], in[2]), w); },
          {oracle::random_tensor({n, c}, rng), oracle::random_tensor({n}, rng), oracle::random_tensor({n}, rng)});

    const Tensor x1 = unit_coords(n, 1, rng);
    const Tensor wk = oracle::random_tensor({n, 2}, rng);
    check("interp1", [&](const auto& in) { return weighted_sum(interp1(in[0], x1), wk); },
          {oracle::random_tensor({5, 2}, rng)});
    const Tensor x2 = unit_coords(n, 2, rng);
    check("interp2", [&](const auto& in) { return weighted_sum(interp2(in[0], x2), wk); },
          {oracle::random_tensor({3, 4, 2}, rng)});

    // CAM modes with randomized grids
    for (bool normalize : {true, false}) {
      const CamLayer layer = CamLayer::make(CamMode::Scalar, {3, 3}, {}, 1, normalize, Real(1e-3));
      const Tensor xs = unit_coords(n, 2, rng);
      check(normalize ? "cam_scalar" : "cam_scalar (no norm)",
            [&](const auto& in) { return weighted_sum(cam_scalar(layer, in[0], xs, {in[1], in[2]}), wu); },
            {oracle::random_tensor({n, cu}, rng), oracle::random_tensor({3, 3, 1}, rng),
             oracle::random_tensor({3, 3, 1}, rng)});
    }
    {
      const std::size_t s = ext(rng) + 1;
      const CamLayer layer = CamLayer::make(CamMode::Ray, {3, 4}, {}, 1, true, Real(1e-3));
      const Tensor xr = unit_coords(n, 2, rng);
      const Tensor wr = oracle::random_tensor({n, s, c}, rng);
      check("cam_ray", [&](const auto& in) { return weighted_sum(cam_ray(layer, in[0], xr, {in[1], in[2]}), wr); },
            {oracle::random_tensor({n, s, c}, rng), oracle::random_tensor({3, 4, 1}, rng),
             oracle::random_tensor({3, 4, 1}, rng)});
    }
    for (bool volume : {false, true}) {
      const std::size_t h = ext(rng) + 1, wd = ext(rng) + 1;
      const std::size_t kk = volume ? 1 : c;
      CamLayer layer = CamLayer::make(CamMode::Channel, {4}, {}, kk, true, Real(1e-3));
      layer.channel_norm = volume ? ChannelNorm::Volume : ChannelNorm::Plane;
      const Tensor xt = unit_coords(n, 1, rng);
      const Tensor wc = oracle::random_tensor({n, c, h, wd}, rng);
      check(volume ? "cam_channel (volume)" : "cam_channel",
            [&](const auto& in) { return weighted_sum(cam_channel(layer, in[0], xt, {in[1], in[2]}), wc); },
            {oracle::random_tensor({n, c, h, wd}, rng), oracle::random_tensor({4, kk}, rng),
             oracle::random_tensor({4, kk}, rng)});
    }

    // Whole model: encoding, linear layers, CAM, relu, sigmoid head.
    {
      MlpSpec spec;
      spec.input_dim = 2;
      spec.output_dim = 2;
      spec.layers = 3;
      spec.width = 6;
      spec.encoding = MlpSpec::Encoding::Gaussian;
      spec.frequencies = 3;
      spec.gaussian_scale = 1;
      spec.cam = true;
      spec.grid_resolution = {3, 3};
      spec.cam_epsilon = Real(1e-3);
      spec.seed = seed + round;
      FieldModel model = build_mlp(spec);
      std::vector<Tensor> params;
      for (auto& p : model.parameters()) params.push_back(oracle::random_tensor(p.value->shape(), rng, -1, 1));
      const Tensor xm = unit_coords(n, 2, rng);
      const Tensor wm = oracle::random_tensor({n, 2}, rng);
      check("field_model", [&](const auto& in) { return weighted_sum(model.forward(xm, in), wm); }, params);
    }
  }
  return res;
}

}  // namespace gradsuite
