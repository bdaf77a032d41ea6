// Exhaustive comparison of cam_scalar / cam_ray / cam_channel against the
// nested-loop oracles for every combination of extents up to 4.
#pragma once

#include <map>
#include <string>

#include "camf/cam.hpp"
#include "oracles.hpp"

namespace eqsuite {

using namespace camf;

struct Result {
  std::size_t instances = 0;
  double worst = 0;
  std::map<std::string, double> worst_by_mode;
};

inline std::vector<std::vector<double>> rows_of(const Tensor& x) {
  std::vector<std::vector<double>> out(x.dim(0));
  for (std::size_t r = 0; r < x.dim(0); ++r)
    for (std::size_t j = 0; j < x.dim(1); ++j) out[r].push_back(x[r * x.dim(1) + j]);
  return out;
}

// Randomizes a fresh layer's grids and returns the matching oracle description.
inline oracle::GridDesc randomize(CamLayer& layer, std::mt19937_64& rng) {
  layer.gamma.values = oracle::random_tensor(layer.gamma.value_shape(), rng);
  layer.beta.values = oracle::random_tensor(layer.beta.value_shape(), rng);
  return {layer.gamma.resolution, layer.gamma.channels, oracle::to_double(layer.gamma.values.data()),
          oracle::to_double(layer.beta.values.data())};
}

inline Result run(std::uint64_t seed, Real eps = Real(1e-5)) {
  Result res;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> res_dist(2, 4);
  auto record = [&](const std::string& mode, const Tensor& got, const std::vector<double>& want) {
    const double err = oracle::relative_error(oracle::to_double(got.data()), want);
    ++res.instances;
    res.worst = std::max(res.worst, err);
    res.worst_by_mode[mode] = std::max(res.worst_by_mode[mode], err);
  };

  for (bool normalize : {true, false}) {
    const std::string tag = normalize ? "" : " (no norm)";
    for (std::size_t n = 1; n <= 4; ++n)
      for (std::size_t c = 1; c <= 4; ++c) {
        CamLayer layer = CamLayer::make(CamMode::Scalar, {res_dist(rng), res_dist(rng)}, {}, 1, normalize, eps);
        const auto g = randomize(layer, rng);
        const Tensor f = oracle::random_tensor({n, c}, rng);
        const Tensor x = oracle::random_tensor({n, 2}, rng, 0, 1);
        record("cam_scalar" + tag, cam_scalar(layer, f, x),
               oracle::cam_scalar(oracle::to_double(f.data()), n, c, rows_of(x), g, eps, normalize));
      }
    for (std::size_t n = 1; n <= 4; ++n)
      for (std::size_t s = 1; s <= 4; ++s)
        for (std::size_t c = 1; c <= 4; ++c) {
          CamLayer layer = CamLayer::make(CamMode::Ray, {res_dist(rng), res_dist(rng)}, {3, 4}, 1, normalize, eps);
          const auto g = randomize(layer, rng);
          const Tensor f = oracle::random_tensor({n, s, c}, rng);
          const Tensor x5 = oracle::random_tensor({n, 5}, rng, 0, 1);
          const Tensor dirs = select_coords(x5, {3, 4});
          record("cam_ray" + tag, cam_ray(layer, f, x5),
                 oracle::cam_ray(oracle::to_double(f.data()), n, s, c, rows_of(dirs), g, eps, normalize));
        }
    for (bool volume : {false, true})
      for (std::size_t n = 1; n <= 4; ++n)
        for (std::size_t c = 1; c <= 4; ++c)
          for (std::size_t h = 1; h <= 4; ++h)
            for (std::size_t w = 1; w <= 4; ++w) {
              // plane mode uses one grid column per channel, volume mode a shared column
              const std::size_t k = volume ? 1 : c;
              CamLayer layer = CamLayer::make(CamMode::Channel, {res_dist(rng)}, {}, k, normalize, eps);
              layer.channel_norm = volume ? ChannelNorm::Volume : ChannelNorm::Plane;
              const auto g = randomize(layer, rng);
              const Tensor f = oracle::random_tensor({n, c, h, w}, rng);
              const Tensor t = oracle::random_tensor({n, 1}, rng, 0, 1);
              record(std::string(volume ? "cam_channel volume" : "cam_channel") + tag, cam_channel(layer, f, t),
                     oracle::cam_channel(oracle::to_double(f.data()), n, c, h, w, rows_of(t), g, eps, normalize,
                                         volume));
            }
  }
  return res;
}

}  // namespace eqsuite
