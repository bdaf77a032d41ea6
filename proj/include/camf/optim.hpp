#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "camf/nn.hpp"
#include "camf/tensor.hpp"

namespace camf {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam moments for a fixed, ordered list of parameter tensors.
class Adam {
 public:
  Adam(std::vector<Shape> shapes, AdamHyper hyper = {});

  /// One bias-corrected update. `lrs[i]` is the rate for parameter i.
  /// Throws std::runtime_error naming `names[i]` if a gradient is not finite.
  void step(std::span<Tensor* const> params, std::span<const std::vector<Real>> grads,
            std::span<const double> lrs, std::span<const std::string> names = {});

  std::uint64_t steps() const { return step_; }
  const std::vector<std::vector<double>>& first_moment() const { return m_; }
  const std::vector<std::vector<double>>& second_moment() const { return v_; }

 private:
  AdamHyper hyper_;
  std::uint64_t step_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

/// Per-group step decay: rate = initial * factor^(milestones passed).
struct LrSchedule {
  double network_lr = 1e-3;
  double grid_lr = 1e-2;
  std::vector<std::size_t> milestones;
  double factor = 0.1;

  void validate() const;
  bool operator==(const LrSchedule&) const = default;
};

struct GroupRates {
  double network;
  double grid;
  double for_group(ParamGroup g) const { return g == ParamGroup::Grid ? grid : network; }
};

GroupRates lr_at(const LrSchedule& schedule, std::size_t iteration);

struct QuantizedTensor {
  std::vector<std::uint32_t> codes;
  double scale = 0;   // step between levels
  double offset = 0;  // value of code 0
  int bits = 8;
};

/// Uniform 2^bits-level grid over [min, max], rounding half away from zero.
/// A constant tensor quantizes to all-zero codes with scale 0.
QuantizedTensor quantize_minmax(std::span<const Real> values, int bits);
std::vector<Real> dequantize(const QuantizedTensor& q);

/// Quantize/dequantize every parameter tensor of `model` in place
/// (per-tensor min-max). bits == 32 leaves the model untouched.
void quantize_model(FieldModel& model, int bits);

}  // namespace camf
