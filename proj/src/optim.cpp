#include "camf/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace camf {

Adam::Adam(std::vector<Shape> shapes, AdamHyper hyper) : hyper_(hyper) {
  for (const auto& s : shapes) {
    m_.emplace_back(numel(s), 0.0);
    v_.emplace_back(numel(s), 0.0);
  }
}

void Adam::step(std::span<Tensor* const> params, std::span<const std::vector<Real>> grads,
                std::span<const double> lrs, std::span<const std::string> names) {
  if (params.size() != m_.size() || grads.size() != m_.size() || lrs.size() != m_.size()) {
    throw std::invalid_argument("adam step given a different parameter list");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->size() != m_[i].size() || grads[i].size() != m_[i].size()) {
      throw std::invalid_argument("adam parameter " + std::to_string(i) + " changed shape");
    }
    for (Real g : grads[i]) {
      if (!std::isfinite(g)) {
        const std::string name = i < names.size() ? names[i] : "#" + std::to_string(i);
        throw std::runtime_error("non-finite gradient in parameter " + name);
      }
    }
  }
  ++step_;
  const double t = static_cast<double>(step_);
  const double c1 = 1.0 - std::pow(hyper_.beta1, t);
  const double c2 = 1.0 - std::pow(hyper_.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->mutable_data();
    const auto& g = grads[i];
    auto& m = m_[i];
    auto& v = v_[i];
    const double lr = lrs[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double gj = g[j];
      m[j] = hyper_.beta1 * m[j] + (1.0 - hyper_.beta1) * gj;
      v[j] = hyper_.beta2 * v[j] + (1.0 - hyper_.beta2) * gj * gj;
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      p[j] = static_cast<Real>(p[j] - lr * mhat / (std::sqrt(vhat) + hyper_.epsilon));
    }
  }
}

void LrSchedule::validate() const {
  if (!(network_lr > 0) || !(grid_lr > 0)) throw std::invalid_argument("learning rates must be positive");
  if (!(factor > 0)) throw std::invalid_argument("decay factor must be positive");
  for (std::size_t i = 1; i < milestones.size(); ++i) {
    if (milestones[i] <= milestones[i - 1]) {
      throw std::invalid_argument("milestones must be strictly increasing");
    }
  }
}

GroupRates lr_at(const LrSchedule& schedule, std::size_t iteration) {
  const auto passed = std::count_if(schedule.milestones.begin(), schedule.milestones.end(),
                                    [&](std::size_t m) { return iteration >= m; });
  const double k = std::pow(schedule.factor, static_cast<double>(passed));
  return {schedule.network_lr * k, schedule.grid_lr * k};
}

QuantizedTensor quantize_minmax(std::span<const Real> values, int bits) {
  if (bits < 1 || bits > 16) throw std::invalid_argument("quantization bits out of range");
  QuantizedTensor q;
  q.bits = bits;
  q.codes.assign(values.size(), 0);
  if (values.empty()) return q;
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  q.offset = lo;
  if (hi == lo) return q;
  const double levels = std::ldexp(1.0, bits) - 1.0;
  q.scale = (hi - lo) / levels;
  for (std::size_t i = 0; i < values.size(); ++i) {
    // std::round rounds half away from zero; the argument is non-negative.
    const double c = std::round((static_cast<double>(values[i]) - lo) * levels / (hi - lo));
    q.codes[i] = static_cast<std::uint32_t>(std::clamp(c, 0.0, levels));
  }
  return q;
}

std::vector<Real> dequantize(const QuantizedTensor& q) {
  std::vector<Real> out(q.codes.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<Real>(q.offset + q.scale * static_cast<double>(q.codes[i]));
  }
  return out;
}

void quantize_model(FieldModel& model, int bits) {
  if (bits == 32) return;
  if (bits != 6 && bits != 8) throw std::invalid_argument("supported bit widths are 32, 8 and 6");
  for (auto& p : model.parameters()) {
    const auto q = quantize_minmax(p.value->data(), bits);
    const auto deq = dequantize(q);
    std::copy(deq.begin(), deq.end(), p.value->mutable_data().begin());
  }
}

}  // namespace camf
