#pragma once

#include <cstddef>
#include <vector>

#include "camf/tensor.hpp"

namespace camf::ops {

enum class UnaryOp { Relu, Sin, Cos, Sigmoid, Sqrt, Square };
enum class BinaryOp { Add, Sub, Mul, Div };
enum class ReduceOp { Sum, Mean, Variance };

Tensor elementwise(UnaryOp op, const Tensor& a);
/// Broadcasting binary op. Division by an exact zero yields inf/nan, which
/// the trainer's finiteness guard reports.
Tensor elementwise(BinaryOp op, const Tensor& a, const Tensor& b);
/// scale * a + shift with fixed scalars.
Tensor affine(const Tensor& a, Real scale, Real shift);

inline Tensor add(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::Add, a, b); }
inline Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::Sub, a, b); }
inline Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::Mul, a, b); }
inline Tensor div(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::Div, a, b); }
inline Tensor relu(const Tensor& a) { return elementwise(UnaryOp::Relu, a); }
inline Tensor sin(const Tensor& a) { return elementwise(UnaryOp::Sin, a); }
inline Tensor cos(const Tensor& a) { return elementwise(UnaryOp::Cos, a); }
inline Tensor sigmoid(const Tensor& a) { return elementwise(UnaryOp::Sigmoid, a); }
inline Tensor sqrt(const Tensor& a) { return elementwise(UnaryOp::Sqrt, a); }
inline Tensor square(const Tensor& a) { return elementwise(UnaryOp::Square, a); }

/// [M x K] * [K x P] -> [M x P].
Tensor matmul(const Tensor& a, const Tensor& b);

/// x [N x in] * weight^T + bias, with weight stored [out x in] and bias [out].
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

/// Reduces over `axes`. Variance is the population variance (divisor n).
/// Reduced axes are dropped unless `keep_dims`.
Tensor reduce(ReduceOp op, const Tensor& a, const std::vector<std::size_t>& axes,
              bool keep_dims = false);
inline Tensor sum(const Tensor& a, const std::vector<std::size_t>& axes, bool keep = false) {
  return reduce(ReduceOp::Sum, a, axes, keep);
}
inline Tensor mean(const Tensor& a, const std::vector<std::size_t>& axes, bool keep = false) {
  return reduce(ReduceOp::Mean, a, axes, keep);
}
inline Tensor variance(const Tensor& a, const std::vector<std::size_t>& axes,
                       bool keep = false) {
  return reduce(ReduceOp::Variance, a, axes, keep);
}
std::vector<std::size_t> all_axes(const Tensor& a);

Tensor reshape(const Tensor& a, Shape shape);
/// Concatenates along `axis`; all other extents must agree.
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);

/// Standardizes each unit formed by the axes [first_axis, rank): subtracts
/// the unit mean and divides by sqrt(population variance + epsilon).
/// Statistics accumulate in double.
Tensor standardize(const Tensor& a, std::size_t first_axis, Real epsilon);

/// Per-unit scale and shift: `a` is viewed as [U x L] with U = size of
/// `scale` (and `shift`), and row u becomes a[u,:] * scale[u] + shift[u].
Tensor unit_affine(const Tensor& a, const Tensor& scale, const Tensor& shift);

/// mean((pred - target)^2) over all elements.
Tensor mse(const Tensor& pred, const Tensor& target);

}  // namespace camf::ops
