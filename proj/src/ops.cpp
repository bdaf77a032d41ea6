#include "camf/ops.hpp"

#include <cblas.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace camf::ops {
namespace {

using Strides = std::vector<std::size_t>;

Strides contiguous_strides(const Shape& shape) {
  Strides s(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;) s[i - 1] = s[i] * shape[i];
  return s;
}

// Strides of `in` viewed with the rank of `out`; broadcast axes get stride 0.
Strides aligned_strides(const Shape& in, const Shape& out) {
  const Strides base = contiguous_strides(in);
  Strides s(out.size(), 0);
  const std::size_t lead = out.size() - in.size();
  for (std::size_t i = 0; i < in.size(); ++i) {
    s[lead + i] = in[i] == 1 ? 0 : base[i];
  }
  return s;
}

// Walks every index of `shape` in row-major order, handing `f` the offset of
// that index under each stride set.
template <std::size_t K, class F>
void strided_for_each(const Shape& shape, const std::array<const Strides*, K>& strides, F&& f) {
  const std::size_t total = numel(shape);
  if (total == 0) return;
  std::array<std::size_t, K> off{};
  if (shape.empty()) {
    f(off);
    return;
  }
  const std::size_t rank = shape.size();
  const std::size_t inner = shape[rank - 1];
  std::array<std::size_t, K> inner_stride{};
  for (std::size_t k = 0; k < K; ++k) inner_stride[k] = (*strides[k])[rank - 1];
  std::vector<std::size_t> idx(rank, 0);
  for (std::size_t done = 0; done < total; done += inner) {
    std::array<std::size_t, K> o = off;
    for (std::size_t j = 0; j < inner; ++j) {
      f(o);
      for (std::size_t k = 0; k < K; ++k) o[k] += inner_stride[k];
    }
    // advance the outer odometer
    for (std::size_t ax = rank - 1; ax-- > 0;) {
      ++idx[ax];
      for (std::size_t k = 0; k < K; ++k) off[k] += (*strides[k])[ax];
      if (idx[ax] < shape[ax]) break;
      for (std::size_t k = 0; k < K; ++k) off[k] -= (*strides[k])[ax] * shape[ax];
      idx[ax] = 0;
    }
  }
}

[[maybe_unused]] void blas_gemm(CBLAS_TRANSPOSE ta, CBLAS_TRANSPOSE tb, int m, int n, int k, const float* a,
               int lda, const float* b, int ldb, float beta, float* c, int ldc) {
  cblas_sgemm(CblasRowMajor, ta, tb, m, n, k, 1.0f, a, lda, b, ldb, beta, c, ldc);
}

[[maybe_unused]] void blas_gemm(CBLAS_TRANSPOSE ta, CBLAS_TRANSPOSE tb, int m, int n, int k, const double* a,
               int lda, const double* b, int ldb, double beta, double* c, int ldc) {
  cblas_dgemm(CblasRowMajor, ta, tb, m, n, k, 1.0, a, lda, b, ldb, beta, c, ldc);
}

void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          const Real* a, std::size_t lda, const Real* b, std::size_t ldb, Real beta, Real* c,
          std::size_t ldc) {
  blas_gemm(trans_a ? CblasTrans : CblasNoTrans, trans_b ? CblasTrans : CblasNoTrans,
            static_cast<int>(m), static_cast<int>(n), static_cast<int>(k), a,
            static_cast<int>(lda), b, static_cast<int>(ldb), beta, c, static_cast<int>(ldc));
}

}  // namespace

namespace {

template <class F>
void map_values(UnaryOp op, F&& f) {
  switch (op) {
    case UnaryOp::Relu: return f([](Real x) { return x > 0 ? x : Real(0); });
    case UnaryOp::Sin: return f([](Real x) { return std::sin(x); });
    case UnaryOp::Cos: return f([](Real x) { return std::cos(x); });
    case UnaryOp::Sigmoid: return f([](Real x) { return Real(1) / (Real(1) + std::exp(-x)); });
    case UnaryOp::Sqrt: return f([](Real x) { return std::sqrt(x); });
    case UnaryOp::Square: return f([](Real x) { return x * x; });
  }
}

// Derivative expressed through the input x and output y.
template <class F>
void map_derivatives(UnaryOp op, F&& f) {
  switch (op) {
    case UnaryOp::Relu: return f([](Real x, Real) { return x > 0 ? Real(1) : Real(0); });
    case UnaryOp::Sin: return f([](Real x, Real) { return std::cos(x); });
    case UnaryOp::Cos: return f([](Real x, Real) { return -std::sin(x); });
    case UnaryOp::Sigmoid: return f([](Real, Real y) { return y * (Real(1) - y); });
    case UnaryOp::Sqrt: return f([](Real, Real y) { return Real(0.5) / y; });
    case UnaryOp::Square: return f([](Real x, Real) { return Real(2) * x; });
  }
}

}  // namespace

Tensor elementwise(UnaryOp op, const Tensor& a) {
  const auto x = a.data();
  std::vector<Real> y(x.size());
  map_values(op, [&](auto fn) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = fn(x[i]);
  });
  Tensor out(a.shape(), std::move(y));
  return Tape::record(out, {a}, [op, a, out](std::span<const Real> g, auto grads) {
    if (grads[0].empty()) return;
    const auto x = a.data();
    const auto y = out.data();
    auto ga = grads[0];
    map_derivatives(op, [&](auto fn) {
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * fn(x[i], y[i]);
    });
  });
}

Tensor unit_affine(const Tensor& a, const Tensor& scale, const Tensor& shift) {
  const std::size_t units = scale.size();
  if (shift.size() != units || units == 0 || a.size() % units != 0) {
    throw std::invalid_argument("unit_affine: " + to_string(scale.shape()) + " / " +
                                to_string(shift.shape()) + " do not tile " + to_string(a.shape()));
  }
  const std::size_t len = a.size() / units;
  const auto x = a.data(), s = scale.data(), t = shift.data();
  std::vector<Real> y(x.size());
  for (std::size_t u = 0; u < units; ++u)
    for (std::size_t i = u * len; i < (u + 1) * len; ++i) y[i] = x[i] * s[u] + t[u];
  return Tape::record(Tensor(a.shape(), std::move(y)), {a, scale, shift},
                      [a, scale, units, len](std::span<const Real> g, auto grads) {
                        const auto x = a.data(), s = scale.data();
                        auto ga = grads[0], gs = grads[1], gt = grads[2];
                        for (std::size_t u = 0; u < units; ++u) {
                          double ds = 0.0, dt = 0.0;
                          for (std::size_t i = u * len; i < (u + 1) * len; ++i) {
                            if (!ga.empty()) ga[i] += g[i] * s[u];
                            ds += static_cast<double>(g[i]) * x[i];
                            dt += g[i];
                          }
                          if (!gs.empty()) gs[u] += static_cast<Real>(ds);
                          if (!gt.empty()) gt[u] += static_cast<Real>(dt);
                        }
                      });
}

namespace {

template <BinaryOp Op>
void binary_forward(const Shape& shape, const Strides& so, const Strides& sa, const Strides& sb,
                    std::span<const Real> xa, std::span<const Real> xb, std::vector<Real>& y) {
  strided_for_each<3>(shape, {&so, &sa, &sb}, [&](const std::array<std::size_t, 3>& o) {
    const Real u = xa[o[1]], v = xb[o[2]];
    if constexpr (Op == BinaryOp::Add) y[o[0]] = u + v;
    if constexpr (Op == BinaryOp::Sub) y[o[0]] = u - v;
    if constexpr (Op == BinaryOp::Mul) y[o[0]] = u * v;
    if constexpr (Op == BinaryOp::Div) y[o[0]] = u / v;
  });
}

template <BinaryOp Op, bool WantA, bool WantB>
void binary_backward(const Shape& shape, const Strides& so, const Strides& sa, const Strides& sb,
                     std::span<const Real> g, std::span<const Real> xa, std::span<const Real> xb,
                     std::span<Real> ga, std::span<Real> gb) {
  strided_for_each<3>(shape, {&so, &sa, &sb}, [&](const std::array<std::size_t, 3>& o) {
    const Real go = g[o[0]];
    if constexpr (Op == BinaryOp::Add) {
      if constexpr (WantA) ga[o[1]] += go;
      if constexpr (WantB) gb[o[2]] += go;
    } else if constexpr (Op == BinaryOp::Sub) {
      if constexpr (WantA) ga[o[1]] += go;
      if constexpr (WantB) gb[o[2]] -= go;
    } else if constexpr (Op == BinaryOp::Mul) {
      if constexpr (WantA) ga[o[1]] += go * xb[o[2]];
      if constexpr (WantB) gb[o[2]] += go * xa[o[1]];
    } else {
      const Real v = xb[o[2]];
      if constexpr (WantA) ga[o[1]] += go / v;
      if constexpr (WantB) gb[o[2]] -= go * xa[o[1]] / (v * v);
    }
  });
}

template <BinaryOp Op>
void binary_backward(const Shape& shape, const Strides& so, const Strides& sa, const Strides& sb,
                     std::span<const Real> g, std::span<const Real> xa, std::span<const Real> xb,
                     std::span<Real> ga, std::span<Real> gb) {
  const bool want_a = !ga.empty(), want_b = !gb.empty();
  if (want_a && want_b) binary_backward<Op, true, true>(shape, so, sa, sb, g, xa, xb, ga, gb);
  else if (want_a) binary_backward<Op, true, false>(shape, so, sa, sb, g, xa, xb, ga, gb);
  else if (want_b) binary_backward<Op, false, true>(shape, so, sa, sb, g, xa, xb, ga, gb);
}

}  // namespace

Tensor elementwise(BinaryOp op, const Tensor& a, const Tensor& b) {
  const Shape shape = broadcast_shapes(a.shape(), b.shape());
  const Strides so = contiguous_strides(shape);
  const Strides sa = aligned_strides(a.shape(), shape);
  const Strides sb = aligned_strides(b.shape(), shape);
  std::vector<Real> y(numel(shape));
  switch (op) {
    case BinaryOp::Add: binary_forward<BinaryOp::Add>(shape, so, sa, sb, a.data(), b.data(), y); break;
    case BinaryOp::Sub: binary_forward<BinaryOp::Sub>(shape, so, sa, sb, a.data(), b.data(), y); break;
    case BinaryOp::Mul: binary_forward<BinaryOp::Mul>(shape, so, sa, sb, a.data(), b.data(), y); break;
    case BinaryOp::Div: binary_forward<BinaryOp::Div>(shape, so, sa, sb, a.data(), b.data(), y); break;
  }
  Tensor out(shape, std::move(y));
  return Tape::record(out, {a, b}, [op, a, b, shape](std::span<const Real> g, auto grads) {
    const Strides so = contiguous_strides(shape);
    const Strides sa = aligned_strides(a.shape(), shape);
    const Strides sb = aligned_strides(b.shape(), shape);
    const auto xa = a.data();
    const auto xb = b.data();
    switch (op) {
      case BinaryOp::Add: binary_backward<BinaryOp::Add>(shape, so, sa, sb, g, xa, xb, grads[0], grads[1]); break;
      case BinaryOp::Sub: binary_backward<BinaryOp::Sub>(shape, so, sa, sb, g, xa, xb, grads[0], grads[1]); break;
      case BinaryOp::Mul: binary_backward<BinaryOp::Mul>(shape, so, sa, sb, g, xa, xb, grads[0], grads[1]); break;
      case BinaryOp::Div: binary_backward<BinaryOp::Div>(shape, so, sa, sb, g, xa, xb, grads[0], grads[1]); break;
    }
  });
}

Tensor affine(const Tensor& a, Real scale, Real shift) {
  const auto x = a.data();
  std::vector<Real> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = scale * x[i] + shift;
  return Tape::record(Tensor(a.shape(), std::move(y)), {a},
                      [scale](std::span<const Real> g, auto grads) {
                        if (grads[0].empty()) return;
                        for (std::size_t i = 0; i < g.size(); ++i) grads[0][i] += scale * g[i];
                      });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) {
    throw std::invalid_argument("matmul expects matrices, got " + to_string(a.shape()) +
                                " and " + to_string(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), p = b.dim(1);
  if (b.dim(0) != k) {
    throw std::invalid_argument("matmul inner dimensions differ: " + to_string(a.shape()) +
                                " * " + to_string(b.shape()));
  }
  std::vector<Real> c(m * p, Real(0));
  if (m && p && k) gemm(false, false, m, p, k, a.data().data(), k, b.data().data(), p, 0, c.data(), p);
  return Tape::record(Tensor(Shape{m, p}, std::move(c)), {a, b},
                      [a, b, m, k, p](std::span<const Real> g, auto grads) {
                        if (!m || !k || !p) return;
                        // dA += dC * B^T
                        if (!grads[0].empty())
                          gemm(false, true, m, k, p, g.data(), p, b.data().data(), p, 1,
                               grads[0].data(), k);
                        // dB += A^T * dC
                        if (!grads[1].empty())
                          gemm(true, false, k, p, m, a.data().data(), k, g.data(), p, 1,
                               grads[1].data(), p);
                      });
}

std::vector<std::size_t> all_axes(const Tensor& a) {
  std::vector<std::size_t> axes(a.rank());
  for (std::size_t i = 0; i < axes.size(); ++i) axes[i] = i;
  return axes;
}

Tensor reduce(ReduceOp op, const Tensor& a, const std::vector<std::size_t>& axes,
              bool keep_dims) {
  const Shape& in = a.shape();
  std::vector<bool> reduced(in.size(), false);
  for (std::size_t ax : axes) {
    if (ax >= in.size()) {
      throw std::invalid_argument("reduce axis " + std::to_string(ax) + " out of range for " +
                                  to_string(in));
    }
    if (in[ax] == 0) {
      throw std::invalid_argument("reduce over empty axis " + std::to_string(ax) + " of " +
                                  to_string(in));
    }
    reduced[ax] = true;
  }
  Shape kept(in.size());
  Shape out_shape;
  std::size_t count = 1;
  for (std::size_t i = 0; i < in.size(); ++i) {
    kept[i] = reduced[i] ? 1 : in[i];
    if (reduced[i]) count *= in[i];
    if (!reduced[i] || keep_dims) out_shape.push_back(kept[i]);
  }
  const Strides si = contiguous_strides(in);
  const Strides sk = aligned_strides(kept, in);
  const std::size_t n_out = numel(kept);
  const auto x = a.data();

  std::vector<double> acc(n_out, 0.0);
  strided_for_each<2>(in, {&si, &sk}, [&](const std::array<std::size_t, 2>& o) {
    acc[o[1]] += x[o[0]];
  });
  std::vector<Real> mu;
  if (op != ReduceOp::Sum) {
    for (auto& v : acc) v /= static_cast<double>(count);
  }
  if (op == ReduceOp::Variance) {
    std::vector<double> m2(n_out, 0.0);
    strided_for_each<2>(in, {&si, &sk}, [&](const std::array<std::size_t, 2>& o) {
      const double d = x[o[0]] - acc[o[1]];
      m2[o[1]] += d * d;
    });
    mu.assign(acc.begin(), acc.end());
    for (std::size_t i = 0; i < n_out; ++i) acc[i] = m2[i] / static_cast<double>(count);
  }
  std::vector<Real> y(acc.begin(), acc.end());
  return Tape::record(
      Tensor(out_shape, std::move(y)), {a},
      [op, a, kept, count, mu = std::move(mu)](std::span<const Real> g, auto grads) {
        if (grads[0].empty()) return;
        const Shape& in = a.shape();
        const Strides si = contiguous_strides(in);
        const Strides sk = aligned_strides(kept, in);
        const auto x = a.data();
        auto ga = grads[0];
        const Real inv = Real(1) / static_cast<Real>(count);
        strided_for_each<2>(in, {&si, &sk}, [&](const std::array<std::size_t, 2>& o) {
          switch (op) {
            case ReduceOp::Sum: ga[o[0]] += g[o[1]]; break;
            case ReduceOp::Mean: ga[o[0]] += g[o[1]] * inv; break;
            case ReduceOp::Variance:
              ga[o[0]] += g[o[1]] * Real(2) * (x[o[0]] - mu[o[1]]) * inv;
              break;
          }
        });
      });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (numel(shape) != a.size()) {
    throw std::invalid_argument("cannot reshape " + to_string(a.shape()) + " to " +
                                to_string(shape));
  }
  std::vector<Real> y(a.data().begin(), a.data().end());
  return Tape::record(Tensor(std::move(shape), std::move(y)), {a},
                      [](std::span<const Real> g, auto grads) {
                        if (grads[0].empty()) return;
                        for (std::size_t i = 0; i < g.size(); ++i) grads[0][i] += g[i];
                      });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw std::invalid_argument("concat of zero tensors");
  const Shape& ref = parts[0].shape();
  if (axis >= ref.size()) throw std::invalid_argument("concat axis out of range");
  Shape shape = ref;
  shape[axis] = 0;
  for (const auto& p : parts) {
    if (p.rank() != ref.size()) throw std::invalid_argument("concat rank mismatch");
    for (std::size_t i = 0; i < ref.size(); ++i) {
      if (i != axis && p.dim(i) != ref[i]) {
        throw std::invalid_argument("concat extent mismatch: " + to_string(p.shape()) +
                                    " vs " + to_string(ref));
      }
    }
    shape[axis] += p.dim(axis);
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
  const std::size_t row = shape[axis] * inner;

  std::vector<Real> y(numel(shape));
  std::size_t col = 0;
  for (const auto& p : parts) {
    const std::size_t w = p.dim(axis) * inner;
    const auto x = p.data();
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(o * w), w,
                  y.begin() + static_cast<std::ptrdiff_t>(o * row + col));
    }
    col += w;
  }
  std::vector<std::size_t> widths;
  for (const auto& p : parts) widths.push_back(p.dim(axis) * inner);
  return Tape::record(Tensor(shape, std::move(y)), parts,
                      [widths, outer, row](std::span<const Real> g, auto grads) {
                        std::size_t col = 0;
                        for (std::size_t k = 0; k < widths.size(); ++k) {
                          auto gk = grads[k];
                          if (!gk.empty()) {
                            for (std::size_t o = 0; o < outer; ++o)
                              for (std::size_t j = 0; j < widths[k]; ++j)
                                gk[o * widths[k] + j] += g[o * row + col + j];
                          }
                          col += widths[k];
                        }
                      });
}

Tensor mse(const Tensor& pred, const Tensor& target) {
  if (pred.shape() != target.shape()) {
    throw std::invalid_argument("mse shape mismatch: " + to_string(pred.shape()) + " vs " +
                                to_string(target.shape()));
  }
  return mean(square(sub(pred, target)), all_axes(pred));
}

}  // namespace camf::ops

namespace camf::ops {

Tensor standardize(const Tensor& a, std::size_t first_axis, Real epsilon) {
  if (first_axis >= a.rank()) {
    throw std::invalid_argument("standardize axis " + std::to_string(first_axis) +
                                " out of range for " + to_string(a.shape()));
  }
  std::size_t units = 1, len = 1;
  for (std::size_t i = 0; i < a.rank(); ++i) (i < first_axis ? units : len) *= a.dim(i);
  if (len == 0) {
    throw std::invalid_argument("standardize over an empty unit of " + to_string(a.shape()));
  }
  const auto x = a.data();
  std::vector<Real> y(x.size());
  std::vector<Real> rstd(units);
  for (std::size_t u = 0; u < units; ++u) {
    const Real* xu = x.data() + u * len;
    double mu = 0.0;
    for (std::size_t i = 0; i < len; ++i) mu += xu[i];
    mu /= static_cast<double>(len);
    double var = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      const double d = xu[i] - mu;
      var += d * d;
    }
    var /= static_cast<double>(len);
    const double r = 1.0 / std::sqrt(var + static_cast<double>(epsilon));
    rstd[u] = static_cast<Real>(r);
    for (std::size_t i = 0; i < len; ++i) y[u * len + i] = static_cast<Real>((xu[i] - mu) * r);
  }
  Tensor out(a.shape(), std::move(y));
  return Tape::record(
      out, {a}, [out, units, len, rstd = std::move(rstd)](std::span<const Real> g, auto grads) {
        auto ga = grads[0];
        if (ga.empty()) return;
        const auto xhat = out.data();
        // dx = r * (g - mean(g) - xhat * mean(g * xhat))
        for (std::size_t u = 0; u < units; ++u) {
          const std::size_t base = u * len;
          double gm = 0.0, gx = 0.0;
          for (std::size_t i = 0; i < len; ++i) {
            gm += g[base + i];
            gx += static_cast<double>(g[base + i]) * xhat[base + i];
          }
          gm /= static_cast<double>(len);
          gx /= static_cast<double>(len);
          const double r = rstd[u];
          for (std::size_t i = 0; i < len; ++i) {
            ga[base + i] += static_cast<Real>(r * (g[base + i] - gm - xhat[base + i] * gx));
          }
        }
      });
}

}  // namespace camf::ops

namespace camf::ops {

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (x.rank() != 2 || weight.rank() != 2 || bias.rank() != 1) {
    throw std::invalid_argument("linear expects [N x in], [out x in], [out]; got " +
                                to_string(x.shape()) + ", " + to_string(weight.shape()) +
                                ", " + to_string(bias.shape()));
  }
  const std::size_t n = x.dim(0), in = x.dim(1), out = weight.dim(0);
  if (weight.dim(1) != in || bias.dim(0) != out) {
    throw std::invalid_argument("linear shape mismatch: input " + to_string(x.shape()) +
                                ", weight " + to_string(weight.shape()) + ", bias " +
                                to_string(bias.shape()));
  }
  std::vector<Real> y(n * out);
  const auto b = bias.data();
  for (std::size_t r = 0; r < n; ++r) std::copy(b.begin(), b.end(), y.begin() + static_cast<std::ptrdiff_t>(r * out));
  if (n && in && out) gemm(false, true, n, out, in, x.data().data(), in, weight.data().data(), in, 1, y.data(), out);
  return Tape::record(Tensor(Shape{n, out}, std::move(y)), {x, weight, bias},
                      [x, weight, n, in, out](std::span<const Real> g, auto grads) {
                        if (!n || !out) return;
                        // dX += dY * W
                        if (!grads[0].empty() && in)
                          gemm(false, false, n, in, out, g.data(), out, weight.data().data(), in,
                               1, grads[0].data(), in);
                        // dW += dY^T * X
                        if (!grads[1].empty() && in)
                          gemm(true, false, out, in, n, g.data(), out, x.data().data(), in, 1,
                               grads[1].data(), in);
                        if (!grads[2].empty()) {
                          auto gb = grads[2];
                          for (std::size_t r = 0; r < n; ++r)
                            for (std::size_t j = 0; j < out; ++j) gb[j] += g[r * out + j];
                        }
                      });
}

}  // namespace camf::ops
