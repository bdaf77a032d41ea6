#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace camf {

#ifdef CAMF_DOUBLE
using Real = double;
#else
using Real = float;
#endif

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

/// Trailing-dimension broadcast of two shapes. Throws std::invalid_argument
/// naming both shapes when they are incompatible.
Shape broadcast_shapes(const Shape& a, const Shape& b);

class Tape;

/// Dense row-major tensor. Copies share the underlying buffer; a tensor
/// recorded on a tape carries the node id it was assigned there.
class Tensor {
 public:
  Tensor();
  Tensor(Shape shape, std::vector<Real> data);
  explicit Tensor(Shape shape, Real fill = Real(0));

  static Tensor scalar(Real v);
  static Tensor vector(std::vector<Real> v);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<Real> v);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_->size(); }

  std::span<const Real> data() const { return *data_; }
  /// Writable view of the shared buffer. Only the optimizer and loaders
  /// should use this, and never while a tape still references the tensor.
  std::span<Real> mutable_data() { return *data_; }

  Real operator[](std::size_t i) const { return (*data_)[i]; }
  Real item() const;

  bool tracked() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  int node() const { return node_; }

  /// Untracked copy sharing the same buffer.
  Tensor detach() const;
  /// Untracked deep copy.
  Tensor clone() const;

 private:
  friend class Tape;
  Shape shape_;
  std::shared_ptr<std::vector<Real>> data_;
  Tape* tape_ = nullptr;
  int node_ = -1;
};

/// Define-by-run reverse-mode tape. Operations append nodes in execution
/// order, so the node list is always topologically sorted.
class Tape {
 public:
  /// Receives the output gradient and one writable gradient span per input;
  /// spans for untracked inputs are empty. Rules accumulate with +=.
  using BackwardFn =
      std::function<void(std::span<const Real>, std::span<const std::span<Real>>)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Registers a leaf; the returned alias shares `value`'s buffer.
  Tensor watch(const Tensor& value);

  /// Records an op result. Returns an untracked tensor when no input is tracked.
  static Tensor record(Tensor result, const std::vector<Tensor>& inputs, BackwardFn fn);

  void backward(const Tensor& root);

  /// Gradient of the last backward root w.r.t. `t`; zeros when unreached.
  std::vector<Real> grad(const Tensor& t) const;

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    std::vector<int> inputs;
    BackwardFn backward;
    std::size_t size = 0;
    std::vector<Real> grad;
  };
  Tensor add_node(Tensor value, std::vector<int> inputs, BackwardFn fn);

  std::vector<Node> nodes_;
};

}  // namespace camf
