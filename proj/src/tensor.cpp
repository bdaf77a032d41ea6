#include "camf/tensor.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace camf {

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Shape broadcast_shapes(const Shape& a, const Shape& b) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    const std::size_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
    const std::size_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
    if (da != db && da != 1 && db != 1) {
      throw std::invalid_argument("shapes " + to_string(a) + " and " + to_string(b) +
                                  " are not broadcast-compatible");
    }
    out[i] = da == 1 ? db : da;
  }
  return out;
}

Tensor::Tensor() : shape_{0}, data_(std::make_shared<std::vector<Real>>()) {}

Tensor::Tensor(Shape shape, std::vector<Real> data)
    : shape_(std::move(shape)), data_(std::make_shared<std::vector<Real>>(std::move(data))) {
  if (numel(shape_) != data_->size()) {
    throw std::invalid_argument("tensor of shape " + to_string(shape_) + " given " +
                                std::to_string(data_->size()) + " values");
  }
}

Tensor::Tensor(Shape shape, Real fill)
    : shape_(std::move(shape)),
      data_(std::make_shared<std::vector<Real>>(numel(shape_), fill)) {}

Tensor Tensor::scalar(Real v) { return Tensor(Shape{}, std::vector<Real>{v}); }

Tensor Tensor::vector(std::vector<Real> v) {
  const std::size_t n = v.size();
  return Tensor(Shape{n}, std::move(v));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<Real> v) {
  return Tensor(Shape{rows, cols}, std::move(v));
}

Real Tensor::item() const {
  if (size() != 1) {
    throw std::invalid_argument("item() on tensor of shape " + to_string(shape_));
  }
  return (*data_)[0];
}

Tensor Tensor::detach() const {
  Tensor t = *this;
  t.tape_ = nullptr;
  t.node_ = -1;
  return t;
}

Tensor Tensor::clone() const { return Tensor(shape_, *data_); }

Tensor Tape::add_node(Tensor value, std::vector<int> inputs, BackwardFn fn) {
  Node node;
  node.inputs = std::move(inputs);
  node.backward = std::move(fn);
  node.size = value.size();
  nodes_.push_back(std::move(node));
  value.tape_ = this;
  value.node_ = static_cast<int>(nodes_.size()) - 1;
  return value;
}

Tensor Tape::watch(const Tensor& value) { return add_node(value.detach(), {}, nullptr); }

Tensor Tape::record(Tensor result, const std::vector<Tensor>& inputs, BackwardFn fn) {
  Tape* tape = nullptr;
  for (const auto& in : inputs) {
    if (!in.tracked()) continue;
    if (tape && tape != in.tape()) {
      throw std::logic_error("op inputs recorded on different tapes");
    }
    tape = in.tape();
  }
  result = result.detach();
  if (!tape) return result;
  std::vector<int> ids;
  ids.reserve(inputs.size());
  for (const auto& in : inputs) ids.push_back(in.tracked() ? in.node() : -1);
  return tape->add_node(std::move(result), std::move(ids), std::move(fn));
}

void Tape::backward(const Tensor& root) {
  if (root.tape() != this) {
    throw std::invalid_argument("backward root is not recorded on this tape");
  }
  if (!root.shape().empty()) {
    throw std::invalid_argument("backward root must be a scalar, got shape " +
                                to_string(root.shape()));
  }
  for (auto& n : nodes_) n.grad.clear();
  nodes_[static_cast<std::size_t>(root.node())].grad.assign(1, Real(1));

  std::vector<std::span<Real>> spans;
  for (int id = root.node(); id >= 0; --id) {
    Node& node = nodes_[static_cast<std::size_t>(id)];
    if (node.grad.empty() || !node.backward) continue;
    spans.clear();
    for (int in : node.inputs) {
      if (in < 0) {
        spans.emplace_back();
        continue;
      }
      Node& src = nodes_[static_cast<std::size_t>(in)];
      if (src.grad.empty()) src.grad.assign(src.size, Real(0));
      spans.emplace_back(src.grad);
    }
    node.backward(node.grad, spans);
  }
}

std::vector<Real> Tape::grad(const Tensor& t) const {
  if (t.tape() != this) {
    throw std::invalid_argument("tensor is not recorded on this tape");
  }
  const Node& node = nodes_[static_cast<std::size_t>(t.node())];
  if (node.grad.empty()) return std::vector<Real>(node.size, Real(0));
  return node.grad;
}

}  // namespace camf
