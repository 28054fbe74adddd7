#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace xview {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {

struct Node;
using NodePtr = std::shared_ptr<Node>;

// One entry of the computation tape. `seq` is the global execution index;
// reverse-mode replay visits recorded nodes in decreasing `seq`.
struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::uint64_t seq = 0;
  std::vector<NodePtr> parents;
  // Receives this node's output gradient and accumulates into parents.
  std::function<void(const Node& self)> backward;

  bool is_leaf() const { return !backward; }
  std::vector<double>& grad_buffer();
};

}  // namespace detail

// Dense row-major float64 tensor with optional gradient tracking. Copies are
// cheap handles sharing the same storage; values produced by operations are
// never modified afterwards. Leaf tensors (parameters) may be updated in place
// through mutable_data() by an optimizer.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const double> data() const;
  std::span<double> mutable_data();
  double item() const;
  double at(std::size_t flat) const { return data()[flat]; }

  bool requires_grad() const;
  bool is_leaf() const;
  bool has_grad() const;
  std::span<const double> grad() const;
  void zero_grad();

  // Same values, no history, no gradient tracking.
  Tensor detach() const;
  // Same values in a fresh leaf that tracks gradients.
  Tensor clone_leaf() const;

  const detail::NodePtr& node() const { return node_; }
  static Tensor from_node(detail::NodePtr node);

 private:
  detail::NodePtr node_;
};

// Reverse-mode pass from a scalar loss. Gradients accumulate into every
// reachable tensor with requires_grad (leaves keep accumulating across calls
// until zero_grad()).
void backward(const Tensor& loss);

// Disables tape recording on this thread while in scope (inference).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

namespace detail {
// Creates the output node of a differentiable op and records it on the tape
// when any input tracks gradients.
Tensor make_result(Shape shape, std::vector<double> data, std::vector<Tensor> inputs,
                   std::function<void(const Node& self)> backward_fn);
}  // namespace detail

}  // namespace xview
