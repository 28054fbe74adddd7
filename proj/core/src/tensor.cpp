#include "xview/tensor.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "xview/errors.hpp"

namespace xview {

namespace {
thread_local std::uint64_t tape_counter = 0;
thread_local bool grad_enabled = true;
}  // namespace

NoGradGuard::NoGradGuard() : previous_(grad_enabled) { grad_enabled = false; }
NoGradGuard::~NoGradGuard() { grad_enabled = previous_; }

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

std::vector<double>& detail::Node::grad_buffer() {
  if (grad.empty()) grad.assign(data.size(), 0.0);
  return grad;
}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad) {
  for (std::size_t d : shape)
    if (d == 0) throw ShapeError("tensor dimensions must be positive: " + shape_string(shape));
  if (data.size() != shape_numel(shape))
    throw ShapeError("data length " + std::to_string(data.size()) + " does not match shape " +
                     shape_string(shape));
  node_ = std::make_shared<detail::Node>();
  node_->shape = std::move(shape);
  node_->data = std::move(data);
  node_->requires_grad = requires_grad;
  node_->seq = tape_counter++;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) { return Tensor({1}, {value}, requires_grad); }

Tensor Tensor::from_node(detail::NodePtr node) {
  Tensor t;
  t.node_ = std::move(node);
  return t;
}

const Shape& Tensor::shape() const {
  if (!node_) throw InputError("use of undefined tensor");
  return node_->shape;
}

std::size_t Tensor::dim(std::size_t axis) const {
  const Shape& s = shape();
  if (axis >= s.size()) throw ShapeError("axis out of range for shape " + shape_string(s));
  return s[axis];
}

std::size_t Tensor::numel() const { return node_ ? node_->data.size() : 0; }

std::span<const double> Tensor::data() const {
  if (!node_) throw InputError("use of undefined tensor");
  return node_->data;
}

std::span<double> Tensor::mutable_data() {
  if (!node_) throw InputError("use of undefined tensor");
  if (!node_->is_leaf()) throw InputError("only leaf tensors can be modified in place");
  return node_->data;
}

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() requires a single-element tensor, got " + shape_string(shape()));
  return node_->data[0];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }
bool Tensor::is_leaf() const { return !node_ || node_->is_leaf(); }
bool Tensor::has_grad() const { return node_ && !node_->grad.empty(); }

std::span<const double> Tensor::grad() const {
  if (!node_) throw InputError("use of undefined tensor");
  return node_->grad;
}

void Tensor::zero_grad() {
  if (node_) node_->grad.clear();
}

Tensor Tensor::detach() const { return Tensor(shape(), node_->data, false); }

Tensor Tensor::clone_leaf() const { return Tensor(shape(), node_->data, true); }

Tensor detail::make_result(Shape shape, std::vector<double> data, std::vector<Tensor> inputs,
                           std::function<void(const Node& self)> backward_fn) {
  Tensor out(std::move(shape), std::move(data), false);
  const bool tracked = grad_enabled && std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
  if (tracked) {
    auto& node = *out.node();
    node.requires_grad = true;
    node.parents.reserve(inputs.size());
    for (auto& in : inputs) node.parents.push_back(in.node());
    node.backward = std::move(backward_fn);
  }
  return out;
}

void backward(const Tensor& loss) {
  if (loss.numel() != 1) throw ShapeError("backward() needs a scalar loss, got " + shape_string(loss.shape()));
  if (!loss.requires_grad()) throw InputError("loss does not depend on any tensor that requires grad");

  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<detail::Node*> stack{loss.node().get()};
  seen.insert(stack.back());
  while (!stack.empty()) {
    detail::Node* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (auto& p : n->parents) {
      if (p->requires_grad && seen.insert(p.get()).second) stack.push_back(p.get());
    }
  }
  std::sort(order.begin(), order.end(), [](const detail::Node* a, const detail::Node* b) { return a->seq > b->seq; });

  loss.node()->grad_buffer()[0] += 1.0;
  for (detail::Node* n : order) {
    if (n->is_leaf()) continue;
    n->grad_buffer();
    n->backward(*n);
  }
}

}  // namespace xview
