#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace lma4rec::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

struct Node;

// Local gradient rule: reads self.grad and accumulates into self.parents.
using BackwardFn = std::function<void(Node& self)>;

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until something accumulates into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  BackwardFn backward;
  std::uint64_t tape_generation = 0;  // 0 for leaves and untracked results

  bool is_leaf() const noexcept { return !backward; }
  std::vector<double>& ensure_grad();
};

// Dense row-major array of doubles with optional reverse-mode gradient.
// Copies share the underlying buffer, like a handle.
class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(Shape shape, std::vector<double> values);
  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);
  // Trainable leaf: requires_grad is set and gradients accumulate across backward calls.
  static Tensor parameter(Shape shape, std::vector<double> values);

  // Builds the result of a user-defined operation. When gradient recording is
  // enabled and any parent requires a gradient, the node is recorded on the
  // current tape with `backward` as its local gradient rule.
  static Tensor from_op(Shape shape, std::vector<double> values, std::vector<Tensor> parents,
                        BackwardFn backward);

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const double> data() const;
  // Only leaves may be mutated in place; the optimizer relies on this.
  std::span<double> mutable_data();
  double item() const;
  double at(std::size_t flat_index) const { return data()[flat_index]; }

  bool requires_grad() const;
  void set_requires_grad(bool flag);
  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  // Fresh constant tensor holding a copy of the values.
  Tensor detach() const;

  Node* node() const noexcept { return node_.get(); }
  const std::shared_ptr<Node>& node_ptr() const noexcept { return node_; }

 private:
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  std::shared_ptr<Node> node_;
};

// Thread-confined record of the operations executed since the last reset.
// Creation order is a valid topological order, so backward walks it in reverse.
class Tape {
 public:
  static Tape& current();

  void record(const std::shared_ptr<Node>& node);
  bool holds(const Node& node) const noexcept;
  std::size_t size() const noexcept { return nodes_.size(); }
  std::uint64_t generation() const noexcept { return generation_; }
  // Releases the graph; gradients already stored in nodes are kept.
  void reset();

  // Runs every local gradient rule from `root` backwards. Used by `backward`.
  void run_backward(const Node& root);

 private:
  std::vector<std::shared_ptr<Node>> nodes_;
  std::uint64_t generation_ = 1;
};

bool grad_enabled() noexcept;

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};

// Populates grad on every requires_grad ancestor of a scalar loss, then resets the tape.
void backward(const Tensor& loss);

}  // namespace lma4rec::ad
