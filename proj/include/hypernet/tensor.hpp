#pragma once

#include "hypernet/matrix.hpp"

#include <cstddef>
#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace hypernet {

class Tape;

/// Handle to one node on a Tape. Cheap to copy; valid while the tape lives
/// and has not been cleared.
class Tensor {
 public:
  Tensor() = default;

  Eigen::Index rows() const;
  Eigen::Index cols() const;
  const Matrix& value() const;
  /// Accumulated gradient. All zeros when backward never reached this node.
  Matrix grad() const;
  bool requires_grad() const;

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Tensor(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// What a backward rule sees. input_grads[i] is null when input i does not
/// require a gradient; otherwise it is a live accumulator to add into.
struct BackwardArgs {
  const Matrix& output;
  const Matrix& grad_output;
  std::span<const Matrix* const> inputs;
  std::span<Matrix* const> input_grads;
};

using BackwardFn = std::function<void(const BackwardArgs&)>;

/// Records primitive operations in execution order, which is a topological
/// order by construction. backward() walks that list once in reverse.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf whose gradient is tracked (a trainable parameter or probe input).
  Tensor variable(Matrix value);
  /// Leaf without gradient tracking.
  Tensor constant(Matrix value);

  /// Appends a node computed from `inputs`. The node requires a gradient iff
  /// any input does; `backward` is dropped otherwise.
  Tensor record(Matrix value, std::span<const Tensor> inputs, BackwardFn backward);

  /// Seeds d(loss)/d(loss) = 1 and propagates. Throws ShapeError unless loss
  /// is 1x1, ParameterError on a second call before zero_grad() or clear().
  void backward(const Tensor& loss);

  /// Drops accumulated gradients; the recorded graph is kept.
  void zero_grad();
  /// Drops every node. Outstanding Tensor handles become dangling.
  void clear();

  std::size_t size() const { return nodes_.size(); }

  const Matrix& value(std::size_t id) const { return nodes_.at(id).value; }
  Matrix grad(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;  // empty until something flows in
    bool requires_grad = false;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
  };

  Tensor push(Node node);

  // deque: value() references stay valid while the tape grows.
  std::deque<Node> nodes_;
  bool backward_done_ = false;
};

// Differentiable primitives. All operands must live on the same tape.

/// Matrix product a * b.
Tensor matmul(const Tensor& a, const Tensor& b);
/// Product a * x with a constant sparse left operand.
Tensor spmm(std::shared_ptr<const SparseMatrix> a, const Tensor& x);

/// ca * a + cb * b.
Tensor add_scaled(const Tensor& a, const Tensor& b, double ca, double cb);
/// Adds a 1 x cols row vector to every row of a.
Tensor add_row(const Tensor& a, const Tensor& row);
Tensor relu(const Tensor& a);
/// Inverted dropout. Identity when !training or p == 0; ParameterError unless
/// 0 <= p < 1.
Tensor dropout(const Tensor& a, double p, bool training, Rng& rng);
/// Elementwise arithmetic mean of equally shaped tensors.
Tensor mean(std::span<const Tensor> parts);
/// Sum of all entries as a 1x1 tensor.
Tensor sum(const Tensor& a);

/// Mean over rows with mask[i] of -log softmax(logits.row(i))[labels[i]].
Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> labels,
                             const std::vector<bool>& mask);

}  // namespace hypernet
