#include "hypernet/tensor.hpp"

#include "hypernet/errors.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace hypernet {

namespace {

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

Tape& common_tape(std::span<const Tensor> ts) {
  Tape* tape = nullptr;
  for (const Tensor& t : ts) {
    if (!t.valid()) throw ParameterError("operand is not attached to a tape");
    if (tape != nullptr && t.tape() != tape) {
      throw ParameterError("operands live on different tapes");
    }
    tape = t.tape();
  }
  return *tape;
}

}  // namespace

Eigen::Index Tensor::rows() const { return value().rows(); }
Eigen::Index Tensor::cols() const { return value().cols(); }
const Matrix& Tensor::value() const { return tape_->value(id_); }
Matrix Tensor::grad() const { return tape_->grad(id_); }
bool Tensor::requires_grad() const { return tape_->requires_grad(id_); }

Tensor Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Tensor(this, nodes_.size() - 1);
}

Tensor Tape::variable(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Tensor Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Tensor Tape::record(Matrix value, std::span<const Tensor> inputs, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  n.inputs.reserve(inputs.size());
  for (const Tensor& t : inputs) {
    if (t.tape() != this) throw ParameterError("input recorded on a different tape");
    n.inputs.push_back(t.id());
    n.requires_grad = n.requires_grad || nodes_[t.id()].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

Matrix Tape::grad(std::size_t id) const {
  const Node& n = nodes_.at(id);
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(const Tensor& loss) {
  if (loss.tape() != this) throw ParameterError("loss is not on this tape");
  Node& root = nodes_.at(loss.id());
  if (root.value.rows() != 1 || root.value.cols() != 1) {
    throw ShapeError("backward needs a scalar loss, got " + shape_str(root.value));
  }
  if (backward_done_) {
    throw ParameterError("backward already ran on this tape; call zero_grad() first");
  }
  backward_done_ = true;
  if (!root.requires_grad) return;
  root.grad = Matrix::Ones(1, 1);

  std::vector<const Matrix*> in_values;
  std::vector<Matrix*> in_grads;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.backward || node.grad.size() == 0) continue;
    in_values.clear();
    in_grads.clear();
    for (std::size_t in : node.inputs) {
      Node& src = nodes_[in];
      in_values.push_back(&src.value);
      if (src.requires_grad) {
        if (src.grad.size() == 0) src.grad = Matrix::Zero(src.value.rows(), src.value.cols());
        in_grads.push_back(&src.grad);
      } else {
        in_grads.push_back(nullptr);
      }
    }
    node.backward(BackwardArgs{node.value, node.grad, in_values, in_grads});
  }
}

void Tape::zero_grad() {
  for (Node& n : nodes_) n.grad.resize(0, 0);
  backward_done_ = false;
}

void Tape::clear() {
  nodes_.clear();
  backward_done_ = false;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  const Tensor ops[] = {a, b};
  Tape& tape = common_tape(ops);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw ShapeError("matmul " + shape_str(av) + " * " + shape_str(bv));
  }
  Matrix out(av.rows(), bv.cols());
  out.noalias() = av * bv;
  return tape.record(std::move(out), ops, [](const BackwardArgs& args) {
    const Matrix& x = *args.inputs[0];
    const Matrix& y = *args.inputs[1];
    if (args.input_grads[0]) args.input_grads[0]->noalias() += args.grad_output * y.transpose();
    if (args.input_grads[1]) args.input_grads[1]->noalias() += x.transpose() * args.grad_output;
  });
}

Tensor spmm(std::shared_ptr<const SparseMatrix> a, const Tensor& x) {
  Tape& tape = common_tape(std::span<const Tensor>(&x, 1));
  const Matrix& xv = x.value();
  if (!a || a->cols() != xv.rows()) {
    throw ShapeError("spmm " + (a ? std::to_string(a->rows()) + "x" + std::to_string(a->cols())
                                  : std::string("null")) +
                     " * " + shape_str(xv));
  }
  Matrix out(a->rows(), xv.cols());
  out.noalias() = *a * xv;
  return tape.record(std::move(out), std::span<const Tensor>(&x, 1),
                     [a = std::move(a)](const BackwardArgs& args) {
                       if (args.input_grads[0]) {
                         args.input_grads[0]->noalias() += a->transpose() * args.grad_output;
                       }
                     });
}

Tensor add_scaled(const Tensor& a, const Tensor& b, double ca, double cb) {
  const Tensor ops[] = {a, b};
  Tape& tape = common_tape(ops);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.rows() != bv.rows() || av.cols() != bv.cols()) {
    throw ShapeError("add_scaled " + shape_str(av) + " vs " + shape_str(bv));
  }
  Matrix out = ca * av + cb * bv;
  return tape.record(std::move(out), ops, [ca, cb](const BackwardArgs& args) {
    if (args.input_grads[0]) *args.input_grads[0] += ca * args.grad_output;
    if (args.input_grads[1]) *args.input_grads[1] += cb * args.grad_output;
  });
}

Tensor add_row(const Tensor& a, const Tensor& row) {
  const Tensor ops[] = {a, row};
  Tape& tape = common_tape(ops);
  const Matrix& av = a.value();
  const Matrix& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != av.cols()) {
    throw ShapeError("add_row " + shape_str(av) + " + " + shape_str(rv));
  }
  Matrix out = av;
  out.rowwise() += rv.row(0);
  return tape.record(std::move(out), ops, [](const BackwardArgs& args) {
    if (args.input_grads[0]) *args.input_grads[0] += args.grad_output;
    if (args.input_grads[1]) *args.input_grads[1] += args.grad_output.colwise().sum();
  });
}

Tensor relu(const Tensor& a) {
  const Tensor ops[] = {a};
  Tape& tape = common_tape(ops);
  Matrix out = a.value().cwiseMax(0.0);
  return tape.record(std::move(out), ops, [](const BackwardArgs& args) {
    const Matrix& x = *args.inputs[0];
    *args.input_grads[0] += (x.array() > 0.0).select(args.grad_output.array(), 0.0).matrix();
  });
}

Tensor dropout(const Tensor& a, double p, bool training, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw ParameterError("dropout probability must lie in [0, 1), got " + std::to_string(p));
  }
  if (!training || p == 0.0) return a;
  const Tensor ops[] = {a};
  Tape& tape = common_tape(ops);
  const Matrix& av = a.value();
  std::bernoulli_distribution keep(1.0 - p);
  const double scale = 1.0 / (1.0 - p);
  Matrix mask(av.rows(), av.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = keep(rng) ? scale : 0.0;
  }
  Matrix out = av.cwiseProduct(mask);
  return tape.record(std::move(out), ops, [mask = std::move(mask)](const BackwardArgs& args) {
    *args.input_grads[0] += args.grad_output.cwiseProduct(mask);
  });
}

Tensor mean(std::span<const Tensor> parts) {
  if (parts.empty()) throw ValidationError("mean of an empty tensor list");
  Tape& tape = common_tape(parts);
  const Matrix& first = parts.front().value();
  Matrix out = Matrix::Zero(first.rows(), first.cols());
  for (const Tensor& t : parts) {
    const Matrix& v = t.value();
    if (v.rows() != first.rows() || v.cols() != first.cols()) {
      throw ValidationError("mean over mismatched shapes " + shape_str(first) + " and " +
                            shape_str(v));
    }
    out += v;
  }
  const double inv = 1.0 / static_cast<double>(parts.size());
  out *= inv;
  return tape.record(std::move(out), parts, [inv](const BackwardArgs& args) {
    for (Matrix* g : args.input_grads) {
      if (g) *g += inv * args.grad_output;
    }
  });
}

Tensor sum(const Tensor& a) {
  const Tensor ops[] = {a};
  Tape& tape = common_tape(ops);
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return tape.record(std::move(out), ops, [](const BackwardArgs& args) {
    args.input_grads[0]->array() += args.grad_output(0, 0);
  });
}

Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> labels,
                             const std::vector<bool>& mask) {
  const Tensor ops[] = {logits};
  Tape& tape = common_tape(ops);
  const Matrix& z = logits.value();
  const auto n = z.rows();
  const auto c = z.cols();
  if (static_cast<Eigen::Index>(labels.size()) != n || static_cast<Eigen::Index>(mask.size()) != n) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(n) + " rows but " +
                     std::to_string(labels.size()) + " labels and " +
                     std::to_string(mask.size()) + " mask entries");
  }

  // Softmax probabilities of the selected rows, kept for the backward rule.
  Matrix probs = Matrix::Zero(n, c);
  double total = 0.0;
  std::size_t count = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= c) {
      throw ParameterError("label " + std::to_string(y) + " at row " + std::to_string(i) +
                           " outside [0, " + std::to_string(c) + ")");
    }
    const double m = z.row(i).maxCoeff();
    probs.row(i) = (z.row(i).array() - m).exp();
    const double s = probs.row(i).sum();
    probs.row(i) /= s;
    total += std::log(s) - (z(i, y) - m);
    ++count;
  }
  if (count == 0) throw ParameterError("softmax_cross_entropy: mask selects no rows");

  const double inv = 1.0 / static_cast<double>(count);
  Matrix out(1, 1);
  out(0, 0) = total * inv;
  std::vector<int> lab(labels.begin(), labels.end());
  return tape.record(std::move(out), ops,
                     [probs = std::move(probs), lab = std::move(lab), mask, inv](
                         const BackwardArgs& args) {
                       const double g = args.grad_output(0, 0) * inv;
                       Matrix& dz = *args.input_grads[0];
                       for (Eigen::Index i = 0; i < probs.rows(); ++i) {
                         if (!mask[static_cast<std::size_t>(i)]) continue;
                         dz.row(i) += g * probs.row(i);
                         dz(i, lab[static_cast<std::size_t>(i)]) -= g;
                       }
                     });
}

}  // namespace hypernet
