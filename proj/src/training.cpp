#include "hypernet/training.hpp"

#include "hypernet/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

namespace hypernet {

void TrainConfig::validate() const {
  if (epochs < 0) throw ParameterError("TrainConfig.epochs must be non-negative");
  if (!(learning_rate >= 0.0)) throw ParameterError("TrainConfig.learning_rate must be >= 0");
  if (!(weight_decay >= 0.0)) throw ParameterError("TrainConfig.weight_decay must be >= 0");
  if (eval_every < 1) throw ParameterError("TrainConfig.eval_every must be positive");
}

double accuracy(const Matrix& logits, std::span<const int> labels, const std::vector<bool>& mask) {
  if (static_cast<Eigen::Index>(labels.size()) != logits.rows() || mask.size() != labels.size()) {
    throw ShapeError("accuracy: logits, labels and mask disagree on the row count");
  }
  std::size_t hits = 0;
  std::size_t total = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < logits.cols(); ++c) {
      if (logits(i, c) > logits(i, best)) best = c;
    }
    hits += best == labels[static_cast<std::size_t>(i)] ? 1 : 0;
    ++total;
  }
  if (total == 0) throw ParameterError("accuracy: mask selects no rows");
  return static_cast<double>(hits) / static_cast<double>(total);
}

AdamState AdamState::zeros_like(std::span<Matrix* const> params) {
  AdamState s;
  for (const Matrix* p : params) {
    s.m.push_back(Matrix::Zero(p->rows(), p->cols()));
    s.v.push_back(Matrix::Zero(p->rows(), p->cols()));
  }
  return s;
}

void adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads, AdamState& state,
               double lr, double weight_decay) {
  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double eps = 1e-8;
  if (grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw ShapeError("adam_step: parameter, gradient and state counts differ");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& p = *params[i];
    const Matrix& g = grads[i];
    if (g.rows() != p.rows() || g.cols() != p.cols() || state.m[i].rows() != p.rows() ||
        state.m[i].cols() != p.cols()) {
      throw ShapeError("adam_step: shape mismatch at parameter " + std::to_string(i));
    }
    if (weight_decay != 0.0) p -= (lr * weight_decay) * p;
    state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g;
    state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g.cwiseProduct(g);
    p.array() -= lr * (state.m[i].array() / c1) / ((state.v[i].array() / c2).sqrt() + eps);
  }
}

void sgd_step(std::span<Matrix* const> params, std::span<const Matrix> grads, double lr,
              double weight_decay) {
  if (grads.size() != params.size()) throw ShapeError("sgd_step: count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& p = *params[i];
    if (grads[i].rows() != p.rows() || grads[i].cols() != p.cols()) {
      throw ShapeError("sgd_step: shape mismatch at parameter " + std::to_string(i));
    }
    p -= lr * (grads[i] + weight_decay * p);
  }
}

RunResult train(const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                const MultiModalDataset& ds, ModelParams* final_params) {
  return train(model_cfg, train_cfg, ds, prepare_input(model_cfg.family, ds), final_params);
}

RunResult train(const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                const MultiModalDataset& ds, const ModelInput& input,
                ModelParams* final_params) {
  const auto start = std::chrono::steady_clock::now();
  model_cfg.validate();
  train_cfg.validate();
  ds.validate();
  if (popcount(ds.train_mask) == 0) throw ValidationError("train mask is empty");
  if (popcount(ds.test_mask) == 0) throw ValidationError("test mask is empty");
  if (ds.n_classes > model_cfg.n_classes) {
    throw ParameterError("dataset has " + std::to_string(ds.n_classes) +
                         " classes but the model outputs " + std::to_string(model_cfg.n_classes));
  }

  Rng init_rng(split_seed(model_cfg.seed, 0));
  Rng dropout_rng(split_seed(train_cfg.seed, 1));
  const auto dims = input.input_dims();
  ModelParams params = init_params(model_cfg, dims, init_rng);
  std::vector<Matrix*> slots = params.tensors();
  AdamState adam = AdamState::zeros_like(slots);

  RunResult result;
  result.seed = train_cfg.seed;
  result.loss_curve.reserve(static_cast<std::size_t>(train_cfg.epochs));

  auto evaluate = [&]() {
    return accuracy(predict(model_cfg, input, params), ds.labels, ds.test_mask);
  };

  std::vector<Matrix> grads;
  for (int epoch = 1; epoch <= train_cfg.epochs; ++epoch) {
    Tape tape;
    ForwardResult fr = forward(tape, model_cfg, input, params, true, dropout_rng);
    const Tensor loss = softmax_cross_entropy(fr.logits, ds.labels, ds.train_mask);
    const double loss_value = loss.value()(0, 0);
    if (!std::isfinite(loss_value)) {
      throw NumericError("non-finite training loss at epoch " + std::to_string(epoch));
    }
    result.loss_curve.push_back(loss_value);
    tape.backward(loss);

    grads.clear();
    for (const Tensor& t : fr.params) grads.push_back(t.grad());
    if (train_cfg.optimizer == Optimizer::adam) {
      adam_step(slots, grads, adam, train_cfg.learning_rate, train_cfg.weight_decay);
    } else {
      sgd_step(slots, grads, train_cfg.learning_rate, train_cfg.weight_decay);
    }

    if (epoch % train_cfg.eval_every == 0 && epoch != train_cfg.epochs) {
      result.best_test_accuracy = std::max(result.best_test_accuracy, evaluate());
    }
  }

  result.final_test_accuracy = evaluate();
  result.best_test_accuracy = std::max(result.best_test_accuracy, result.final_test_accuracy);
  result.elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (final_params) *final_params = std::move(params);
  return result;
}

namespace {

std::vector<std::vector<std::size_t>> members_by_class(std::span<const int> labels,
                                                       const std::vector<bool>* mask,
                                                       int n_classes) {
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(n_classes));
  for (std::size_t v = 0; v < labels.size(); ++v) {
    if (mask && !(*mask)[v]) continue;
    const int y = labels[v];
    if (y < 0 || y >= n_classes) {
      throw ValidationError("label " + std::to_string(y) + " of vertex " + std::to_string(v) +
                            " is outside [0, " + std::to_string(n_classes) + ")");
    }
    by_class[static_cast<std::size_t>(y)].push_back(v);
  }
  return by_class;
}

}  // namespace

int min_class_count(std::span<const int> labels, const std::vector<bool>& train_mask,
                    int n_classes) {
  const auto by_class = members_by_class(labels, &train_mask, n_classes);
  std::size_t lo = labels.size();
  for (const auto& members : by_class) lo = std::min(lo, members.size());
  return static_cast<int>(lo);
}

Split balanced_subset(std::span<const int> labels, const std::vector<bool>& train_mask,
                      int n_classes, int per_class, Rng& rng) {
  if (train_mask.size() != labels.size()) {
    throw ShapeError("balanced_subset: mask and labels differ in length");
  }
  if (per_class < 1) throw ParameterError("balanced_subset: per_class must be positive");
  auto by_class = members_by_class(labels, &train_mask, n_classes);
  Split out{std::vector<bool>(labels.size(), false), std::vector<bool>(labels.size(), true)};
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    if (members.size() < static_cast<std::size_t>(per_class)) {
      throw ValidationError("balanced_subset: class " + std::to_string(c) + " has only " +
                            std::to_string(members.size()) + " labeled vertices, need " +
                            std::to_string(per_class));
    }
    std::shuffle(members.begin(), members.end(), rng);
    for (int i = 0; i < per_class; ++i) {
      out.train[members[static_cast<std::size_t>(i)]] = true;
      out.eval[members[static_cast<std::size_t>(i)]] = false;
    }
  }
  return out;
}

Split stratified_split(std::span<const int> labels, int n_classes, double ratio, Rng& rng) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw ParameterError("label ratio must lie in (0, 1), got " + std::to_string(ratio));
  }
  auto by_class = members_by_class(labels, nullptr, n_classes);
  Split out{std::vector<bool>(labels.size(), false), std::vector<bool>(labels.size(), true)};
  for (auto& members : by_class) {
    if (members.empty()) continue;
    std::shuffle(members.begin(), members.end(), rng);
    auto take = static_cast<std::size_t>(std::lround(ratio * static_cast<double>(members.size())));
    take = std::clamp<std::size_t>(take, 1, members.size());
    for (std::size_t i = 0; i < take; ++i) {
      out.train[members[i]] = true;
      out.eval[members[i]] = false;
    }
  }
  return out;
}

}  // namespace hypernet
