#pragma once

#include "hypernet/hypergraph.hpp"
#include "hypernet/models.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace hypernet {

enum class Optimizer { adam, sgd };

struct TrainConfig {
  int epochs = 200;
  double learning_rate = 1e-3;
  double weight_decay = 5e-4;
  Optimizer optimizer = Optimizer::adam;
  int eval_every = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct RunResult {
  double final_test_accuracy = 0.0;
  double best_test_accuracy = 0.0;
  std::vector<double> loss_curve;
  double elapsed = 0.0;  // seconds
  std::uint64_t seed = 0;
};

/// Full-batch transductive training on ds.train_mask, evaluated on
/// ds.test_mask with dropout off. Parameters come from init_params seeded
/// with model_cfg.seed; dropout draws from train_cfg.seed. Throws
/// NumericError naming the epoch when the loss turns non-finite.
RunResult train(const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                const MultiModalDataset& ds, ModelParams* final_params = nullptr);

/// Same, for callers that already hold the prepared branch inputs.
RunResult train(const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                const MultiModalDataset& ds, const ModelInput& input,
                ModelParams* final_params = nullptr);

/// Fraction of masked rows whose argmax (lowest index on ties) equals the label.
double accuracy(const Matrix& logits, std::span<const int> labels, const std::vector<bool>& mask);

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  long step = 0;

  static AdamState zeros_like(std::span<Matrix* const> params);
};

/// One Adam step (beta1 0.9, beta2 0.999, eps 1e-8) with decoupled weight
/// decay p <- p - lr * wd * p applied before the moment update.
void adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads, AdamState& state,
               double lr, double weight_decay);

/// p <- p - lr * (g + wd * p).
void sgd_step(std::span<Matrix* const> params, std::span<const Matrix> grads, double lr,
              double weight_decay);

struct Split {
  std::vector<bool> train;
  std::vector<bool> eval;
};

/// Keeps exactly per_class uniformly chosen training vertices of every class;
/// every other vertex goes to the evaluation mask.
Split balanced_subset(std::span<const int> labels, const std::vector<bool>& train_mask,
                      int n_classes, int per_class, Rng& rng);

/// Smallest per-class count inside train_mask (the default per_class).
int min_class_count(std::span<const int> labels, const std::vector<bool>& train_mask,
                    int n_classes);

/// Per class, round(ratio * count) vertices (at least one) become training
/// vertices; the rest form the evaluation mask. ParameterError unless
/// 0 < ratio < 1.
Split stratified_split(std::span<const int> labels, int n_classes, double ratio, Rng& rng);

}  // namespace hypernet
