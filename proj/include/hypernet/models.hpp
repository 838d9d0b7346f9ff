#pragma once

#include "hypernet/hypergraph.hpp"
#include "hypernet/tensor.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hypernet {

enum class Family { hgnn, multihgnn, reshgnn, resmultihgnn };

/// Throws ParameterError for anything outside the four family names.
Family parse_family(const std::string& name);
std::string to_string(Family f);
bool is_residual(Family f);
bool is_multi(Family f);

/// Per-layer mixing weights of the residual convolution. Layers are numbered
/// from 1.
struct ResSchedule {
  std::function<double(int)> alpha;
  std::function<double(int)> beta;

  /// alpha_l = alpha, beta_l = min(1, lambda / l).
  static ResSchedule gcnii(double alpha = 0.1, double lambda = 0.5);
  /// alpha_l = 0, beta_l = 1: every residual layer degenerates to a plain one.
  static ResSchedule plain();
};

struct ModelConfig {
  Family family = Family::hgnn;
  int depth = 2;  // number of hypergraph convolutions
  int hidden = 128;
  int n_classes = 2;
  std::optional<ResSchedule> res_schedule;
  double dropout = 0.5;
  std::uint64_t seed = 0;

  /// Fills res_schedule with the default schedule for residual families.
  static ModelConfig make(Family family, int depth, int n_classes, std::uint64_t seed = 0);

  /// Throws ParameterError naming the violated field.
  void validate() const;
};

/// Weight (d_in x d_out) and bias (1 x d_out) of one linear map or convolution.
struct ConvParams {
  Matrix weight;
  Matrix bias;
};

/// One stack of layers over one (features, laplacian) pair.
/// Residual branches carry the input and output linear maps.
struct BranchParams {
  std::optional<ConvParams> input;
  std::vector<ConvParams> convs;
  std::optional<ConvParams> output;
};

struct ModelParams {
  std::vector<BranchParams> branches;

  /// Flat view in a fixed order (branch, input, convs, output; weight before bias).
  std::vector<Matrix*> tensors();
  std::vector<const Matrix*> tensors() const;
};

/// Glorot-uniform weights with s = sqrt(6 / (d_in + d_out)); zero biases.
/// branch_input_dims holds one feature width per branch.
ModelParams init_params(const ModelConfig& cfg, std::span<const Eigen::Index> branch_input_dims,
                        Rng& rng);

/// Per-branch features and propagation operators derived once from a dataset:
/// the concatenated modality for single-branch families, one entry per
/// modality otherwise.
struct ModelInput {
  std::vector<Matrix> features;
  std::vector<Laplacian> laplacians;

  std::vector<Eigen::Index> input_dims() const;
  Eigen::Index n_vertices() const;
};

ModelInput prepare_input(Family family, const MultiModalDataset& ds);

/// Tensors for one linear map living on a tape.
struct ConvTensors {
  Tensor weight;
  std::optional<Tensor> bias;
};

/// sigma(lap * x * W + b); sigma is ReLU when activate, identity otherwise.
Tensor hgnn_conv_forward(const Tensor& x, const Laplacian& lap, const ConvTensors& p, bool activate);

/// sigma(((1 - alpha) lap x + alpha x0)((1 - beta) I + beta W) + b).
/// Throws ShapeError for non-square W, ParameterError for alpha or beta
/// outside [0, 1].
Tensor res_conv_forward(const Tensor& x, const Tensor& x0, const Laplacian& lap,
                        const ConvTensors& p, double alpha, double beta, bool activate);

/// x * W + b.
Tensor linear_forward(const Tensor& x, const ConvTensors& p);

/// Elementwise mean of the branch outputs.
Tensor fuse_mean(std::span<const Tensor> branch_outputs);

struct ForwardResult {
  Tensor logits;
  /// Tape handles of the parameters, aligned with ModelParams::tensors().
  std::vector<Tensor> params;
  /// Frobenius norm of every convolution output, branch by branch.
  std::vector<double> layer_norms;
};

/// Records the full model on `tape`. Dropout draws from rng only in training.
ForwardResult forward(Tape& tape, const ModelConfig& cfg, const ModelInput& input,
                      const ModelParams& params, bool training, Rng& rng);

/// Same as above, deriving the branch inputs from the dataset first.
ForwardResult forward(Tape& tape, const ModelConfig& cfg, const MultiModalDataset& ds,
                      const ModelParams& params, bool training, Rng& rng);

/// Inference-mode logits.
Matrix predict(const ModelConfig& cfg, const ModelInput& input, const ModelParams& params);

}  // namespace hypernet
