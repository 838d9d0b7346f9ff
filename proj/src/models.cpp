#include "hypernet/models.hpp"

#include "hypernet/errors.hpp"

#include <algorithm>
#include <cmath>

namespace hypernet {

Family parse_family(const std::string& name) {
  if (name == "hgnn") return Family::hgnn;
  if (name == "multihgnn") return Family::multihgnn;
  if (name == "reshgnn") return Family::reshgnn;
  if (name == "resmultihgnn") return Family::resmultihgnn;
  throw ParameterError("unknown model family '" + name +
                       "' (expected hgnn, multihgnn, reshgnn or resmultihgnn)");
}

std::string to_string(Family f) {
  switch (f) {
    case Family::hgnn: return "hgnn";
    case Family::multihgnn: return "multihgnn";
    case Family::reshgnn: return "reshgnn";
    case Family::resmultihgnn: return "resmultihgnn";
  }
  return "?";
}

bool is_residual(Family f) { return f == Family::reshgnn || f == Family::resmultihgnn; }
bool is_multi(Family f) { return f == Family::multihgnn || f == Family::resmultihgnn; }

ResSchedule ResSchedule::gcnii(double alpha, double lambda) {
  return ResSchedule{[alpha](int) { return alpha; },
                     [lambda](int l) { return std::min(1.0, lambda / static_cast<double>(l)); }};
}

ResSchedule ResSchedule::plain() {
  return ResSchedule{[](int) { return 0.0; }, [](int) { return 1.0; }};
}

ModelConfig ModelConfig::make(Family family, int depth, int n_classes, std::uint64_t seed) {
  ModelConfig cfg;
  cfg.family = family;
  cfg.depth = depth;
  cfg.n_classes = n_classes;
  cfg.seed = seed;
  if (is_residual(family)) cfg.res_schedule = ResSchedule::gcnii();
  return cfg;
}

void ModelConfig::validate() const {
  if (depth < 1) {
    throw ParameterError("ModelConfig.depth must be >= 1, got " + std::to_string(depth));
  }
  if (is_residual(family) && depth < 2) {
    throw ParameterError("ModelConfig.depth must be >= 2 for residual family " +
                         to_string(family) + ", got " + std::to_string(depth));
  }
  if (hidden < 1) {
    throw ParameterError("ModelConfig.hidden must be positive, got " + std::to_string(hidden));
  }
  if (n_classes < 1) {
    throw ParameterError("ModelConfig.n_classes must be positive");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw ParameterError("ModelConfig.dropout must lie in [0, 1)");
  }
  if (is_residual(family) != res_schedule.has_value()) {
    throw ParameterError("ModelConfig.res_schedule must be set exactly for residual families");
  }
  if (res_schedule) {
    if (!res_schedule->alpha || !res_schedule->beta) {
      throw ParameterError("ModelConfig.res_schedule is missing alpha or beta");
    }
    for (int l = 1; l <= depth; ++l) {
      const double a = res_schedule->alpha(l);
      const double b = res_schedule->beta(l);
      if (!(a >= 0.0 && a <= 1.0) || !(b >= 0.0 && b <= 1.0)) {
        throw ParameterError("ModelConfig.res_schedule leaves [0, 1] at layer " +
                             std::to_string(l));
      }
    }
  }
}

std::vector<Matrix*> ModelParams::tensors() {
  std::vector<Matrix*> out;
  auto add = [&out](ConvParams& p) {
    out.push_back(&p.weight);
    out.push_back(&p.bias);
  };
  for (BranchParams& b : branches) {
    if (b.input) add(*b.input);
    for (ConvParams& c : b.convs) add(c);
    if (b.output) add(*b.output);
  }
  return out;
}

std::vector<const Matrix*> ModelParams::tensors() const {
  auto mut = const_cast<ModelParams*>(this)->tensors();
  return {mut.begin(), mut.end()};
}

namespace {

ConvParams glorot(Eigen::Index d_in, Eigen::Index d_out, Rng& rng) {
  const double s = std::sqrt(6.0 / static_cast<double>(d_in + d_out));
  std::uniform_real_distribution<double> u(-s, s);
  ConvParams p;
  p.weight.resize(d_in, d_out);
  for (Eigen::Index i = 0; i < p.weight.size(); ++i) p.weight.data()[i] = u(rng);
  p.bias = Matrix::Zero(1, d_out);
  return p;
}

}  // namespace

ModelParams init_params(const ModelConfig& cfg, std::span<const Eigen::Index> branch_input_dims,
                        Rng& rng) {
  cfg.validate();
  const Eigen::Index hidden = cfg.hidden;
  const Eigen::Index classes = cfg.n_classes;
  ModelParams params;
  for (Eigen::Index d : branch_input_dims) {
    if (d < 1) throw ParameterError("branch input width must be positive");
    BranchParams b;
    if (is_residual(cfg.family)) {
      b.input = glorot(d, hidden, rng);
      for (int l = 0; l < cfg.depth; ++l) b.convs.push_back(glorot(hidden, hidden, rng));
      b.output = glorot(hidden, classes, rng);
    } else {
      for (int l = 0; l < cfg.depth; ++l) {
        const Eigen::Index in = l == 0 ? d : hidden;
        const Eigen::Index out = l == cfg.depth - 1 ? classes : hidden;
        b.convs.push_back(glorot(in, out, rng));
      }
    }
    params.branches.push_back(std::move(b));
  }
  return params;
}

std::vector<Eigen::Index> ModelInput::input_dims() const {
  std::vector<Eigen::Index> dims;
  for (const Matrix& f : features) dims.push_back(f.cols());
  return dims;
}

Eigen::Index ModelInput::n_vertices() const {
  return features.empty() ? 0 : features.front().rows();
}

ModelInput prepare_input(Family family, const MultiModalDataset& ds) {
  ModelInput in;
  if (is_multi(family)) {
    for (const Modality& m : ds.modalities) {
      in.features.push_back(m.features);
      in.laplacians.push_back(m.laplacian);
    }
  } else if (ds.modalities.size() == 1) {
    in.features.push_back(ds.modalities.front().features);
    in.laplacians.push_back(ds.modalities.front().laplacian);
  } else {
    ConcatResult c = concat_modalities(ds);
    in.laplacians.push_back(laplacian(c.hypergraph));
    in.features.push_back(std::move(c.features));
  }
  return in;
}

namespace {

Tensor activate_if(const Tensor& x, bool activate) { return activate ? relu(x) : x; }

Tensor add_bias(const Tensor& x, const ConvTensors& p) {
  return p.bias ? add_row(x, *p.bias) : x;
}

}  // namespace

Tensor linear_forward(const Tensor& x, const ConvTensors& p) {
  return add_bias(matmul(x, p.weight), p);
}

Tensor hgnn_conv_forward(const Tensor& x, const Laplacian& lap, const ConvTensors& p, bool activate) {
  if (static_cast<Eigen::Index>(lap.size()) != x.rows()) {
    throw ShapeError("hgnn_conv: laplacian of size " + std::to_string(lap.size()) +
                     " does not match " + std::to_string(x.rows()) + " vertices");
  }
  // Multiply the narrower side first.
  const Tensor prop = p.weight.cols() <= p.weight.rows() ? spmm(lap.sparse(), matmul(x, p.weight))
                                                         : matmul(spmm(lap.sparse(), x), p.weight);
  return activate_if(add_bias(prop, p), activate);
}

Tensor res_conv_forward(const Tensor& x, const Tensor& x0, const Laplacian& lap,
                        const ConvTensors& p, double alpha, double beta, bool activate) {
  if (!(alpha >= 0.0 && alpha <= 1.0) || !(beta >= 0.0 && beta <= 1.0)) {
    throw ParameterError("res_conv: alpha and beta must lie in [0, 1], got alpha=" +
                         std::to_string(alpha) + " beta=" + std::to_string(beta));
  }
  const Eigen::Index d = p.weight.rows();
  if (p.weight.cols() != d) {
    throw ShapeError("res_conv: identity mapping needs a square weight, got " +
                     std::to_string(d) + "x" + std::to_string(p.weight.cols()));
  }
  if (static_cast<Eigen::Index>(lap.size()) != x.rows()) {
    throw ShapeError("res_conv: laplacian does not match the vertex count");
  }
  Tape& tape = *x.tape();
  const Tensor support = add_scaled(spmm(lap.sparse(), x), x0, 1.0 - alpha, alpha);
  const Tensor mapping = add_scaled(tape.constant(Matrix::Identity(d, d)), p.weight, 1.0 - beta, beta);
  return activate_if(add_bias(matmul(support, mapping), p), activate);
}

Tensor fuse_mean(std::span<const Tensor> branch_outputs) { return mean(branch_outputs); }

namespace {

ConvTensors attach(Tape& tape, const ConvParams& p, std::vector<Tensor>& handles) {
  ConvTensors t{tape.variable(p.weight), tape.variable(p.bias)};
  handles.push_back(t.weight);
  handles.push_back(*t.bias);
  return t;
}

}  // namespace

ForwardResult forward(Tape& tape, const ModelConfig& cfg, const ModelInput& input,
                      const ModelParams& params, bool training, Rng& rng) {
  cfg.validate();
  if (input.features.size() != params.branches.size() ||
      input.laplacians.size() != params.branches.size()) {
    throw ShapeError("forward: " + std::to_string(params.branches.size()) +
                     " parameter branches for " + std::to_string(input.features.size()) +
                     " input branches");
  }
  if (!is_multi(cfg.family) && params.branches.size() != 1) {
    throw ShapeError(to_string(cfg.family) + " expects exactly one branch");
  }

  ForwardResult result;
  std::vector<Tensor> branch_logits;
  for (std::size_t b = 0; b < params.branches.size(); ++b) {
    const BranchParams& bp = params.branches[b];
    Tensor x = tape.constant(input.features[b]);
    const Laplacian& lap = input.laplacians[b];

    if (is_residual(cfg.family)) {
      if (!bp.input || !bp.output || static_cast<int>(bp.convs.size()) != cfg.depth) {
        throw ShapeError("residual branch parameters do not match the config depth");
      }
      const ConvTensors in = attach(tape, *bp.input, result.params);
      const Tensor x0 = dropout(relu(linear_forward(x, in)), cfg.dropout, training, rng);
      x = x0;
      for (int l = 0; l < cfg.depth; ++l) {
        const ConvTensors c = attach(tape, bp.convs[static_cast<std::size_t>(l)], result.params);
        x = res_conv_forward(x, x0, lap, c, cfg.res_schedule->alpha(l + 1),
                             cfg.res_schedule->beta(l + 1), true);
        result.layer_norms.push_back(x.value().norm());
        x = dropout(x, cfg.dropout, training, rng);
      }
      const ConvTensors out = attach(tape, *bp.output, result.params);
      x = linear_forward(x, out);
    } else {
      if (bp.input || bp.output || static_cast<int>(bp.convs.size()) != cfg.depth) {
        throw ShapeError("plain branch parameters do not match the config depth");
      }
      for (int l = 0; l < cfg.depth; ++l) {
        const bool last = l == cfg.depth - 1;
        const ConvTensors c = attach(tape, bp.convs[static_cast<std::size_t>(l)], result.params);
        x = hgnn_conv_forward(x, lap, c, !last);
        result.layer_norms.push_back(x.value().norm());
        if (!last) x = dropout(x, cfg.dropout, training, rng);
      }
    }
    branch_logits.push_back(x);
  }
  result.logits = is_multi(cfg.family) ? fuse_mean(branch_logits) : branch_logits.front();
  return result;
}

ForwardResult forward(Tape& tape, const ModelConfig& cfg, const MultiModalDataset& ds,
                      const ModelParams& params, bool training, Rng& rng) {
  return forward(tape, cfg, prepare_input(cfg.family, ds), params, training, rng);
}

Matrix predict(const ModelConfig& cfg, const ModelInput& input, const ModelParams& params) {
  Tape tape;
  Rng unused(0);
  return forward(tape, cfg, input, params, false, unused).logits.value();
}

}  // namespace hypernet
