#include "hypernet/errors.hpp"
#include "hypernet/models.hpp"
#include "model_checks.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace hypernet;

namespace {

void randomize_biases(ModelParams& p, Rng& rng) {
  for (BranchParams& b : p.branches) {
    if (b.input) b.input->bias = oracle::uniform_matrix(1, b.input->bias.cols(), rng, -0.1, 0.1);
    if (b.output) b.output->bias = oracle::uniform_matrix(1, b.output->bias.cols(), rng, -0.1, 0.1);
    for (ConvParams& c : b.convs) c.bias = oracle::uniform_matrix(1, c.bias.cols(), rng, -0.1, 0.1);
  }
}

ConvTensors on_tape(Tape& tape, const Matrix& w, const Matrix& b) {
  return {tape.variable(w), tape.variable(b)};
}

}  // namespace

TEST(Family, ParseAndPredicates) {
  EXPECT_EQ(parse_family("hgnn"), Family::hgnn);
  EXPECT_EQ(parse_family("resmultihgnn"), Family::resmultihgnn);
  EXPECT_THROW(parse_family("gcn"), ParameterError);
  for (Family f : {Family::hgnn, Family::multihgnn, Family::reshgnn, Family::resmultihgnn}) {
    EXPECT_EQ(parse_family(to_string(f)), f);
  }
  EXPECT_TRUE(is_residual(Family::reshgnn));
  EXPECT_FALSE(is_residual(Family::multihgnn));
  EXPECT_TRUE(is_multi(Family::multihgnn));
  EXPECT_FALSE(is_multi(Family::reshgnn));
}

TEST(ModelConfig, Validation) {
  EXPECT_NO_THROW(ModelConfig::make(Family::hgnn, 1, 3).validate());
  try {
    ModelConfig::make(Family::hgnn, 0, 3).validate();
    FAIL();
  } catch (const ParameterError& e) {
    EXPECT_NE(std::string(e.what()).find("depth"), std::string::npos);
  }
  EXPECT_THROW(ModelConfig::make(Family::reshgnn, 1, 3).validate(), ParameterError);
  ModelConfig c = ModelConfig::make(Family::hgnn, 2, 3);
  c.dropout = 1.0;
  EXPECT_THROW(c.validate(), ParameterError);
  c = ModelConfig::make(Family::hgnn, 2, 3);
  c.res_schedule = ResSchedule::gcnii();
  EXPECT_THROW(c.validate(), ParameterError);
}

TEST(ResSchedule, DefaultValues) {
  const ResSchedule s = ResSchedule::gcnii(0.1, 0.5);
  EXPECT_DOUBLE_EQ(s.alpha(1), 0.1);
  EXPECT_DOUBLE_EQ(s.beta(1), 0.5);
  EXPECT_DOUBLE_EQ(s.beta(4), 0.125);
  EXPECT_DOUBLE_EQ(ResSchedule::gcnii(0.1, 3.0).beta(2), 1.0);
  EXPECT_DOUBLE_EQ(ResSchedule::plain().alpha(7), 0.0);
  EXPECT_DOUBLE_EQ(ResSchedule::plain().beta(7), 1.0);
}

TEST(Init, ShapesAndGlorotBounds) {
  ModelConfig cfg = ModelConfig::make(Family::resmultihgnn, 3, 5);
  cfg.hidden = 16;
  Rng rng(1);
  const Eigen::Index dims[] = {7, 9};
  const ModelParams p = init_params(cfg, dims, rng);
  ASSERT_EQ(p.branches.size(), 2u);
  EXPECT_EQ(p.branches[1].input->weight.rows(), 9);
  EXPECT_EQ(p.branches[0].convs.size(), 3u);
  EXPECT_EQ(p.branches[0].output->weight.cols(), 5);
  EXPECT_EQ(p.tensors().size(), 2u * (2 + 3 * 2 + 2));
  const double s = std::sqrt(6.0 / (9 + 16));
  EXPECT_LE(p.branches[1].input->weight.cwiseAbs().maxCoeff(), s);
  EXPECT_TRUE(p.branches[1].input->bias.isZero(0.0));

  ModelConfig plain = ModelConfig::make(Family::hgnn, 1, 4);
  const Eigen::Index d1[] = {6};
  const ModelParams q = init_params(plain, d1, rng);
  EXPECT_EQ(q.branches[0].convs[0].weight.rows(), 6);
  EXPECT_EQ(q.branches[0].convs[0].weight.cols(), 4);
}

TEST(Init, SeedDeterminism) {
  const ModelConfig cfg = ModelConfig::make(Family::hgnn, 2, 3);
  const Eigen::Index dims[] = {4};
  Rng a(9), b(9);
  EXPECT_EQ(init_params(cfg, dims, a).branches[0].convs[1].weight,
            init_params(cfg, dims, b).branches[0].convs[1].weight);
}

TEST(Conv, HgnnMatchesDirectFormula) {
  Rng rng(3);
  check::Problem p = check::random_problem(1, 10, 4, 3, rng);
  const Matrix w = oracle::uniform_matrix(4, 6, rng);
  const Matrix b = oracle::uniform_matrix(1, 6, rng);
  Tape tape;
  const Tensor y = hgnn_conv_forward(tape.constant(p.input.features[0]),
                                     p.input.laplacians[0],
                                     on_tape(tape, w, b), true);
  Matrix expected = p.input.laplacians[0].matrix() * p.input.features[0] * w;
  expected.rowwise() += b.row(0);
  EXPECT_LE((y.value() - expected.cwiseMax(0.0)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Conv, ResidualMatchesDirectFormula) {
  Rng rng(4);
  const Laplacian lap = check::random_problem(1, 8, 2, 2, rng).input.laplacians[0];
  const Matrix x = oracle::uniform_matrix(8, 5, rng);
  const Matrix x0 = oracle::uniform_matrix(8, 5, rng);
  const Matrix w = oracle::uniform_matrix(5, 5, rng);
  const Matrix b = oracle::uniform_matrix(1, 5, rng);
  Tape tape;
  const Tensor y = res_conv_forward(tape.constant(x), tape.constant(x0), lap,
                                    on_tape(tape, w, b), 0.2, 0.3, false);
  Matrix expected = (0.8 * lap.matrix() * x + 0.2 * x0) * (0.7 * Matrix::Identity(5, 5) + 0.3 * w);
  expected.rowwise() += b.row(0);
  EXPECT_LE((y.value() - expected).cwiseAbs().maxCoeff(), 1e-12);

  EXPECT_THROW(res_conv_forward(tape.constant(x), tape.constant(x0), lap,
                                on_tape(tape, w, b), 1.5, 0.3, false),
               ParameterError);
  EXPECT_THROW(res_conv_forward(tape.constant(x), tape.constant(x0), lap,
                                on_tape(tape, Matrix::Ones(5, 4), Matrix::Ones(1, 4)), 0.1, 0.3,
                                false),
               ShapeError);
}

TEST(Conv, ResidualReducesToPlain) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto n = static_cast<Eigen::Index>(5 + rng() % 20);
    const auto d = static_cast<Eigen::Index>(1 + rng() % 8);
    const Laplacian lt = check::random_problem(1, n, 2, 2, rng).input.laplacians[0];
    const Matrix x = oracle::uniform_matrix(n, d, rng);
    const Matrix w = oracle::uniform_matrix(d, d, rng);
    const Matrix b = oracle::uniform_matrix(1, d, rng);
    Tape tape;
    const Tensor xt = tape.constant(x);
    const ConvTensors p = on_tape(tape, w, b);
    const Matrix res = res_conv_forward(xt, tape.constant(Matrix::Random(n, d)), lt, p, 0.0, 1.0,
                                        true).value();
    const Matrix plain = hgnn_conv_forward(xt, lt, p, true).value();
    EXPECT_LE((res - plain).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Conv, ShapeErrors) {
  Tape tape;
  const Tensor x = tape.constant(Matrix::Ones(4, 3));
  const ConvTensors p = on_tape(tape, Matrix::Ones(3, 2), Matrix::Zero(1, 2));
  EXPECT_THROW(hgnn_conv_forward(x, Laplacian(Matrix::Identity(5, 5)), p, true), ShapeError);
  EXPECT_THROW(hgnn_conv_forward(x, Laplacian(Matrix::Identity(4, 4)),
                                 on_tape(tape, Matrix::Ones(2, 2), Matrix::Zero(1, 2)), true),
               ShapeError);
}

TEST(Fusion, MeanOfBranches) {
  Tape tape;
  Rng rng(1);
  const Matrix a = oracle::uniform_matrix(3, 2, rng), b = oracle::uniform_matrix(3, 2, rng);
  const Tensor parts[] = {tape.constant(a), tape.constant(b)};
  EXPECT_LE((fuse_mean(parts).value() - 0.5 * (a + b)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Forward, MultiWithIdenticalBranchesEqualsSingle) {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    for (bool residual : {false, true}) {
      const int depth = 2 + static_cast<int>(rng() % 3);
      check::Problem single = check::random_problem(1, 12, 5, 3, rng);
      ModelConfig one = ModelConfig::make(residual ? Family::reshgnn : Family::hgnn, depth, 3);
      one.hidden = 6;
      ModelConfig many = ModelConfig::make(residual ? Family::resmultihgnn : Family::multihgnn,
                                           depth, 3);
      many.hidden = 6;
      const Eigen::Index dims[] = {5};
      ModelParams p = init_params(one, dims, rng);
      randomize_biases(p, rng);

      const int m = 2 + static_cast<int>(rng() % 3);
      ModelInput multi;
      ModelParams shared;
      for (int i = 0; i < m; ++i) {
        multi.features.push_back(single.input.features[0]);
        multi.laplacians.push_back(single.input.laplacians[0]);
        shared.branches.push_back(p.branches[0]);
      }
      const Matrix a = predict(one, single.input, p);
      const Matrix b = predict(many, multi, shared);
      EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

// Relabelling vertices permutes the logits and changes nothing else.
TEST(ForwardProperty, PermutationEquivariance) {
  Rng rng(8);
  for (Family f : {Family::hgnn, Family::multihgnn, Family::reshgnn, Family::resmultihgnn}) {
    const int branches = is_multi(f) ? 2 : 1;
    check::Problem p = check::random_problem(branches, 15, 4, 3, rng);
    ModelConfig cfg = ModelConfig::make(f, 3, 3);
    cfg.hidden = 5;
    const ModelParams params = init_params(cfg, p.input.input_dims(), rng);

    Eigen::PermutationMatrix<Eigen::Dynamic> perm(15);
    perm.setIdentity();
    std::shuffle(perm.indices().data(), perm.indices().data() + 15, rng);
    ModelInput q = p.input;
    for (int b = 0; b < branches; ++b) {
      q.features[b] = perm * p.input.features[b];
      q.laplacians[b] = Laplacian(perm * p.input.laplacians[b].matrix() * perm.transpose());
    }
    const Matrix expected = perm * predict(cfg, p.input, params);
    EXPECT_LE((predict(cfg, q, params) - expected).cwiseAbs().maxCoeff(), 1e-12) << to_string(f);
  }
}

TEST(Forward, TrainingDropoutIsSeeded) {
  Rng rng(10);
  check::Problem p = check::random_problem(1, 10, 3, 2, rng);
  ModelConfig cfg = ModelConfig::make(Family::reshgnn, 2, 2);
  cfg.hidden = 8;
  const ModelParams params = init_params(cfg, p.input.input_dims(), rng);
  Tape t1, t2;
  Rng r1(42), r2(42);
  const Matrix a = forward(t1, cfg, p.input, params, true, r1).logits.value();
  const Matrix b = forward(t2, cfg, p.input, params, true, r2).logits.value();
  EXPECT_EQ(a, b);
  EXPECT_NE(a, predict(cfg, p.input, params));
}

TEST(Forward, LayerNormsPerConvolution) {
  Rng rng(12);
  check::Problem p = check::random_problem(2, 10, 3, 2, rng);
  ModelConfig cfg = ModelConfig::make(Family::multihgnn, 4, 2);
  cfg.hidden = 4;
  const ModelParams params = init_params(cfg, p.input.input_dims(), rng);
  Tape tape;
  Rng r(0);
  EXPECT_EQ(forward(tape, cfg, p.input, params, false, r).layer_norms.size(), 8u);
}

TEST(Forward, MismatchedParams) {
  Rng rng(13);
  check::Problem p = check::random_problem(2, 10, 3, 2, rng);
  ModelConfig cfg = ModelConfig::make(Family::multihgnn, 2, 2);
  cfg.hidden = 4;
  const Eigen::Index one[] = {3};
  const ModelParams params = init_params(cfg, one, rng);
  EXPECT_THROW(predict(cfg, p.input, params), ShapeError);
}

TEST(GradCheck, EveryFamily) {
  Rng rng(77);
  for (int trial = 0; trial < 5; ++trial) {
    for (Family f : {Family::hgnn, Family::multihgnn, Family::reshgnn, Family::resmultihgnn}) {
      const check::Problem p = check::random_problem(is_multi(f) ? 2 : 1, 8, 3, 3, rng);
      ModelConfig cfg = ModelConfig::make(f, 2 + static_cast<int>(rng() % 2), 3);
      cfg.hidden = 4;
      ModelParams params = init_params(cfg, p.input.input_dims(), rng);
      randomize_biases(params, rng);
      EXPECT_LT(check::model_gradient_error(cfg, p, params), 1e-5) << to_string(f);
    }
  }
}
