#include "hypernet/data_io.hpp"
#include "hypernet/errors.hpp"
#include "hypernet/sweep.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace hypernet;

namespace {

MultiModalDataset small_dataset() {
  SyntheticSpec spec;
  spec.n_vertices = 60;
  spec.dims = {4, 4};
  spec.knn_k = 4;
  spec.seed = 1;
  return generate_synthetic(spec);
}

ExperimentOptions quick() {
  ExperimentOptions o;
  o.hidden = 8;
  o.train.epochs = 5;
  o.train.eval_every = 5;
  return o;
}

}  // namespace

TEST(FamilyDepth, Parse) {
  FamilyDepth a = parse_family_depth("hgnn", 2);
  EXPECT_EQ(a.family, Family::hgnn);
  EXPECT_EQ(a.depth, 2);
  FamilyDepth b = parse_family_depth("resmultihgnn:8", 2);
  EXPECT_EQ(b.family, Family::resmultihgnn);
  EXPECT_EQ(b.depth, 8);
  EXPECT_THROW(parse_family_depth("hgnn:x", 2), ParameterError);
  EXPECT_THROW(parse_family_depth("mlp", 2), ParameterError);
}

TEST(LabelMode, Parse) {
  EXPECT_EQ(parse_label_mode("full"), LabelMode::full);
  EXPECT_EQ(parse_label_mode("balanced"), LabelMode::balanced);
  EXPECT_THROW(parse_label_mode("half"), ParameterError);
}

TEST(Csv, RoundTripAndByteStable) {
  std::vector<SweepRow> rows = {
      {"d", Family::hgnn, 2, LabelMode::full, 0.2, 0, 0.8125, 0.84375, std::nullopt},
      {"d", Family::reshgnn, 32, LabelMode::balanced, 0.1, 7,
       std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(), 1.5},
  };
  std::ostringstream a, b;
  write_csv(a, rows);
  write_csv(b, rows);
  EXPECT_EQ(a.str(), b.str());
  const std::string text = a.str();
  EXPECT_EQ(text.rfind(std::string(kCsvSchemaLine) + "\n" + kCsvHeader + "\n", 0), 0u);

  std::istringstream in(text);
  const auto back = read_csv(in);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].family, Family::hgnn);
  EXPECT_DOUBLE_EQ(back[0].final_acc, 0.8125);
  EXPECT_FALSE(back[0].runtime_s.has_value());
  EXPECT_EQ(back[1].label_mode, LabelMode::balanced);
  EXPECT_EQ(back[1].seed, 7u);
  EXPECT_TRUE(std::isnan(back[1].final_acc));
  EXPECT_DOUBLE_EQ(*back[1].runtime_s, 1.5);
}

TEST(Csv, RejectsBadInput) {
  std::istringstream no_schema(std::string(kCsvHeader) + "\n");
  EXPECT_THROW(read_csv(no_schema), ValidationError);
  std::istringstream bad_row(std::string(kCsvSchemaLine) + "\n" + kCsvHeader + "\nd,hgnn,2\n");
  EXPECT_THROW(read_csv(bad_row), ValidationError);
}

TEST(Summarize, MeanAndSampleStd) {
  std::vector<SweepRow> rows;
  for (double acc : {0.5, 0.7, 0.9}) rows.push_back({"d", Family::hgnn, 2, LabelMode::full, 0.2, 0, acc, acc, {}});
  rows.push_back({"d", Family::hgnn, 4, LabelMode::full, 0.2, 0, 0.3, 0.3, {}});
  const auto stats = summarize(rows, false);
  ASSERT_EQ(stats.size(), 2u);
  EXPECT_EQ(stats[0].runs, 3u);
  EXPECT_NEAR(stats[0].mean, 0.7, 1e-12);
  EXPECT_NEAR(stats[0].stddev, 0.2, 1e-12);
  EXPECT_DOUBLE_EQ(stats[1].stddev, 0.0);
  EXPECT_FALSE(format_stats(stats, false).empty());
}

TEST(DepthSweep, RowCountOrderAndDeterminism) {
  const MultiModalDataset ds = small_dataset();
  const std::vector<Family> fams = {Family::reshgnn, Family::hgnn};
  ExperimentOptions o = quick();
  o.jobs = 2;
  const auto rows = depth_sweep(ds, fams, {4, 2}, {1, 0}, LabelMode::full, o);
  ASSERT_EQ(rows.size(), 8u);
  EXPECT_EQ(rows[0].family, Family::hgnn);
  EXPECT_EQ(rows[0].depth, 2);
  EXPECT_EQ(rows[0].seed, 0u);
  EXPECT_EQ(rows[1].seed, 1u);
  EXPECT_EQ(rows[2].depth, 4);
  EXPECT_EQ(rows[7].family, Family::reshgnn);

  o.jobs = 1;
  const auto again = depth_sweep(ds, fams, {4, 2}, {1, 0}, LabelMode::full, o);
  std::ostringstream a, b;
  write_csv(a, rows);
  write_csv(b, again);
  EXPECT_EQ(a.str(), b.str());
}

TEST(DepthSweep, FailedRunBecomesNanRow) {
  MultiModalDataset ds = small_dataset();
  // Huge features overflow the logits, so every run hits a non-finite loss.
  ds.modalities[0].features.col(0).setConstant(1e308);
  ds.modalities[0].features(0, 0) = -1e308;
  const auto rows = depth_sweep(ds, {Family::hgnn}, {2, 3}, {0}, LabelMode::full, quick());
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_TRUE(std::isnan(rows[0].final_acc));
  EXPECT_TRUE(std::isnan(rows[1].final_acc));
}

TEST(DepthSweep, InvalidConfigRejectedUpFront) {
  const MultiModalDataset ds = small_dataset();
  EXPECT_THROW(depth_sweep(ds, {Family::reshgnn}, {1, 2}, {0}, LabelMode::full, quick()),
               ParameterError);
}

TEST(DepthSweep, BalancedModeMasks) {
  const MultiModalDataset ds = small_dataset();
  ExperimentOptions o = quick();
  o.per_class = 2;
  const MultiModalDataset b = apply_label_mode(ds, LabelMode::balanced, 3, o);
  EXPECT_EQ(popcount(b.train_mask), 2u * static_cast<std::size_t>(ds.n_classes));
  EXPECT_EQ(popcount(b.train_mask) + popcount(b.test_mask), ds.n_vertices());
  const MultiModalDataset f = apply_label_mode(ds, LabelMode::full, 3, o);
  EXPECT_EQ(f.train_mask, ds.train_mask);
}

TEST(RatioSweep, RowsAndSharedSplits) {
  const MultiModalDataset ds = small_dataset();
  const std::vector<FamilyDepth> models = {{Family::hgnn, 2}, {Family::multihgnn, 2}};
  const auto rows = ratio_sweep(ds, models, {0.1}, {0, 1, 2, 3, 4, 5, 6, 7}, quick());
  EXPECT_EQ(rows.size(), 16u);
  for (const SweepRow& r : rows) EXPECT_DOUBLE_EQ(r.ratio, 0.1);

  const MultiModalDataset a = apply_ratio(ds, 0.4, 3);
  const MultiModalDataset b = apply_ratio(ds, 0.4, 3);
  EXPECT_EQ(a.train_mask, b.train_mask);
  EXPECT_NE(apply_ratio(ds, 0.4, 4).train_mask, a.train_mask);
  EXPECT_THROW(ratio_sweep(ds, models, {1.2}, {0}, quick()), ParameterError);
}
