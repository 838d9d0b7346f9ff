#pragma once

#include "hypernet/hypergraph.hpp"
#include "hypernet/models.hpp"
#include "hypernet/training.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hypernet {

enum class LabelMode { full, balanced };

LabelMode parse_label_mode(const std::string& s);
std::string to_string(LabelMode m);

/// Everything about a run that is not the (family, depth, seed) cell itself.
struct ExperimentOptions {
  int hidden = 128;
  double dropout = 0.5;
  double alpha = 0.1;
  double lambda = 0.5;
  TrainConfig train;
  /// Balanced mode: vertices kept per class; defaults to the smallest class.
  std::optional<int> per_class;
  int jobs = 1;
  /// Record wall-clock seconds. Off by default so reports are byte-stable.
  bool timing = false;
};

/// One report line. ratio is the fraction of vertices used for training, or
/// the requested ratio in a ratio sweep.
struct SweepRow {
  std::string dataset;
  Family family = Family::hgnn;
  int depth = 0;
  LabelMode label_mode = LabelMode::full;
  double ratio = 0.0;
  std::uint64_t seed = 0;
  double final_acc = 0.0;
  double best_acc = 0.0;
  std::optional<double> runtime_s;
};

struct FamilyDepth {
  Family family;
  int depth;
};

/// Parses "family" or "family:depth"; the bare form takes default_depth.
FamilyDepth parse_family_depth(const std::string& s, int default_depth);

ModelConfig model_config(Family family, int depth, int n_classes, std::uint64_t seed,
                         const ExperimentOptions& opts);

/// Dataset view with the masks a label mode prescribes for the given seed.
MultiModalDataset apply_label_mode(const MultiModalDataset& ds, LabelMode mode,
                                   std::uint64_t seed, const ExperimentOptions& opts);

/// Dataset view whose training mask is a fresh stratified sample at ratio.
MultiModalDataset apply_ratio(const MultiModalDataset& ds, double ratio, std::uint64_t seed);

/// Trains one cell. Errors propagate.
SweepRow run_once(const MultiModalDataset& ds, Family family, int depth, std::uint64_t seed,
                  LabelMode mode, const ExperimentOptions& opts, RunResult* detail = nullptr);

/// Every (family, depth, seed) combination. A failing run becomes a row with
/// nan accuracies and a message on stderr. Rows are sorted by family, depth,
/// seed regardless of completion order.
std::vector<SweepRow> depth_sweep(const MultiModalDataset& ds, const std::vector<Family>& families,
                                  const std::vector<int>& depths,
                                  const std::vector<std::uint64_t>& seeds, LabelMode mode,
                                  const ExperimentOptions& opts);

/// Every (ratio, family, seed) combination; the training split depends only
/// on (ratio, seed) so families see identical labels.
std::vector<SweepRow> ratio_sweep(const MultiModalDataset& ds,
                                  const std::vector<FamilyDepth>& models,
                                  const std::vector<double>& ratios,
                                  const std::vector<std::uint64_t>& seeds,
                                  const ExperimentOptions& opts);

inline constexpr const char* kCsvSchemaLine = "# hypernet sweep report, schema 1";
inline constexpr const char* kCsvHeader =
    "dataset,family,depth,label_mode,ratio,seed,final_acc,best_acc,runtime_s";

void write_csv(std::ostream& out, const std::vector<SweepRow>& rows);
/// Inverse of write_csv. ValidationError on schema or field problems.
std::vector<SweepRow> read_csv(std::istream& in);

std::string format_row_summary(const SweepRow& row);

struct CellStats {
  Family family;
  int depth;
  double ratio;
  std::size_t runs;
  double mean;
  double stddev;  // sample standard deviation; 0 for a single run
};

/// Groups rows by (family, depth) or, with by_ratio, (family, ratio).
std::vector<CellStats> summarize(const std::vector<SweepRow>& rows, bool by_ratio);
std::string format_stats(const std::vector<CellStats>& stats, bool by_ratio);

}  // namespace hypernet
