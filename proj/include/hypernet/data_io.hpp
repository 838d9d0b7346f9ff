#pragma once

#include "hypernet/hypergraph.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace hypernet {

struct ModalityEntry {
  std::string id;
  Eigen::Index dim = 0;
  std::filesystem::path feature_file;
};

/// On-disk description of a dataset. Relative paths resolve against the
/// manifest's directory.
struct DatasetManifest {
  std::string name;
  std::size_t n_vertices = 0;
  int n_classes = 0;
  std::vector<ModalityEntry> modalities;
  std::filesystem::path labels_file;
  std::filesystem::path split_file;
  std::size_t knn_k = 10;
  double label_rate = 0.0;  // informational, recomputed on load
};

DatasetManifest read_manifest(const std::filesystem::path& manifest_path);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& manifest_path);

/// Reads the manifest, feature CSVs, labels and split, then builds one kNN
/// hypergraph per modality. ValidationError messages cite file and line.
MultiModalDataset load_dataset(const std::filesystem::path& manifest_path);

/// Writes manifest.json, one features_<id>.csv per modality, labels.txt and
/// split.txt into dir. Refuses to replace an existing manifest unless force.
/// Every vertex must be in exactly one of the train and test masks.
DatasetManifest save_dataset(const MultiModalDataset& ds, const std::filesystem::path& dir,
                             bool force = false);

/// Knobs for the synthetic multi-modal generator.
struct SyntheticSpec {
  std::string name = "synthetic";
  std::size_t n_vertices = 600;
  int n_classes = 4;
  std::vector<Eigen::Index> dims = {16, 16};  // one entry per modality
  double separation = 1.0;
  double noise_std = 1.0;
  double correlation = 0.7;
  double label_rate = 0.2;
  std::uint64_t seed = 0;
  std::size_t knn_k = 10;

  std::size_t n_modalities() const { return dims.size(); }
  void validate() const;

  /// The fixed dataset used by the reproduction experiments.
  static SyntheticSpec acceptance();
};

SyntheticSpec read_synthetic_spec(const std::filesystem::path& path);
void write_synthetic_spec(const SyntheticSpec& spec, const std::filesystem::path& path);

/// Class-conditional Gaussian features per modality. Each vertex keeps its
/// own class in modality m with probability `correlation` and otherwise
/// draws modality m from class (y + 1 + m mod (C-1)) mod C.
MultiModalDataset generate_synthetic(const SyntheticSpec& spec);

}  // namespace hypernet
