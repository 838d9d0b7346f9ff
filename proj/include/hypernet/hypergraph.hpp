#pragma once

#include "hypernet/matrix.hpp"

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace hypernet {

using Hyperedge = std::vector<std::size_t>;

/// A hypergraph over vertices [0, n). Hyperedges keep their construction
/// order; each one becomes one column of the incidence matrix.
class Hypergraph {
 public:
  Hypergraph() = default;

  /// Throws ValidationError for empty hyperedges, out-of-range or repeated
  /// vertex indices, or n_vertices == 0.
  Hypergraph(std::size_t n_vertices, std::vector<Hyperedge> hyperedges);

  std::size_t n_vertices() const { return n_vertices_; }
  std::size_t n_hyperedges() const { return hyperedges_.size(); }
  const std::vector<Hyperedge>& hyperedges() const { return hyperedges_; }

  /// Dense |V| x |E| 0/1 incidence matrix H.
  const Matrix& incidence() const { return incidence_; }

 private:
  std::size_t n_vertices_ = 0;
  std::vector<Hyperedge> hyperedges_;
  Matrix incidence_;
};

struct DegreePair {
  std::vector<std::size_t> vertex;     // d(v)
  std::vector<std::size_t> hyperedge;  // |e|
};

DegreePair degrees(const Hypergraph& g);

/// Normalized propagation operator D_v^{-1/2} H D_e^{-1} H^T D_v^{-1/2}.
/// Vertices of degree zero get all-zero rows and columns. Holds the dense
/// matrix plus a shared sparse copy that the convolutions multiply with.
class Laplacian {
 public:
  Laplacian();
  explicit Laplacian(Matrix dense);
  const Matrix& matrix() const { return dense_; }
  const std::shared_ptr<const SparseMatrix>& sparse() const { return sparse_; }
  std::size_t size() const { return static_cast<std::size_t>(dense_.rows()); }

 private:
  Matrix dense_;
  std::shared_ptr<const SparseMatrix> sparse_;
};

Laplacian laplacian(const Hypergraph& g);

struct KnnOptions {
  std::size_t k = 10;
  /// When true each hyperedge holds its central vertex plus k neighbors.
  bool include_center = true;
};

/// One hyperedge per vertex: the vertex itself and its k nearest neighbors
/// by Euclidean distance. Ties go to the lower vertex index.
Hypergraph build_knn_hypergraph(const Matrix& features, const KnnOptions& options);

inline Hypergraph build_knn_hypergraph(const Matrix& features, std::size_t k) {
  return build_knn_hypergraph(features, KnnOptions{k, true});
}

struct Modality {
  std::string id;
  Matrix features;
  Hypergraph hypergraph;
  Laplacian laplacian;  // cached laplacian(hypergraph)
};

Modality make_modality(std::string id, Matrix features, Hypergraph g);

struct MultiModalDataset {
  std::string name;
  std::vector<Modality> modalities;
  std::vector<int> labels;
  std::vector<bool> train_mask;
  std::vector<bool> test_mask;
  int n_classes = 0;
  std::size_t knn_k = 10;  // neighbors used to build each modality's hypergraph

  std::size_t n_vertices() const { return labels.size(); }
  double label_rate() const;

  /// Checks every cross-field invariant; throws ValidationError on the first
  /// violation found.
  void validate() const;
};

struct ConcatResult {
  Matrix features;
  Hypergraph hypergraph;
};

/// Column-wise concatenation of all modality features and incidence matrices.
ConcatResult concat_modalities(const MultiModalDataset& ds);

std::size_t popcount(const std::vector<bool>& mask);

}  // namespace hypernet
