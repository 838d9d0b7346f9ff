#include "hypernet/hypergraph.hpp"

#include "hypernet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

namespace hypernet {

Hypergraph::Hypergraph(std::size_t n_vertices, std::vector<Hyperedge> hyperedges)
    : n_vertices_(n_vertices), hyperedges_(std::move(hyperedges)) {
  if (n_vertices_ == 0) {
    throw ValidationError("hypergraph needs at least one vertex");
  }
  incidence_ = Matrix::Zero(static_cast<Eigen::Index>(n_vertices_),
                            static_cast<Eigen::Index>(hyperedges_.size()));
  for (std::size_t j = 0; j < hyperedges_.size(); ++j) {
    const Hyperedge& e = hyperedges_[j];
    if (e.empty()) {
      throw ValidationError("hyperedge " + std::to_string(j) + " is empty");
    }
    for (std::size_t v : e) {
      if (v >= n_vertices_) {
        throw ValidationError("hyperedge " + std::to_string(j) + " references vertex " +
                              std::to_string(v) + " outside [0, " +
                              std::to_string(n_vertices_) + ")");
      }
      double& cell = incidence_(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(j));
      if (cell != 0.0) {
        throw ValidationError("hyperedge " + std::to_string(j) + " repeats vertex " +
                              std::to_string(v));
      }
      cell = 1.0;
    }
  }
}

DegreePair degrees(const Hypergraph& g) {
  DegreePair d;
  d.vertex.assign(g.n_vertices(), 0);
  d.hyperedge.reserve(g.n_hyperedges());
  for (const Hyperedge& e : g.hyperedges()) {
    d.hyperedge.push_back(e.size());
    for (std::size_t v : e) ++d.vertex[v];
  }
  return d;
}

Laplacian laplacian(const Hypergraph& g) {
  const DegreePair d = degrees(g);
  const auto n = static_cast<Eigen::Index>(g.n_vertices());

  Vector inv_sqrt_dv(n);
  for (Eigen::Index v = 0; v < n; ++v) {
    const auto dv = d.vertex[static_cast<std::size_t>(v)];
    inv_sqrt_dv(v) = dv == 0 ? 0.0 : 1.0 / std::sqrt(static_cast<double>(dv));
  }

  // Accumulate hyperedge by hyperedge: entry (u, v) receives 1/|e| for every
  // hyperedge holding both, which is (H D_e^{-1} H^T)(u, v).
  Matrix acc = Matrix::Zero(n, n);
  for (const Hyperedge& e : g.hyperedges()) {
    const double w = 1.0 / static_cast<double>(e.size());
    for (std::size_t u : e) {
      for (std::size_t v : e) {
        acc(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) += w;
      }
    }
  }

  return Laplacian(inv_sqrt_dv.asDiagonal() * acc * inv_sqrt_dv.asDiagonal());
}

Laplacian::Laplacian() : sparse_(std::make_shared<SparseMatrix>()) {}

Laplacian::Laplacian(Matrix dense) : dense_(std::move(dense)) {
  if (dense_.rows() != dense_.cols()) {
    throw ShapeError("laplacian must be square, got " + std::to_string(dense_.rows()) + "x" +
                     std::to_string(dense_.cols()));
  }
  sparse_ = std::make_shared<SparseMatrix>(dense_.sparseView());
}

Hypergraph build_knn_hypergraph(const Matrix& features, const KnnOptions& options) {
  const auto n = static_cast<std::size_t>(features.rows());
  const std::size_t k = options.k;
  if (k == 0) {
    throw ParameterError("knn k must be positive");
  }
  if (n < k + 1) {
    throw ValidationError("knn hypergraph with k=" + std::to_string(k) + " needs at least " +
                          std::to_string(k + 1) + " vertices, got " + std::to_string(n));
  }
  if (!features.allFinite()) {
    throw ValidationError("features contain non-finite values");
  }

  // Squared distances from explicit differences, so d(i, j) == d(j, i) bit for
  // bit and ties are real ties.
  std::vector<Hyperedge> edges;
  edges.reserve(n);
  std::vector<std::size_t> order(n);
  Vector row(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    row = (features.rowwise() - features.row(static_cast<Eigen::Index>(i)))
              .rowwise()
              .squaredNorm();
    order.resize(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    order.erase(order.begin() + static_cast<std::ptrdiff_t>(i));
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        const double da = row(static_cast<Eigen::Index>(a));
                        const double db = row(static_cast<Eigen::Index>(b));
                        return da < db || (da == db && a < b);
                      });
    Hyperedge e;
    e.reserve(k + 1);
    if (options.include_center) e.push_back(i);
    e.insert(e.end(), order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    edges.push_back(std::move(e));
  }
  return Hypergraph(n, std::move(edges));
}

Modality make_modality(std::string id, Matrix features, Hypergraph g) {
  if (static_cast<std::size_t>(features.rows()) != g.n_vertices()) {
    throw ValidationError("modality '" + id + "' has " + std::to_string(features.rows()) +
                          " feature rows but its hypergraph has " +
                          std::to_string(g.n_vertices()) + " vertices");
  }
  Modality m{std::move(id), std::move(features), std::move(g), {}};
  m.laplacian = laplacian(m.hypergraph);
  return m;
}

std::size_t popcount(const std::vector<bool>& mask) {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
}

double MultiModalDataset::label_rate() const {
  if (labels.empty()) return 0.0;
  return static_cast<double>(popcount(train_mask)) / static_cast<double>(labels.size());
}

void MultiModalDataset::validate() const {
  const std::size_t n = labels.size();
  if (n == 0) throw ValidationError("dataset has no vertices");
  if (modalities.empty()) throw ValidationError("dataset has no modalities");
  if (n_classes <= 0) throw ValidationError("dataset needs a positive class count");
  for (const Modality& m : modalities) {
    if (static_cast<std::size_t>(m.features.rows()) != n || m.hypergraph.n_vertices() != n) {
      throw ValidationError("modality '" + m.id + "' disagrees on the vertex count (expected " +
                            std::to_string(n) + ")");
    }
  }
  if (train_mask.size() != n || test_mask.size() != n) {
    throw ValidationError("masks must have one entry per vertex");
  }
  for (std::size_t v = 0; v < n; ++v) {
    if (labels[v] < 0 || labels[v] >= n_classes) {
      throw ValidationError("label " + std::to_string(labels[v]) + " of vertex " +
                            std::to_string(v) + " is outside [0, " + std::to_string(n_classes) +
                            ")");
    }
    if (train_mask[v] && test_mask[v]) {
      throw ValidationError("vertex " + std::to_string(v) + " is in both train and test masks");
    }
  }
}

ConcatResult concat_modalities(const MultiModalDataset& ds) {
  if (ds.modalities.empty()) {
    throw ValidationError("concat_modalities needs at least one modality");
  }
  const std::size_t n = ds.modalities.front().hypergraph.n_vertices();
  Eigen::Index width = 0;
  std::vector<Hyperedge> edges;
  for (const Modality& m : ds.modalities) {
    if (m.hypergraph.n_vertices() != n || static_cast<std::size_t>(m.features.rows()) != n) {
      throw ValidationError("modality '" + m.id + "' has a different vertex count");
    }
    width += m.features.cols();
    edges.insert(edges.end(), m.hypergraph.hyperedges().begin(), m.hypergraph.hyperedges().end());
  }
  ConcatResult out;
  out.features.resize(static_cast<Eigen::Index>(n), width);
  Eigen::Index col = 0;
  for (const Modality& m : ds.modalities) {
    out.features.middleCols(col, m.features.cols()) = m.features;
    col += m.features.cols();
  }
  out.hypergraph = Hypergraph(n, std::move(edges));
  return out;
}

}  // namespace hypernet
