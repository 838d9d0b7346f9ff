#include "hypernet/data_io.hpp"
#include "hypernet/errors.hpp"
#include "hypernet/training.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

namespace hypernet {

void SyntheticSpec::validate() const {
  if (n_vertices == 0) throw ValidationError("synthetic: n_vertices must be positive");
  if (n_classes < 1) throw ValidationError("synthetic: n_classes must be positive");
  if (dims.empty()) throw ValidationError("synthetic: need at least one modality");
  for (Eigen::Index d : dims) {
    if (d < 2) throw ValidationError("synthetic: every modality needs dim >= 2");
  }
  if (!(separation > 0.0)) throw ValidationError("synthetic: separation must be positive");
  if (!(noise_std >= 0.0)) throw ValidationError("synthetic: noise_std must be non-negative");
  if (!(correlation >= 0.0 && correlation <= 1.0)) {
    throw ValidationError("synthetic: correlation must lie in [0, 1]");
  }
  if (!(label_rate > 0.0 && label_rate < 1.0)) {
    throw ValidationError("synthetic: label_rate must lie in (0, 1)");
  }
  if (label_rate * static_cast<double>(n_vertices) < static_cast<double>(n_classes)) {
    throw ValidationError("synthetic: label_rate * n_vertices must be >= n_classes");
  }
  if (n_vertices < knn_k + 1) {
    throw ValidationError("synthetic: n_vertices must exceed knn_k");
  }
}

SyntheticSpec SyntheticSpec::acceptance() {
  SyntheticSpec s;
  s.name = "acceptance";
  s.n_vertices = 600;
  s.n_classes = 4;
  s.dims = {16, 16};
  s.separation = 3.0;
  s.noise_std = 0.75;
  s.correlation = 0.7;
  s.label_rate = 0.2;
  s.seed = 2021;
  s.knn_k = 10;
  return s;
}

namespace {

// Random class centers rescaled so the closest pair sits exactly `separation` apart.
std::vector<Vector> class_means(int n_classes, Eigen::Index dim, double separation, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Vector> means(static_cast<std::size_t>(n_classes), Vector(dim));
  for (Vector& m : means) {
    for (Eigen::Index i = 0; i < dim; ++i) m(i) = gauss(rng);
  }
  double closest = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < means.size(); ++a) {
    for (std::size_t b = a + 1; b < means.size(); ++b) {
      closest = std::min(closest, (means[a] - means[b]).norm());
    }
  }
  if (!std::isfinite(closest)) closest = means.front().norm();
  if (!(closest > 0.0)) throw ValidationError("synthetic: degenerate class means");
  for (Vector& m : means) m *= separation / closest;
  return means;
}

}  // namespace

MultiModalDataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n_vertices;
  const int c = spec.n_classes;

  MultiModalDataset ds;
  ds.name = spec.name;
  ds.n_classes = c;
  ds.knn_k = spec.knn_k;

  Rng label_rng(split_seed(spec.seed, 0));
  ds.labels.resize(n);
  for (std::size_t v = 0; v < n; ++v) ds.labels[v] = static_cast<int>(v % static_cast<std::size_t>(c));
  std::shuffle(ds.labels.begin(), ds.labels.end(), label_rng);

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::bernoulli_distribution keep(spec.correlation);
  // Which (vertex, modality) pairs show another class; each modality is
  // corrupted independently.
  const std::size_t n_mod = spec.n_modalities();
  std::vector<std::vector<bool>> flipped(n_mod, std::vector<bool>(n, false));
  if (c >= 2) {
    Rng rng(split_seed(spec.seed, 2));
    for (std::size_t v = 0; v < n; ++v) {
      for (std::size_t m = 0; m < n_mod; ++m) flipped[m][v] = !keep(rng);
    }
  }
  for (std::size_t m = 0; m < spec.n_modalities(); ++m) {
    Rng rng(split_seed(spec.seed, 100 + m));
    const Eigen::Index dim = spec.dims[m];
    const auto means = class_means(c, dim, spec.separation, rng);
    Matrix x(static_cast<Eigen::Index>(n), dim);
    for (std::size_t v = 0; v < n; ++v) {
      int source = ds.labels[v];
      // Fixed per-modality shift: a corrupted vertex looks like one specific
      // other class, so modalities disagree in a consistent way.
      if (flipped[m][v]) source = (source + 1 + static_cast<int>(m) % (c - 1)) % c;
      const Vector& mu = means[static_cast<std::size_t>(source)];
      for (Eigen::Index i = 0; i < dim; ++i) {
        x(static_cast<Eigen::Index>(v), i) = mu(i) + spec.noise_std * gauss(rng);
      }
    }
    Hypergraph g = build_knn_hypergraph(x, spec.knn_k);
    ds.modalities.push_back(make_modality("m" + std::to_string(m), std::move(x), std::move(g)));
  }

  Rng split_rng(split_seed(spec.seed, 1));
  Split split = stratified_split(ds.labels, c, spec.label_rate, split_rng);
  ds.train_mask = std::move(split.train);
  ds.test_mask = std::move(split.eval);
  ds.validate();
  return ds;
}

SyntheticSpec read_synthetic_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open synthetic spec " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
    SyntheticSpec s;
    s.name = j.value("name", s.name);
    s.n_vertices = j.value("n_vertices", s.n_vertices);
    s.n_classes = j.value("n_classes", s.n_classes);
    s.dims = j.value("dims", s.dims);
    s.separation = j.value("separation", s.separation);
    s.noise_std = j.value("noise_std", s.noise_std);
    s.correlation = j.value("correlation", s.correlation);
    s.label_rate = j.value("label_rate", s.label_rate);
    s.seed = j.value("seed", s.seed);
    s.knn_k = j.value("knn_k", s.knn_k);
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_synthetic_spec(const SyntheticSpec& s, const std::filesystem::path& path) {
  nlohmann::json j{{"name", s.name},          {"n_vertices", s.n_vertices},
                   {"n_classes", s.n_classes}, {"dims", s.dims},
                   {"separation", s.separation}, {"noise_std", s.noise_std},
                   {"correlation", s.correlation}, {"label_rate", s.label_rate},
                   {"seed", s.seed},           {"knn_k", s.knn_k}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace hypernet
