#include "hypernet/data_io.hpp"

#include "hypernet/errors.hpp"

#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace hypernet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string where(const fs::path& file, std::size_t line) {
  return file.string() + ":" + std::to_string(line);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return in;
}

double parse_double(const std::string& tok, const fs::path& file, std::size_t line) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || tok.empty()) {
    throw ValidationError(where(file, line) + ": cannot parse number '" + tok + "'");
  }
  return v;
}

Matrix read_features(const fs::path& file, std::size_t n, Eigen::Index dim) {
  std::ifstream in = open_in(file);
  Matrix x(static_cast<Eigen::Index>(n), dim);
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) {
      throw ValidationError(where(file, row) + ": empty feature row");
    }
    if (row > n) {
      throw ValidationError(where(file, row) + ": more than " + std::to_string(n) + " rows");
    }
    std::stringstream ss(line);
    std::string tok;
    Eigen::Index col = 0;
    while (std::getline(ss, tok, ',')) {
      if (col >= dim) {
        throw ValidationError(where(file, row) + ": more than " + std::to_string(dim) +
                              " columns");
      }
      x(static_cast<Eigen::Index>(row - 1), col++) = parse_double(trim(tok), file, row);
    }
    if (col != dim) {
      throw ValidationError(where(file, row) + ": expected " + std::to_string(dim) +
                            " columns, found " + std::to_string(col));
    }
  }
  if (row != n) {
    throw ValidationError(where(file, row) + ": expected " + std::to_string(n) +
                          " rows, found " + std::to_string(row));
  }
  return x;
}

std::vector<int> read_labels(const fs::path& file, std::size_t n, int n_classes) {
  std::ifstream in = open_in(file);
  std::vector<int> labels;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    const std::string tok = trim(line);
    if (row > n) {
      throw ValidationError(where(file, row) + ": more than " + std::to_string(n) + " labels");
    }
    int y = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), y);
    if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size()) {
      throw ValidationError(where(file, row) + ": cannot parse label '" + tok + "'");
    }
    if (y < 0 || y >= n_classes) {
      throw ValidationError(where(file, row) + ": label " + std::to_string(y) +
                            " outside [0, " + std::to_string(n_classes) + ")");
    }
    labels.push_back(y);
  }
  if (row != n) {
    throw ValidationError(where(file, row) + ": expected " + std::to_string(n) +
                          " labels, found " + std::to_string(row));
  }
  return labels;
}

void read_split(const fs::path& file, std::size_t n, std::vector<bool>& train,
                std::vector<bool>& test) {
  std::ifstream in = open_in(file);
  train.assign(n, false);
  test.assign(n, false);
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (row > n) {
      throw ValidationError(where(file, row) + ": more than " + std::to_string(n) + " entries");
    }
    const std::string tok = trim(line);
    if (tok == "train") {
      train[row - 1] = true;
    } else if (tok == "test") {
      test[row - 1] = true;
    } else {
      throw ValidationError(where(file, row) + ": expected 'train' or 'test', found '" + tok +
                            "'");
    }
  }
  if (row != n) {
    throw ValidationError(where(file, row) + ": expected " + std::to_string(n) +
                          " entries, found " + std::to_string(row));
  }
}

template <typename T>
T field(const json& j, const char* key, const fs::path& file) {
  if (!j.contains(key)) throw ValidationError(file.string() + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(file.string() + ": field '" + key + "': " + e.what());
  }
}

}  // namespace

DatasetManifest read_manifest(const fs::path& manifest_path) {
  std::ifstream in = open_in(manifest_path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(manifest_path.string() + ": " + e.what());
  }
  DatasetManifest m;
  m.name = field<std::string>(j, "name", manifest_path);
  m.n_vertices = field<std::size_t>(j, "n_vertices", manifest_path);
  m.n_classes = field<int>(j, "n_classes", manifest_path);
  m.labels_file = field<std::string>(j, "labels_file", manifest_path);
  m.split_file = field<std::string>(j, "split_file", manifest_path);
  m.knn_k = j.value("knn_k", std::size_t{10});
  m.label_rate = j.value("label_rate", 0.0);
  for (const json& mj : field<json>(j, "modalities", manifest_path)) {
    ModalityEntry e;
    e.id = field<std::string>(mj, "id", manifest_path);
    e.dim = field<Eigen::Index>(mj, "dim", manifest_path);
    e.feature_file = field<std::string>(mj, "feature_file", manifest_path);
    m.modalities.push_back(std::move(e));
  }
  if (m.n_vertices == 0) throw ValidationError(manifest_path.string() + ": n_vertices is zero");
  if (m.n_classes < 1) throw ValidationError(manifest_path.string() + ": n_classes < 1");
  if (m.modalities.empty()) throw ValidationError(manifest_path.string() + ": no modalities");
  return m;
}

void write_manifest(const DatasetManifest& m, const fs::path& manifest_path) {
  json j;
  j["name"] = m.name;
  j["n_vertices"] = m.n_vertices;
  j["n_classes"] = m.n_classes;
  j["knn_k"] = m.knn_k;
  j["label_rate"] = m.label_rate;
  j["labels_file"] = m.labels_file.generic_string();
  j["split_file"] = m.split_file.generic_string();
  j["modalities"] = json::array();
  for (const ModalityEntry& e : m.modalities) {
    j["modalities"].push_back(
        {{"id", e.id}, {"dim", e.dim}, {"feature_file", e.feature_file.generic_string()}});
  }
  std::ofstream out(manifest_path);
  if (!out) throw IoError("cannot write " + manifest_path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + manifest_path.string());
}

MultiModalDataset load_dataset(const fs::path& manifest_path) {
  const DatasetManifest m = read_manifest(manifest_path);
  const fs::path base = manifest_path.parent_path();
  auto resolve = [&base](const fs::path& p) { return p.is_absolute() ? p : base / p; };

  MultiModalDataset ds;
  ds.name = m.name;
  ds.n_classes = m.n_classes;
  ds.knn_k = m.knn_k;
  ds.labels = read_labels(resolve(m.labels_file), m.n_vertices, m.n_classes);
  read_split(resolve(m.split_file), m.n_vertices, ds.train_mask, ds.test_mask);
  for (const ModalityEntry& e : m.modalities) {
    if (e.dim < 1) throw ValidationError("modality '" + e.id + "' has non-positive dim");
    Matrix x = read_features(resolve(e.feature_file), m.n_vertices, e.dim);
    Hypergraph g = build_knn_hypergraph(x, m.knn_k);
    ds.modalities.push_back(make_modality(e.id, std::move(x), std::move(g)));
  }
  ds.validate();
  return ds;
}

DatasetManifest save_dataset(const MultiModalDataset& ds, const fs::path& dir, bool force) {
  if (ds.modalities.empty()) throw ValidationError("save_dataset: dataset has no modalities");
  ds.validate();
  for (std::size_t v = 0; v < ds.n_vertices(); ++v) {
    if (ds.train_mask[v] == ds.test_mask[v]) {
      throw ValidationError("save_dataset: vertex " + std::to_string(v) +
                            " must be in exactly one of train and test");
    }
  }
  const fs::path manifest_path = dir / "manifest.json";
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  if (fs::exists(manifest_path) && !force) {
    throw IoError(manifest_path.string() + " exists; pass force to overwrite");
  }

  DatasetManifest m;
  m.name = ds.name;
  m.n_vertices = ds.n_vertices();
  m.n_classes = ds.n_classes;
  m.knn_k = ds.knn_k;
  m.label_rate = ds.label_rate();
  m.labels_file = "labels.txt";
  m.split_file = "split.txt";

  auto open_out = [](const fs::path& p) {
    std::ofstream out(p);
    if (!out) throw IoError("cannot write " + p.string());
    return out;
  };

  char buf[64];
  for (const Modality& mod : ds.modalities) {
    ModalityEntry e{mod.id, mod.features.cols(), "features_" + mod.id + ".csv"};
    std::ofstream out = open_out(dir / e.feature_file);
    for (Eigen::Index i = 0; i < mod.features.rows(); ++i) {
      for (Eigen::Index c = 0; c < mod.features.cols(); ++c) {
        std::snprintf(buf, sizeof buf, "%.17g", mod.features(i, c));
        if (c) out << ',';
        out << buf;
      }
      out << '\n';
    }
    if (!out) throw IoError("write failed: " + (dir / e.feature_file).string());
    m.modalities.push_back(std::move(e));
  }
  {
    std::ofstream out = open_out(dir / m.labels_file);
    for (int y : ds.labels) out << y << '\n';
    if (!out) throw IoError("write failed: " + (dir / m.labels_file).string());
  }
  {
    std::ofstream out = open_out(dir / m.split_file);
    for (std::size_t v = 0; v < ds.n_vertices(); ++v) out << (ds.train_mask[v] ? "train" : "test") << '\n';
    if (!out) throw IoError("write failed: " + (dir / m.split_file).string());
  }
  write_manifest(m, manifest_path);
  return m;
}

}  // namespace hypernet
