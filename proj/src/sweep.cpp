#include "hypernet/sweep.hpp"

#include "hypernet/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

namespace hypernet {

LabelMode parse_label_mode(const std::string& s) {
  if (s == "full") return LabelMode::full;
  if (s == "balanced") return LabelMode::balanced;
  throw ParameterError("label mode must be 'full' or 'balanced', got '" + s + "'");
}

std::string to_string(LabelMode m) { return m == LabelMode::full ? "full" : "balanced"; }

FamilyDepth parse_family_depth(const std::string& s, int default_depth) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) return {parse_family(s), default_depth};
  const std::string depth = s.substr(colon + 1);
  int d = 0;
  try {
    std::size_t used = 0;
    d = std::stoi(depth, &used);
    if (used != depth.size()) throw std::invalid_argument(depth);
  } catch (const std::exception&) {
    throw ParameterError("bad depth in '" + s + "'");
  }
  return {parse_family(s.substr(0, colon)), d};
}

ModelConfig model_config(Family family, int depth, int n_classes, std::uint64_t seed,
                         const ExperimentOptions& opts) {
  ModelConfig cfg = ModelConfig::make(family, depth, n_classes, seed);
  cfg.hidden = opts.hidden;
  cfg.dropout = opts.dropout;
  if (is_residual(family)) cfg.res_schedule = ResSchedule::gcnii(opts.alpha, opts.lambda);
  return cfg;
}

MultiModalDataset apply_label_mode(const MultiModalDataset& ds, LabelMode mode,
                                   std::uint64_t seed, const ExperimentOptions& opts) {
  MultiModalDataset out = ds;
  if (mode == LabelMode::balanced) {
    const int per_class =
        opts.per_class.value_or(min_class_count(ds.labels, ds.train_mask, ds.n_classes));
    Rng rng(split_seed(seed, 7));
    Split s = balanced_subset(ds.labels, ds.train_mask, ds.n_classes, per_class, rng);
    out.train_mask = std::move(s.train);
    out.test_mask = std::move(s.eval);
  }
  return out;
}

MultiModalDataset apply_ratio(const MultiModalDataset& ds, double ratio, std::uint64_t seed) {
  MultiModalDataset out = ds;
  // Mix the ratio into the stream so each ratio draws its own sample.
  Rng rng(split_seed(seed, 11 + static_cast<std::uint64_t>(std::llround(ratio * 1e6))));
  Split s = stratified_split(ds.labels, ds.n_classes, ratio, rng);
  out.train_mask = std::move(s.train);
  out.test_mask = std::move(s.eval);
  return out;
}

namespace {

SweepRow train_row(const MultiModalDataset& view, Family family, int depth, std::uint64_t seed,
                   LabelMode mode, const ExperimentOptions& opts, RunResult* detail) {
  const ModelConfig cfg = model_config(family, depth, view.n_classes, seed, opts);
  TrainConfig tc = opts.train;
  tc.seed = seed;
  RunResult r = train(cfg, tc, view);
  SweepRow row;
  row.dataset = view.name;
  row.family = family;
  row.depth = depth;
  row.label_mode = mode;
  row.ratio = view.label_rate();
  row.seed = seed;
  row.final_acc = r.final_test_accuracy;
  row.best_acc = r.best_test_accuracy;
  if (opts.timing) row.runtime_s = r.elapsed;
  if (detail) *detail = std::move(r);
  return row;
}

// Runs jobs[i] for every i on up to `workers` threads; results land by index.
template <typename Job>
std::vector<SweepRow> run_all(std::size_t count, int workers, Job job) {
  std::vector<SweepRow> rows(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < count; i = next++) rows[i] = job(i);
  };
  const auto n_threads = static_cast<std::size_t>(std::max(1, workers));
  if (n_threads == 1 || count <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(n_threads, count); ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  return rows;
}

std::mutex g_log_mutex;

SweepRow failed_row(const MultiModalDataset& view, Family family, int depth, std::uint64_t seed,
                    LabelMode mode, const std::exception& e) {
  {
    std::lock_guard<std::mutex> lock(g_log_mutex);
    std::cerr << "run failed (family=" << to_string(family) << " depth=" << depth
              << " seed=" << seed << "): " << e.what() << '\n';
  }
  SweepRow row;
  row.dataset = view.name;
  row.family = family;
  row.depth = depth;
  row.label_mode = mode;
  row.ratio = view.label_rate();
  row.seed = seed;
  row.final_acc = std::numeric_limits<double>::quiet_NaN();
  row.best_acc = row.final_acc;
  return row;
}

void sort_rows(std::vector<SweepRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return std::tie(a.family, a.depth, a.ratio, a.seed) <
           std::tie(b.family, b.depth, b.ratio, b.seed);
  });
}

}  // namespace

SweepRow run_once(const MultiModalDataset& ds, Family family, int depth, std::uint64_t seed,
                  LabelMode mode, const ExperimentOptions& opts, RunResult* detail) {
  return train_row(apply_label_mode(ds, mode, seed, opts), family, depth, seed, mode, opts,
                   detail);
}

std::vector<SweepRow> depth_sweep(const MultiModalDataset& ds, const std::vector<Family>& families,
                                  const std::vector<int>& depths,
                                  const std::vector<std::uint64_t>& seeds, LabelMode mode,
                                  const ExperimentOptions& opts) {
  if (families.empty() || depths.empty() || seeds.empty()) {
    throw ParameterError("depth sweep needs at least one family, depth and seed");
  }
  for (Family f : families) {
    for (int d : depths) model_config(f, d, ds.n_classes, 0, opts).validate();
  }
  // One masked view per seed, shared by every family and depth.
  std::vector<MultiModalDataset> views;
  for (std::uint64_t s : seeds) views.push_back(apply_label_mode(ds, mode, s, opts));

  struct Cell {
    Family family;
    int depth;
    std::size_t seed_index;
  };
  std::vector<Cell> cells;
  for (Family f : families) {
    for (int d : depths) {
      for (std::size_t s = 0; s < seeds.size(); ++s) cells.push_back({f, d, s});
    }
  }
  auto rows = run_all(cells.size(), opts.jobs, [&](std::size_t i) {
    const Cell& c = cells[i];
    const MultiModalDataset& view = views[c.seed_index];
    try {
      return train_row(view, c.family, c.depth, seeds[c.seed_index], mode, opts, nullptr);
    } catch (const Error& e) {
      return failed_row(view, c.family, c.depth, seeds[c.seed_index], mode, e);
    }
  });
  sort_rows(rows);
  return rows;
}

std::vector<SweepRow> ratio_sweep(const MultiModalDataset& ds,
                                  const std::vector<FamilyDepth>& models,
                                  const std::vector<double>& ratios,
                                  const std::vector<std::uint64_t>& seeds,
                                  const ExperimentOptions& opts) {
  if (models.empty() || ratios.empty() || seeds.empty()) {
    throw ParameterError("ratio sweep needs at least one family, ratio and seed");
  }
  for (double r : ratios) {
    if (!(r > 0.0 && r < 1.0)) {
      throw ParameterError("ratio " + std::to_string(r) + " outside (0, 1)");
    }
  }
  for (const FamilyDepth& m : models) model_config(m.family, m.depth, ds.n_classes, 0, opts).validate();

  std::vector<MultiModalDataset> views;
  for (double r : ratios) {
    for (std::uint64_t s : seeds) views.push_back(apply_ratio(ds, r, s));
  }
  struct Cell {
    FamilyDepth model;
    std::size_t view;
    std::uint64_t seed;
    double ratio;
  };
  std::vector<Cell> cells;
  for (const FamilyDepth& m : models) {
    for (std::size_t r = 0; r < ratios.size(); ++r) {
      for (std::size_t s = 0; s < seeds.size(); ++s) {
        cells.push_back({m, r * seeds.size() + s, seeds[s], ratios[r]});
      }
    }
  }
  auto rows = run_all(cells.size(), opts.jobs, [&](std::size_t i) {
    const Cell& c = cells[i];
    const MultiModalDataset& view = views[c.view];
    SweepRow row;
    try {
      row = train_row(view, c.model.family, c.model.depth, c.seed, LabelMode::full, opts,
                      nullptr);
    } catch (const Error& e) {
      row = failed_row(view, c.model.family, c.model.depth, c.seed, LabelMode::full, e);
    }
    row.ratio = c.ratio;
    return row;
  });
  sort_rows(rows);
  return rows;
}

namespace {

std::string fmt_double(double v, const char* spec) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, std::size_t line) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("csv line " + std::to_string(line) + ": bad number '" + s + "'");
  }
}

}  // namespace

void write_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << kCsvSchemaLine << '\n' << kCsvHeader << '\n';
  for (const SweepRow& r : rows) {
    out << r.dataset << ',' << to_string(r.family) << ',' << r.depth << ','
        << to_string(r.label_mode) << ',' << fmt_double(r.ratio, "%.4f") << ',' << r.seed << ','
        << fmt_double(r.final_acc, "%.6f") << ',' << fmt_double(r.best_acc, "%.6f") << ','
        << (r.runtime_s ? fmt_double(*r.runtime_s, "%.3f") : std::string()) << '\n';
  }
}

std::vector<SweepRow> read_csv(std::istream& in) {
  std::string line;
  std::size_t n = 0;
  if (!std::getline(in, line) || line != kCsvSchemaLine) {
    throw ValidationError("csv: missing or unsupported schema line");
  }
  ++n;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw ValidationError("csv: unexpected header");
  }
  ++n;
  std::vector<SweepRow> rows;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 9) {
      throw ValidationError("csv line " + std::to_string(n) + ": expected 9 fields");
    }
    SweepRow r;
    r.dataset = f[0];
    r.family = parse_family(f[1]);
    r.depth = static_cast<int>(parse_number(f[2], n));
    r.label_mode = parse_label_mode(f[3]);
    r.ratio = parse_number(f[4], n);
    r.seed = static_cast<std::uint64_t>(std::stoull(f[5]));
    r.final_acc = parse_number(f[6], n);
    r.best_acc = parse_number(f[7], n);
    if (!f[8].empty()) r.runtime_s = parse_number(f[8], n);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string format_row_summary(const SweepRow& r) {
  std::string s = "dataset=" + r.dataset + " family=" + to_string(r.family) +
                  " depth=" + std::to_string(r.depth) + " label_mode=" + to_string(r.label_mode) +
                  " ratio=" + fmt_double(r.ratio, "%.4f") + " seed=" + std::to_string(r.seed) +
                  " final_acc=" + fmt_double(r.final_acc, "%.6f") +
                  " best_acc=" + fmt_double(r.best_acc, "%.6f");
  if (r.runtime_s) s += " runtime_s=" + fmt_double(*r.runtime_s, "%.3f");
  return s;
}

std::vector<CellStats> summarize(const std::vector<SweepRow>& rows, bool by_ratio) {
  std::map<std::tuple<Family, int, double>, std::vector<double>> groups;
  for (const SweepRow& r : rows) {
    const auto key = by_ratio ? std::make_tuple(r.family, r.depth, r.ratio)
                              : std::make_tuple(r.family, r.depth, 0.0);
    groups[key].push_back(r.final_acc);
  }
  std::vector<CellStats> out;
  for (const auto& [key, accs] : groups) {
    CellStats s{std::get<0>(key), std::get<1>(key), std::get<2>(key), accs.size(), 0.0, 0.0};
    for (double a : accs) s.mean += a;
    s.mean /= static_cast<double>(accs.size());
    if (accs.size() > 1) {
      double ss = 0.0;
      for (double a : accs) ss += (a - s.mean) * (a - s.mean);
      s.stddev = std::sqrt(ss / static_cast<double>(accs.size() - 1));
    }
    out.push_back(s);
  }
  return out;
}

std::string format_stats(const std::vector<CellStats>& stats, bool by_ratio) {
  std::string out;
  for (const CellStats& s : stats) {
    out += to_string(s.family) + " depth=" + std::to_string(s.depth);
    if (by_ratio) out += " ratio=" + fmt_double(s.ratio, "%.4f");
    out += " runs=" + std::to_string(s.runs) + " acc=" + fmt_double(s.mean, "%.4f") + " +/- " +
           fmt_double(s.stddev, "%.4f") + '\n';
  }
  return out;
}

}  // namespace hypernet
