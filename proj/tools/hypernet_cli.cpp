// Experiment runner: single runs, depth sweeps, label-ratio sweeps and dataset
// utilities. Exit codes: 0 success, 1 usage, 2 validation, 3 numeric failure.

#include "hypernet/data_io.hpp"
#include "hypernet/errors.hpp"
#include "hypernet/sweep.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace hypernet;

constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DatasetArgs {
  std::string manifest;
  std::string synthetic;
};

struct ModelArgs {
  int hidden = 128;
  double dropout = 0.5;
  double alpha = 0.1;
  double lambda = 0.5;
  int epochs = 200;
  double lr = 1e-3;
  double weight_decay = 5e-4;
  int eval_every = 1;
  int jobs = 1;
  bool timing = false;
  std::string label_mode = "full";
  int per_class = 0;
};

void add_dataset_flags(CLI::App& cmd, DatasetArgs& d) {
  auto* ds = cmd.add_option("--dataset", d.manifest, "Dataset manifest (JSON)");
  auto* syn = cmd.add_option("--synthetic", d.synthetic,
                             "Synthetic spec file, or 'default' for the reference dataset");
  ds->excludes(syn);
}

void add_model_flags(CLI::App& cmd, ModelArgs& m) {
  cmd.add_option("--hidden", m.hidden, "Hidden width")->capture_default_str();
  cmd.add_option("--dropout", m.dropout, "Dropout probability")->capture_default_str();
  cmd.add_option("--alpha", m.alpha, "Initial-residual weight alpha_l")->capture_default_str();
  cmd.add_option("--lambda", m.lambda, "Identity-mapping scale: beta_l = min(1, lambda/l)")
      ->capture_default_str();
  cmd.add_option("--epochs", m.epochs, "Training epochs")->capture_default_str();
  cmd.add_option("--lr", m.lr, "Adam learning rate")->capture_default_str();
  cmd.add_option("--weight-decay", m.weight_decay, "Decoupled weight decay")->capture_default_str();
  cmd.add_option("--eval-every", m.eval_every, "Epochs between test evaluations")
      ->capture_default_str();
  cmd.add_option("--jobs", m.jobs, "Parallel runs")->capture_default_str();
  cmd.add_flag("--timing", m.timing, "Record wall-clock runtime in reports");
  cmd.add_option("--per-class", m.per_class,
                 "Balanced mode: labeled vertices per class (default: smallest class)");
}

MultiModalDataset load(const DatasetArgs& d) {
  if (!d.manifest.empty()) return load_dataset(d.manifest);
  if (d.synthetic.empty()) throw UsageError("one of --dataset or --synthetic is required");
  const SyntheticSpec spec =
      d.synthetic == "default" ? SyntheticSpec::acceptance() : read_synthetic_spec(d.synthetic);
  return generate_synthetic(spec);
}

ExperimentOptions options(const ModelArgs& m) {
  ExperimentOptions o;
  o.hidden = m.hidden;
  o.dropout = m.dropout;
  o.alpha = m.alpha;
  o.lambda = m.lambda;
  o.train.epochs = m.epochs;
  o.train.learning_rate = m.lr;
  o.train.weight_decay = m.weight_decay;
  o.train.eval_every = m.eval_every;
  o.jobs = m.jobs;
  o.timing = m.timing;
  if (m.per_class > 0) o.per_class = m.per_class;
  return o;
}

std::vector<FamilyDepth> parse_families(const std::vector<std::string>& names, int depth) {
  std::vector<FamilyDepth> out;
  for (const std::string& n : names) {
    try {
      out.push_back(parse_family_depth(n, depth));
    } catch (const ParameterError& e) {
      throw UsageError(e.what());
    }
  }
  return out;
}

void emit_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  if (path.empty() || path == "-") {
    write_csv(std::cout, rows);
    return;
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  write_csv(out, rows);
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hypergraph neural network experiments"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  DatasetArgs data;
  ModelArgs model;
  std::string out_path;

  auto* run = app.add_subcommand("run", "Train one model and print a summary");
  std::string family;
  int depth = 2;
  add_dataset_flags(*run, data);
  add_model_flags(*run, model);
  run->add_option("--family", family, "hgnn, multihgnn, reshgnn or resmultihgnn")->required();
  run->add_option("--depth", depth, "Number of hypergraph convolutions")->capture_default_str();
  run->add_option("--seed", seed, "Seed (default: $HYPERNET_SEED or 0)")->envname("HYPERNET_SEED");
  run->add_option("--label-mode", model.label_mode, "full or balanced")->capture_default_str();
  run->add_option("--out", out_path, "Also write the result as a one-row CSV");

  auto* dsweep = app.add_subcommand("depth-sweep", "Accuracy versus depth");
  std::vector<std::string> families;
  std::vector<int> depths = {2, 4, 8, 16, 32, 64};
  std::vector<std::uint64_t> seeds;
  add_dataset_flags(*dsweep, data);
  add_model_flags(*dsweep, model);
  dsweep->add_option("--family", families, "Families to sweep (default: all four)")
      ->delimiter(',');
  dsweep->add_option("--depths", depths, "Depths")->delimiter(',')->capture_default_str();
  dsweep->add_option("--seeds", seeds, "Seeds (default: the single base seed)")->delimiter(',');
  dsweep->add_option("--seed", seed, "Base seed (default: $HYPERNET_SEED or 0)")
      ->envname("HYPERNET_SEED");
  dsweep->add_option("--label-mode", model.label_mode, "full or balanced")->capture_default_str();
  dsweep->add_option("--out", out_path, "CSV report path (default: stdout)");

  auto* rsweep = app.add_subcommand("ratio-sweep", "Accuracy versus training-label ratio");
  std::vector<double> ratios = {0.05, 0.1, 0.2, 0.4, 0.6, 0.8};
  int ratio_depth = 2;
  add_dataset_flags(*rsweep, data);
  add_model_flags(*rsweep, model);
  rsweep->add_option("--family", families,
                     "Families as name or name:depth (default: hgnn,resmultihgnn)")
      ->delimiter(',');
  rsweep->add_option("--depth", ratio_depth, "Depth for families without :depth")
      ->capture_default_str();
  rsweep->add_option("--ratios", ratios, "Training-label ratios in (0, 1)")
      ->delimiter(',')
      ->capture_default_str();
  rsweep->add_option("--seeds", seeds, "Seeds (default: 8 seeds from the base seed)")
      ->delimiter(',');
  rsweep->add_option("--seed", seed, "Base seed (default: $HYPERNET_SEED or 0)")
      ->envname("HYPERNET_SEED");
  rsweep->add_option("--out", out_path, "CSV report path (default: stdout)");

  auto* gen = app.add_subcommand("gen-synthetic", "Write a synthetic dataset to disk");
  std::string out_dir;
  bool force = false;
  gen->add_option("--synthetic", data.synthetic, "Spec file or 'default'")->required();
  gen->add_option("--out", out_dir, "Output directory")->required();
  gen->add_flag("--force", force, "Overwrite an existing manifest");

  auto* val = app.add_subcommand("validate-dataset", "Load a dataset and print its summary");
  val->add_option("--dataset", data.manifest, "Dataset manifest")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (run->parsed()) {
      Family f;
      try {
        f = parse_family(family);
      } catch (const ParameterError& e) {
        throw UsageError(e.what());
      }
      const LabelMode mode = parse_label_mode(model.label_mode);
      const ExperimentOptions opts = options(model);
      model_config(f, depth, 2, seed, opts).validate();
      const MultiModalDataset ds = load(data);
      const SweepRow row = run_once(ds, f, depth, seed, mode, opts);
      std::cout << format_row_summary(row) << '\n';
      if (!out_path.empty()) emit_csv({row}, out_path);
    } else if (dsweep->parsed()) {
      if (families.empty()) families = {"hgnn", "multihgnn", "reshgnn", "resmultihgnn"};
      std::vector<Family> fs;
      for (const FamilyDepth& fd : parse_families(families, 0)) fs.push_back(fd.family);
      if (seeds.empty()) seeds = {seed};
      const LabelMode mode = parse_label_mode(model.label_mode);
      const MultiModalDataset ds = load(data);
      const auto rows = depth_sweep(ds, fs, depths, seeds, mode, options(model));
      emit_csv(rows, out_path);
      std::cerr << format_stats(summarize(rows, false), false);
    } else if (rsweep->parsed()) {
      if (families.empty()) families = {"hgnn", "resmultihgnn"};
      const auto models = parse_families(families, ratio_depth);
      if (seeds.empty()) {
        for (std::uint64_t s = 0; s < 8; ++s) seeds.push_back(seed + s);
      }
      for (double r : ratios) {
        if (!(r > 0.0 && r < 1.0)) {
          throw ParameterError("ratio " + std::to_string(r) + " outside (0, 1)");
        }
      }
      const MultiModalDataset ds = load(data);
      const auto rows = ratio_sweep(ds, models, ratios, seeds, options(model));
      emit_csv(rows, out_path);
      std::cerr << format_stats(summarize(rows, true), true);
    } else if (gen->parsed()) {
      const MultiModalDataset ds = load(data);
      const DatasetManifest m = save_dataset(ds, out_dir, force);
      std::cout << "wrote " << (std::filesystem::path(out_dir) / "manifest.json").string()
                << " (" << m.n_vertices << " vertices, " << m.modalities.size()
                << " modalities)\n";
    } else if (val->parsed()) {
      const MultiModalDataset ds = load(data);
      std::cout << "name=" << ds.name << " n_vertices=" << ds.n_vertices()
                << " n_classes=" << ds.n_classes << " modalities=" << ds.modalities.size()
                << " label_rate=" << ds.label_rate() << " knn_k=" << ds.knn_k << '\n';
      for (const Modality& m : ds.modalities) {
        std::cout << "  modality " << m.id << ": dim=" << m.features.cols()
                  << " hyperedges=" << m.hypergraph.n_hyperedges() << '\n';
      }
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return 0;
}
