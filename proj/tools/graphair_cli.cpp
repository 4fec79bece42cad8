// graphair command-line driver.

#include "graphair/graphair.hpp"

#include <CLI11.hpp>

#include <iomanip>
#include <iostream>

namespace fs = std::filesystem;
using namespace graphair;

namespace {

struct Flags {
  std::string dataset;
  std::string task;
  int epochs = 0;
  std::uint64_t seed = 0;
  bool no_ep = false;
  bool no_fm = false;
  std::string out;
  std::string config;
  std::string data_dir;
  int repeats = 0;
  int classifier_epochs = 0;
  int subgraph = 0;
  int batch_size = 0;
  std::string reduction;

  CLI::Option* epochs_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* repeats_opt = nullptr;
  CLI::Option* classifier_epochs_opt = nullptr;
  CLI::Option* subgraph_opt = nullptr;
  CLI::Option* batch_opt = nullptr;
};

void add_experiment_flags(CLI::App* app, Flags& f) {
  app->add_option("--dataset", f.dataset, "nba, pokec_z, pokec_n, citeseer, cora, pubmed or synthetic");
  app->add_option("--task", f.task, "node or link")->check(CLI::IsMember({"node", "link"}));
  f.epochs_opt = app->add_option("--epochs", f.epochs, "training epochs")->check(CLI::PositiveNumber);
  f.seed_opt = app->add_option("--seed", f.seed, "global seed");
  app->add_flag("--no-ep", f.no_ep, "disable edge perturbation (A' = A)");
  app->add_flag("--no-fm", f.no_fm, "disable feature masking (X' = X)");
  app->add_option("--out", f.out, "output directory");
  app->add_option("--config", f.config, "JSON experiment config; flags override it");
  app->add_option("--data-dir", f.data_dir, "dataset root (default: $GRAPHAIR_DATA_DIR or ./data)");
  f.repeats_opt = app->add_option("--repeats", f.repeats, "classifier seeds")->check(CLI::PositiveNumber);
  f.classifier_epochs_opt =
      app->add_option("--classifier-epochs", f.classifier_epochs, "classifier epochs")->check(CLI::PositiveNumber);
  f.subgraph_opt = app->add_option("--subgraph", f.subgraph, "train on a uniform node sample of this size")
                       ->check(CLI::PositiveNumber);
  f.batch_opt = app->add_option("--batch-size", f.batch_size, "analysis mini-batch size")->check(CLI::PositiveNumber);
  app->add_option("--reduction", f.reduction, "reconstruction loss reduction")->check(CLI::IsMember({"sum", "mean"}));
}

ExperimentConfig build_config(const Flags& f, const std::string& verb) {
  ExperimentConfig c;
  if (!f.config.empty()) {
    c = read_experiment_config(f.config);
    if (!f.dataset.empty()) c.dataset = f.dataset;
  } else {
    c = default_experiment(f.dataset.empty() ? "synthetic" : f.dataset);
    c.out_dir = fs::path("runs") / c.dataset / verb;
  }
  if (!f.task.empty()) c.task = f.task;
  if (f.epochs_opt->count() > 0) c.train.epochs = f.epochs;
  if (f.seed_opt->count() > 0) apply_seed(c, f.seed);
  c.train.ablate_ep = c.train.ablate_ep || f.no_ep;
  c.train.ablate_fm = c.train.ablate_fm || f.no_fm;
  if (!f.out.empty()) c.out_dir = f.out;
  if (!f.data_dir.empty()) c.data_dir = f.data_dir;
  if (f.repeats_opt->count() > 0) c.classifier.repeats = f.repeats;
  if (f.classifier_epochs_opt->count() > 0) c.classifier.epochs = f.classifier_epochs;
  if (f.subgraph_opt->count() > 0) c.subgraph_nodes = f.subgraph;
  if (f.batch_opt->count() > 0) c.analysis_batch = f.batch_size;
  if (!f.reduction.empty()) c.train.reconstruction_reduction = reduction_from_string(f.reduction);
  set_global_seed(c.train.seed);
  c.validate();
  return c;
}

std::string pm(const Summary& s) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2) << s.mean << " +- " << s.std;
  return out.str();
}

void print_evaluation(const std::string& title, const Evaluation& e) {
  std::cout << title << '\n';
  if (e.node) {
    std::cout << "  ACC " << pm(e.node->acc()) << "  dDP " << pm(e.node->dp()) << "  dEO " << pm(e.node->eo())
              << "  (" << e.node->seed_count() << " classifier seeds)\n";
  } else {
    const auto& m = e.link->mixed;
    const auto& s = e.link->subgroup;
    std::cout << "  ACC " << pm(m.acc()) << "  AUC " << pm(m.auc()) << '\n'
              << "  mixed:    dDP " << pm(m.dp()) << "  dEO " << pm(m.eo()) << '\n'
              << "  subgroup: dDP " << pm(s.dp()) << "  dEO " << pm(s.eo()) << "  (" << m.seed_count()
              << " classifier seeds)\n";
  }
}

std::vector<std::string> all_datasets() { return {"nba", "pokec_z", "pokec_n", "citeseer", "cora", "pubmed"}; }

/// Entries are dataset names, or manifest paths whose files resolve against
/// the manifest's directory.
int cmd_validate(const std::vector<std::string>& names, const std::vector<std::string>& manifests,
                 const std::string& data_dir_flag) {
  const fs::path data_dir = resolve_data_dir(data_dir_flag);
  std::vector<std::pair<std::string, fs::path>> targets;
  for (const auto& name : names) targets.emplace_back(name, fs::path());
  for (const auto& m : manifests) targets.emplace_back(m, fs::path(m));
  int failures = 0;
  for (const auto& [name, manifest] : targets) {
    try {
      const DatasetSpec spec = read_manifest(manifest.empty() ? find_manifest(name, data_dir) : manifest);
      const LoadedDataset d = load_dataset(spec, manifest.empty() ? data_dir : manifest.parent_path());
      std::cout << std::left << std::setw(10) << name << " OK    nodes=" << d.stats.nodes << " edges=" << d.stats.edges
                << " features=" << d.stats.features << " |S|=" << d.stats.sensitive_groups << " ("
                << to_string(spec.edge_convention) << ")\n";
    } catch (const std::exception& e) {
      ++failures;
      std::cout << std::left << std::setw(10) << name << " FAIL  " << e.what() << '\n';
    }
  }
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fair graph augmentation: training, evaluation and analysis"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Flags run_f, grid_f, ablate_f, sweep_f, analyze_f;
  auto* run = app.add_subcommand("run", "train once and evaluate");
  add_experiment_flags(run, run_f);

  auto* grid = app.add_subcommand("grid", "grid search over alpha, gamma, lambda");
  add_experiment_flags(grid, grid_f);
  int jobs = 1;
  grid->add_option("--jobs", jobs, "parallel worker processes")->check(CLI::PositiveNumber);

  auto* abl = app.add_subcommand("ablate", "run without edge perturbation and/or feature masking");
  add_experiment_flags(abl, ablate_f);
  std::string which = "all";
  abl->add_option("--which", which, "ep, fm or all")->check(CLI::IsMember({"ep", "fm", "all"}));

  auto* sweep = app.add_subcommand("sweep-epochs", "evaluate checkpoints across training epochs");
  add_experiment_flags(sweep, sweep_f);
  std::vector<int> epoch_list;
  sweep->add_option("--epoch-list", epoch_list, "epochs to evaluate")->delimiter(',')->required();

  auto* analyze = app.add_subcommand("analyze", "homophily and Spearman analysis of a fair view");
  add_experiment_flags(analyze, analyze_f);
  std::string checkpoint;
  analyze->add_option("--checkpoint", checkpoint, "trained checkpoint (default: train first)");

  auto* plt = app.add_subcommand("plot", "ACC vs fairness trade-off plots from results CSVs");
  std::vector<std::string> result_files;
  std::string plot_out = "plots";
  plt->add_option("--results", result_files, "results.csv files")->required()->check(CLI::ExistingFile);
  plt->add_option("--out", plot_out, "output directory");

  auto* val = app.add_subcommand("validate-data", "check datasets against their manifests");
  std::vector<std::string> val_names, val_manifests;
  std::string val_data_dir;
  val->add_option("--dataset", val_names, "datasets (default: all six)");
  val->add_option("--manifest", val_manifests, "manifest files to validate")->check(CLI::ExistingFile);
  val->add_option("--data-dir", val_data_dir, "dataset root");

  auto* conv = app.add_subcommand("convert", "convert native dataset files to the canonical CSVs");
  std::string conv_name, native_dir, conv_data_dir;
  conv->add_option("--dataset", conv_name, "dataset name")->required();
  conv->add_option("--native-dir", native_dir, "directory with the native files")->required();
  conv->add_option("--data-dir", conv_data_dir, "dataset root to write into");

  auto* syn = app.add_subcommand("synth", "write the planted-bias graph as a canonical dataset");
  PlantedBiasConfig syn_cfg;
  std::string syn_out = "data/synthetic";
  syn->add_option("--out", syn_out, "output directory");
  syn->add_option("--nodes", syn_cfg.nodes, "node count")->check(CLI::Range(2, 1000000));
  syn->add_option("--seed", syn_cfg.seed, "generator seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const ExperimentConfig c = build_config(run_f, "run");
      const ExperimentResult r = run_experiment(c);
      print_evaluation(method_label(c.train) + " on " + c.dataset + " (" + c.task + ")", r.evaluation);
      std::cout << "artifacts: " << c.out_dir.string() << '\n';
    } else if (grid->parsed()) {
      const ExperimentConfig c = build_config(grid_f, "grid");
      const GridResult r = grid_search(c, jobs);
      std::size_t failed = 0;
      for (const auto& cell : r.cells) failed += cell.evaluation ? 0 : 1;
      std::cout << r.cells.size() << " cells, " << failed << " failed; rule " << r.rule << " (slack " << r.slack
                << ")\n";
      if (r.best) {
        const GridCell& b = r.cells[*r.best];
        print_evaluation("best: " + cell_name(b.alpha, b.gamma, b.lambda), *b.evaluation);
      }
      std::cout << "artifacts: " << c.out_dir.string() << '\n';
    } else if (abl->parsed()) {
      const ExperimentConfig c = build_config(ablate_f, "ablate");
      for (const std::string w : {"ep", "fm"}) {
        if (which != "all" && which != w) continue;
        const ExperimentResult r = ablate(c, w);
        print_evaluation("w/o " + std::string(w == "ep" ? "EP" : "FM") + " on " + c.dataset, r.evaluation);
      }
      std::cout << "artifacts: " << c.out_dir.string() << '\n';
    } else if (sweep->parsed()) {
      const ExperimentConfig c = build_config(sweep_f, "sweep");
      for (const SweepPoint& p : epoch_sweep(c, epoch_list)) {
        print_evaluation("epoch " + std::to_string(p.epoch), p.evaluation);
      }
      std::cout << "artifacts: " << c.out_dir.string() << '\n';
    } else if (analyze->parsed()) {
      const ExperimentConfig c = build_config(analyze_f, "analyze");
      const TaskData task = prepare_task(c);
      TrainState state;
      if (!checkpoint.empty()) {
        state = restore_checkpoint(read_archive(checkpoint));
      } else {
        FitOptions opts;
        opts.out_dir = c.out_dir / "train";
        opts.dataset = c.dataset;
        state = fit(task.train_graph, c.train, opts).state;
      }
      Rng rng = make_rng(c.train.seed, "analysis");
      const AugmentedView view = augment(state.augmentor, task.train_graph, rng, c.train.ablate_ep, c.train.ablate_fm,
                                         c.train.model.dense_pair_threshold);
      const Claim3Report r = claim3_report(task.train_graph, view, c.analysis_batch, c.train.seed);
      write_claim3(c.out_dir, r, {{"dataset", c.dataset}, {"checkpoint", checkpoint}});
      std::cout << "homophily mean: original " << r.homophily.original.mean() << ", fair " << r.homophily.fair.mean()
                << '\n'
                << "top-10 |rho| features reduced in the fair view: " << r.spearman.reduced_in_top(10) << '\n'
                << "artifacts: " << c.out_dir.string() << '\n';
    } else if (plt->parsed()) {
      std::vector<ResultRow> rows;
      for (const auto& f : result_files) {
        auto more = read_results(f);
        rows.insert(rows.end(), more.begin(), more.end());
      }
      for (const auto& file : plot_tradeoff(rows, plot_out)) std::cout << file.string() << '\n';
    } else if (val->parsed()) {
      if (val_names.empty() && val_manifests.empty()) val_names = all_datasets();
      return cmd_validate(val_names, val_manifests, val_data_dir);
    } else if (conv->parsed()) {
      const fs::path data_dir = resolve_data_dir(conv_data_dir);
      const DatasetSpec spec = read_manifest(find_manifest(conv_name, data_dir));
      if (!spec.native) throw DataError("manifest for '" + conv_name + "' has no native source");
      const fs::path target = (data_dir / spec.node_file).parent_path();
      const ConversionReport r = convert_native(*spec.native, native_dir, target);
      std::cout << "wrote " << target.string() << ": " << r.nodes << " nodes, " << r.undirected_edges
                << " undirected edges (" << r.edge_lines << " lines, " << r.self_loops << " self-loops, "
                << r.unknown_endpoints << " unknown endpoints), " << r.features << " features\n";
    } else if (syn->parsed()) {
      const Graph g = planted_bias_graph(syn_cfg);
      write_canonical(g, fs::path(syn_out) / "nodes.csv", fs::path(syn_out) / "edges.csv");
      DatasetSpec spec;
      spec.name = "synthetic";
      spec.node_file = "nodes.csv";
      spec.edge_file = "edges.csv";
      spec.label_column = "label";
      spec.expected_stats = graph_stats(g, EdgeCountConvention::undirected);
      spec.node_split.seed = syn_cfg.seed;
      write_json(fs::path(syn_out) / "manifest.json", to_json(spec));
      std::cout << "wrote " << syn_out << ": " << g.num_nodes() << " nodes, " << g.num_edges() << " edges\n";
    }
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
