#pragma once

// Experiment orchestration: per-dataset defaults, single runs, the loss
// weight grid, ablations, epoch sweeps and trade-off plots.

#include "graphair/analysis.hpp"
#include "graphair/evaluation.hpp"
#include "graphair/io.hpp"
#include "graphair/plot.hpp"
#include "graphair/synthetic.hpp"
#include "graphair/trainer.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <set>

#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

namespace graphair {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Defaults

struct DatasetDefaults {
  LossWeights weights;
  double classifier_lr = 1e-3;
  int epochs = 500;
  std::string task = "node";
};

/// Appendix hyperparameters per dataset; "synthetic" is the planted-bias
/// fixture.
inline std::optional<DatasetDefaults> dataset_defaults(const std::string& name) {
  static const std::map<std::string, DatasetDefaults> table = {
      {"nba", {{1.0, 0.1, 0.1, 1.0}, 1e-3, 500, "node"}},
      {"pokec_n", {{0.1, 1.0, 0.1, 10.0}, 1e-3, 10000, "node"}},
      {"pokec_z", {{10.0, 10.0, 0.1, 10.0}, 1e-3, 10000, "node"}},
      {"citeseer", {{0.1, 0.1, 0.1, 1.0}, 5e-3, 200, "link"}},
      {"cora", {{10.0, 10.0, 0.1, 10.0}, 5e-3, 200, "link"}},
      {"pubmed", {{10.0, 10.0, 0.1, 0.1}, 5e-3, 200, "link"}},
      {"synthetic", {{1.0, 0.1, 0.1, 1.0}, 1e-3, 500, "node"}},
  };
  const auto it = table.find(name);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

struct GridSpec {
  std::vector<double> alpha{0.1, 1.0, 10.0};
  std::vector<double> gamma{0.1, 1.0, 10.0};
  std::vector<double> lambda{0.1, 1.0, 10.0};

  std::size_t size() const { return alpha.size() * gamma.size() * lambda.size(); }
};

struct ExperimentConfig {
  std::string dataset = "synthetic";
  std::string task = "node";
  TrainConfig train;
  ClassifierConfig classifier;
  GridSpec grid;
  fs::path out_dir = "runs";
  /// Empty: GRAPHAIR_DATA_DIR, else ./data.
  fs::path data_dir;
  EdgeSplitRatios edge_ratios;
  /// Train and evaluate on a uniform node sample of this size.
  std::optional<int> subgraph_nodes;
  /// Mini-batch size for the homophily / Spearman analysis.
  std::optional<int> analysis_batch;
  double selection_slack = 1.0;
  /// Link tasks: which dyadic grouping the grid selection uses.
  std::string selection_groups = "mixed";

  void validate() const {
    train.validate();
    classifier.validate();
    if (task != "node" && task != "link") throw Error("task must be 'node' or 'link'");
    if (selection_groups != "mixed" && selection_groups != "subgroup") {
      throw Error("selection_groups must be 'mixed' or 'subgroup'");
    }
    for (const auto* axis : {&grid.alpha, &grid.gamma, &grid.lambda}) {
      if (axis->empty()) throw Error("grid axes must be non-empty");
      for (double v : *axis) {
        if (!(v > 0)) throw Error("grid values must be positive");
      }
    }
    if (!(selection_slack >= 0)) throw Error("selection slack must be non-negative");
    const double r = edge_ratios.train + edge_ratios.val + edge_ratios.test;
    if (std::abs(r - 1.0) > 1e-9) throw Error("edge split ratios must sum to 1");
    if (subgraph_nodes && *subgraph_nodes <= 0) throw Error("subgraph size must be positive");
    if (analysis_batch && *analysis_batch <= 0) throw Error("analysis batch size must be positive");
  }
};

/// Config for `dataset` with its table defaults applied.
inline ExperimentConfig default_experiment(const std::string& dataset) {
  ExperimentConfig c;
  c.dataset = dataset;
  if (const auto d = dataset_defaults(dataset)) {
    c.task = d->task;
    c.train.loss_weights = d->weights;
    c.train.epochs = d->epochs;
    c.classifier.lr = d->classifier_lr;
  }
  return c;
}

/// Re-derives every stochastic seed from one value.
inline void apply_seed(ExperimentConfig& c, std::uint64_t seed) {
  c.train.seed = seed;
  c.classifier.seed = seed;
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
  return {{"dataset", c.dataset},
          {"task", c.task},
          {"train", to_json(c.train)},
          {"classifier", to_json(c.classifier)},
          {"grid", {{"alpha", c.grid.alpha}, {"gamma", c.grid.gamma}, {"lambda", c.grid.lambda}}},
          {"out_dir", c.out_dir.string()},
          {"data_dir", c.data_dir.string()},
          {"edge_ratios", {{"train", c.edge_ratios.train}, {"val", c.edge_ratios.val}, {"test", c.edge_ratios.test}}},
          {"subgraph_nodes", c.subgraph_nodes ? nlohmann::json(*c.subgraph_nodes) : nlohmann::json(nullptr)},
          {"analysis_batch", c.analysis_batch ? nlohmann::json(*c.analysis_batch) : nlohmann::json(nullptr)},
          {"selection_slack", c.selection_slack},
          {"selection_groups", c.selection_groups}};
}

/// Reads a config file; absent keys keep the dataset defaults.
inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  ExperimentConfig c = default_experiment(j.value("dataset", std::string("synthetic")));
  c.task = j.value("task", c.task);
  if (j.contains("train")) c.train = train_config_from_json(j.at("train"), c.train);
  if (j.contains("classifier")) c.classifier = classifier_config_from_json(j.at("classifier"), c.classifier);
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    c.grid.alpha = g.value("alpha", c.grid.alpha);
    c.grid.gamma = g.value("gamma", c.grid.gamma);
    c.grid.lambda = g.value("lambda", c.grid.lambda);
  }
  c.out_dir = j.value("out_dir", c.out_dir.string());
  c.data_dir = j.value("data_dir", c.data_dir.string());
  if (j.contains("edge_ratios")) {
    const auto& r = j.at("edge_ratios");
    c.edge_ratios.train = r.value("train", c.edge_ratios.train);
    c.edge_ratios.val = r.value("val", c.edge_ratios.val);
    c.edge_ratios.test = r.value("test", c.edge_ratios.test);
  }
  if (j.contains("subgraph_nodes") && !j.at("subgraph_nodes").is_null()) c.subgraph_nodes = j.at("subgraph_nodes").get<int>();
  if (j.contains("analysis_batch") && !j.at("analysis_batch").is_null()) c.analysis_batch = j.at("analysis_batch").get<int>();
  c.selection_slack = j.value("selection_slack", c.selection_slack);
  c.selection_groups = j.value("selection_groups", c.selection_groups);
  return c;
}

inline ExperimentConfig read_experiment_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("invalid config " + path.string() + ": " + e.what());
  }
  return experiment_config_from_json(j);
}

// ---------------------------------------------------------------------------
// Data

inline fs::path resolve_data_dir(const fs::path& configured) {
  if (!configured.empty()) return configured;
  if (const char* env = std::getenv("GRAPHAIR_DATA_DIR"); env != nullptr && *env != '\0') return env;
  return "data";
}

/// <data>/manifests/<name>.json, falling back to the manifests shipped in
/// the source tree.
inline fs::path find_manifest(const std::string& name, const fs::path& data_dir) {
  std::vector<fs::path> candidates{data_dir / "manifests" / (name + ".json")};
#ifdef GRAPHAIR_SOURCE_DIR
  candidates.push_back(fs::path(GRAPHAIR_SOURCE_DIR) / "data" / "manifests" / (name + ".json"));
#endif
  for (const auto& p : candidates) {
    if (fs::exists(p)) return p;
  }
  throw DataError("no manifest for dataset '" + name + "' (looked in " + candidates.front().parent_path().string() + ")");
}

inline Graph load_named_graph(const std::string& name, const fs::path& data_dir) {
  if (name == "synthetic") return planted_bias_graph({});
  const DatasetSpec spec = read_manifest(find_manifest(name, data_dir));
  return load_dataset(spec, data_dir).graph;
}

struct TaskData {
  Graph full;
  /// Graph the model is trained on: `full`, or its training edges for links.
  Graph train_graph;
  std::optional<EdgeSplit> split;
};

inline TaskData prepare_task(const ExperimentConfig& config) {
  config.validate();
  TaskData t;
  t.full = load_named_graph(config.dataset, resolve_data_dir(config.data_dir));
  if (config.subgraph_nodes) {
    t.full = minibatch_subgraph(t.full, std::min(*config.subgraph_nodes, t.full.num_nodes()), config.train.seed);
  }
  if (config.task == "link") {
    t.split = split_edges(t.full, config.edge_ratios, config.train.seed);
    t.train_graph = training_graph(t.full, *t.split);
  } else {
    t.train_graph = t.full;
  }
  return t;
}

// ---------------------------------------------------------------------------
// Single experiment

struct Evaluation {
  std::optional<MetricsReport> node;
  std::optional<LinkReport> link;

  ResultRow row() const { return node ? result_row(*node) : result_row(*link); }

  /// Percent values used by the grid selection rule.
  double acc() const { return node ? node->acc().mean : link->mixed.acc().mean; }
  double dp(const std::string& groups) const {
    if (node) return node->dp().mean;
    return (groups == "subgroup" ? link->subgroup : link->mixed).dp().mean;
  }
  double eo(const std::string& groups) const {
    if (node) return node->eo().mean;
    return (groups == "subgroup" ? link->subgroup : link->mixed).eo().mean;
  }
};

inline nlohmann::json to_json(const Evaluation& e) {
  if (e.node) return {{"task", "node"}, {"node", to_json(*e.node)}};
  return {{"task", "link"}, {"mixed", to_json(e.link->mixed)}, {"subgroup", to_json(e.link->subgroup)}};
}

inline Evaluation evaluation_from_json(const nlohmann::json& j) {
  Evaluation e;
  if (j.at("task") == "node") {
    e.node = metrics_report_from_json(j.at("node"));
  } else {
    e.link = LinkReport{metrics_report_from_json(j.at("mixed")), metrics_report_from_json(j.at("subgroup"))};
  }
  return e;
}

/// Evaluates frozen f(A, X) embeddings of the training graph.
inline Evaluation evaluate_encoder(const ExperimentConfig& config, const TaskData& task, const EncoderParams& encoder,
                                   const std::string& method = "Graphair") {
  const Matrix h = represent(encoder, task.train_graph);
  Evaluation e;
  if (config.task == "node") {
    e.node = evaluate_node(h, task.full, config.classifier, config.dataset);
    e.node->method = method;
  } else {
    e.link = evaluate_link(h, *task.split, task.full.sensitive(), config.classifier, config.dataset);
    e.link->mixed.method = e.link->subgroup.method = method;
  }
  return e;
}

inline std::string method_label(const TrainConfig& c) {
  if (c.ablate_ep && c.ablate_fm) return "Graphair w/o EP+FM";
  if (c.ablate_ep) return "Graphair w/o EP";
  if (c.ablate_fm) return "Graphair w/o FM";
  return "Graphair";
}

struct ExperimentResult {
  Evaluation evaluation;
  std::vector<LossBreakdown> history;
  std::vector<int> checkpoints;
  double seconds = 0.0;
};

/// fit -> evaluate -> persist. Writes config.json, the trial artifacts,
/// report.json and one row of results.csv under config.out_dir.
inline ExperimentResult run_experiment(const ExperimentConfig& config, const TaskData& task,
                                       const std::vector<int>& extra_checkpoints = {}) {
  config.validate();
  fs::create_directories(config.out_dir);
  write_json(config.out_dir / "config.json", to_json(config));
  FitOptions opts;
  opts.out_dir = config.out_dir;
  opts.dataset = config.dataset;
  opts.extra_checkpoints = extra_checkpoints;
  FitResult fitted = fit(task.train_graph, config.train, opts);
  ExperimentResult r;
  r.evaluation = evaluate_encoder(config, task, fitted.state.encoder, method_label(config.train));
  r.history = std::move(fitted.history);
  r.checkpoints = std::move(fitted.checkpoints);
  r.seconds = fitted.seconds;
  nlohmann::json report = to_json(r.evaluation);
  report["seed"] = config.train.seed;
  report["dataset"] = config.dataset;
  report["training_seconds"] = r.seconds;
  report["version"] = kVersion;
  write_json(config.out_dir / "report.json", report);
  append_result(config.out_dir / "results.csv", r.evaluation.row());
  return r;
}

inline ExperimentResult run_experiment(const ExperimentConfig& config) {
  return run_experiment(config, prepare_task(config));
}

/// run_experiment with one component removed; artifacts go to
/// <out>/no-<which>.
inline ExperimentResult ablate(ExperimentConfig config, const std::string& which) {
  if (which == "ep") {
    config.train.ablate_ep = true;
  } else if (which == "fm") {
    config.train.ablate_fm = true;
  } else {
    throw Error("ablation must be 'ep' or 'fm'");
  }
  config.out_dir /= "no-" + which;
  return run_experiment(config);
}

// ---------------------------------------------------------------------------
// Grid search

struct GridCell {
  double alpha = 0.0, gamma = 0.0, lambda = 0.0;
  std::string status;  // "ok" or "failed"
  std::string error;
  std::optional<Evaluation> evaluation;
};

inline constexpr const char* kSelectionRule = "max-acc-within-slack";

struct GridResult {
  std::vector<GridCell> cells;
  std::optional<std::size_t> best;
  std::string rule = kSelectionRule;
  double slack = 1.0;
  std::string groups = "mixed";
  /// True when no cell met both fairness bounds and the closest cells were used.
  bool relaxed = false;
};

inline std::string grid_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

inline std::string cell_name(double alpha, double gamma, double lambda) {
  return "alpha=" + grid_value(alpha) + "_gamma=" + grid_value(gamma) + "_lambda=" + grid_value(lambda);
}

/// Cells in canonical (alpha, gamma, lambda) order with duplicates removed.
inline std::vector<std::array<double, 3>> grid_cells(const GridSpec& g) {
  std::set<std::array<double, 3>> cells;
  for (double a : g.alpha) {
    for (double c : g.gamma) {
      for (double l : g.lambda) cells.insert({a, c, l});
    }
  }
  return {cells.begin(), cells.end()};
}

inline ExperimentConfig cell_config(const ExperimentConfig& base, const std::array<double, 3>& cell) {
  ExperimentConfig c = base;
  c.train.loss_weights.alpha = cell[0];
  c.train.loss_weights.gamma = cell[1];
  c.train.loss_weights.lambda = cell[2];
  c.out_dir = base.out_dir / "cells" / cell_name(cell[0], cell[1], cell[2]);
  return c;
}

namespace detail {

inline bool cell_done(const fs::path& dir) {
  return fs::exists(dir / "report.json") || fs::exists(dir / "error.json");
}

/// Runs one cell into a scratch directory and renames it into place.
inline void run_cell(const ExperimentConfig& base, const std::array<double, 3>& cell, const TaskData& task) {
  const ExperimentConfig final_cfg = cell_config(base, cell);
  ExperimentConfig cfg = final_cfg;
  cfg.out_dir = final_cfg.out_dir.string() + ".tmp-" + std::to_string(::getpid());
  fs::remove_all(cfg.out_dir);
  try {
    run_experiment(cfg, task);
  } catch (const std::exception& e) {
    fs::create_directories(cfg.out_dir);
    write_json(cfg.out_dir / "error.json", {{"error", e.what()}, {"config", to_json(final_cfg)}});
  }
  fs::remove_all(final_cfg.out_dir);
  fs::rename(cfg.out_dir, final_cfg.out_dir);
}

}  // namespace detail

/// Picks the highest-ACC cell among those whose dDP and dEO are each within
/// `slack` points of the grid minimum. If none qualifies, the cells with the
/// smallest worst excess over the minima compete instead.
inline void select_best(GridResult& r) {
  std::vector<std::size_t> ok;
  for (std::size_t k = 0; k < r.cells.size(); ++k) {
    if (r.cells[k].evaluation) ok.push_back(k);
  }
  r.best.reset();
  r.relaxed = false;
  if (ok.empty()) return;
  double min_dp = std::numeric_limits<double>::infinity(), min_eo = min_dp;
  for (std::size_t k : ok) {
    min_dp = std::min(min_dp, r.cells[k].evaluation->dp(r.groups));
    min_eo = std::min(min_eo, r.cells[k].evaluation->eo(r.groups));
  }
  auto excess = [&](std::size_t k) {
    return std::max(r.cells[k].evaluation->dp(r.groups) - min_dp, r.cells[k].evaluation->eo(r.groups) - min_eo);
  };
  std::vector<std::size_t> eligible;
  for (std::size_t k : ok) {
    if (excess(k) <= r.slack + 1e-12) eligible.push_back(k);
  }
  if (eligible.empty()) {
    r.relaxed = true;
    double best_excess = std::numeric_limits<double>::infinity();
    for (std::size_t k : ok) best_excess = std::min(best_excess, excess(k));
    for (std::size_t k : ok) {
      if (excess(k) <= best_excess + 1e-12) eligible.push_back(k);
    }
  }
  std::size_t best = eligible.front();
  for (std::size_t k : eligible) {
    if (r.cells[k].evaluation->acc() > r.cells[best].evaluation->acc()) best = k;
  }
  r.best = best;
}

inline nlohmann::json to_json(const GridResult& r) {
  nlohmann::json cells = nlohmann::json::array();
  for (const GridCell& c : r.cells) {
    nlohmann::json j = {{"alpha", c.alpha}, {"gamma", c.gamma}, {"lambda", c.lambda}, {"status", c.status}};
    if (!c.error.empty()) j["error"] = c.error;
    if (c.evaluation) {
      j["acc"] = c.evaluation->acc();
      j["dp"] = c.evaluation->dp(r.groups);
      j["eo"] = c.evaluation->eo(r.groups);
      j["evaluation"] = to_json(*c.evaluation);
    }
    cells.push_back(std::move(j));
  }
  return {{"rule", r.rule},
          {"slack", r.slack},
          {"groups", r.groups},
          {"relaxed", r.relaxed},
          {"best", r.best ? nlohmann::json(*r.best) : nlohmann::json(nullptr)},
          {"cells", cells}};
}

/// Reads every cell directory under <out>/cells in canonical order.
inline GridResult collect_grid(const ExperimentConfig& config) {
  GridResult r;
  r.slack = config.selection_slack;
  r.groups = config.selection_groups;
  for (const auto& cell : grid_cells(config.grid)) {
    const fs::path dir = cell_config(config, cell).out_dir;
    GridCell c{cell[0], cell[1], cell[2], "missing", {}, std::nullopt};
    if (fs::exists(dir / "report.json")) {
      std::ifstream in(dir / "report.json");
      c.evaluation = evaluation_from_json(nlohmann::json::parse(in));
      c.status = "ok";
    } else if (fs::exists(dir / "error.json")) {
      std::ifstream in(dir / "error.json");
      c.error = nlohmann::json::parse(in).value("error", std::string("unknown error"));
      c.status = "failed";
    }
    r.cells.push_back(std::move(c));
  }
  select_best(r);
  return r;
}

/// Runs every missing cell, at most `jobs` worker processes at a time, then
/// merges the per-cell results. Writes grid.json and results.csv (one row
/// per successful cell).
inline GridResult grid_search(const ExperimentConfig& config, int jobs = 1) {
  config.validate();
  if (jobs < 1) throw Error("jobs must be at least 1");
  const TaskData task = prepare_task(config);
  fs::create_directories(config.out_dir / "cells");
  write_json(config.out_dir / "config.json", to_json(config));
  std::vector<std::array<double, 3>> todo;
  for (const auto& cell : grid_cells(config.grid)) {
    if (!detail::cell_done(cell_config(config, cell).out_dir)) todo.push_back(cell);
  }
  if (jobs == 1) {
    for (const auto& cell : todo) detail::run_cell(config, cell, task);
  } else {
    std::size_t next = 0, running = 0;
    std::fflush(nullptr);
    while (next < todo.size() || running > 0) {
      while (running < static_cast<std::size_t>(jobs) && next < todo.size()) {
        const pid_t pid = ::fork();
        if (pid < 0) throw Error("fork failed");
        if (pid == 0) {
          int code = 0;
          try {
            detail::run_cell(config, todo[next], task);
          } catch (...) {
            code = 1;
          }
          std::fflush(nullptr);
          ::_exit(code);
        }
        ++next;
        ++running;
      }
      int status = 0;
      if (::wait(&status) > 0) --running;
    }
  }
  GridResult r = collect_grid(config);
  write_json(config.out_dir / "grid.json", to_json(r));
  const fs::path csv = config.out_dir / "results.csv";
  fs::remove(csv);
  for (const GridCell& c : r.cells) {
    if (!c.evaluation) continue;
    ResultRow row = c.evaluation->row();
    row.method = "Graphair " + cell_name(c.alpha, c.gamma, c.lambda);
    append_result(csv, row);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Epoch sweep

struct SweepPoint {
  int epoch = 0;
  Evaluation evaluation;
};

inline void write_sweep(const fs::path& dir, const std::vector<SweepPoint>& points, const std::string& groups) {
  std::ofstream csv(dir / "sweep.csv", std::ios::trunc);
  csv << "epoch,acc,acc_std,dp,dp_std,eo,eo_std\n";
  plot::Series acc{"ACC", {}, {}}, dp{"dDP", {}, {}}, eo{"dEO", {}, {}};
  for (const SweepPoint& p : points) {
    const MetricsReport& m = p.evaluation.node ? *p.evaluation.node
                                               : (groups == "subgroup" ? p.evaluation.link->subgroup
                                                                       : p.evaluation.link->mixed);
    csv << p.epoch << ',' << m.acc().mean << ',' << m.acc().std << ',' << m.dp().mean << ',' << m.dp().std << ','
        << m.eo().mean << ',' << m.eo().std << '\n';
    for (auto* s : {&acc, &dp, &eo}) s->x.push_back(p.epoch);
    acc.y.push_back(m.acc().mean);
    dp.y.push_back(m.dp().mean);
    eo.y.push_back(m.eo().mean);
  }
  plot::lines(dir / "sweep_acc.svg", "Accuracy by training epochs", "epochs", "ACC (%)", {acc});
  plot::lines(dir / "sweep_fairness.svg", "Fairness by training epochs", "epochs", "gap (%)", {dp, eo});
}

/// Trains once to the largest requested epoch (checkpointing every
/// requested epoch) unless <out>/checkpoints already holds them for the same
/// config, then evaluates each checkpoint. Writes sweep.json, sweep.csv and
/// the sweep plots.
inline std::vector<SweepPoint> epoch_sweep(ExperimentConfig config, std::vector<int> epochs) {
  if (epochs.empty()) throw Error("epoch list must be non-empty");
  std::sort(epochs.begin(), epochs.end());
  epochs.erase(std::unique(epochs.begin(), epochs.end()), epochs.end());
  if (epochs.front() <= 0) throw Error("sweep epochs must be positive");
  config.train.epochs = epochs.back();
  config.validate();
  const TaskData task = prepare_task(config);

  bool reuse = fs::exists(config.out_dir / "config.json");
  if (reuse) {
    std::ifstream in(config.out_dir / "config.json");
    const ExperimentConfig stored = experiment_config_from_json(nlohmann::json::parse(in));
    reuse = to_json(stored.train) == to_json(config.train) && stored.dataset == config.dataset &&
            stored.task == config.task;
  }
  for (int e : epochs) reuse = reuse && fs::exists(checkpoint_path(config.out_dir, e));
  if (!reuse) run_experiment(config, task, epochs);

  std::vector<SweepPoint> points;
  nlohmann::json out = nlohmann::json::array();
  for (int e : epochs) {
    const TrainState state = restore_checkpoint(read_archive(checkpoint_path(config.out_dir, e)));
    SweepPoint p{e, evaluate_encoder(config, task, state.encoder, method_label(config.train))};
    out.push_back({{"epoch", e}, {"evaluation", to_json(p.evaluation)}});
    points.push_back(std::move(p));
  }
  write_json(config.out_dir / "sweep.json", {{"seed", config.train.seed}, {"points", out}});
  write_sweep(config.out_dir, points, config.selection_groups);
  return points;
}

// ---------------------------------------------------------------------------
// Trade-off plots

/// Reads rows written by append_result.
inline std::vector<ResultRow> read_results(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) return {};
  const auto header = split_csv_line(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t k = 0; k < header.size(); ++k) col[header[k]] = k;
  for (const char* required : {"method", "dataset", "acc"}) {
    if (!col.count(required)) throw ParseError(path.string(), 1, std::string("missing column ") + required);
  }
  std::vector<ResultRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    auto cell = [&](const std::string& name) -> std::string {
      const auto it = col.find(name);
      return it == col.end() || it->second >= f.size() ? std::string() : f[it->second];
    };
    auto summary = [&](const std::string& name) -> std::optional<Summary> {
      const auto v = parse_double(cell(name));
      if (!v) return std::nullopt;
      return Summary{*v, parse_double(cell(name + "_std")).value_or(0.0)};
    };
    ResultRow r;
    r.method = cell("method");
    r.dataset = cell("dataset");
    r.task = cell("task");
    const auto acc = summary("acc");
    if (!acc) throw ParseError(path.string(), line_no, "non-numeric acc");
    r.acc = *acc;
    r.auc = summary("auc");
    r.dp = summary("dp");
    r.eo = summary("eo");
    r.dp_m = summary("dp_m");
    r.eo_m = summary("eo_m");
    r.dp_s = summary("dp_s");
    r.eo_s = summary("eo_s");
    r.seed_count = static_cast<int>(parse_integer(cell("seed_count")).value_or(0));
    if (r.task.empty()) r.task = r.dp_m ? "link" : "node";
    rows.push_back(std::move(r));
  }
  return rows;
}

/// ACC against dDP (node rows) and against dDP_m / dDP_s (link rows), one
/// SVG per panel plus tradeoff.csv with every plotted point.
inline std::vector<fs::path> plot_tradeoff(const std::vector<ResultRow>& rows, const fs::path& out_dir) {
  if (rows.empty()) throw Error("plot_tradeoff needs at least one result row");
  fs::create_directories(out_dir);
  std::ofstream csv(out_dir / "tradeoff.csv", std::ios::trunc);
  csv << "panel,label,dataset,x,acc\n";
  std::map<std::string, std::vector<plot::Point>> panels;
  for (const ResultRow& r : rows) {
    const std::string label = r.method;
    auto add = [&](const std::string& panel, const std::optional<Summary>& x) {
      if (!x) return;
      const std::string key = r.dataset + ":" + panel;
      panels[key].push_back({label, x->mean, r.acc.mean});
      csv << panel << ',' << label << ',' << r.dataset << ',' << x->mean << ',' << r.acc.mean << '\n';
    };
    add("dp", r.dp);
    add("dp_m", r.dp_m);
    add("dp_s", r.dp_s);
  }
  std::vector<fs::path> files;
  for (const auto& [key, points] : panels) {
    const auto colon = key.find(':');
    const std::string dataset = key.substr(0, colon), panel = key.substr(colon + 1);
    const std::string axis = panel == "dp" ? "dDP (%)" : panel == "dp_m" ? "dDP mixed (%)" : "dDP subgroup (%)";
    const fs::path file = out_dir / ("tradeoff_" + (dataset.empty() ? std::string("all") : dataset) + "_" + panel + ".svg");
    plot::scatter(file, dataset + ": ACC vs " + axis, axis, "ACC (%)", points);
    files.push_back(file);
  }
  return files;
}

// ---------------------------------------------------------------------------
// Claim-3 analysis

/// Homophily histograms and Spearman bars for a report, plus claim3.json.
inline void write_claim3(const fs::path& dir, const Claim3Report& r, const nlohmann::json& extra = {}) {
  fs::create_directories(dir);
  nlohmann::json j = to_json(r);
  for (const auto& [k, v] : extra.items()) j[k] = v;
  write_json(dir / "claim3.json", j);
  std::vector<std::string> bins;
  for (int b = 0; b < 20; ++b) bins.push_back(grid_value(b / 20.0));
  auto as_double = [](const std::vector<int>& v) { return std::vector<double>(v.begin(), v.end()); };
  plot::bars(dir / "homophily.svg", "Node sensitive homophily", "homophily bin (lower edge)", "nodes", bins,
             {{"original", {}, as_double(r.homophily.original_hist)}, {"fair", {}, as_double(r.homophily.fair_hist)}});
  std::vector<std::string> names;
  plot::Series original{"original", {}, {}}, fair{"fair", {}, {}};
  for (std::size_t k = 0; k < r.spearman.ranking.size() && k < 10; ++k) {
    const auto c = static_cast<std::size_t>(r.spearman.ranking[k]);
    names.push_back(std::to_string(c));
    original.y.push_back(std::abs(r.spearman.original.rho[c]));
    fair.y.push_back(std::abs(r.spearman.fair.rho[c]));
  }
  plot::bars(dir / "spearman.svg", "Spearman |rho| with the sensitive attribute (top 10)", "feature", "|rho|", names,
             {original, fair});
}

}  // namespace graphair
