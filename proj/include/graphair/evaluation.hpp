#pragma once

// Downstream evaluation on frozen embeddings: a one-hidden-layer classifier
// repeated over several seeds, node classification with D = S and link
// prediction with mixed and subgroup dyadic groups.

#include "graphair/metrics.hpp"
#include "graphair/nn.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

namespace graphair {

struct ClassifierConfig {
  Index hidden = 128;
  double lr = 1e-3;
  double weight_decay = 1e-5;
  int epochs = 1000;
  int repeats = 5;
  double threshold = 0.5;
  std::uint64_t seed = 0;

  void validate() const {
    if (hidden <= 0) throw Error("classifier hidden width must be positive");
    if (!(lr > 0)) throw Error("classifier learning rate must be positive");
    if (weight_decay < 0) throw Error("classifier weight decay must be non-negative");
    if (epochs <= 0) throw Error("classifier epochs must be positive");
    if (repeats <= 0) throw Error("repeats must be positive");
    if (!(threshold > 0 && threshold < 1)) throw Error("threshold must lie in (0, 1)");
  }
};

inline nlohmann::json to_json(const ClassifierConfig& c) {
  return {{"hidden", c.hidden}, {"lr", c.lr},           {"weight_decay", c.weight_decay}, {"epochs", c.epochs},
          {"repeats", c.repeats}, {"threshold", c.threshold}, {"seed", c.seed}};
}

inline ClassifierConfig classifier_config_from_json(const nlohmann::json& j, ClassifierConfig base = {}) {
  base.hidden = j.value("hidden", base.hidden);
  base.lr = j.value("lr", base.lr);
  base.weight_decay = j.value("weight_decay", base.weight_decay);
  base.epochs = j.value("epochs", base.epochs);
  base.repeats = j.value("repeats", base.repeats);
  base.threshold = j.value("threshold", base.threshold);
  base.seed = j.value("seed", base.seed);
  return base;
}

// ---------------------------------------------------------------------------
// Binary classifier

namespace ad {

/// Mean over rows of softplus(l) - y l for an n x 1 logit column.
inline Var bce_with_logits(const Var& logits, const Vector& targets) {
  const Matrix& l = logits.value();
  require_dims(l.cols() == 1 && l.rows() == targets.size() && l.rows() > 0, "bce_with_logits: shape mismatch");
  const auto n = static_cast<double>(l.rows());
  double total = 0.0;
  for (Index i = 0; i < l.rows(); ++i) {
    const double x = l(i, 0);
    total += std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))) - targets(i) * x;
  }
  Matrix out(1, 1);
  out(0, 0) = total / n;
  return logits.tape()->record(std::move(out), {logits}, [logits, targets, n](Tape& t, const Matrix& g) {
    Matrix d(logits.value().rows(), 1);
    for (Index i = 0; i < d.rows(); ++i) d(i, 0) = (stable_sigmoid(logits.value()(i, 0)) - targets(i)) / n;
    t.accumulate(logits, g(0, 0) * d);
  });
}

}  // namespace ad

class BinaryClassifier {
 public:
  BinaryClassifier() = default;
  BinaryClassifier(Index in_features, Index hidden, Rng& rng) { add_mlp2(params_, "c", in_features, hidden, 1, rng); }

  ParameterSet& params() noexcept { return params_; }
  const ParameterSet& params() const noexcept { return params_; }

  Vector predict_proba(const Matrix& x) const {
    ad::Tape tape;
    const BoundParameters p(tape, params_, false);
    const Matrix logits = mlp2(p, "c", tape.constant(x)).value();
    Vector out(logits.rows());
    for (Index i = 0; i < out.size(); ++i) out(i) = ad::stable_sigmoid(logits(i, 0));
    return out;
  }

 private:
  ParameterSet params_;
};

inline std::vector<int> threshold_predictions(const Vector& probs, double threshold) {
  std::vector<int> out(static_cast<std::size_t>(probs.size()));
  for (Index i = 0; i < probs.size(); ++i) out[static_cast<std::size_t>(i)] = probs(i) >= threshold ? 1 : 0;
  return out;
}

inline double accuracy(std::span<const int> y_hat, std::span<const int> y) {
  require_dims(y_hat.size() == y.size() && !y.empty(), "accuracy: length mismatch or empty input");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < y.size(); ++i) hit += y_hat[i] == y[i] ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(y.size());
}

struct TrainedClassifier {
  BinaryClassifier model;
  int best_epoch = 0;
  double best_val_acc = -1.0;
};

/// Full-batch Adam on BCE; keeps the parameters of the epoch with the best
/// validation accuracy (first one on ties).
inline TrainedClassifier train_classifier(const Matrix& x_train, std::span<const int> y_train, const Matrix& x_val,
                                          std::span<const int> y_val, const ClassifierConfig& config, Rng& rng) {
  config.validate();
  require_dims(static_cast<std::size_t>(x_train.rows()) == y_train.size(), "train_classifier: train rows/labels");
  require_dims(static_cast<std::size_t>(x_val.rows()) == y_val.size(), "train_classifier: val rows/labels");
  require_dims(x_train.cols() == x_val.cols(), "train_classifier: train/val widths differ");
  bool pos = false, neg = false;
  for (int y : y_train) {
    if (y != 0 && y != 1) throw Error("classifier labels must be binary (0/1)");
    pos = pos || y == 1;
    neg = neg || y == 0;
  }
  if (!pos || !neg) throw Error("degenerate training labels: only one class present");
  if (y_val.empty()) throw Error("classifier needs a non-empty validation set");

  Vector targets(x_train.rows());
  for (Index i = 0; i < targets.size(); ++i) targets(i) = y_train[static_cast<std::size_t>(i)];
  TrainedClassifier out;
  BinaryClassifier model(x_train.cols(), config.hidden, rng);
  Adam opt(AdamConfig{config.lr, config.weight_decay});
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    ad::Tape tape;
    const BoundParameters p(tape, model.params(), true);
    const ad::Var loss = ad::bce_with_logits(mlp2(p, "c", tape.constant(x_train)), targets);
    if (!std::isfinite(loss.item())) throw Error("classifier loss became non-finite");
    tape.backward(loss);
    opt.step(model.params(), p.grads(tape));
    const double val = accuracy(threshold_predictions(model.predict_proba(x_val), config.threshold), y_val);
    if (val > out.best_val_acc) {
      out.best_val_acc = val;
      out.best_epoch = epoch;
      out.model = model;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

struct Summary {
  double mean = 0.0;
  double std = 0.0;
};

/// Mean and population standard deviation.
inline Summary summarize(std::span<const double> values) {
  Summary s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  for (double v : values) s.std += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(s.std / static_cast<double>(values.size()));
  return s;
}

/// One classifier seed; all values are fractions in [0, 1].
struct RunMetrics {
  double acc = 0.0;
  std::optional<double> auc;
  double dp = 0.0;
  double eo = 0.0;
  double tpr_gap = 0.0;
  double fpr_gap = 0.0;
  int best_epoch = 0;
};

struct MetricsReport {
  std::string mode;  // "node", "link-mixed" or "link-subgroup"
  std::string method = "Graphair";
  std::string dataset;
  std::vector<RunMetrics> runs;
  Warnings warnings;
  nlohmann::json provenance = nlohmann::json::object();

  int seed_count() const { return static_cast<int>(runs.size()); }
  bool has_auc() const { return !runs.empty() && runs.front().auc.has_value(); }

  /// Percent-scaled summary of one field.
  template <typename Field>
  Summary percent(Field field) const {
    std::vector<double> v;
    for (const RunMetrics& r : runs) v.push_back(100.0 * field(r));
    return summarize(v);
  }

  Summary acc() const { return percent([](const RunMetrics& r) { return r.acc; }); }
  Summary auc() const { return percent([](const RunMetrics& r) { return r.auc.value_or(0.0); }); }
  Summary dp() const { return percent([](const RunMetrics& r) { return r.dp; }); }
  Summary eo() const { return percent([](const RunMetrics& r) { return r.eo; }); }
  Summary tpr_gap() const { return percent([](const RunMetrics& r) { return r.tpr_gap; }); }
  Summary fpr_gap() const { return percent([](const RunMetrics& r) { return r.fpr_gap; }); }
};

inline nlohmann::json to_json(const Summary& s) { return {{"mean", s.mean}, {"std", s.std}}; }

inline nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json runs = nlohmann::json::array();
  for (const RunMetrics& m : r.runs) {
    runs.push_back({{"acc", m.acc},
                    {"auc", m.auc ? nlohmann::json(*m.auc) : nlohmann::json(nullptr)},
                    {"dp", m.dp},
                    {"eo", m.eo},
                    {"tpr_gap", m.tpr_gap},
                    {"fpr_gap", m.fpr_gap},
                    {"best_epoch", m.best_epoch}});
  }
  nlohmann::json j = {{"mode", r.mode},
                      {"method", r.method},
                      {"dataset", r.dataset},
                      {"units", "percent"},
                      {"seed_count", r.seed_count()},
                      {"acc", to_json(r.acc())},
                      {"dp", to_json(r.dp())},
                      {"eo", to_json(r.eo())},
                      {"tpr_gap", to_json(r.tpr_gap())},
                      {"fpr_gap", to_json(r.fpr_gap())},
                      {"runs", runs},
                      {"warnings", r.warnings},
                      {"provenance", r.provenance}};
  j["auc"] = r.has_auc() ? to_json(r.auc()) : nlohmann::json(nullptr);
  return j;
}

inline MetricsReport metrics_report_from_json(const nlohmann::json& j) {
  MetricsReport r;
  r.mode = j.at("mode").get<std::string>();
  r.method = j.value("method", r.method);
  r.dataset = j.value("dataset", std::string());
  for (const auto& m : j.at("runs")) {
    RunMetrics run;
    run.acc = m.at("acc").get<double>();
    if (!m.at("auc").is_null()) run.auc = m.at("auc").get<double>();
    run.dp = m.at("dp").get<double>();
    run.eo = m.at("eo").get<double>();
    run.tpr_gap = m.at("tpr_gap").get<double>();
    run.fpr_gap = m.at("fpr_gap").get<double>();
    run.best_epoch = m.value("best_epoch", 0);
    r.runs.push_back(run);
  }
  r.warnings = j.value("warnings", Warnings{});
  r.provenance = j.value("provenance", nlohmann::json::object());
  return r;
}

struct LinkReport {
  MetricsReport mixed;
  MetricsReport subgroup;
};

// ---------------------------------------------------------------------------
// Node classification

namespace detail {

inline Matrix gather_rows(const Matrix& h, std::span<const int> rows) {
  Matrix out(static_cast<Index>(rows.size()), h.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Index>(k)) = h.row(rows[k]);
  return out;
}

inline std::vector<int> gather(std::span<const int> values, std::span<const int> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (int r : rows) out.push_back(values[static_cast<std::size_t>(r)]);
  return out;
}

inline nlohmann::json protocol(const ClassifierConfig& c) {
  return {{"classifier", to_json(c)},
          {"architecture", "linear-relu-linear, sigmoid output"},
          {"selection", "parameters at the epoch with best validation accuracy"},
          {"threshold", c.threshold},
          {"std", "population"}};
}

}  // namespace detail

/// Trains `config.repeats` classifiers on the train-role rows of `h` and
/// reports test ACC, dDP and dEO with the sensitive attribute as the group.
inline MetricsReport evaluate_node(const Matrix& h, const Graph& graph, const ClassifierConfig& config,
                                   const std::string& dataset = {}) {
  config.validate();
  require_dims(h.rows() == graph.num_nodes(), "evaluate_node: one embedding row per node expected");
  if (!graph.has_labels()) throw Error("evaluate_node needs node labels");
  const auto train = graph.nodes_with_role(NodeRole::train);
  const auto val = graph.nodes_with_role(NodeRole::val);
  const auto test = graph.nodes_with_role(NodeRole::test);
  if (train.empty() || val.empty() || test.empty()) throw Error("evaluate_node needs train, val and test nodes");

  const Matrix x_train = detail::gather_rows(h, train), x_val = detail::gather_rows(h, val),
               x_test = detail::gather_rows(h, test);
  const auto y_train = detail::gather(graph.labels(), train), y_val = detail::gather(graph.labels(), val),
             y_test = detail::gather(graph.labels(), test), s_test = detail::gather(graph.sensitive(), test);

  MetricsReport report;
  report.mode = "node";
  report.dataset = dataset;
  report.provenance = detail::protocol(config);
  report.provenance["group"] = "sensitive attribute";
  report.provenance["nodes"] = {{"train", train.size()}, {"val", val.size()}, {"test", test.size()}};
  for (int r = 0; r < config.repeats; ++r) {
    Rng rng = make_rng(config.seed, "classifier", static_cast<std::uint64_t>(r));
    const TrainedClassifier c = train_classifier(x_train, y_train, x_val, y_val, config, rng);
    const auto y_hat = threshold_predictions(c.model.predict_proba(x_test), config.threshold);
    RunMetrics m;
    m.best_epoch = c.best_epoch;
    m.acc = accuracy(y_hat, y_test);
    m.dp = delta_dp(y_hat, s_test, graph.num_sensitive_groups(), &report.warnings);
    const EqualizedOdds eo = delta_eo(y_test, y_hat, s_test, &report.warnings);
    m.eo = eo.eo;
    m.tpr_gap = eo.tpr_gap;
    m.fpr_gap = eo.fpr_gap;
    report.runs.push_back(m);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Link prediction

namespace detail {

inline std::pair<std::vector<Edge>, std::vector<int>> labelled_pairs(const std::vector<Edge>& pos,
                                                                     const std::vector<Edge>& neg) {
  std::vector<Edge> pairs(pos);
  pairs.insert(pairs.end(), neg.begin(), neg.end());
  std::vector<int> labels(pos.size(), 1);
  labels.resize(pairs.size(), 0);
  return {std::move(pairs), std::move(labels)};
}

}  // namespace detail

/// Classifier on Hadamard pair embeddings of the training positives and
/// negatives; test ACC and AUC, then dDP / dEO under both dyadic modes.
/// Negative test pairs are grouped by their endpoints like positives.
inline LinkReport evaluate_link(const Matrix& h, const EdgeSplit& split, std::span<const int> sensitive,
                                const ClassifierConfig& config, const std::string& dataset = {}) {
  config.validate();
  require_dims(static_cast<std::size_t>(h.rows()) == sensitive.size(), "evaluate_link: embedding/sensitive rows");
  const auto [train_pairs, y_train] = detail::labelled_pairs(split.train_pos, split.train_neg);
  const auto [val_pairs, y_val] = detail::labelled_pairs(split.val_pos, split.val_neg);
  const auto [test_pairs, y_test] = detail::labelled_pairs(split.test_pos, split.test_neg);
  if (test_pairs.empty()) throw Error("evaluate_link needs test pairs");
  const Matrix x_train = link_embed(h, train_pairs), x_val = link_embed(h, val_pairs),
               x_test = link_embed(h, test_pairs);
  const DyadicGroups mixed = dyadic_groups(test_pairs, sensitive, DyadicMode::mixed);
  const DyadicGroups subgroup = dyadic_groups(test_pairs, sensitive, DyadicMode::subgroup);

  LinkReport out;
  for (auto* r : {&out.mixed, &out.subgroup}) {
    r->dataset = dataset;
    r->provenance = detail::protocol(config);
    r->provenance["pairs"] = {{"train", train_pairs.size()}, {"val", val_pairs.size()}, {"test", test_pairs.size()}};
    r->provenance["embedding"] = "hadamard";
  }
  out.mixed.mode = "link-mixed";
  out.mixed.provenance["group"] = "intra (0) / inter (1)";
  out.subgroup.mode = "link-subgroup";
  out.subgroup.provenance["group"] = "unordered sensitive pair";
  out.subgroup.provenance["group_count"] = subgroup.group_count;

  for (int r = 0; r < config.repeats; ++r) {
    Rng rng = make_rng(config.seed, "classifier", static_cast<std::uint64_t>(r));
    const TrainedClassifier c = train_classifier(x_train, y_train, x_val, y_val, config, rng);
    const Vector probs = c.model.predict_proba(x_test);
    const auto y_hat = threshold_predictions(probs, config.threshold);
    const std::vector<double> scores(probs.data(), probs.data() + probs.size());
    RunMetrics base;
    base.best_epoch = c.best_epoch;
    base.acc = accuracy(y_hat, y_test);
    base.auc = auc(scores, y_test);
    for (auto [report, groups] : {std::pair{&out.mixed, &mixed}, std::pair{&out.subgroup, &subgroup}}) {
      RunMetrics m = base;
      m.dp = delta_dp(y_hat, groups->group_of, groups->group_count, &report->warnings);
      const EqualizedOdds eo = delta_eo(y_test, y_hat, groups->group_of, &report->warnings);
      m.eo = eo.eo;
      m.tpr_gap = eo.tpr_gap;
      m.fpr_gap = eo.fpr_gap;
      report->runs.push_back(m);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Results table

/// One row of the results table. Node tasks fill dp/eo, link tasks fill the
/// mixed (_m) and subgroup (_s) columns and auc.
struct ResultRow {
  std::string method = "Graphair";
  std::string dataset;
  std::string task;
  Summary acc;
  std::optional<Summary> auc, dp, eo, dp_m, eo_m, dp_s, eo_s;
  int seed_count = 0;
};

inline ResultRow result_row(const MetricsReport& node) {
  ResultRow row;
  row.method = node.method;
  row.dataset = node.dataset;
  row.task = "node";
  row.acc = node.acc();
  row.dp = node.dp();
  row.eo = node.eo();
  row.seed_count = node.seed_count();
  return row;
}

inline ResultRow result_row(const LinkReport& link) {
  ResultRow row;
  row.method = link.mixed.method;
  row.dataset = link.mixed.dataset;
  row.task = "link";
  row.acc = link.mixed.acc();
  row.auc = link.mixed.auc();
  row.dp_m = link.mixed.dp();
  row.eo_m = link.mixed.eo();
  row.dp_s = link.subgroup.dp();
  row.eo_s = link.subgroup.eo();
  row.seed_count = link.mixed.seed_count();
  return row;
}

inline constexpr const char* kResultsHeader =
    "method,dataset,acc,auc,dp_m,eo_m,dp_s,eo_s,seed_count,task,dp,eo,"
    "acc_std,auc_std,dp_m_std,eo_m_std,dp_s_std,eo_s_std,dp_std,eo_std";

inline std::string csv_line(const ResultRow& r) {
  const auto mean = [](const std::optional<Summary>& s) { return s ? std::to_string(s->mean) : std::string(); };
  const auto sd = [](const std::optional<Summary>& s) { return s ? std::to_string(s->std) : std::string(); };
  std::ostringstream out;
  out << r.method << ',' << r.dataset << ',' << std::to_string(r.acc.mean) << ',' << mean(r.auc) << ','
      << mean(r.dp_m) << ',' << mean(r.eo_m) << ',' << mean(r.dp_s) << ',' << mean(r.eo_s) << ',' << r.seed_count
      << ',' << r.task << ',' << mean(r.dp) << ',' << mean(r.eo) << ',' << std::to_string(r.acc.std) << ','
      << sd(r.auc) << ',' << sd(r.dp_m) << ',' << sd(r.eo_m) << ',' << sd(r.dp_s) << ',' << sd(r.eo_s) << ','
      << sd(r.dp) << ',' << sd(r.eo);
  return out.str();
}

/// Appends one row, writing the header first when the file is new or empty.
inline void append_result(const std::filesystem::path& path, const ResultRow& row) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error("cannot append to " + path.string());
  if (fresh) out << kResultsHeader << '\n';
  out << csv_line(row) << '\n';
}

}  // namespace graphair
