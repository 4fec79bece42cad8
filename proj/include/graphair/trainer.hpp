#pragma once

// Alternating min-max training: the adversary k ascends L_adv on a fixed
// augmented view, then (g, f) descend alpha L_adv + beta L_con + gamma L_reconst
// with k held fixed.

#include "graphair/checkpoint.hpp"
#include "graphair/losses.hpp"
#include "graphair/models.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <sstream>

namespace graphair {

enum class Reduction { sum, mean };

inline std::string to_string(Reduction r) { return r == Reduction::sum ? "sum" : "mean"; }

inline Reduction reduction_from_string(const std::string& s) {
  if (s == "sum") return Reduction::sum;
  if (s == "mean") return Reduction::mean;
  throw Error("unknown reduction '" + s + "' (expected sum or mean)");
}

struct TrainConfig {
  int epochs = 500;
  double model_lr = 1e-4;
  double model_weight_decay = 1e-5;
  LossWeights loss_weights;
  bool ablate_ep = false;
  bool ablate_fm = false;
  std::uint64_t seed = 0;
  int adversary_steps_per_epoch = 1;
  ModelConfig model;
  Reduction reconstruction_reduction = Reduction::sum;

  void validate() const {
    if (epochs <= 0) throw Error("epochs must be positive");
    if (!(model_lr > 0)) throw Error("model learning rate must be positive");
    if (model_weight_decay < 0) throw Error("weight decay must be non-negative");
    if (adversary_steps_per_epoch < 0) throw Error("adversary steps per epoch must be non-negative");
    if (!(model.temperature > 0)) throw Error("temperature must be positive");
    loss_weights.validate();
  }
};

inline nlohmann::json to_json(const LossWeights& w) {
  return {{"alpha", w.alpha}, {"beta", w.beta}, {"gamma", w.gamma}, {"lambda", w.lambda}, {"tau", w.tau}};
}

inline LossWeights loss_weights_from_json(const nlohmann::json& j, LossWeights base = {}) {
  base.alpha = j.value("alpha", base.alpha);
  base.beta = j.value("beta", base.beta);
  base.gamma = j.value("gamma", base.gamma);
  base.lambda = j.value("lambda", base.lambda);
  base.tau = j.value("tau", base.tau);
  return base;
}

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"model_lr", c.model_lr},
          {"model_weight_decay", c.model_weight_decay},
          {"loss_weights", to_json(c.loss_weights)},
          {"ablate_ep", c.ablate_ep},
          {"ablate_fm", c.ablate_fm},
          {"seed", c.seed},
          {"adversary_steps_per_epoch", c.adversary_steps_per_epoch},
          {"hidden", c.model.hidden},
          {"embedding", c.model.embedding},
          {"adversary_hidden", c.model.adversary_hidden},
          {"temperature", c.model.temperature},
          {"dense_pair_threshold", c.model.dense_pair_threshold},
          {"sparse_feature_density", c.model.sparse_feature_density},
          {"reconstruction_reduction", to_string(c.reconstruction_reduction)}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {}) {
  base.epochs = j.value("epochs", base.epochs);
  base.model_lr = j.value("model_lr", base.model_lr);
  base.model_weight_decay = j.value("model_weight_decay", base.model_weight_decay);
  if (j.contains("loss_weights")) base.loss_weights = loss_weights_from_json(j.at("loss_weights"), base.loss_weights);
  base.ablate_ep = j.value("ablate_ep", base.ablate_ep);
  base.ablate_fm = j.value("ablate_fm", base.ablate_fm);
  base.seed = j.value("seed", base.seed);
  base.adversary_steps_per_epoch = j.value("adversary_steps_per_epoch", base.adversary_steps_per_epoch);
  base.model.hidden = j.value("hidden", base.model.hidden);
  base.model.embedding = j.value("embedding", base.model.embedding);
  base.model.adversary_hidden = j.value("adversary_hidden", base.model.adversary_hidden);
  base.model.temperature = j.value("temperature", base.model.temperature);
  base.model.dense_pair_threshold = j.value("dense_pair_threshold", base.model.dense_pair_threshold);
  base.model.sparse_feature_density = j.value("sparse_feature_density", base.model.sparse_feature_density);
  if (j.contains("reconstruction_reduction")) {
    base.reconstruction_reduction = reduction_from_string(j.at("reconstruction_reduction").get<std::string>());
  }
  return base;
}

struct TrainState {
  AugmentorParams augmentor;
  EncoderParams encoder;
  AdversaryParams adversary;
  Adam augmentor_opt;
  Adam encoder_opt;
  Adam adversary_opt;
  int epoch = 0;
  Rng rng;
  std::vector<LossBreakdown> history;
  /// Per epoch: L_adv before each adversary step and after the last one.
  std::vector<std::vector<double>> adversary_trace;
};

inline TrainState init_state(const Graph& graph, const TrainConfig& config) {
  config.validate();
  Rng init = make_rng(config.seed, "init");
  TrainState s;
  s.augmentor = make_augmentor(graph.num_features(), config.model, init);
  s.encoder = make_encoder(graph.num_features(), config.model, init);
  s.adversary = make_adversary(config.model.embedding, graph.num_sensitive_groups(), config.model, init);
  const AdamConfig opt{config.model_lr, config.model_weight_decay};
  s.augmentor_opt = Adam(opt);
  s.encoder_opt = Adam(opt);
  s.adversary_opt = Adam(opt);
  s.rng = make_rng(config.seed, "train");
  return s;
}

/// Graph-derived constants shared by every epoch of one training run.
class TrainContext {
 public:
  TrainContext(const Graph& graph, const TrainConfig& config)
      : graph_(&graph),
        a_hat_(normalized_adjacency(graph)),
        features_(FeatureInput::from(graph.features(), config.model.sparse_feature_density)),
        dense_(graph.num_nodes() <= config.model.dense_pair_threshold),
        threshold_(config.model.dense_pair_threshold) {
    if (dense_ && !config.ablate_ep) {
      candidates_ = PairSet::complete(graph.num_nodes());
      targets_ = candidates_.targets(graph);
    }
    if (config.ablate_ep) {
      edge_pairs_ = PairSet::from_pairs(graph.num_nodes(), graph.edges());
      edge_targets_ = Matrix::Ones(static_cast<Index>(graph.num_edges()), 1);
    }
  }

  const Graph& graph() const noexcept { return *graph_; }
  const std::shared_ptr<const SparseMatrix>& a_hat() const noexcept { return a_hat_; }
  const FeatureInput& features() const noexcept { return features_; }
  bool dense() const noexcept { return dense_; }

  /// The pair set for one epoch; resampled each call in sparse mode.
  const PairSet& candidates(Rng& rng) {
    if (!dense_) {
      candidates_ = candidate_pairs(*graph_, threshold_, rng);
      targets_ = candidates_.targets(*graph_);
    }
    return candidates_;
  }
  const Matrix& targets() const noexcept { return targets_; }
  const PairSet& edge_pairs() const noexcept { return edge_pairs_; }
  const Matrix& edge_targets() const noexcept { return edge_targets_; }

 private:
  const Graph* graph_;
  std::shared_ptr<const SparseMatrix> a_hat_;
  FeatureInput features_;
  bool dense_;
  int threshold_;
  PairSet candidates_;
  Matrix targets_;
  PairSet edge_pairs_;
  Matrix edge_targets_;
};

/// All terms of the objective built on one tape.
struct Objective {
  AugmentTrace trace;
  ad::Var h;
  ad::Var h_prime;
  ad::Var adv;
  ad::Var con;
  ad::Var reconst;
  ad::Var total;
  LossBreakdown breakdown;
};

struct ObjectiveInputs {
  const Graph* graph = nullptr;
  std::shared_ptr<const SparseMatrix> a_hat;
  const FeatureInput* features = nullptr;
  const PairSet* pairs = nullptr;
  const Matrix* targets = nullptr;
  const AugmentNoise* noise = nullptr;
  LossWeights weights;
  AugmentOptions options;
  double temperature = 1.0;
  Reduction reduction = Reduction::sum;
};

/// g and f on the tape: the augmentation, H = f(A, X) and H' = f(A', X').
inline Objective build_forward(const BoundParameters& g, const BoundParameters& f, ad::Tape& tape,
                               const ObjectiveInputs& in) {
  Objective o;
  const FeatureVar x = place(tape, *in.features);
  const Propagation original = fixed_propagation(in.a_hat);
  o.trace = augment_on_tape(g, in.temperature, original, x, *in.pairs, *in.noise, in.options);
  o.h = represent_on_tape(f, original, x);
  o.h_prime = represent_on_tape(f, learned_propagation(*in.pairs, o.trace.edge_weights), o.trace.x_prime);
  return o;
}

/// Adds the adversary and the three losses to a forward pass. BCE over
/// unordered candidate pairs counts each pair twice, once per ordered (i, j),
/// and never the diagonal.
inline void finish_objective(Objective& o, const BoundParameters& k, ad::Tape& tape, const ObjectiveInputs& in) {
  o.adv = ad::adversarial_loss(in.graph->sensitive(), adversary_on_tape(k, o.h_prime));
  o.con = ad::contrastive_loss(o.h, o.h_prime, in.weights.tau);

  const double pair_count = std::max<double>(1.0, static_cast<double>(in.pairs->size()));
  const double bce_weight = in.reduction == Reduction::sum ? 2.0 : 1.0 / pair_count;
  const double fro_weight = in.reduction == Reduction::sum
                                ? 1.0
                                : 1.0 / std::max<double>(1.0, static_cast<double>(in.features->dense.size()));
  const ad::Var bce = in.options.ablate_ep
                          ? tape.constant(Matrix::Constant(1, 1, bce_sum(*in.targets, o.trace.edge_probs.value(),
                                                                         bce_weight)))
                          : ad::bce_sum(*in.targets, o.trace.edge_probs, bce_weight);
  const Matrix& x_data = in.features->is_sparse() ? in.features->values : in.features->dense;
  const ad::Var fro = ad::frobenius_sq_diff(x_data, o.trace.x_prime.data());
  o.reconst = ad::linear_combination({bce, fro}, {1.0, in.weights.lambda * fro_weight});

  o.breakdown = total_loss(in.weights, o.adv.item(), o.con.item(), o.reconst.item());
  o.total = ad::linear_combination({o.adv, o.con, o.reconst}, {in.weights.alpha, in.weights.beta, in.weights.gamma});
}

inline Objective build_objective(const BoundParameters& g, const BoundParameters& f, const BoundParameters& k,
                                 ad::Tape& tape, const ObjectiveInputs& in) {
  Objective o = build_forward(g, f, tape, in);
  finish_objective(o, k, tape, in);
  return o;
}

/// One epoch in place: draw the view randomness, run the adversary ascent
/// steps on H' from the current (g, f), then one descent step for (g, f)
/// against the updated adversary.
inline void train_step(TrainState& s, TrainContext& ctx, const TrainConfig& config) {
  const Graph& graph = ctx.graph();
  const PairSet& pairs = config.ablate_ep ? ctx.edge_pairs() : ctx.candidates(s.rng);
  const Matrix& targets = config.ablate_ep ? ctx.edge_targets() : ctx.targets();
  const AugmentNoise noise = draw_noise(pairs, ctx.features().mask_rows(), ctx.features().mask_cols(), s.rng);
  const auto sensitive = graph.sensitive();

  ObjectiveInputs in;
  in.graph = &graph;
  in.a_hat = ctx.a_hat();
  in.features = &ctx.features();
  in.pairs = &pairs;
  in.targets = &targets;
  in.noise = &noise;
  in.weights = config.loss_weights;
  in.options = AugmentOptions{config.ablate_ep, config.ablate_fm, false};
  in.temperature = s.augmentor.temperature;
  in.reduction = config.reconstruction_reduction;

  ad::Tape tape;
  const BoundParameters g(tape, s.augmentor.params, true);
  const BoundParameters f(tape, s.encoder.params, true);
  Objective o = build_forward(g, f, tape, in);

  // g and f are not updated until the adversary is done, so H' is that of
  // the current (g, f).
  std::vector<double> trace;
  if (config.adversary_steps_per_epoch > 0) {
    const Matrix& h_prime = o.h_prime.value();
    for (int step = 0; step < config.adversary_steps_per_epoch; ++step) {
      ad::Tape inner;
      const BoundParameters k(inner, s.adversary.params, true);
      const ad::Var adv = ad::adversarial_loss(sensitive, adversary_on_tape(k, inner.constant(h_prime)));
      if (!std::isfinite(adv.item())) throw NonFiniteLossError("adversarial loss is not finite");
      trace.push_back(adv.item());
      inner.backward(ad::scale(adv, -1.0));
      s.adversary_opt.step(s.adversary.params, k.grads(inner));
    }
    trace.push_back(adversarial_loss(sensitive, adversary_predict(s.adversary, h_prime)));
  }

  const BoundParameters k(tape, s.adversary.params, false);
  finish_objective(o, k, tape, in);
  tape.backward(o.total);
  s.augmentor_opt.step(s.augmentor.params, g.grads(tape));
  s.encoder_opt.step(s.encoder.params, f.grads(tape));

  s.history.push_back(o.breakdown);
  s.adversary_trace.push_back(std::move(trace));
  ++s.epoch;
}

/// Value-semantics form of train_step.
inline TrainState train_step(TrainState state, const Graph& graph, const TrainConfig& config) {
  TrainContext ctx(graph, config);
  train_step(state, ctx, config);
  return state;
}

// ---------------------------------------------------------------------------
// Checkpoints

inline void put_group(Archive& a, const std::string& prefix, const ParameterSet& params, const Adam& opt) {
  for (const auto& p : params) a.put(prefix + "/" + p.name, p.value);
  const auto& m1 = opt.first_moments();
  const auto& m2 = opt.second_moments();
  for (std::size_t i = 0; i < m1.size(); ++i) {
    a.put("adam/" + prefix + "/m/" + params.at(i).name, m1[i]);
    a.put("adam/" + prefix + "/v/" + params.at(i).name, m2[i]);
  }
}

inline void take_group(const Archive& a, const std::string& prefix, ParameterSet& params, Adam& opt, long steps) {
  std::vector<Matrix> m1, m2;
  for (auto& p : params) {
    p.value = a.at(prefix + "/" + p.name);
    if (steps > 0) {
      m1.push_back(a.at("adam/" + prefix + "/m/" + p.name));
      m2.push_back(a.at("adam/" + prefix + "/v/" + p.name));
    }
  }
  opt.restore(steps, std::move(m1), std::move(m2));
}

inline Archive make_checkpoint(const TrainState& s, const TrainConfig& config, const nlohmann::json& extra = {}) {
  Archive a;
  a.metadata = {{"format", "graphair-checkpoint"},
                {"version", kVersion},
                {"config", to_json(config)},
                {"seed", config.seed},
                {"epoch", s.epoch},
                {"rng_state", rng_state(s.rng)},
                {"in_features", s.augmentor.in_features},
                {"num_groups", s.adversary.num_groups},
                {"adam_steps", {s.augmentor_opt.steps(), s.encoder_opt.steps(), s.adversary_opt.steps()}}};
  if (extra.is_object()) {
    for (const auto& [key, value] : extra.items()) a.metadata[key] = value;
  }
  put_group(a, "g", s.augmentor.params, s.augmentor_opt);
  put_group(a, "f", s.encoder.params, s.encoder_opt);
  put_group(a, "k", s.adversary.params, s.adversary_opt);
  return a;
}

/// Rebuilds a TrainState (without history) from an archive.
inline TrainState restore_checkpoint(const Archive& a, TrainConfig* config_out = nullptr) {
  const TrainConfig config = train_config_from_json(a.metadata.at("config"));
  const auto in_features = a.metadata.at("in_features").get<Index>();
  const int groups = a.metadata.at("num_groups").get<int>();
  Rng scratch = make_rng(0, "restore");
  TrainState s;
  s.augmentor = make_augmentor(in_features, config.model, scratch);
  s.encoder = make_encoder(in_features, config.model, scratch);
  s.adversary = make_adversary(config.model.embedding, groups, config.model, scratch);
  const AdamConfig opt{config.model_lr, config.model_weight_decay};
  s.augmentor_opt = Adam(opt);
  s.encoder_opt = Adam(opt);
  s.adversary_opt = Adam(opt);
  const auto steps = a.metadata.at("adam_steps").get<std::vector<long>>();
  take_group(a, "g", s.augmentor.params, s.augmentor_opt, steps.at(0));
  take_group(a, "f", s.encoder.params, s.encoder_opt, steps.at(1));
  take_group(a, "k", s.adversary.params, s.adversary_opt, steps.at(2));
  s.epoch = a.metadata.at("epoch").get<int>();
  s.rng = rng_from_state(a.metadata.at("rng_state").get<std::string>());
  if (config_out != nullptr) *config_out = config;
  return s;
}

/// Epochs at which fit() writes checkpoints: every 10% of the budget and the
/// final epoch.
inline std::vector<int> checkpoint_epochs(int epochs) {
  std::vector<int> out;
  const int stride = std::max(1, epochs / 10);
  for (int e = stride; e < epochs; e += stride) out.push_back(e);
  out.push_back(epochs);
  return out;
}

inline std::filesystem::path checkpoint_path(const std::filesystem::path& dir, int epoch) {
  std::ostringstream name;
  name << "epoch_" << std::setw(6) << std::setfill('0') << epoch << ".ckpt";
  return dir / "checkpoints" / name.str();
}

struct FitOptions {
  /// Empty: nothing is written.
  std::filesystem::path out_dir;
  std::string dataset;
  /// Checkpointed in addition to checkpoint_epochs(config.epochs).
  std::vector<int> extra_checkpoints;
  std::function<void(const TrainState&)> on_epoch;
};

struct FitResult {
  TrainState state;
  std::vector<LossBreakdown> history;
  std::vector<int> checkpoints;
  double seconds = 0.0;
};

inline std::string format_double(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

inline nlohmann::json trial_metadata(const TrainConfig& config, const TrainContext& ctx, const std::string& dataset) {
  return {{"dataset", dataset},
          {"config", to_json(config)},
          {"version", kVersion},
          {"nodes", ctx.graph().num_nodes()},
          {"candidate_pairs", config.ablate_ep ? "edges" : (ctx.dense() ? "all" : "edges+sampled-non-edges")},
          {"feature_form", ctx.features().is_sparse() ? "sparse" : "dense"},
          {"bce_sum_over", config.ablate_ep || ctx.dense() ? "all pairs" : "candidate set"}};
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp);
    if (!out) throw Error("cannot write " + tmp.string());
    out << j.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, path);
}

/// Runs config.epochs training steps from a fresh state. With an output
/// directory: metrics.csv (one row per epoch), checkpoints/ and trial.json.
inline FitResult fit(const Graph& graph, const TrainConfig& config, const FitOptions& options = {}) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  TrainContext ctx(graph, config);
  FitResult result;
  result.state = init_state(graph, config);
  const bool persist = !options.out_dir.empty();
  std::vector<int> ckpt = checkpoint_epochs(config.epochs);
  ckpt.insert(ckpt.end(), options.extra_checkpoints.begin(), options.extra_checkpoints.end());
  std::ofstream metrics;
  nlohmann::json meta = trial_metadata(config, ctx, options.dataset);
  if (persist) {
    std::filesystem::create_directories(options.out_dir);
    metrics.open(options.out_dir / "metrics.csv", std::ios::trunc);
    metrics << "epoch,adv,con,reconst,total\n";
  }
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  try {
    for (int e = 0; e < config.epochs; ++e) {
      train_step(result.state, ctx, config);
      const LossBreakdown& b = result.state.history.back();
      if (persist) {
        metrics << result.state.epoch << ',' << format_double(b.adv) << ',' << format_double(b.con) << ','
                << format_double(b.reconst) << ',' << format_double(b.total) << '\n';
        metrics.flush();
        if (std::find(ckpt.begin(), ckpt.end(), result.state.epoch) != ckpt.end()) {
          write_archive(checkpoint_path(options.out_dir, result.state.epoch),
                        make_checkpoint(result.state, config, {{"dataset", options.dataset}}));
          result.checkpoints.push_back(result.state.epoch);
        }
      }
      if (options.on_epoch) options.on_epoch(result.state);
    }
  } catch (const NonFiniteLossError& err) {
    if (persist) {
      meta["error"] = err.what();
      meta["failed_epoch"] = result.state.epoch + 1;
      meta["wall_clock_seconds"] = elapsed();
      write_json(options.out_dir / "trial.json", meta);
    }
    throw;
  }
  result.seconds = elapsed();
  result.history = result.state.history;
  if (persist) {
    meta["wall_clock_seconds"] = result.seconds;
    meta["checkpoints"] = result.checkpoints;
    write_json(options.out_dir / "trial.json", meta);
  }
  return result;
}

}  // namespace graphair
