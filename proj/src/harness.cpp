#include "uhg/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <thread>

#include "uhg/adam.hpp"

namespace uhg {

void TrainConfig::validate() const {
  require(lr > 0.0, ErrorCode::invalid_argument, "lr must be positive");
  require(epochs >= 1, ErrorCode::invalid_argument, "epochs >= 1");
  require(patience >= 0 && patience < epochs, ErrorCode::invalid_argument,
          "patience must satisfy 0 <= patience < epochs");
  require(weight_decay >= 0.0, ErrorCode::invalid_argument,
          "weight_decay >= 0");
}

nlohmann::json TrainConfig::to_json() const {
  return nlohmann::json{
      {"model", model.to_json()},
      {"lr", lr},
      {"weight_decay", weight_decay},
      {"conv_weight_decay", conv_weight_decay},
      {"dense_weight_decay", dense_weight_decay},
      {"epochs", epochs},
      {"patience", patience},
      {"split_id", split_id},
      {"seed", seed},
      {"report_rule", report_rule == ReportRule::last_epoch
                          ? "last_epoch"
                          : "best_validation"},
      {"precision", ad::precision_to_string(precision)},
      {"self_loops", self_loops},
      {"label_rate", label_rate},
  };
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  if (j.contains("model")) c.model = ModelSpec::from_json(j.at("model"));
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("lr", c.lr);
  get("weight_decay", c.weight_decay);
  get("conv_weight_decay", c.conv_weight_decay);
  get("dense_weight_decay", c.dense_weight_decay);
  get("epochs", c.epochs);
  get("patience", c.patience);
  get("split_id", c.split_id);
  get("seed", c.seed);
  get("label_rate", c.label_rate);
  get("self_loops", c.self_loops);
  if (j.contains("report_rule")) {
    const auto rule = j.at("report_rule").get<std::string>();
    if (rule == "last_epoch") {
      c.report_rule = ReportRule::last_epoch;
    } else if (rule == "best_validation") {
      c.report_rule = ReportRule::best_validation;
    } else {
      fail(ErrorCode::invalid_argument, "unknown report_rule: " + rule);
    }
  }
  if (j.contains("precision")) {
    c.precision =
        ad::precision_from_string(j.at("precision").get<std::string>());
  }
  return c;
}

nlohmann::json run_result_to_json(const RunResult& r) {
  nlohmann::json j{{"seed", r.seed},
                   {"split_id", r.split_id},
                   {"test_accuracy", r.test_accuracy},
                   {"final_loss", r.final_loss},
                   {"reported_epoch", r.reported_epoch}};
  if (r.val_accuracy >= 0) j["val_accuracy"] = r.val_accuracy;
  if (r.seen_accuracy >= 0) j["seen_accuracy"] = r.seen_accuracy;
  if (r.unseen_accuracy >= 0) j["unseen_accuracy"] = r.unseen_accuracy;
  return j;
}

namespace {

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  const double mean =
      std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double sq = 0.0;
  for (double x : xs) sq += (x - mean) * (x - mean);
  return {mean, std::sqrt(sq / static_cast<double>(xs.size()))};
}

}  // namespace

nlohmann::json run_report_to_json(const RunReport& r) {
  nlohmann::json runs = nlohmann::json::array();
  std::vector<double> seen, unseen;
  for (const auto& run : r.runs) {
    runs.push_back(run_result_to_json(run));
    if (run.seen_accuracy >= 0) seen.push_back(run.seen_accuracy);
    if (run.unseen_accuracy >= 0) unseen.push_back(run.unseen_accuracy);
  }
  nlohmann::json j{{"runs", std::move(runs)},
                   {"mean", r.mean},
                   {"stddev", r.stddev},
                   {"config", r.config_echo}};
  if (!seen.empty()) {
    auto [m, s] = mean_std(seen);
    j["seen_mean"] = m;
    j["seen_stddev"] = s;
  }
  if (!unseen.empty()) {
    auto [m, s] = mean_std(unseen);
    j["unseen_mean"] = m;
    j["unseen_stddev"] = s;
  }
  return j;
}

ModelSpec resolve_spec(const ModelSpec& spec, const DatasetBundle& bundle) {
  ModelSpec s = spec;
  if (s.input_dim == 0) s.input_dim = bundle.feature_dim();
  if (s.num_classes == 0) s.num_classes = bundle.num_classes;
  require(s.input_dim == bundle.feature_dim(), ErrorCode::dimension_mismatch,
          "model input_dim != dataset feature dim");
  require(s.num_classes == bundle.num_classes, ErrorCode::dimension_mismatch,
          "model num_classes != dataset classes");
  return s;
}

IncidenceStructure preprocess_structure(const IncidenceStructure& h,
                                        const ModelSpec& spec,
                                        bool self_loops) {
  if (self_loops && variant_needs_self_loops(spec.variant)) {
    return add_self_loops(h);
  }
  return h;
}

double accuracy(const std::vector<int>& predictions,
                const std::vector<int>& labels, const std::vector<Id>& mask) {
  require(!mask.empty(), ErrorCode::empty_mask, "accuracy over an empty mask");
  require(predictions.size() == labels.size(), ErrorCode::dimension_mismatch,
          "prediction/label count mismatch");
  int correct = 0;
  for (Id i : mask) {
    require(i >= 0 && i < static_cast<Id>(labels.size()),
            ErrorCode::index_out_of_range, "mask index out of range");
    if (predictions[i] == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(mask.size());
}

namespace {

double eval_masked(const Model& model, const LayerContext& ctx,
                   const ad::Tensor& x, const std::vector<int>& labels,
                   const std::vector<Id>& mask, ad::Precision precision) {
  ad::Tape tape(precision, /*grad_enabled=*/false);
  Rng unused(0);
  auto logits = model.forward(tape, ctx, x, /*training=*/false, unused);
  return accuracy(ad::argmax_rows(logits), labels, mask);
}

struct FitOutcome {
  double final_loss = 0.0;
  int reported_epoch = 0;
  double val_accuracy = -1.0;
};

// Core optimization loop shared by the protocols. Trains in place on
// `model`; on exit the weights follow the report rule.
FitOutcome fit(Model& model, const LayerContext& ctx, const ad::Tensor& x,
               const std::vector<int>& labels, const SplitMasks& masks,
               const TrainConfig& config, int epochs) {
  ad::Adam adam(model.param_tensors(),
                model.weight_decays(config.conv_wd(), config.dense_wd()),
                {.lr = config.lr}, config.precision);
  Rng drop_rng(mix_seed(config.seed, 0xd801ULL));
  const bool need_val =
      config.report_rule == ReportRule::best_validation || config.patience > 0;
  require(!need_val || !masks.val.empty(), ErrorCode::empty_mask,
          "best-validation reporting needs a validation mask");

  FitOutcome out;
  double best_val = -1.0;
  int best_epoch = 0;
  int since_best = 0;
  std::vector<std::vector<double>> best_snap;
  int epoch = 0;
  for (epoch = 1; epoch <= epochs; ++epoch) {
    ad::Tape tape(config.precision);
    auto logits = model.forward(tape, ctx, x, /*training=*/true, drop_rng);
    auto loss = tape.softmax_cross_entropy(logits, labels, masks.train);
    out.final_loss = loss.values()[0];
    if (!std::isfinite(out.final_loss)) {
      fail(ErrorCode::non_finite,
           "training loss became non-finite at epoch " +
               std::to_string(epoch) + " (variant " +
               variant_to_string(model.spec().variant) + ", lr " +
               std::to_string(config.lr) + ")");
    }
    adam.zero_grads();
    tape.backward(loss);
    adam.step();

    if (need_val) {
      const double val =
          eval_masked(model, ctx, x, labels, masks.val, config.precision);
      if (val > best_val) {
        best_val = val;
        best_epoch = epoch;
        best_snap = model.snapshot();
        since_best = 0;
      } else if (config.patience > 0 && ++since_best >= config.patience) {
        break;
      }
    }
  }
  if (config.report_rule == ReportRule::best_validation && !best_snap.empty()) {
    model.restore(best_snap);
    out.reported_epoch = best_epoch;
    out.val_accuracy = best_val;
  } else {
    out.reported_epoch = std::min(epoch, epochs);
    if (best_val >= 0) out.val_accuracy = best_val;
  }
  return out;
}

}  // namespace

TrainedModel train_transductive_model(const DatasetBundle& bundle,
                                      const TrainConfig& config) {
  config.validate();
  ModelSpec spec = resolve_spec(config.model, bundle);
  const bool need_val =
      config.report_rule == ReportRule::best_validation || config.patience > 0;
  SplitMasks masks =
      resolve_split(bundle, config.split_id, config.label_rate, need_val);
  IncidenceStructure h =
      preprocess_structure(bundle.hypergraph, spec, config.self_loops);
  LayerContext ctx = LayerContext::from(h);
  spec.seed = mix_seed(config.seed, spec.seed);
  Model model(spec);

  FitOutcome fitted =
      fit(model, ctx, bundle.features, bundle.labels, masks, config,
          config.epochs);

  RunResult r;
  r.seed = config.seed;
  r.split_id = config.split_id;
  r.final_loss = fitted.final_loss;
  r.reported_epoch = fitted.reported_epoch;
  r.val_accuracy = fitted.val_accuracy;
  r.test_accuracy = eval_masked(model, ctx, bundle.features, bundle.labels,
                                masks.test, config.precision);
  return {std::move(model), r};
}

RunResult train_transductive(const DatasetBundle& bundle,
                             const TrainConfig& config) {
  return train_transductive_model(bundle, config).result;
}

std::optional<InductiveOverride> inductive_override_for(
    const std::string& dataset_name) {
  std::string key = dataset_name;
  std::transform(key.begin(), key.end(), key.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (key == "pubmed") return InductiveOverride{0.0, 300};
  return std::nullopt;
}

RunResult train_inductive(const DatasetBundle& bundle,
                          const TrainConfig& config, double unseen_fraction,
                          double train_fraction) {
  config.validate();
  require(unseen_fraction >= 0.0 && unseen_fraction < 1.0,
          ErrorCode::invalid_argument, "unseen_fraction in [0, 1)");
  require(train_fraction > 0.0 && train_fraction + unseen_fraction < 1.0,
          ErrorCode::invalid_argument,
          "train_fraction + unseen_fraction must leave seen test vertices");
  ModelSpec spec = resolve_spec(config.model, bundle);
  TrainConfig cfg = config;
  if (auto ov = inductive_override_for(bundle.name)) {
    spec.dropout = ov->dropout;
    cfg.epochs = ov->epochs;
  }

  const int n = bundle.num_vertices();
  std::vector<Id> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::uint64_t name_hash = 1469598103934665603ULL;
  for (unsigned char c : bundle.name) {
    name_hash = (name_hash ^ c) * 1099511628211ULL;
  }
  int numeric_split = 0;
  try {
    numeric_split = std::stoi(cfg.split_id);
  } catch (...) {
    numeric_split =
        static_cast<int>(std::hash<std::string>{}(cfg.split_id) % 1000);
  }
  Rng split_rng(
      mix_seed(name_hash, 0x1d0c7 + static_cast<std::uint64_t>(numeric_split)));
  std::shuffle(order.begin(), order.end(), split_rng);

  const int n_unseen =
      static_cast<int>(std::lround(unseen_fraction * static_cast<double>(n)));
  const int n_train =
      static_cast<int>(std::lround(train_fraction * static_cast<double>(n)));
  require(n_train >= 1 && n_train + n_unseen < n, ErrorCode::invalid_argument,
          "fractions leave no seen test vertices for n=" + std::to_string(n));
  std::vector<Id> train_ids(order.begin(), order.begin() + n_train);
  std::vector<Id> seen_ids(order.begin() + n_train,
                           order.end() - n_unseen);
  std::vector<Id> unseen_ids(order.end() - n_unseen, order.end());

  // training sees only the induced visible hypergraph and visible features
  std::vector<Id> visible;
  visible.reserve(n - n_unseen);
  visible.insert(visible.end(), train_ids.begin(), train_ids.end());
  visible.insert(visible.end(), seen_ids.begin(), seen_ids.end());
  std::sort(visible.begin(), visible.end());
  InducedResult induced = induce(bundle.hypergraph, visible);

  const int nv = static_cast<int>(visible.size());
  ad::Tensor x_sub(nv, bundle.feature_dim());
  std::vector<int> labels_sub(nv);
  for (int i = 0; i < nv; ++i) {
    const Id old_id = induced.new_to_old[i];
    labels_sub[i] = bundle.labels[old_id];
    for (int c = 0; c < bundle.feature_dim(); ++c) {
      x_sub.at(i, c) = bundle.features(old_id, c);
    }
  }
  SplitMasks masks_sub;
  for (Id v : train_ids) masks_sub.train.push_back(induced.old_to_new[v]);
  std::sort(masks_sub.train.begin(), masks_sub.train.end());

  IncidenceStructure h_train =
      preprocess_structure(induced.structure, spec, cfg.self_loops);
  LayerContext ctx_train = LayerContext::from(h_train);
  ModelSpec model_spec = spec;
  model_spec.seed = mix_seed(cfg.seed, spec.seed);
  Model model(model_spec);
  TrainConfig fit_cfg = cfg;
  fit_cfg.report_rule = ReportRule::last_epoch;
  fit_cfg.patience = 0;
  FitOutcome fitted =
      fit(model, ctx_train, x_sub, labels_sub, masks_sub, fit_cfg, cfg.epochs);

  // evaluation: one forward pass over the full hypergraph
  IncidenceStructure h_full =
      preprocess_structure(bundle.hypergraph, spec, cfg.self_loops);
  LayerContext ctx_full = LayerContext::from(h_full);
  ad::Tape tape(cfg.precision, /*grad_enabled=*/false);
  Rng unused(0);
  auto logits =
      model.forward(tape, ctx_full, bundle.features, /*training=*/false,
                    unused);
  auto preds = ad::argmax_rows(logits);

  RunResult r;
  r.seed = cfg.seed;
  r.split_id = cfg.split_id;
  r.final_loss = fitted.final_loss;
  r.reported_epoch = fitted.reported_epoch;
  std::sort(seen_ids.begin(), seen_ids.end());
  std::sort(unseen_ids.begin(), unseen_ids.end());
  r.seen_accuracy = accuracy(preds, bundle.labels, seen_ids);
  if (!unseen_ids.empty()) {
    r.unseen_accuracy = accuracy(preds, bundle.labels, unseen_ids);
  }
  r.test_accuracy = r.seen_accuracy;
  return r;
}

RunReport sweep(const DatasetBundle& bundle, const TrainConfig& base,
                int num_splits, int num_seeds, int jobs, Protocol protocol) {
  require(num_splits >= 1 && num_seeds >= 1, ErrorCode::invalid_argument,
          "sweep needs at least one split and one seed");
  const auto t0 = std::chrono::steady_clock::now();
  const int total = num_splits * num_seeds;
  std::vector<RunResult> results(total);
  std::vector<std::exception_ptr> errors(total);

  auto run_one = [&](int idx) {
    TrainConfig cfg = base;
    cfg.split_id = std::to_string(idx / num_seeds);
    cfg.seed = base.seed + static_cast<std::uint64_t>(idx % num_seeds);
    return protocol == Protocol::transductive ? train_transductive(bundle, cfg)
                                              : train_inductive(bundle, cfg);
  };

  const int workers = std::clamp(jobs, 1, total);
  if (workers == 1) {
    for (int i = 0; i < total; ++i) results[i] = run_one(i);
  } else {
    std::atomic<int> next{0};
    auto body = [&]() {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= total) return;
        try {
          results[i] = run_one(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  RunReport report;
  report.runs = std::move(results);
  std::vector<double> accs;
  accs.reserve(report.runs.size());
  for (const auto& r : report.runs) accs.push_back(r.test_accuracy);
  std::tie(report.mean, report.stddev) = mean_std(accs);
  report.config_echo = base.to_json();
  report.config_echo["num_splits"] = num_splits;
  report.config_echo["num_seeds"] = num_seeds;
  report.config_echo["protocol"] =
      protocol == Protocol::transductive ? "transductive" : "inductive";
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return report;
}

std::vector<DepthCell> depth_sweep(const DatasetBundle& bundle,
                                   const TrainConfig& base,
                                   const std::vector<int>& depths,
                                   int num_splits, int num_seeds, int jobs) {
  require(!depths.empty(), ErrorCode::invalid_argument, "depths non-empty");
  std::vector<DepthCell> cells;
  for (int depth : depths) {
    DepthCell cell;
    cell.depth = depth;
    TrainConfig cfg = base;
    cfg.model.num_layers = depth;
    cfg.report_rule = ReportRule::best_validation;
    if (cfg.model.variant == Variant::unigcnii) {
      cfg.epochs = 1000;
      cfg.patience = 150;
      if (cfg.conv_weight_decay < 0) cfg.conv_weight_decay = 0.01;
      if (cfg.dense_weight_decay < 0) cfg.dense_weight_decay = 5e-4;
    }
    try {
      cell.report = sweep(bundle, cfg, num_splits, num_seeds, jobs);
    } catch (const std::bad_alloc&) {
      cell.ok = false;
      cell.error = "OOM";
    }
    cells.push_back(std::move(cell));
  }
  return cells;
}

AblationReport self_loop_ablation(const DatasetBundle& bundle,
                                  const TrainConfig& base, int num_splits,
                                  int num_seeds, int jobs) {
  require(base.model.variant == Variant::unigcn ||
              base.model.variant == Variant::unigat,
          ErrorCode::invalid_argument,
          "self-loop ablation applies to unigcn and unigat");
  TrainConfig with = base;
  with.self_loops = true;
  TrainConfig without = base;
  without.self_loops = false;
  AblationReport r;
  r.with_self_loops = sweep(bundle, with, num_splits, num_seeds, jobs);
  r.without_self_loops = sweep(bundle, without, num_splits, num_seeds, jobs);
  return r;
}

double evaluate_weights(const Model& model, const DatasetBundle& bundle,
                        const std::vector<Id>& mask, bool self_loops) {
  ModelSpec spec = resolve_spec(model.spec(), bundle);
  IncidenceStructure h =
      preprocess_structure(bundle.hypergraph, spec, self_loops);
  LayerContext ctx = LayerContext::from(h);
  return eval_masked(model, ctx, bundle.features, bundle.labels, mask,
                     ad::Precision::f64);
}

nlohmann::json depth_cells_to_json(const std::vector<DepthCell>& cells) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& c : cells) {
    nlohmann::json j{{"depth", c.depth}, {"ok", c.ok}};
    if (c.ok) {
      j["report"] = run_report_to_json(c.report);
    } else {
      j["error"] = c.error;
    }
    out.push_back(std::move(j));
  }
  return out;
}

nlohmann::json ablation_to_json(const AblationReport& r) {
  return nlohmann::json{
      {"with_self_loops", run_report_to_json(r.with_self_loops)},
      {"without_self_loops", run_report_to_json(r.without_self_loops)}};
}

namespace {

std::string fmt_pct(double frac) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << frac * 100.0;
  return os.str();
}

}  // namespace

std::string report_table(const RunReport& r, const std::string& title) {
  std::ostringstream os;
  os << title << "\n";
  os << std::left << std::setw(8) << "split" << std::setw(8) << "seed"
     << std::setw(10) << "acc%";
  const bool inductive =
      !r.runs.empty() && r.runs.front().unseen_accuracy >= 0;
  if (inductive) os << std::setw(10) << "seen%" << std::setw(10) << "unseen%";
  os << "\n";
  for (const auto& run : r.runs) {
    os << std::left << std::setw(8) << run.split_id << std::setw(8) << run.seed
       << std::setw(10) << fmt_pct(run.test_accuracy);
    if (inductive) {
      os << std::setw(10) << fmt_pct(run.seen_accuracy) << std::setw(10)
         << fmt_pct(run.unseen_accuracy);
    }
    os << "\n";
  }
  os << "mean " << fmt_pct(r.mean) << " +- " << fmt_pct(r.stddev) << " ("
     << r.runs.size() << " runs)\n";
  return os.str();
}

std::string depth_table(const std::vector<DepthCell>& cells,
                        const std::string& title) {
  std::ostringstream os;
  os << title << "\n";
  os << std::left << std::setw(8) << "layers" << std::setw(12) << "acc%"
     << std::setw(10) << "std" << "\n";
  for (const auto& c : cells) {
    os << std::left << std::setw(8) << c.depth;
    if (c.ok) {
      os << std::setw(12) << fmt_pct(c.report.mean) << std::setw(10)
         << fmt_pct(c.report.stddev);
    } else {
      os << std::setw(12) << c.error;
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace uhg
