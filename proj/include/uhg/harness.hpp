#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uhg/dataset.hpp"
#include "uhg/model.hpp"

namespace uhg {

enum class ReportRule { last_epoch, best_validation };

struct TrainConfig {
  ModelSpec model;
  double lr = 0.01;
  double weight_decay = 5e-4;
  // UniGCNII decays its dense and convolutional groups differently; negative
  // means "use weight_decay".
  double conv_weight_decay = -1.0;
  double dense_weight_decay = -1.0;
  int epochs = 200;
  int patience = 0;  // 0 disables early stopping
  std::string split_id = "0";
  std::uint64_t seed = 1;
  ReportRule report_rule = ReportRule::last_epoch;
  ad::Precision precision = ad::Precision::f32;
  bool self_loops = true;    // ablation toggle for self-loop variants
  double label_rate = 0.0;   // 0 = dataset metadata

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
  double conv_wd() const {
    return conv_weight_decay >= 0 ? conv_weight_decay : weight_decay;
  }
  double dense_wd() const {
    return dense_weight_decay >= 0 ? dense_weight_decay : weight_decay;
  }
};

struct RunResult {
  std::uint64_t seed = 0;
  std::string split_id;
  double test_accuracy = 0.0;
  double val_accuracy = -1.0;
  double seen_accuracy = -1.0;    // inductive protocol
  double unseen_accuracy = -1.0;  // inductive protocol
  double final_loss = 0.0;
  int reported_epoch = 0;
};

struct RunReport {
  std::vector<RunResult> runs;
  double mean = 0.0;
  double stddev = 0.0;  // population std over runs
  nlohmann::json config_echo;
  double wall_seconds = 0.0;
};

nlohmann::json run_result_to_json(const RunResult& r);
nlohmann::json run_report_to_json(const RunReport& r);

// Resolves 0-valued model dims from the bundle.
ModelSpec resolve_spec(const ModelSpec& spec, const DatasetBundle& bundle);

// Prepares the hypergraph a variant trains on (self loops or raw).
IncidenceStructure preprocess_structure(const IncidenceStructure& h,
                                        const ModelSpec& spec,
                                        bool self_loops);

double accuracy(const std::vector<int>& predictions,
                const std::vector<int>& labels, const std::vector<Id>& mask);

// One full-hypergraph training run on the train mask; evaluation follows the
// report rule. Deterministic in (config.seed, split).
RunResult train_transductive(const DatasetBundle& bundle,
                             const TrainConfig& config);

// Trained model variant of the above (for weight export).
struct TrainedModel {
  Model model;
  RunResult result;
};
TrainedModel train_transductive_model(const DatasetBundle& bundle,
                                      const TrainConfig& config);

// Evolving-hypergraph protocol: a fraction of vertices is hidden during
// training (the structure is induced on the rest); evaluation runs one
// forward pass on the full hypergraph and reports seen/unseen accuracy.
RunResult train_inductive(const DatasetBundle& bundle,
                          const TrainConfig& config,
                          double unseen_fraction = 0.4,
                          double train_fraction = 0.2);

enum class Protocol { transductive, inductive };

// (splits x seeds) grid, optionally fanned across worker threads; per-run
// numbers are identical in sequential and parallel mode.
RunReport sweep(const DatasetBundle& bundle, const TrainConfig& base,
                int num_splits, int num_seeds, int jobs = 1,
                Protocol protocol = Protocol::transductive);

struct DepthCell {
  int depth = 0;
  bool ok = true;
  std::string error;  // e.g. allocation failure
  RunReport report;
};
std::vector<DepthCell> depth_sweep(const DatasetBundle& bundle,
                                   const TrainConfig& base,
                                   const std::vector<int>& depths,
                                   int num_splits, int num_seeds,
                                   int jobs = 1);

struct AblationReport {
  RunReport with_self_loops;
  RunReport without_self_loops;
};
AblationReport self_loop_ablation(const DatasetBundle& bundle,
                                  const TrainConfig& base, int num_splits,
                                  int num_seeds, int jobs = 1);

double evaluate_weights(const Model& model, const DatasetBundle& bundle,
                        const std::vector<Id>& mask, bool self_loops = true);

// Per-dataset protocol overrides (inductive runs on pubmed train with zero
// input dropout for 300 epochs). Exposed so callers can inspect the table.
struct InductiveOverride {
  double dropout;
  int epochs;
};
std::optional<InductiveOverride> inductive_override_for(
    const std::string& dataset_name);

nlohmann::json depth_cells_to_json(const std::vector<DepthCell>& cells);
nlohmann::json ablation_to_json(const AblationReport& r);

// Aligned-column text rendering of a report (mirrors the JSON content).
std::string report_table(const RunReport& r, const std::string& title);
std::string depth_table(const std::vector<DepthCell>& cells,
                        const std::string& title);

}  // namespace uhg
