// uhg command-line front end. Everything heavy lives behind the C API in
// libuhg; this binary only assembles task configs, forwards them, and
// formats the results.
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "uhg.h"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitVerdict = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

struct CommonOpts {
  std::string dataset;
  std::string config_file;
  std::string out;
  std::string format = "json";
  std::string model = "unigcn";
  std::string precision = "f32";
  std::string report_rule;
  std::string split = "0";
  int layers = 2;
  int hidden = 64;
  int heads = 8;
  double dropout = 0.6;
  double attn_dropout = 0.6;
  double lr = 0.01;
  double wd = 5e-4;
  double conv_wd = -1.0;
  double dense_wd = -1.0;
  double alpha = 0.1;
  double lambda = 0.5;
  double label_rate = 0.0;
  int epochs = 200;
  int patience = 0;
  std::uint64_t seed = 1;
  bool no_norm = false;
  bool no_self_loops = false;
};

void add_model_options(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--dataset", o.dataset,
                  "dataset file in the canonical JSON schema")
      ->required();
  cmd->add_option("--config", o.config_file,
                  "JSON config file; command-line flags override its keys");
  cmd->add_option("--model", o.model,
                  "unigcn | unigat | unigin | unisage | unigcnii | unigcn-star");
  cmd->add_option("--layers", o.layers, "message-passing depth (default 2)");
  cmd->add_option("--hidden", o.hidden,
                  "hidden width (default 64; attention heads use 8)");
  cmd->add_option("--heads", o.heads, "attention heads (default 8)");
  cmd->add_option("--dropout", o.dropout, "feature dropout (default 0.6)");
  cmd->add_option("--attn-dropout", o.attn_dropout,
                  "dropout on normalized attention weights (default 0.6)");
  cmd->add_option("--lr", o.lr, "Adam learning rate (default 0.01)");
  cmd->add_option("--wd", o.wd, "Adam weight decay (default 5e-4)");
  cmd->add_option("--conv-wd", o.conv_wd,
                  "weight decay for convolutional parameters (unigcnii)");
  cmd->add_option("--dense-wd", o.dense_wd,
                  "weight decay for dense parameters (unigcnii)");
  cmd->add_option("--alpha", o.alpha,
                  "initial-residual mixing coefficient (unigcnii)");
  cmd->add_option("--lambda", o.lambda,
                  "identity-mapping strength; layer l uses log(lambda/l + 1)");
  cmd->add_option("--epochs", o.epochs, "training epochs (default 200)");
  cmd->add_option("--patience", o.patience,
                  "early-stopping patience in epochs; 0 disables");
  cmd->add_option("--seed", o.seed, "run seed");
  cmd->add_option("--split", o.split, "split id (stored or generated)");
  cmd->add_option("--label-rate", o.label_rate,
                  "training label rate for generated splits");
  cmd->add_option("--report-rule", o.report_rule,
                  "last_epoch | best_validation");
  cmd->add_option("--precision", o.precision, "f32 | f64 (default f32)");
  cmd->add_flag("--no-norm", o.no_norm,
                "disable the row-L2 normalization layer (dblp mode)");
  cmd->add_flag("--no-self-loops", o.no_self_loops,
                "skip self-loop preprocessing (ablation arm)");
  cmd->add_option("--out", o.out,
                  "report file; UHG_OUT_DIR prefixes relative paths");
  cmd->add_option("--format", o.format, "json | table");
}

// defaults < config file < explicit flags
json assemble_config(const CLI::App* cmd, const CommonOpts& o) {
  json cfg;
  if (!o.config_file.empty()) {
    std::ifstream in(o.config_file);
    if (!in.good()) {
      throw CLI::ValidationError("--config", "cannot open " + o.config_file);
    }
    try {
      in >> cfg;
    } catch (const json::exception& e) {
      throw CLI::ValidationError("--config", e.what());
    }
  }
  if (!cfg.contains("model")) cfg["model"] = json::object();
  auto passed = [&](const std::string& flag) {
    return cmd->count(flag) > 0;
  };
  auto set_model = [&](const std::string& flag, const char* key, auto value) {
    if (passed(flag) || !cfg["model"].contains(key)) cfg["model"][key] = value;
  };
  auto set_cfg = [&](const std::string& flag, const char* key, auto value) {
    if (passed(flag) || !cfg.contains(key)) cfg[key] = value;
  };
  set_model("--model", "variant", o.model);
  set_model("--layers", "num_layers", o.layers);
  set_model("--hidden", "hidden_dim", o.hidden);
  set_model("--heads", "heads", o.heads);
  set_model("--dropout", "dropout", o.dropout);
  set_model("--attn-dropout", "attn_dropout", o.attn_dropout);
  set_model("--alpha", "alpha", o.alpha);
  set_model("--lambda", "lambda", o.lambda);
  if (passed("--no-norm")) cfg["model"]["use_norm"] = false;
  set_cfg("--lr", "lr", o.lr);
  set_cfg("--wd", "weight_decay", o.wd);
  set_cfg("--conv-wd", "conv_weight_decay", o.conv_wd);
  set_cfg("--dense-wd", "dense_weight_decay", o.dense_wd);
  set_cfg("--epochs", "epochs", o.epochs);
  set_cfg("--patience", "patience", o.patience);
  set_cfg("--seed", "seed", o.seed);
  set_cfg("--split", "split_id", o.split);
  set_cfg("--label-rate", "label_rate", o.label_rate);
  set_cfg("--precision", "precision", o.precision);
  if (passed("--no-self-loops")) cfg["self_loops"] = false;
  if (!o.report_rule.empty()) cfg["report_rule"] = o.report_rule;
  return cfg;
}

std::string resolve_out_path(const std::string& out) {
  if (out.empty()) return out;
  std::filesystem::path p(out);
  if (p.is_relative()) {
    if (const char* dir = std::getenv("UHG_OUT_DIR")) {
      return (std::filesystem::path(dir) / p).string();
    }
  }
  return out;
}

int emit_report(const json& full, const CommonOpts& o, double wall_seconds) {
  json doc = full;
  std::string table;
  if (doc.contains("table")) {
    table = doc["table"].get<std::string>();
    doc.erase("table");
  }
  if (!doc.contains("timing")) doc["timing"] = json::object();
  doc["timing"]["wall_seconds"] = wall_seconds;

  const std::string path = resolve_out_path(o.out);
  if (!path.empty()) {
    std::ofstream out(path);
    if (!out.good()) {
      std::cerr << json{{"error", "cannot write " + path}}.dump() << "\n";
      return kExitUsage;
    }
    out << doc.dump(2) << "\n";
  }
  if (o.format == "table" && !table.empty()) {
    std::cout << table;
  } else if (path.empty()) {
    std::cout << doc.dump(2) << "\n";
  }
  return kExitOk;
}

int run_task_command(const json& task, const CommonOpts& o) {
  const auto t0 = std::chrono::steady_clock::now();
  char* report = nullptr;
  const uhg_status st = uhg_run(task.dump().c_str(), &report);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  if (st != UHG_OK) {
    std::cerr << json{{"error", uhg_last_error()}, {"status", int(st)}}.dump()
              << "\n";
    return st == UHG_ERR_NUMERIC ? kExitNumeric : kExitUsage;
  }
  json full = json::parse(report);
  uhg_string_free(report);
  return emit_report(full, o, wall);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"uhg: hypergraph message-passing networks, refinement-based "
               "isomorphism testing, and experiment harness"};
  app.require_subcommand(1);

  CommonOpts train_o, sweep_o, depth_o, ablate_o, eval_o;

  auto* train = app.add_subcommand(
      "train", "train one model on one (split, seed) and report accuracy");
  add_model_options(train, train_o);
  std::string save_weights;
  bool train_inductive = false;
  double unseen_fraction = 0.4, train_fraction = 0.2;
  train->add_option("--save-weights", save_weights,
                    "write <stem>.bin and <stem>.json after training");
  train->add_flag("--inductive", train_inductive,
                  "hide a vertex fraction during training; evaluate on the "
                  "full hypergraph");
  train->add_option("--unseen-fraction", unseen_fraction,
                    "vertex fraction hidden during training (default 0.4)");
  train->add_option("--train-fraction", train_fraction,
                    "vertex fraction used for training (default 0.2)");

  auto* sweep = app.add_subcommand(
      "sweep", "run a (splits x seeds) grid and aggregate mean/stddev");
  add_model_options(sweep, sweep_o);
  int sweep_splits = 10, sweep_seeds = 8, sweep_jobs = 1;
  std::string sweep_protocol = "transductive";
  sweep->add_option("--splits", sweep_splits, "number of splits (default 10)");
  sweep->add_option("--seeds", sweep_seeds,
                    "number of seeds per split (default 8)");
  sweep->add_option("--jobs", sweep_jobs, "worker threads (default 1)");
  sweep->add_option("--protocol", sweep_protocol,
                    "transductive | inductive");

  auto* depth = app.add_subcommand(
      "depth-sweep", "train the same model at several depths");
  add_model_options(depth, depth_o);
  std::vector<int> depths{2, 4, 8, 16};
  int depth_splits = 2, depth_seeds = 2, depth_jobs = 1;
  depth->add_option("--depths", depths, "layer counts to sweep");
  depth->add_option("--splits", depth_splits, "splits per cell (default 2)");
  depth->add_option("--seeds", depth_seeds, "seeds per cell (default 2)");
  depth->add_option("--jobs", depth_jobs, "worker threads");

  auto* ablate = app.add_subcommand(
      "ablate-selfloops",
      "train with and without self-loop preprocessing and report both");
  add_model_options(ablate, ablate_o);
  int ab_splits = 2, ab_seeds = 2, ab_jobs = 1;
  ablate->add_option("--splits", ab_splits, "splits per arm (default 2)");
  ablate->add_option("--seeds", ab_seeds, "seeds per arm (default 2)");
  ablate->add_option("--jobs", ab_jobs, "worker threads");

  auto* eval = app.add_subcommand(
      "eval", "evaluate saved weights on a dataset mask");
  eval->add_option("--dataset", eval_o.dataset, "dataset file")->required();
  std::string eval_weights, eval_mask = "test";
  eval->add_option("--weights", eval_weights,
                   "weights stem (expects <stem>.bin and <stem>.json)")
      ->required();
  eval->add_option("--mask", eval_mask, "train | val | test");
  eval->add_option("--split", eval_o.split, "split id");
  eval->add_option("--out", eval_o.out, "report file");
  eval->add_option("--format", eval_o.format, "json | table");

  auto* gwl = app.add_subcommand(
      "gwl",
      "decide whether color refinement separates two hypergraphs; exit 1 "
      "when it does");
  std::string gwl_a, gwl_b;
  int gwl_max_iters = 0;
  std::string gwl_out;
  gwl->add_option("--a", gwl_a, "first hypergraph JSON file")->required();
  gwl->add_option("--b", gwl_b, "second hypergraph JSON file")->required();
  gwl->add_option("--max-iters", gwl_max_iters,
                  "iteration cap; 0 = structural cap");
  gwl->add_option("--out", gwl_out, "verdict file (JSON)");

  auto* gradcheck = app.add_subcommand(
      "gradcheck",
      "compare every backward rule against central finite differences");
  std::string gc_ops = "all";
  std::uint64_t gc_seed = 7;
  int gc_trials = 20;
  std::string gc_out;
  gradcheck->add_option("--ops", gc_ops,
                        "'all' or a comma-separated op list");
  gradcheck->add_option("--seed", gc_seed, "base seed");
  gradcheck->add_option("--trials", gc_trials,
                        "random instances per op (default 20)");
  gradcheck->add_option("--out", gc_out, "report file");

  auto* fixtures = app.add_subcommand(
      "fixtures", "write the built-in toy hypergraphs and datasets");
  std::string fx_dir = "fixtures";
  fixtures->add_option("--out-dir", fx_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (train->parsed()) {
      json task;
      task["task"] = train_inductive ? "train_inductive" : "train";
      task["dataset"] = train_o.dataset;
      task["config"] = assemble_config(train, train_o);
      if (train_inductive) {
        task["unseen_fraction"] = unseen_fraction;
        task["train_fraction"] = train_fraction;
      }
      if (!save_weights.empty()) task["save_weights"] = save_weights;
      return run_task_command(task, train_o);
    }
    if (sweep->parsed()) {
      json task{{"task", "sweep"},
                {"dataset", sweep_o.dataset},
                {"config", assemble_config(sweep, sweep_o)},
                {"splits", sweep_splits},
                {"seeds", sweep_seeds},
                {"jobs", sweep_jobs},
                {"protocol", sweep_protocol}};
      return run_task_command(task, sweep_o);
    }
    if (depth->parsed()) {
      json task{{"task", "depth_sweep"},
                {"dataset", depth_o.dataset},
                {"config", assemble_config(depth, depth_o)},
                {"depths", depths},
                {"splits", depth_splits},
                {"seeds", depth_seeds},
                {"jobs", depth_jobs}};
      return run_task_command(task, depth_o);
    }
    if (ablate->parsed()) {
      json task{{"task", "ablate_selfloops"},
                {"dataset", ablate_o.dataset},
                {"config", assemble_config(ablate, ablate_o)},
                {"splits", ab_splits},
                {"seeds", ab_seeds},
                {"jobs", ab_jobs}};
      return run_task_command(task, ablate_o);
    }
    if (eval->parsed()) {
      json task{{"task", "eval"},
                {"dataset", eval_o.dataset},
                {"weights", eval_weights},
                {"mask", eval_mask},
                {"split", eval_o.split}};
      return run_task_command(task, eval_o);
    }
    if (gwl->parsed()) {
      uhg_hypergraph* a = nullptr;
      uhg_hypergraph* b = nullptr;
      if (uhg_hypergraph_from_file(gwl_a.c_str(), &a) != UHG_OK) {
        std::cerr << json{{"error", uhg_last_error()}}.dump() << "\n";
        return kExitUsage;
      }
      if (uhg_hypergraph_from_file(gwl_b.c_str(), &b) != UHG_OK) {
        std::cerr << json{{"error", uhg_last_error()}}.dump() << "\n";
        uhg_hypergraph_free(a);
        return kExitUsage;
      }
      int distinguishable = 0, iteration = 0;
      const uhg_status st =
          uhg_gwl_distinguish(a, b, gwl_max_iters, &distinguishable,
                              &iteration);
      uhg_hypergraph_free(a);
      uhg_hypergraph_free(b);
      if (st != UHG_OK) {
        std::cerr << json{{"error", uhg_last_error()}}.dump() << "\n";
        return kExitUsage;
      }
      json verdict{{"verdict", distinguishable ? "distinguishable"
                                               : "not_distinguished"},
                   {"iteration", iteration}};
      std::cout << verdict.dump() << "\n";
      if (!gwl_out.empty()) {
        std::ofstream out(resolve_out_path(gwl_out));
        out << verdict.dump(2) << "\n";
      }
      return distinguishable ? kExitVerdict : kExitOk;
    }
    if (gradcheck->parsed()) {
      json task{{"task", "gradcheck"}, {"seed", gc_seed},
                {"trials", gc_trials}};
      if (gc_ops != "all") {
        std::vector<std::string> ops;
        std::stringstream ss(gc_ops);
        std::string item;
        while (std::getline(ss, item, ',')) {
          if (!item.empty()) ops.push_back(item);
        }
        task["ops"] = ops;
      }
      char* report = nullptr;
      if (uhg_run(task.dump().c_str(), &report) != UHG_OK) {
        std::cerr << json{{"error", uhg_last_error()}}.dump() << "\n";
        return kExitUsage;
      }
      json full = json::parse(report);
      uhg_string_free(report);
      if (!gc_out.empty()) {
        std::ofstream out(resolve_out_path(gc_out));
        out << full.dump(2) << "\n";
      }
      std::cout << full.dump(2) << "\n";
      return full["report"]["pass"].get<bool>() ? kExitOk : kExitNumeric;
    }
    if (fixtures->parsed()) {
      json task{{"task", "fixtures"}, {"out_dir", fx_dir}};
      char* report = nullptr;
      if (uhg_run(task.dump().c_str(), &report) != UHG_OK) {
        std::cerr << json{{"error", uhg_last_error()}}.dump() << "\n";
        return kExitUsage;
      }
      std::cout << report << "\n";
      uhg_string_free(report);
      return kExitOk;
    }
  } catch (const CLI::Error& e) {
    std::cerr << json{{"error", e.what()}}.dump() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", e.what()}}.dump() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
