#include "uhg.h"

#include <cstring>
#include <new>
#include <string>

#include <nlohmann/json.hpp>

#include "uhg/dataset.hpp"
#include "uhg/fixtures.hpp"
#include "uhg/gradcheck.hpp"
#include "uhg/gwl.hpp"
#include "uhg/harness.hpp"
#include "uhg/hypergraph.hpp"

struct uhg_hypergraph {
  uhg::IncidenceStructure h;
};

struct uhg_dataset {
  uhg::DatasetBundle b;
};

namespace {

thread_local std::string g_last_error;

uhg_status status_for(uhg::ErrorCode code) {
  using uhg::ErrorCode;
  switch (code) {
    case ErrorCode::schema:
    case ErrorCode::io:
      return code == ErrorCode::io ? UHG_ERR_IO : UHG_ERR_PARSE;
    case ErrorCode::non_finite:
    case ErrorCode::non_scalar_loss:
      return UHG_ERR_NUMERIC;
    case ErrorCode::internal:
      return UHG_ERR_INTERNAL;
    default:
      return UHG_ERR_INVALID_ARGUMENT;
  }
}

template <typename Fn>
uhg_status guarded(Fn&& fn) {
  try {
    fn();
    return UHG_OK;
  } catch (const uhg::Error& e) {
    g_last_error = e.what();
    return status_for(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return UHG_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return UHG_ERR_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

uhg_status require_arg(bool ok, const char* message) {
  if (!ok) {
    g_last_error = message;
    return UHG_ERR_INVALID_ARGUMENT;
  }
  return UHG_OK;
}

nlohmann::json run_task(const nlohmann::json& req);

}  // namespace

extern "C" {

const char* uhg_version(void) { return "0.1.0"; }

const char* uhg_last_error(void) { return g_last_error.c_str(); }

void uhg_string_free(char* s) { delete[] s; }

uhg_status uhg_hypergraph_from_json(const char* json, uhg_hypergraph** out) {
  if (auto s = require_arg(json && out, "null argument")) return s;
  *out = nullptr;
  return guarded([&]() {
    *out = new uhg_hypergraph{uhg::hypergraph_from_json(json)};
  });
}

uhg_status uhg_hypergraph_from_file(const char* path, uhg_hypergraph** out) {
  if (auto s = require_arg(path && out, "null argument")) return s;
  *out = nullptr;
  return guarded([&]() {
    *out = new uhg_hypergraph{uhg::hypergraph_from_file(path)};
  });
}

uhg_status uhg_hypergraph_to_json(const uhg_hypergraph* h, char** json_out) {
  if (auto s = require_arg(h && json_out, "null argument")) return s;
  return guarded([&]() {
    *json_out = dup_string(uhg::hypergraph_to_json(h->h));
  });
}

void uhg_hypergraph_free(uhg_hypergraph* h) { delete h; }

int64_t uhg_hypergraph_num_vertices(const uhg_hypergraph* h) {
  return h ? h->h.num_vertices : -1;
}

int64_t uhg_hypergraph_num_edges(const uhg_hypergraph* h) {
  return h ? h->h.num_edges() : -1;
}

uhg_status uhg_hypergraph_add_self_loops(const uhg_hypergraph* h,
                                         uhg_hypergraph** out) {
  if (auto s = require_arg(h && out, "null argument")) return s;
  *out = nullptr;
  return guarded([&]() {
    *out = new uhg_hypergraph{uhg::add_self_loops(h->h)};
  });
}

uhg_status uhg_gwl_distinguish(const uhg_hypergraph* a,
                               const uhg_hypergraph* b, int max_iters,
                               int* distinguishable, int* iteration) {
  if (auto s = require_arg(a && b && distinguishable && iteration,
                           "null argument")) {
    return s;
  }
  return guarded([&]() {
    auto res = uhg::gwl::distinguish(a->h, b->h, max_iters);
    *distinguishable = res.verdict == uhg::gwl::Verdict::distinguishable;
    *iteration = res.iteration;
  });
}

uhg_status uhg_dataset_load(const char* path, uhg_dataset** out) {
  if (auto s = require_arg(path && out, "null argument")) return s;
  *out = nullptr;
  return guarded([&]() { *out = new uhg_dataset{uhg::load_dataset(path)}; });
}

void uhg_dataset_free(uhg_dataset* d) { delete d; }

int64_t uhg_dataset_num_vertices(const uhg_dataset* d) {
  return d ? d->b.num_vertices() : -1;
}

int64_t uhg_dataset_num_classes(const uhg_dataset* d) {
  return d ? d->b.num_classes : -1;
}

int64_t uhg_dataset_feature_dim(const uhg_dataset* d) {
  return d ? d->b.feature_dim() : -1;
}

uhg_status uhg_run(const char* config_json, char** report_json_out) {
  if (auto s = require_arg(config_json && report_json_out, "null argument")) {
    return s;
  }
  *report_json_out = nullptr;
  return guarded([&]() {
    nlohmann::json req;
    try {
      req = nlohmann::json::parse(config_json);
    } catch (const nlohmann::json::exception& e) {
      uhg::fail(uhg::ErrorCode::schema,
                std::string("task config: ") + e.what());
    }
    *report_json_out = dup_string(run_task(req).dump(2));
  });
}

}  // extern "C"

namespace {

using nlohmann::json;

uhg::TrainConfig config_from(const json& req) {
  uhg::TrainConfig cfg;
  if (req.contains("config")) {
    cfg = uhg::TrainConfig::from_json(req.at("config"));
  }
  return cfg;
}

uhg::DatasetBundle dataset_from(const json& req) {
  if (!req.contains("dataset")) {
    uhg::fail(uhg::ErrorCode::schema, "task needs a dataset path");
  }
  return uhg::load_dataset(req.at("dataset").get<std::string>());
}

json run_task(const json& req) {
  const std::string task = req.value("task", "");
  json out;

  if (task == "train") {
    auto bundle = dataset_from(req);
    auto cfg = config_from(req);
    auto trained = uhg::train_transductive_model(bundle, cfg);
    out["report"] = {{"run", uhg::run_result_to_json(trained.result)},
                     {"config", cfg.to_json()},
                     {"dataset", bundle.name}};
    if (req.contains("save_weights")) {
      const auto stem = req.at("save_weights").get<std::string>();
      trained.model.save_weights(stem + ".bin", stem + ".json");
      out["report"]["weights"] = {{"bin", stem + ".bin"},
                                  {"manifest", stem + ".json"}};
    }
    return out;
  }

  if (task == "train_inductive") {
    auto bundle = dataset_from(req);
    auto cfg = config_from(req);
    const double unseen = req.value("unseen_fraction", 0.4);
    const double train_frac = req.value("train_fraction", 0.2);
    auto result = uhg::train_inductive(bundle, cfg, unseen, train_frac);
    out["report"] = {{"run", uhg::run_result_to_json(result)},
                     {"config", cfg.to_json()},
                     {"dataset", bundle.name}};
    return out;
  }

  if (task == "sweep") {
    auto bundle = dataset_from(req);
    auto cfg = config_from(req);
    const int splits = req.value("splits", 10);
    const int seeds = req.value("seeds", 8);
    const int jobs = req.value("jobs", 1);
    const auto protocol = req.value("protocol", std::string("transductive"));
    auto report = uhg::sweep(bundle, cfg, splits, seeds, jobs,
                             protocol == "inductive"
                                 ? uhg::Protocol::inductive
                                 : uhg::Protocol::transductive);
    out["report"] = uhg::run_report_to_json(report);
    out["report"]["dataset"] = bundle.name;
    out["timing"] = {{"wall_seconds", report.wall_seconds}};
    out["table"] = uhg::report_table(report, bundle.name);
    return out;
  }

  if (task == "depth_sweep") {
    auto bundle = dataset_from(req);
    auto cfg = config_from(req);
    std::vector<int> depths = req.value("depths", std::vector<int>{2, 4, 8});
    const int splits = req.value("splits", 1);
    const int seeds = req.value("seeds", 1);
    const int jobs = req.value("jobs", 1);
    auto cells = uhg::depth_sweep(bundle, cfg, depths, splits, seeds, jobs);
    out["report"] = {{"cells", uhg::depth_cells_to_json(cells)},
                     {"config", cfg.to_json()},
                     {"dataset", bundle.name}};
    out["table"] = uhg::depth_table(cells, bundle.name);
    return out;
  }

  if (task == "ablate_selfloops") {
    auto bundle = dataset_from(req);
    auto cfg = config_from(req);
    const int splits = req.value("splits", 2);
    const int seeds = req.value("seeds", 2);
    const int jobs = req.value("jobs", 1);
    auto report = uhg::self_loop_ablation(bundle, cfg, splits, seeds, jobs);
    out["report"] = uhg::ablation_to_json(report);
    out["report"]["dataset"] = bundle.name;
    out["table"] =
        uhg::report_table(report.with_self_loops, bundle.name + " (with)") +
        uhg::report_table(report.without_self_loops,
                          bundle.name + " (without)");
    return out;
  }

  if (task == "eval") {
    auto bundle = dataset_from(req);
    if (!req.contains("weights")) {
      uhg::fail(uhg::ErrorCode::schema, "eval needs a weights stem");
    }
    const auto stem = req.at("weights").get<std::string>();
    auto model = uhg::Model::load_weights(stem + ".bin", stem + ".json");
    const auto mask_name = req.value("mask", std::string("test"));
    const auto split_id = req.value("split", std::string("0"));
    auto masks = uhg::resolve_split(bundle, split_id, 0.0, false);
    const std::vector<uhg::Id>* mask = &masks.test;
    if (mask_name == "train") mask = &masks.train;
    if (mask_name == "val") mask = &masks.val;
    const double acc = uhg::evaluate_weights(model, bundle, *mask);
    out["report"] = {{"accuracy", acc},
                     {"mask", mask_name},
                     {"split", split_id},
                     {"dataset", bundle.name}};
    return out;
  }

  if (task == "gradcheck") {
    const std::uint64_t seed = req.value("seed", 7);
    const int trials = req.value("trials", 20);
    std::vector<std::string> ops;
    if (req.contains("ops") && req.at("ops").is_array()) {
      ops = req.at("ops").get<std::vector<std::string>>();
    }
    auto summary = uhg::gradcheck::check_ops(ops, seed, trials);
    if (ops.empty()) {
      summary = uhg::gradcheck::merge(
          summary, uhg::gradcheck::check_models(seed, trials));
    }
    out["report"] = uhg::gradcheck::summary_to_json(summary);
    return out;
  }

  if (task == "fixtures") {
    const auto dir = req.value("out_dir", std::string("fixtures"));
    auto written = uhg::fixtures::write_fixtures(dir);
    json files = json::array();
    for (const auto& [name, path] : written) {
      files.push_back({{"name", name}, {"path", path}});
    }
    out["report"] = {{"out_dir", dir}, {"files", std::move(files)}};
    return out;
  }

  uhg::fail(uhg::ErrorCode::schema,
            task.empty() ? "task config needs a task field"
                         : "unknown task: " + task);
}

}  // namespace
