#include "uhg/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace uhg {

namespace {

std::vector<Id> json_id_array(const nlohmann::json& j, const std::string& at) {
  if (!j.is_array()) fail(ErrorCode::schema, at + ": expected array");
  std::vector<Id> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number_integer()) {
      fail(ErrorCode::schema, at + ": expected integer entries");
    }
    out.push_back(v.get<Id>());
  }
  return out;
}

void check_mask(const std::vector<Id>& mask, int n, const std::string& at) {
  for (Id i : mask) {
    require(i >= 0 && i < n, ErrorCode::invariant,
            at + ": vertex index " + std::to_string(i) + " outside [0, " +
                std::to_string(n) + ")");
  }
}

}  // namespace

DatasetBundle dataset_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::schema, std::string("invalid JSON: ") + e.what());
  }
  DatasetBundle b;
  b.name = j.value("name", "unnamed");
  b.hypergraph = hypergraph_from_json(text);
  const int n = b.hypergraph.num_vertices;

  if (!j.contains("features")) fail(ErrorCode::schema, "features: missing");
  const auto& feat = j["features"];
  if (feat.contains("dense")) {
    const auto& rows = feat["dense"];
    if (!rows.is_array() || static_cast<int>(rows.size()) != n) {
      fail(ErrorCode::schema, "features.dense: expected " + std::to_string(n) +
                                  " rows, got " + std::to_string(rows.size()));
    }
    const int d = rows.empty() ? 0 : static_cast<int>(rows[0].size());
    require(d > 0, ErrorCode::schema, "features.dense: empty feature rows");
    b.features = ad::Tensor(n, d);
    for (int i = 0; i < n; ++i) {
      if (static_cast<int>(rows[i].size()) != d) {
        fail(ErrorCode::schema,
             "features.dense[" + std::to_string(i) + "]: ragged row");
      }
      for (int c = 0; c < d; ++c) {
        b.features.at(i, c) = rows[i][c].get<double>();
      }
    }
  } else if (feat.contains("sparse")) {
    const auto& sp = feat["sparse"];
    if (!sp.contains("dim") || !sp.contains("rows")) {
      fail(ErrorCode::schema, "features.sparse: needs dim and rows");
    }
    const int d = sp["dim"].get<int>();
    require(d > 0, ErrorCode::schema, "features.sparse.dim must be positive");
    const auto& rows = sp["rows"];
    if (static_cast<int>(rows.size()) != n) {
      fail(ErrorCode::schema, "features.sparse.rows: expected " +
                                  std::to_string(n) + " rows");
    }
    b.features = ad::Tensor(n, d);
    for (int i = 0; i < n; ++i) {
      for (const auto& pair : rows[i]) {
        if (!pair.is_array() || pair.size() != 2) {
          fail(ErrorCode::schema, "features.sparse.rows[" + std::to_string(i) +
                                      "]: expected [index, value] pairs");
        }
        const int idx = pair[0].get<int>();
        require(idx >= 0 && idx < d, ErrorCode::schema,
                "features.sparse.rows[" + std::to_string(i) +
                    "]: index " + std::to_string(idx) + " outside [0, " +
                    std::to_string(d) + ")");
        b.features.at(i, idx) = pair[1].get<double>();
      }
    }
  } else {
    fail(ErrorCode::schema, "features: expected dense or sparse encoding");
  }

  if (!j.contains("labels") || !j.contains("num_classes")) {
    fail(ErrorCode::schema, "labels and num_classes are required");
  }
  b.num_classes = j["num_classes"].get<int>();
  require(b.num_classes > 0, ErrorCode::schema, "num_classes must be positive");
  const auto& labels = j["labels"];
  if (static_cast<int>(labels.size()) != n) {
    fail(ErrorCode::schema,
         "labels: expected " + std::to_string(n) + " entries");
  }
  b.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    b.labels[i] = labels[i].get<int>();
    if (b.labels[i] < 0 || b.labels[i] >= b.num_classes) {
      fail(ErrorCode::schema, "labels[" + std::to_string(i) + "]: " +
                                  std::to_string(b.labels[i]) +
                                  " outside [0, " +
                                  std::to_string(b.num_classes) + ")");
    }
  }

  if (j.contains("splits")) {
    const auto& splits = j["splits"];
    if (!splits.is_object()) fail(ErrorCode::schema, "splits: expected object");
    for (auto it = splits.begin(); it != splits.end(); ++it) {
      SplitMasks m;
      const auto& sj = it.value();
      const std::string at = "splits." + it.key();
      if (sj.contains("train")) m.train = json_id_array(sj["train"], at);
      if (sj.contains("val")) m.val = json_id_array(sj["val"], at);
      if (sj.contains("test")) m.test = json_id_array(sj["test"], at);
      check_mask(m.train, n, at + ".train");
      check_mask(m.val, n, at + ".val");
      check_mask(m.test, n, at + ".test");
      b.splits[it.key()] = std::move(m);
    }
  }

  b.label_rate = j.value("label_rate", label_rate_for(b.name));
  return b;
}

DatasetBundle load_dataset(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::io, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return dataset_from_json(ss.str());
}

std::string dataset_to_json(const DatasetBundle& b) {
  nlohmann::json j;
  j["name"] = b.name;
  j["num_vertices"] = b.hypergraph.num_vertices;
  j["hyperedges"] = b.hypergraph.edge_members.to_lists();
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < b.features.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < b.features.cols(); ++c) row.push_back(b.features(i, c));
    rows.push_back(std::move(row));
  }
  j["features"] = {{"dense", std::move(rows)}};
  j["labels"] = b.labels;
  j["num_classes"] = b.num_classes;
  if (b.label_rate > 0) j["label_rate"] = b.label_rate;
  if (!b.splits.empty()) {
    nlohmann::json splits;
    for (const auto& [key, m] : b.splits) {
      splits[key] = {{"train", m.train}, {"val", m.val}, {"test", m.test}};
    }
    j["splits"] = std::move(splits);
  }
  return j.dump();
}

void save_dataset(const DatasetBundle& bundle, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::io, "cannot write " + path);
  out << dataset_to_json(bundle) << "\n";
}

double label_rate_for(const std::string& name, double fallback) {
  // published per-dataset label rates for the standard academic benchmarks
  static const std::map<std::string, double> table = {
      {"dblp", 0.040},           {"pubmed", 0.008},
      {"citeseer", 0.042},       {"cora-coauthorship", 0.052},
      {"cora-cocitation", 0.052}};
  std::string key = name;
  std::transform(key.begin(), key.end(), key.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  auto it = table.find(key);
  return it != table.end() ? it->second : fallback;
}

SplitMasks make_transductive_split(const DatasetBundle& bundle, int split_id,
                                   double label_rate) {
  require(label_rate > 0.0 && label_rate < 1.0, ErrorCode::invalid_argument,
          "label_rate must lie in (0, 1)");
  const int n = bundle.num_vertices();
  std::vector<std::vector<Id>> by_class(bundle.num_classes);
  for (Id i = 0; i < n; ++i) by_class[bundle.labels[i]].push_back(i);

  std::uint64_t name_hash = 1469598103934665603ULL;
  for (unsigned char c : bundle.name) {
    name_hash = (name_hash ^ c) * 1099511628211ULL;
  }
  Rng rng(mix_seed(name_hash, static_cast<std::uint64_t>(split_id)));

  SplitMasks m;
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    if (members.empty()) continue;
    auto take = static_cast<std::size_t>(
        std::lround(label_rate * static_cast<double>(members.size())));
    take = std::clamp<std::size_t>(take, 1, members.size());
    m.train.insert(m.train.end(), members.begin(), members.begin() + take);
    m.test.insert(m.test.end(), members.begin() + take, members.end());
  }
  std::sort(m.train.begin(), m.train.end());
  std::sort(m.test.begin(), m.test.end());
  return m;
}

SplitMasks with_validation_split(const SplitMasks& base, int split_id) {
  SplitMasks m;
  m.train = base.train;
  std::vector<Id> pool = base.test;
  Rng rng(mix_seed(0x76616c6964ULL, static_cast<std::uint64_t>(split_id)));
  std::shuffle(pool.begin(), pool.end(), rng);
  const auto val_size = pool.size() / 5;  // 20% of the original test split
  m.val.assign(pool.begin(), pool.begin() + val_size);
  m.test.assign(pool.begin() + val_size, pool.end());
  std::sort(m.val.begin(), m.val.end());
  std::sort(m.test.begin(), m.test.end());
  return m;
}

SplitMasks resolve_split(const DatasetBundle& bundle,
                         const std::string& split_id, double label_rate,
                         bool need_validation) {
  SplitMasks base;
  auto stored = bundle.splits.find(split_id);
  int numeric_id = 0;
  try {
    numeric_id = std::stoi(split_id);
  } catch (...) {
    numeric_id = static_cast<int>(std::hash<std::string>{}(split_id) % 1000);
  }
  if (stored != bundle.splits.end()) {
    base = stored->second;
  } else {
    double rate = label_rate > 0 ? label_rate : bundle.label_rate;
    if (rate <= 0) rate = 0.05;
    base = make_transductive_split(bundle, numeric_id, rate);
  }
  require(!base.train.empty(), ErrorCode::empty_mask,
          "split " + split_id + " has no training vertices");
  if (need_validation && base.val.empty()) {
    return with_validation_split(base, numeric_id);
  }
  return base;
}

}  // namespace uhg
