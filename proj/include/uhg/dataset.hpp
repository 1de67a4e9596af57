#pragma once

#include <map>
#include <string>
#include <vector>

#include "uhg/hypergraph.hpp"
#include "uhg/tensor.hpp"

namespace uhg {

struct SplitMasks {
  std::vector<Id> train;
  std::vector<Id> val;
  std::vector<Id> test;
};

struct DatasetBundle {
  std::string name;
  IncidenceStructure hypergraph;
  ad::Tensor features;       // n x d, no grad
  std::vector<int> labels;   // per vertex, in [0, num_classes)
  int num_classes = 0;
  double label_rate = 0.0;   // metadata; 0 = unknown
  std::map<std::string, SplitMasks> splits;

  int num_vertices() const { return hypergraph.num_vertices; }
  int feature_dim() const { return features.cols(); }
};

// Canonical dataset JSON (see README for the schema). Features may be dense
// rows or sparse {"dim": d, "rows": [[[idx, val], ...], ...]}.
DatasetBundle load_dataset(const std::string& path);
DatasetBundle dataset_from_json(const std::string& text);
std::string dataset_to_json(const DatasetBundle& bundle);
void save_dataset(const DatasetBundle& bundle, const std::string& path);

// Known label rates per dataset name; falls back to `fallback` for names
// outside the table.
double label_rate_for(const std::string& name, double fallback = 0.05);

// Stratified-by-class random train/test split at the given label rate,
// deterministic in (name, split_id). val stays empty.
SplitMasks make_transductive_split(const DatasetBundle& bundle, int split_id,
                                   double label_rate);

// Carves a validation set out of 20% of the split's test mask (deterministic
// in split_id); the remaining 80% becomes the new test mask.
SplitMasks with_validation_split(const SplitMasks& base, int split_id);

// Resolves the masks for a run: a stored split when present, otherwise a
// generated stratified one.
SplitMasks resolve_split(const DatasetBundle& bundle,
                         const std::string& split_id, double label_rate,
                         bool need_validation);

}  // namespace uhg
