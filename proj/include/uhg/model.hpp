#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uhg/hypergraph.hpp"
#include "uhg/tensor.hpp"

namespace uhg {

enum class Variant { unigcn, unigat, unigin, unisage, unigcnii, unigcn_star };

Variant variant_from_string(const std::string& s);
const char* variant_to_string(Variant v);
// UniGCN/UniGAT/UniGCNII/UniGCN* aggregate over the self-looped incident set;
// UniGIN/UniSAGE over the raw one.
bool variant_needs_self_loops(Variant v);

struct ModelSpec {
  Variant variant = Variant::unigcn;
  int num_layers = 2;
  int input_dim = 0;   // 0 = resolve from the dataset
  int hidden_dim = 64;
  int num_classes = 0;  // 0 = resolve from the dataset
  int heads = 8;
  double dropout = 0.6;
  double attn_dropout = 0.6;
  bool epsilon_learnable = true;
  double alpha = 0.1;
  double lambda = 0.5;
  bool use_norm = true;
  std::uint64_t seed = 1;

  void validate() const;
  nlohmann::json to_json() const;
  static ModelSpec from_json(const nlohmann::json& j);
};

// Precomputed aggregation plans for one hypergraph: stage 1 pools member
// vertices into edges, stage 2 pools incident edges back into vertices. The
// incidence-pair layout (one slot per (vertex, edge) membership, grouped by
// vertex) is shared by the attention kernels.
struct LayerContext {
  int num_vertices = 0;
  int num_edges = 0;
  ad::SegmentMap stage1;
  ad::SegmentMap stage2;
  ad::SegmentMap pair_groups;    // identity map over pair slots, vertex-grouped
  std::vector<Id> pair_vertex;   // vertex of each pair slot
  std::vector<Id> pair_edge;     // edge of each pair slot (= stage2 indices)
  DegreeInfo deg;
  std::vector<double> inv_sqrt_dv;  // 0 where the degree is 0
  std::vector<double> inv_sqrt_de;

  static LayerContext from(const IncidenceStructure& h);
};

struct GatHead {
  ad::Tensor weight;  // in x out
  ad::Tensor attn;    // 2*out x 1, [vertex half; edge half]
};

inline constexpr double kAttentionLeakySlope = 0.2;

ad::Tensor stage1_mean(ad::Tape& t, const ad::Tensor& x,
                       const LayerContext& ctx);
ad::Tensor unigcn_layer(ad::Tape& t, const ad::Tensor& x,
                        const LayerContext& ctx, const ad::Tensor& w);
ad::Tensor unigat_layer(ad::Tape& t, const ad::Tensor& x,
                        const LayerContext& ctx,
                        const std::vector<GatHead>& heads, double attn_dropout,
                        bool training, bool concat_heads, Rng& rng);
ad::Tensor unigin_layer(ad::Tape& t, const ad::Tensor& x,
                        const LayerContext& ctx, const ad::Tensor& w,
                        const ad::Tensor& epsilon);
ad::Tensor unisage_layer(ad::Tape& t, const ad::Tensor& x,
                         const LayerContext& ctx, const ad::Tensor& w);
ad::Tensor unigcnii_layer(ad::Tape& t, const ad::Tensor& x,
                          const ad::Tensor& x0, const LayerContext& ctx,
                          const ad::Tensor& w, double alpha, double beta);
ad::Tensor unigcn_star_layer(ad::Tape& t, const ad::Tensor& x,
                             const LayerContext& ctx, const ad::Tensor& w,
                             bool use_norm);
ad::Tensor sum_readout(ad::Tape& t, const ad::Tensor& embeddings);

struct Param {
  std::string name;
  ad::Tensor tensor;
  bool dense_group = false;  // UniGCNII decays dense and conv differently
};

class Model {
 public:
  explicit Model(ModelSpec spec);

  const ModelSpec& spec() const { return spec_; }
  const std::vector<Param>& params() const { return params_; }
  std::vector<ad::Tensor> param_tensors() const;
  std::vector<double> weight_decays(double conv_wd, double dense_wd) const;

  ad::Tensor forward(ad::Tape& t, const LayerContext& ctx, const ad::Tensor& x,
                     bool training, Rng& rng) const;

  std::vector<std::vector<double>> snapshot() const;
  void restore(const std::vector<std::vector<double>>& snap);

  void save_weights(const std::string& bin_path,
                    const std::string& manifest_path) const;
  static Model load_weights(const std::string& bin_path,
                            const std::string& manifest_path);

 private:
  ad::Tensor param_named(const std::string& name) const;

  ModelSpec spec_;
  std::vector<Param> params_;
};

}  // namespace uhg
