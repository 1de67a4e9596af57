#include "uhg/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace uhg {

Variant variant_from_string(const std::string& s) {
  if (s == "unigcn") return Variant::unigcn;
  if (s == "unigat") return Variant::unigat;
  if (s == "unigin") return Variant::unigin;
  if (s == "unisage") return Variant::unisage;
  if (s == "unigcnii") return Variant::unigcnii;
  if (s == "unigcn*" || s == "unigcn-star" || s == "unigcn_star") {
    return Variant::unigcn_star;
  }
  fail(ErrorCode::invalid_argument, "unknown model variant: " + s);
}

const char* variant_to_string(Variant v) {
  switch (v) {
    case Variant::unigcn: return "unigcn";
    case Variant::unigat: return "unigat";
    case Variant::unigin: return "unigin";
    case Variant::unisage: return "unisage";
    case Variant::unigcnii: return "unigcnii";
    case Variant::unigcn_star: return "unigcn-star";
  }
  return "?";
}

bool variant_needs_self_loops(Variant v) {
  return v == Variant::unigcn || v == Variant::unigat ||
         v == Variant::unigcnii || v == Variant::unigcn_star;
}

void ModelSpec::validate() const {
  require(num_layers >= 1, ErrorCode::invalid_argument, "num_layers >= 1");
  require(input_dim > 0 && hidden_dim > 0 && num_classes > 0,
          ErrorCode::invalid_argument, "model dimensions must be positive");
  require(heads >= 1, ErrorCode::invalid_argument, "heads >= 1");
  require(dropout >= 0.0 && dropout < 1.0, ErrorCode::invalid_probability,
          "dropout in [0, 1)");
  require(attn_dropout >= 0.0 && attn_dropout < 1.0,
          ErrorCode::invalid_probability, "attn_dropout in [0, 1)");
  if (variant == Variant::unigcnii) {
    require(alpha > 0.0 && alpha < 1.0, ErrorCode::invalid_argument,
            "unigcnii requires 0 < alpha < 1");
    require(lambda > 0.0, ErrorCode::invalid_argument,
            "unigcnii requires lambda > 0");
  }
}

nlohmann::json ModelSpec::to_json() const {
  return nlohmann::json{
      {"variant", variant_to_string(variant)},
      {"num_layers", num_layers},
      {"input_dim", input_dim},
      {"hidden_dim", hidden_dim},
      {"num_classes", num_classes},
      {"heads", heads},
      {"dropout", dropout},
      {"attn_dropout", attn_dropout},
      {"epsilon_learnable", epsilon_learnable},
      {"alpha", alpha},
      {"lambda", lambda},
      {"use_norm", use_norm},
      {"seed", seed},
  };
}

ModelSpec ModelSpec::from_json(const nlohmann::json& j) {
  ModelSpec s;
  if (j.contains("variant")) {
    s.variant = variant_from_string(j.at("variant").get<std::string>());
  }
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("num_layers", s.num_layers);
  get("input_dim", s.input_dim);
  get("hidden_dim", s.hidden_dim);
  get("num_classes", s.num_classes);
  get("heads", s.heads);
  get("dropout", s.dropout);
  get("attn_dropout", s.attn_dropout);
  get("epsilon_learnable", s.epsilon_learnable);
  get("alpha", s.alpha);
  get("lambda", s.lambda);
  get("use_norm", s.use_norm);
  get("seed", s.seed);
  return s;
}

LayerContext LayerContext::from(const IncidenceStructure& h) {
  LayerContext ctx;
  ctx.num_vertices = h.num_vertices;
  ctx.num_edges = h.num_edges();
  ctx.stage1 = ad::SegmentMap::from_ragged(h.edge_members, h.num_vertices);
  ctx.stage2 = ad::SegmentMap::from_ragged(h.vertex_incident, h.num_edges());
  ctx.pair_groups = ad::SegmentMap::contiguous(h.vertex_incident.offsets());
  ctx.pair_edge = ctx.stage2.indices;
  ctx.pair_vertex.resize(ctx.pair_edge.size());
  for (int v = 0; v < h.num_vertices; ++v) {
    for (int s = ctx.stage2.offsets[v]; s < ctx.stage2.offsets[v + 1]; ++s) {
      ctx.pair_vertex[s] = static_cast<Id>(v);
    }
  }
  ctx.deg = degrees(h);
  ctx.inv_sqrt_dv.resize(ctx.deg.d_vertex.size());
  for (std::size_t i = 0; i < ctx.inv_sqrt_dv.size(); ++i) {
    const double d = ctx.deg.d_vertex[i];
    ctx.inv_sqrt_dv[i] = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
  }
  ctx.inv_sqrt_de.resize(ctx.deg.d_edge.size());
  for (std::size_t e = 0; e < ctx.inv_sqrt_de.size(); ++e) {
    const double d = ctx.deg.d_edge[e];
    ctx.inv_sqrt_de[e] = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
  }
  return ctx;
}

ad::Tensor stage1_mean(ad::Tape& t, const ad::Tensor& x,
                       const LayerContext& ctx) {
  return t.segment_mean(x, ctx.stage1);
}

ad::Tensor unigcn_layer(ad::Tape& t, const ad::Tensor& x,
                        const LayerContext& ctx, const ad::Tensor& w) {
  // W is applied to X first; by linearity of mean and weighted sum this
  // matches transforming the edge features, at vertex- rather than
  // edge-count cost.
  auto y = t.matmul(x, w);
  auto he = t.segment_mean(y, ctx.stage1);
  he = t.row_scale(he, ctx.inv_sqrt_de);
  auto agg = t.segment_sum(he, ctx.stage2);
  return t.row_scale(agg, ctx.inv_sqrt_dv);
}

ad::Tensor unigat_layer(ad::Tape& t, const ad::Tensor& x,
                        const LayerContext& ctx,
                        const std::vector<GatHead>& heads, double attn_dropout,
                        bool training, bool concat_heads, Rng& rng) {
  require(!heads.empty(), ErrorCode::invalid_argument, "unigat needs heads");
  std::vector<ad::Tensor> outs;
  outs.reserve(heads.size());
  for (const auto& head : heads) {
    const int out_dim = head.weight.cols();
    auto y = t.matmul(x, head.weight);            // W h_{{i}} rows
    auto he = t.segment_mean(y, ctx.stage1);      // W h_e rows
    auto attn_v = t.row_slice(head.attn, 0, out_dim);
    auto attn_e = t.row_slice(head.attn, out_dim, 2 * out_dim);
    auto score_v = t.matmul(y, attn_v);           // n x 1
    auto score_e = t.matmul(he, attn_e);          // |E| x 1
    auto pair_score =
        t.add(t.gather_rows(score_v, ctx.pair_vertex),
              t.gather_rows(score_e, ctx.pair_edge));
    pair_score = t.leaky_relu(pair_score, kAttentionLeakySlope);
    auto alpha = t.segment_softmax(pair_score, ctx.pair_groups);
    alpha = t.dropout(alpha, attn_dropout, training, rng);
    auto weighted = t.col_mul(t.gather_rows(he, ctx.pair_edge), alpha);
    outs.push_back(t.segment_sum(weighted, ctx.pair_groups));
  }
  if (outs.size() == 1) return outs[0];
  if (concat_heads) return t.concat_cols(outs);
  auto acc = outs[0];
  for (std::size_t k = 1; k < outs.size(); ++k) acc = t.add(acc, outs[k]);
  return t.scale(acc, 1.0 / static_cast<double>(outs.size()));
}

ad::Tensor unigin_layer(ad::Tape& t, const ad::Tensor& x,
                        const LayerContext& ctx, const ad::Tensor& w,
                        const ad::Tensor& epsilon) {
  auto he = t.segment_mean(x, ctx.stage1);
  auto agg = t.segment_sum(he, ctx.stage2);
  auto one_plus_eps =
      t.add(ad::Tensor::full(1, 1, 1.0), epsilon);
  auto self = t.scalar_mul(x, one_plus_eps);
  return t.matmul(t.add(self, agg), w);
}

ad::Tensor unisage_layer(ad::Tape& t, const ad::Tensor& x,
                         const LayerContext& ctx, const ad::Tensor& w) {
  auto he = t.segment_mean(x, ctx.stage1);
  auto agg = t.segment_sum(he, ctx.stage2);  // SUM aggregator
  return t.matmul(t.add(x, agg), w);
}

ad::Tensor unigcnii_layer(ad::Tape& t, const ad::Tensor& x,
                          const ad::Tensor& x0, const LayerContext& ctx,
                          const ad::Tensor& w, double alpha, double beta) {
  auto he = t.segment_mean(x, ctx.stage1);
  he = t.row_scale(he, ctx.inv_sqrt_de);
  auto xhat = t.row_scale(t.segment_sum(he, ctx.stage2), ctx.inv_sqrt_dv);
  auto mixed = t.add(t.scale(xhat, 1.0 - alpha), t.scale(x0, alpha));
  // ((1-beta) I + beta W) applied to the mixed representation
  return t.add(t.scale(mixed, 1.0 - beta),
               t.scale(t.matmul(mixed, w), beta));
}

ad::Tensor unigcn_star_layer(ad::Tape& t, const ad::Tensor& x,
                             const LayerContext& ctx, const ad::Tensor& w,
                             bool use_norm) {
  auto he = t.segment_mean(x, ctx.stage1);
  he = t.row_scale(he, ctx.inv_sqrt_de);
  auto agg = t.row_scale(t.segment_sum(he, ctx.stage2), ctx.inv_sqrt_dv);
  if (use_norm) agg = t.row_l2_normalize(agg);
  return t.matmul(agg, w);
}

ad::Tensor sum_readout(ad::Tape& t, const ad::Tensor& embeddings) {
  return t.sum_rows(embeddings);
}

namespace {

ad::Tensor glorot(int rows, int cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> uni(-limit, limit);
  ad::Tensor t(rows, cols, true);
  for (double& v : t.values()) v = uni(rng);
  return t;
}

}  // namespace

Model::Model(ModelSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  Rng rng(spec_.seed);
  const int L = spec_.num_layers;
  switch (spec_.variant) {
    case Variant::unigcn:
    case Variant::unisage:
    case Variant::unigcn_star: {
      for (int l = 0; l < L; ++l) {
        const int in = l == 0 ? spec_.input_dim : spec_.hidden_dim;
        const int out = l == L - 1 ? spec_.num_classes : spec_.hidden_dim;
        params_.push_back({"w" + std::to_string(l), glorot(in, out, rng)});
      }
      break;
    }
    case Variant::unigin: {
      for (int l = 0; l < L; ++l) {
        const int in = l == 0 ? spec_.input_dim : spec_.hidden_dim;
        const int out = l == L - 1 ? spec_.num_classes : spec_.hidden_dim;
        params_.push_back({"w" + std::to_string(l), glorot(in, out, rng)});
        ad::Tensor eps(1, 1, spec_.epsilon_learnable);
        params_.push_back({"eps" + std::to_string(l), eps});
      }
      break;
    }
    case Variant::unigat: {
      for (int l = 0; l < L; ++l) {
        const bool last = l == L - 1;
        const int in = l == 0 ? spec_.input_dim : spec_.hidden_dim * spec_.heads;
        const int out = last ? spec_.num_classes : spec_.hidden_dim;
        for (int k = 0; k < spec_.heads; ++k) {
          const std::string tag =
              std::to_string(l) + "h" + std::to_string(k);
          params_.push_back({"w" + tag, glorot(in, out, rng)});
          params_.push_back({"a" + tag, glorot(2 * out, 1, rng)});
        }
      }
      break;
    }
    case Variant::unigcnii: {
      params_.push_back(
          {"w_in", glorot(spec_.input_dim, spec_.hidden_dim, rng), true});
      params_.push_back({"b_in", ad::Tensor(1, spec_.hidden_dim, true), true});
      for (int l = 0; l < L; ++l) {
        params_.push_back({"w_conv" + std::to_string(l),
                           glorot(spec_.hidden_dim, spec_.hidden_dim, rng)});
      }
      params_.push_back(
          {"w_out", glorot(spec_.hidden_dim, spec_.num_classes, rng), true});
      params_.push_back(
          {"b_out", ad::Tensor(1, spec_.num_classes, true), true});
      break;
    }
  }
}

std::vector<ad::Tensor> Model::param_tensors() const {
  std::vector<ad::Tensor> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.tensor);
  return out;
}

std::vector<double> Model::weight_decays(double conv_wd,
                                         double dense_wd) const {
  std::vector<double> out;
  out.reserve(params_.size());
  for (const auto& p : params_) {
    out.push_back(p.dense_group ? dense_wd : conv_wd);
  }
  return out;
}

ad::Tensor Model::param_named(const std::string& name) const {
  for (const auto& p : params_) {
    if (p.name == name) return p.tensor;
  }
  fail(ErrorCode::internal, "parameter " + name + " not found");
}

ad::Tensor Model::forward(ad::Tape& t, const LayerContext& ctx,
                          const ad::Tensor& x, bool training, Rng& rng) const {
  require(x.cols() == spec_.input_dim, ErrorCode::dimension_mismatch,
          "feature width " + std::to_string(x.cols()) +
              " != model input_dim " + std::to_string(spec_.input_dim));
  require(x.rows() == ctx.num_vertices, ErrorCode::dimension_mismatch,
          "feature rows != hypergraph vertices");
  const int L = spec_.num_layers;

  if (spec_.variant == Variant::unigcnii) {
    auto cur = t.dropout(x, spec_.dropout, training, rng);
    cur = t.add_row_broadcast(t.matmul(cur, param_named("w_in")),
                              param_named("b_in"));
    cur = t.relu(cur);
    auto x0 = cur;
    for (int l = 0; l < L; ++l) {
      cur = t.dropout(cur, spec_.dropout, training, rng);
      const double beta =
          std::log(spec_.lambda / static_cast<double>(l + 1) + 1.0);
      cur = unigcnii_layer(t, cur, x0, ctx,
                           param_named("w_conv" + std::to_string(l)),
                           spec_.alpha, beta);
      if (spec_.use_norm) cur = t.row_l2_normalize(cur);
      cur = t.relu(cur);
    }
    cur = t.dropout(cur, spec_.dropout, training, rng);
    return t.add_row_broadcast(t.matmul(cur, param_named("w_out")),
                               param_named("b_out"));
  }

  auto cur = x;
  for (int l = 0; l < L; ++l) {
    const bool last = l == L - 1;
    cur = t.dropout(cur, spec_.dropout, training, rng);
    switch (spec_.variant) {
      case Variant::unigcn:
        cur = unigcn_layer(t, cur, ctx, param_named("w" + std::to_string(l)));
        break;
      case Variant::unigcn_star:
        cur = unigcn_star_layer(t, cur, ctx,
                                param_named("w" + std::to_string(l)),
                                spec_.use_norm);
        break;
      case Variant::unigin:
        cur = unigin_layer(t, cur, ctx, param_named("w" + std::to_string(l)),
                           param_named("eps" + std::to_string(l)));
        break;
      case Variant::unisage:
        cur = unisage_layer(t, cur, ctx,
                            param_named("w" + std::to_string(l)));
        break;
      case Variant::unigat: {
        std::vector<GatHead> heads;
        heads.reserve(spec_.heads);
        const std::string ls = std::to_string(l);
        for (int k = 0; k < spec_.heads; ++k) {
          const std::string tag = ls + "h" + std::to_string(k);
          heads.push_back({param_named("w" + tag), param_named("a" + tag)});
        }
        cur = unigat_layer(t, cur, ctx, heads, spec_.attn_dropout, training,
                           /*concat_heads=*/!last, rng);
        break;
      }
      case Variant::unigcnii:
        break;  // handled above
    }
    if (!last) {
      if (spec_.use_norm && spec_.variant != Variant::unigcn_star) {
        cur = t.row_l2_normalize(cur);
      }
      cur = t.relu(cur);
    }
  }
  return cur;
}

std::vector<std::vector<double>> Model::snapshot() const {
  std::vector<std::vector<double>> snap;
  snap.reserve(params_.size());
  for (const auto& p : params_) snap.push_back(p.tensor.values());
  return snap;
}

void Model::restore(const std::vector<std::vector<double>>& snap) {
  require(snap.size() == params_.size(), ErrorCode::invalid_argument,
          "snapshot layout mismatch");
  for (std::size_t i = 0; i < snap.size(); ++i) {
    require(snap[i].size() == params_[i].tensor.values().size(),
            ErrorCode::invalid_argument, "snapshot layout mismatch");
    params_[i].tensor.values() = snap[i];
  }
}

void Model::save_weights(const std::string& bin_path,
                         const std::string& manifest_path) const {
  nlohmann::json manifest;
  manifest["model"] = spec_.to_json();
  manifest["dtype"] = "f64le";
  nlohmann::json plist = nlohmann::json::array();
  std::ofstream bin(bin_path, std::ios::binary);
  require(bin.good(), ErrorCode::io, "cannot write " + bin_path);
  std::size_t offset = 0;
  for (const auto& p : params_) {
    plist.push_back({{"name", p.name},
                     {"rows", p.tensor.rows()},
                     {"cols", p.tensor.cols()},
                     {"offset", offset}});
    // doubles are written little-endian; this toolchain is little-endian
    bin.write(reinterpret_cast<const char*>(p.tensor.values().data()),
              static_cast<std::streamsize>(p.tensor.values().size() *
                                           sizeof(double)));
    offset += p.tensor.values().size() * sizeof(double);
  }
  manifest["params"] = plist;
  manifest["total_bytes"] = offset;
  std::ofstream mj(manifest_path);
  require(mj.good(), ErrorCode::io, "cannot write " + manifest_path);
  mj << manifest.dump(2) << "\n";
}

Model Model::load_weights(const std::string& bin_path,
                          const std::string& manifest_path) {
  std::ifstream mj(manifest_path);
  require(mj.good(), ErrorCode::io, "cannot open " + manifest_path);
  nlohmann::json manifest;
  try {
    mj >> manifest;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::schema, std::string("weights manifest: ") + e.what());
  }
  Model model(ModelSpec::from_json(manifest.at("model")));
  std::ifstream bin(bin_path, std::ios::binary);
  require(bin.good(), ErrorCode::io, "cannot open " + bin_path);
  const auto& plist = manifest.at("params");
  require(plist.size() == model.params_.size(), ErrorCode::schema,
          "weights manifest does not match the model layout");
  for (std::size_t i = 0; i < model.params_.size(); ++i) {
    auto& p = model.params_[i];
    const auto& entry = plist[i];
    require(entry.at("name").get<std::string>() == p.name &&
                entry.at("rows").get<int>() == p.tensor.rows() &&
                entry.at("cols").get<int>() == p.tensor.cols(),
            ErrorCode::schema, "weights manifest entry mismatch at " + p.name);
    bin.read(reinterpret_cast<char*>(p.tensor.values().data()),
             static_cast<std::streamsize>(p.tensor.values().size() *
                                          sizeof(double)));
    require(bin.good(), ErrorCode::io, "weights blob truncated at " + p.name);
  }
  return model;
}

}  // namespace uhg
