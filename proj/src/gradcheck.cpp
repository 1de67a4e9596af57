#include "uhg/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>

#include "uhg/fixtures.hpp"
#include "uhg/model.hpp"
#include "uhg/tensor.hpp"

namespace uhg::gradcheck {

namespace {

using ad::Precision;
using ad::SegmentMap;
using ad::Tape;
using ad::Tensor;

constexpr double kKinkMarginFloor = 1e-3;

// One differentiable program: leaf inputs plus a loss evaluator. The
// evaluator must be a pure function of the leaf values so central
// differences are meaningful.
struct Scenario {
  std::vector<Tensor> inputs;
  std::function<Tensor(Tape&)> loss;
  double kink_margin = std::numeric_limits<double>::infinity();
};

double eval_loss(const Scenario& s) {
  Tape tape(Precision::f64, /*grad_enabled=*/false);
  tape.set_check_finite(true);
  return s.loss(tape).values()[0];
}

// Returns the max relative FD error over every entry of every leaf input.
double run_scenario(Scenario& s, double h, int& entries) {
  Tape tape(Precision::f64);
  tape.set_check_finite(true);
  Tensor loss = s.loss(tape);
  s.kink_margin = tape.kink_margin();
  for (auto& in : s.inputs) in.zero_grad();
  tape.backward(loss);

  double worst = 0.0;
  for (auto& in : s.inputs) {
    if (!in.requires_grad()) continue;
    for (std::size_t k = 0; k < in.values().size(); ++k) {
      const double saved = in.values()[k];
      in.values()[k] = saved + h;
      const double up = eval_loss(s);
      in.values()[k] = saved - h;
      const double down = eval_loss(s);
      in.values()[k] = saved;
      const double fd = (up - down) / (2.0 * h);
      const double an = in.grad()[k];
      const double rel =
          std::abs(fd - an) / std::max({1e-3, std::abs(fd), std::abs(an)});
      worst = std::max(worst, rel);
      ++entries;
    }
  }
  return worst;
}

Tensor randn(int rows, int cols, Rng& rng, bool rg = true,
             double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Tensor t(rows, cols, rg);
  for (double& v : t.values()) v = g(rng);
  return t;
}

// Random data bounded away from the relu kink.
Tensor randn_nudged(int rows, int cols, Rng& rng, double margin = 0.05) {
  Tensor t = randn(rows, cols, rng);
  for (double& v : t.values()) {
    if (std::abs(v) < margin) v = v < 0 ? v - margin : v + margin;
  }
  return t;
}

std::vector<double> rand_weights(int count, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> w(count);
  for (double& x : w) x = g(rng);
  return w;
}

int dim(Rng& rng, int lo = 1, int hi = 6) {
  std::uniform_int_distribution<int> d(lo, hi);
  return d(rng);
}

// Loss head shared by most op scenarios: project the op output with fixed
// random weights so every output entry carries gradient signal.
Tensor project(Tape& t, const Tensor& out, const std::vector<double>& w) {
  return t.weighted_sum(out, w);
}

SegmentMap random_gather_map(int num_sources, int num_groups, Rng& rng,
                             bool allow_empty) {
  SegmentMap m;
  m.num_sources = num_sources;
  m.offsets.push_back(0);
  std::uniform_int_distribution<int> szd(allow_empty ? 0 : 1, 3);
  std::uniform_int_distribution<int> srcd(0, num_sources - 1);
  for (int g = 0; g < num_groups; ++g) {
    const int sz = szd(rng);
    for (int k = 0; k < sz; ++k) m.indices.push_back(srcd(rng));
    m.offsets.push_back(static_cast<int>(m.indices.size()));
  }
  return m;
}

// Partition of [0, slots) into contiguous-by-shuffle groups; used for the
// softmax contract where each slot belongs to exactly one group.
SegmentMap random_partition_map(int slots, Rng& rng) {
  std::vector<Id> order(slots);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  SegmentMap m;
  m.num_sources = slots;
  m.offsets.push_back(0);
  std::size_t at = 0;
  std::uniform_int_distribution<int> szd(1, 3);
  while (at < order.size()) {
    const auto sz = std::min<std::size_t>(szd(rng), order.size() - at);
    for (std::size_t k = 0; k < sz; ++k) m.indices.push_back(order[at + k]);
    m.offsets.push_back(static_cast<int>(m.indices.size()));
    at += sz;
  }
  return m;
}

using ScenarioGen = std::function<Scenario(Rng&)>;

std::vector<std::pair<std::string, ScenarioGen>> op_scenarios() {
  std::vector<std::pair<std::string, ScenarioGen>> gens;

  gens.emplace_back("matmul", [](Rng& rng) {
    const int n = dim(rng), k = dim(rng), m = dim(rng);
    Scenario s;
    Tensor a = randn(n, k, rng), b = randn(k, m, rng);
    auto w = rand_weights(n * m, rng);
    s.inputs = {a, b};
    s.loss = [=](Tape& t) { return project(t, t.matmul(a, b), w); };
    return s;
  });

  gens.emplace_back("add", [](Rng& rng) {
    const int n = dim(rng), m = dim(rng);
    Scenario s;
    Tensor a = randn(n, m, rng), b = randn(n, m, rng);
    auto w = rand_weights(n * m, rng);
    s.inputs = {a, b};
    s.loss = [=](Tape& t) { return project(t, t.add(a, b), w); };
    return s;
  });

  gens.emplace_back("sub", [](Rng& rng) {
    const int n = dim(rng), m = dim(rng);
    Scenario s;
    Tensor a = randn(n, m, rng), b = randn(n, m, rng);
    auto w = rand_weights(n * m, rng);
    s.inputs = {a, b};
    s.loss = [=](Tape& t) { return project(t, t.sub(a, b), w); };
    return s;
  });

  gens.emplace_back("scale", [](Rng& rng) {
    const int n = dim(rng), m = dim(rng);
    Scenario s;
    Tensor a = randn(n, m, rng);
    auto w = rand_weights(n * m, rng);
    std::normal_distribution<double> g;
    const double c = g(rng);
    s.inputs = {a};
    s.loss = [=](Tape& t) { return project(t, t.scale(a, c), w); };
    return s;
  });

  gens.emplace_back("scalar_mul", [](Rng& rng) {
    const int n = dim(rng), m = dim(rng);
    Scenario s;
    Tensor a = randn(n, m, rng), c = randn(1, 1, rng);
    auto w = rand_weights(n * m, rng);
    s.inputs = {a, c};
    s.loss = [=](Tape& t) { return project(t, t.scalar_mul(a, c), w); };
    return s;
  });

  gens.emplace_back("add_row_broadcast", [](Rng& rng) {
    const int n = dim(rng), m = dim(rng);
    Scenario s;
    Tensor a = randn(n, m, rng), b = randn(1, m, rng);
    auto w = rand_weights(n * m, rng);
    s.inputs = {a, b};
    s.loss = [=](Tape& t) { return project(t, t.add_row_broadcast(a, b), w); };
    return s;
  });

  gens.emplace_back("concat_cols", [](Rng& rng) {
    const int n = dim(rng), m1 = dim(rng), m2 = dim(rng);
    Scenario s;
    Tensor a = randn(n, m1, rng), b = randn(n, m2, rng);
    auto w = rand_weights(n * (m1 + m2), rng);
    s.inputs = {a, b};
    s.loss = [=](Tape& t) {
      return project(t, t.concat_cols({a, b}), w);
    };
    return s;
  });

  gens.emplace_back("row_slice", [](Rng& rng) {
    const int n = dim(rng, 2), m = dim(rng);
    std::uniform_int_distribution<int> lo(0, n - 1);
    const int r0 = lo(rng);
    std::uniform_int_distribution<int> hi(r0 + 1, n);
    const int r1 = hi(rng);
    Scenario s;
    Tensor a = randn(n, m, rng);
    auto w = rand_weights((r1 - r0) * m, rng);
    s.inputs = {a};
    s.loss = [=](Tape& t) { return project(t, t.row_slice(a, r0, r1), w); };
    return s;
  });

  gens.emplace_back("gather_rows", [](Rng& rng) {
    const int n = dim(rng), m = dim(rng), p = dim(rng);
    std::uniform_int_distribution<int> rowd(0, n - 1);
    std::vector<Id> rows(p);
    for (Id& r : rows) r = rowd(rng);
    Scenario s;
    Tensor a = randn(n, m, rng);
    auto w = rand_weights(p * m, rng);
    s.inputs = {a};
    s.loss = [=](Tape& t) { return project(t, t.gather_rows(a, rows), w); };
    return s;
  });

  gens.emplace_back("row_scale", [](Rng& rng) {
    const int n = dim(rng), m = dim(rng);
    Scenario s;
    Tensor a = randn(n, m, rng);
    auto scales = rand_weights(n, rng);
    auto w = rand_weights(n * m, rng);
    s.inputs = {a};
    s.loss = [=](Tape& t) { return project(t, t.row_scale(a, scales), w); };
    return s;
  });

  gens.emplace_back("col_mul", [](Rng& rng) {
    const int n = dim(rng), m = dim(rng);
    Scenario s;
    Tensor a = randn(n, m, rng), c = randn(n, 1, rng);
    auto w = rand_weights(n * m, rng);
    s.inputs = {a, c};
    s.loss = [=](Tape& t) { return project(t, t.col_mul(a, c), w); };
    return s;
  });

  gens.emplace_back("segment_mean", [](Rng& rng) {
    const int src = dim(rng, 2), m = dim(rng), groups = dim(rng);
    auto map = random_gather_map(src, groups, rng, /*allow_empty=*/false);
    Scenario s;
    Tensor x = randn(src, m, rng);
    auto w = rand_weights(groups * m, rng);
    s.inputs = {x};
    s.loss = [=](Tape& t) { return project(t, t.segment_mean(x, map), w); };
    return s;
  });

  gens.emplace_back("segment_sum", [](Rng& rng) {
    const int src = dim(rng, 2), m = dim(rng), groups = dim(rng);
    auto map = random_gather_map(src, groups, rng, /*allow_empty=*/true);
    Scenario s;
    Tensor x = randn(src, m, rng);
    auto w = rand_weights(groups * m, rng);
    s.inputs = {x};
    s.loss = [=](Tape& t) { return project(t, t.segment_sum(x, map), w); };
    return s;
  });

  gens.emplace_back("segment_softmax", [](Rng& rng) {
    const int slots = dim(rng, 2, 8);
    auto map = random_partition_map(slots, rng);
    Scenario s;
    Tensor x = randn(slots, 1, rng);
    auto w = rand_weights(slots, rng);
    s.inputs = {x};
    s.loss = [=](Tape& t) { return project(t, t.segment_softmax(x, map), w); };
    return s;
  });

  gens.emplace_back("relu", [](Rng& rng) {
    const int n = dim(rng), m = dim(rng);
    Scenario s;
    Tensor a = randn_nudged(n, m, rng);
    auto w = rand_weights(n * m, rng);
    s.inputs = {a};
    s.loss = [=](Tape& t) { return project(t, t.relu(a), w); };
    return s;
  });

  gens.emplace_back("leaky_relu", [](Rng& rng) {
    const int n = dim(rng), m = dim(rng);
    Scenario s;
    Tensor a = randn_nudged(n, m, rng);
    auto w = rand_weights(n * m, rng);
    s.inputs = {a};
    s.loss = [=](Tape& t) {
      return project(t, t.leaky_relu(a, 0.2), w);
    };
    return s;
  });

  gens.emplace_back("dropout", [](Rng& rng) {
    const int n = dim(rng), m = dim(rng);
    Scenario s;
    Tensor a = randn(n, m, rng);
    auto w = rand_weights(n * m, rng);
    const std::uint64_t mask_seed = rng();
    s.inputs = {a};
    // the mask is a pure function of the replayed seed, so FD sees a fixed
    // linear map
    s.loss = [=](Tape& t) {
      Rng mask_rng(mask_seed);
      return project(t, t.dropout(a, 0.4, true, mask_rng), w);
    };
    return s;
  });

  gens.emplace_back("row_l2_normalize", [](Rng& rng) {
    const int n = dim(rng), m = dim(rng);
    Scenario s;
    Tensor a = randn(n, m, rng);
    // keep rows away from the zero-row fixed point
    for (int r = 0; r < n; ++r) a.at(r, 0) += a(r, 0) < 0 ? -1.0 : 1.0;
    auto w = rand_weights(n * m, rng);
    s.inputs = {a};
    s.loss = [=](Tape& t) { return project(t, t.row_l2_normalize(a), w); };
    return s;
  });

  gens.emplace_back("sum_rows", [](Rng& rng) {
    const int n = dim(rng), m = dim(rng);
    Scenario s;
    Tensor a = randn(n, m, rng);
    auto w = rand_weights(m, rng);
    s.inputs = {a};
    s.loss = [=](Tape& t) { return project(t, t.sum_rows(a), w); };
    return s;
  });

  gens.emplace_back("weighted_sum", [](Rng& rng) {
    const int n = dim(rng), m = dim(rng);
    Scenario s;
    Tensor a = randn(n, m, rng);
    auto w = rand_weights(n * m, rng);
    s.inputs = {a};
    s.loss = [=](Tape& t) { return t.weighted_sum(a, w); };
    return s;
  });

  gens.emplace_back("softmax_cross_entropy", [](Rng& rng) {
    const int n = dim(rng, 2), c = dim(rng, 2);
    Scenario s;
    Tensor logits = randn(n, c, rng);
    std::uniform_int_distribution<int> labd(0, c - 1);
    std::vector<int> labels(n);
    for (int& l : labels) l = labd(rng);
    std::vector<Id> mask;
    for (Id i = 0; i < n; ++i) {
      if (i == 0 || rng() % 2 == 0) mask.push_back(i);
    }
    s.inputs = {logits};
    s.loss = [=](Tape& t) {
      return t.softmax_cross_entropy(logits, labels, mask);
    };
    return s;
  });

  return gens;
}

CheckResult run_checks(const std::string& name, const ScenarioGen& gen,
                       std::uint64_t seed, int trials, double h, double tol) {
  CheckResult r;
  r.name = name;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(trial)));
    // resample while a kink sits inside the FD window
    for (int attempt = 0; attempt < 64; ++attempt) {
      Scenario s = gen(rng);
      int entries = 0;
      const double err = run_scenario(s, h, entries);
      if (s.kink_margin < kKinkMarginFloor) continue;
      r.max_rel_err = std::max(r.max_rel_err, err);
      r.entries_checked += entries;
      break;
    }
  }
  r.pass = r.max_rel_err < tol;
  return r;
}

}  // namespace

std::vector<std::string> all_op_names() {
  std::vector<std::string> names;
  for (const auto& [name, gen] : op_scenarios()) names.push_back(name);
  return names;
}

Summary check_ops(const std::vector<std::string>& ops, std::uint64_t seed,
                  int trials, double h, double tol) {
  Summary summary;
  summary.step = h;
  summary.tolerance = tol;
  auto gens = op_scenarios();
  for (const auto& [name, gen] : gens) {
    if (!ops.empty() &&
        std::find(ops.begin(), ops.end(), name) == ops.end()) {
      continue;
    }
    auto r = run_checks(name, gen, mix_seed(seed, std::hash<std::string>{}(name)),
                        trials, h, tol);
    summary.max_rel_err = std::max(summary.max_rel_err, r.max_rel_err);
    summary.pass = summary.pass && r.pass;
    summary.checks.push_back(std::move(r));
  }
  require(!summary.checks.empty(), ErrorCode::invalid_argument,
          "no ops matched the requested gradcheck list");
  return summary;
}

Summary check_models(std::uint64_t seed, int trials, double h, double tol) {
  Summary summary;
  summary.step = h;
  summary.tolerance = tol;
  const Variant variants[] = {Variant::unigcn,   Variant::unigat,
                              Variant::unigin,   Variant::unisage,
                              Variant::unigcnii, Variant::unigcn_star};
  for (Variant v : variants) {
    ScenarioGen gen = [v](Rng& rng) {
      IncidenceStructure h =
          fixtures::random_hypergraph_shaped(4 + static_cast<int>(rng() % 5),
                                             3 + static_cast<int>(rng() % 4),
                                             3, rng);
      if (variant_needs_self_loops(v)) h = add_self_loops(h);
      auto ctx = std::make_shared<LayerContext>(LayerContext::from(h));
      ModelSpec spec;
      spec.variant = v;
      spec.num_layers = 2;
      spec.input_dim = 5;
      spec.hidden_dim = 4;
      spec.num_classes = 3;
      spec.heads = 2;
      spec.dropout = 0.0;       // keeps the loss a pure function of the leaves
      spec.attn_dropout = 0.0;
      spec.alpha = 0.3;
      spec.lambda = 1.5;
      spec.use_norm = true;
      spec.seed = rng();
      auto model = std::make_shared<Model>(spec);
      Tensor x = randn(h.num_vertices, spec.input_dim, rng, /*rg=*/false);
      std::uniform_int_distribution<int> labd(0, spec.num_classes - 1);
      auto labels = std::make_shared<std::vector<int>>(h.num_vertices);
      for (int& l : *labels) l = labd(rng);
      std::vector<Id> mask(h.num_vertices);
      std::iota(mask.begin(), mask.end(), 0);

      Scenario s;
      s.inputs = model->param_tensors();
      s.loss = [model, ctx, x, labels, mask](Tape& t) {
        Rng unused(0);
        auto logits = model->forward(t, *ctx, x, /*training=*/false, unused);
        return t.softmax_cross_entropy(logits, *labels, mask);
      };
      return s;
    };
    auto r = run_checks(std::string("model_") + variant_to_string(v), gen,
                        mix_seed(seed, static_cast<std::uint64_t>(v)), trials,
                        h, tol);
    summary.max_rel_err = std::max(summary.max_rel_err, r.max_rel_err);
    summary.pass = summary.pass && r.pass;
    summary.checks.push_back(std::move(r));
  }
  return summary;
}

Summary merge(const Summary& a, const Summary& b) {
  Summary out = a;
  out.max_rel_err = std::max(a.max_rel_err, b.max_rel_err);
  out.pass = a.pass && b.pass;
  out.checks.insert(out.checks.end(), b.checks.begin(), b.checks.end());
  return out;
}

nlohmann::json summary_to_json(const Summary& s) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : s.checks) {
    checks.push_back({{"name", c.name},
                      {"max_rel_err", c.max_rel_err},
                      {"entries_checked", c.entries_checked},
                      {"pass", c.pass}});
  }
  return nlohmann::json{{"tolerance", s.tolerance},
                        {"step", s.step},
                        {"max_rel_err", s.max_rel_err},
                        {"pass", s.pass},
                        {"checks", std::move(checks)}};
}

}  // namespace uhg::gradcheck
