#include "uhg/gwl.hpp"

#include <algorithm>
#include <numeric>

namespace uhg::gwl {

namespace {
constexpr std::int64_t kEdgeKind = 0;
constexpr std::int64_t kVertexKind = 1;
}  // namespace

int Dictionary::code_for(const std::vector<std::int64_t>& signature) {
  auto [it, inserted] =
      codes_.emplace(signature, static_cast<int>(reverse_.size()));
  if (inserted) reverse_.push_back(&it->first);
  return it->second;
}

const std::vector<std::int64_t>& Dictionary::signature_of(int code) const {
  require(code >= 0 && code < static_cast<int>(reverse_.size()),
          ErrorCode::index_out_of_range, "unknown dictionary code");
  return *reverse_[code];
}

ColorAssignment initial_colors(const IncidenceStructure& h) {
  ColorAssignment c;
  c.vertex_colors.assign(h.num_vertices, 0);
  c.edge_colors.assign(h.num_edges(), -1);
  c.iteration = 0;
  return c;
}

Histogram vertex_histogram(const ColorAssignment& colors) {
  std::map<int, int> counts;
  for (int c : colors.vertex_colors) counts[c]++;
  return Histogram(counts.begin(), counts.end());
}

ColorAssignment refine_step(const IncidenceStructure& h,
                            const ColorAssignment& colors, Dictionary& dict) {
  ColorAssignment next;
  next.iteration = colors.iteration + 1;
  next.edge_colors.resize(h.num_edges());
  std::vector<std::int64_t> sig;
  for (int e = 0; e < h.num_edges(); ++e) {
    auto members = h.edge_members[e];
    sig.clear();
    sig.push_back(kEdgeKind);
    sig.push_back(static_cast<std::int64_t>(members.size()));
    for (Id v : members) sig.push_back(colors.vertex_colors[v]);
    std::sort(sig.begin() + 2, sig.end());
    next.edge_colors[e] = dict.code_for(sig);
  }
  next.vertex_colors.resize(h.num_vertices);
  std::vector<std::int64_t> edge_part;
  for (int v = 0; v < h.num_vertices; ++v) {
    auto incident = h.vertex_incident[v];
    sig.clear();
    sig.push_back(kVertexKind);
    sig.push_back(static_cast<std::int64_t>(incident.size()));
    if (incident.empty()) {
      sig.push_back(colors.vertex_colors[v]);
    } else {
      // every pair shares the same own-color, so sorting edge colors sorts
      // the (own, edge) pair multiset
      edge_part.clear();
      for (Id e : incident) edge_part.push_back(next.edge_colors[e]);
      std::sort(edge_part.begin(), edge_part.end());
      for (std::int64_t ec : edge_part) {
        sig.push_back(colors.vertex_colors[v]);
        sig.push_back(ec);
      }
    }
    next.vertex_colors[v] = dict.code_for(sig);
  }
  return next;
}

namespace {

// Canonical form of a coloring: relabel colors by first occurrence so two
// assignments induce the same partition iff their canonical forms match.
std::vector<int> canonical_partition(const std::vector<int>& colors) {
  std::vector<int> canon(colors.size());
  std::map<int, int> relabel;
  for (std::size_t i = 0; i < colors.size(); ++i) {
    canon[i] =
        relabel.emplace(colors[i], static_cast<int>(relabel.size()))
            .first->second;
  }
  return canon;
}

int structural_cap(const IncidenceStructure& h) {
  return h.num_vertices * std::max(1, h.num_edges());
}

}  // namespace

RefinementTrace refine_to_stability(const IncidenceStructure& h,
                                    int max_iters, Dictionary* shared) {
  Dictionary local;
  Dictionary& dict = shared ? *shared : local;
  if (max_iters <= 0) max_iters = structural_cap(h);
  RefinementTrace trace;
  ColorAssignment colors = initial_colors(h);
  trace.histograms.push_back(vertex_histogram(colors));
  std::vector<int> prev = canonical_partition(colors.vertex_colors);
  for (int t = 1; t <= max_iters; ++t) {
    colors = refine_step(h, colors, dict);
    trace.histograms.push_back(vertex_histogram(colors));
    std::vector<int> cur = canonical_partition(colors.vertex_colors);
    if (cur == prev) {
      trace.stabilization_iteration = t;
      trace.stabilized = true;
      return trace;
    }
    prev = std::move(cur);
  }
  trace.stabilization_iteration = max_iters;
  trace.stabilized = false;
  return trace;
}

DistinguishResult distinguish(const IncidenceStructure& a,
                              const IncidenceStructure& b, int max_iters) {
  if (max_iters <= 0) {
    max_iters = std::max(structural_cap(a), structural_cap(b));
  }
  Dictionary dict;
  ColorAssignment ca = initial_colors(a);
  ColorAssignment cb = initial_colors(b);
  if (vertex_histogram(ca) != vertex_histogram(cb)) {
    return {Verdict::distinguishable, 0};
  }
  std::vector<int> prev_a = canonical_partition(ca.vertex_colors);
  std::vector<int> prev_b = canonical_partition(cb.vertex_colors);
  bool stable_a = false, stable_b = false;
  for (int t = 1; t <= max_iters; ++t) {
    ca = refine_step(a, ca, dict);
    cb = refine_step(b, cb, dict);
    if (vertex_histogram(ca) != vertex_histogram(cb)) {
      return {Verdict::distinguishable, t};
    }
    std::vector<int> cur_a = canonical_partition(ca.vertex_colors);
    std::vector<int> cur_b = canonical_partition(cb.vertex_colors);
    stable_a = cur_a == prev_a;
    stable_b = cur_b == prev_b;
    if (stable_a && stable_b) return {Verdict::not_distinguished, t};
    prev_a = std::move(cur_a);
    prev_b = std::move(cur_b);
  }
  return {Verdict::not_distinguished, max_iters};
}

int local_color(const IncidenceStructure& h, Id vertex, int k,
                Dictionary& dict) {
  require(vertex >= 0 && vertex < h.num_vertices,
          ErrorCode::vertex_id_out_of_range, "local_color vertex out of range");
  require(k >= 0, ErrorCode::invalid_argument, "k must be >= 0");
  ColorAssignment colors = initial_colors(h);
  for (int t = 0; t < k; ++t) colors = refine_step(h, colors, dict);
  return colors.vertex_colors[vertex];
}

namespace {

std::vector<std::vector<Id>> sorted_edge_multiset(
    const IncidenceStructure& h) {
  auto edges = h.edge_members.to_lists();  // members already sorted
  std::sort(edges.begin(), edges.end());
  return edges;
}

// Per-vertex invariant: (degree, sorted sizes of incident edges). A valid
// isomorphism must map vertices within equal invariant classes.
std::vector<std::vector<Id>> vertex_profiles(const IncidenceStructure& h) {
  std::vector<std::vector<Id>> prof(h.num_vertices);
  for (int v = 0; v < h.num_vertices; ++v) {
    auto inc = h.vertex_incident[v];
    prof[v].push_back(static_cast<Id>(inc.size()));
    for (Id e : inc) {
      prof[v].push_back(static_cast<Id>(h.edge_members[e].size()));
    }
    std::sort(prof[v].begin() + 1, prof[v].end());
  }
  return prof;
}

bool mapping_matches(const IncidenceStructure& a,
                     const std::vector<std::vector<Id>>& b_edges,
                     const std::vector<Id>& map) {
  std::vector<std::vector<Id>> mapped(a.num_edges());
  for (int e = 0; e < a.num_edges(); ++e) {
    for (Id v : a.edge_members[e]) mapped[e].push_back(map[v]);
    std::sort(mapped[e].begin(), mapped[e].end());
  }
  std::sort(mapped.begin(), mapped.end());
  return mapped == b_edges;
}

bool search_mapping(int v, const IncidenceStructure& a,
                    const std::vector<std::vector<Id>>& b_edges,
                    const std::vector<std::vector<Id>>& prof_a,
                    const std::vector<std::vector<Id>>& prof_b,
                    std::vector<Id>& map, std::vector<char>& used) {
  if (v == a.num_vertices) return mapping_matches(a, b_edges, map);
  for (Id target = 0; target < a.num_vertices; ++target) {
    if (used[target] || prof_a[v] != prof_b[target]) continue;
    map[v] = target;
    used[target] = 1;
    if (search_mapping(v + 1, a, b_edges, prof_a, prof_b, map, used)) {
      return true;
    }
    used[target] = 0;
  }
  return false;
}

}  // namespace

bool brute_force_isomorphic(const IncidenceStructure& a,
                            const IncidenceStructure& b) {
  require(a.num_vertices <= 8 && b.num_vertices <= 8,
          ErrorCode::too_large_for_brute_force,
          "exhaustive search limited to 8 vertices");
  if (a.num_vertices != b.num_vertices) return false;
  if (a.num_edges() != b.num_edges()) return false;

  auto size_multiset = [](const IncidenceStructure& h) {
    std::vector<int> s;
    for (int e = 0; e < h.num_edges(); ++e) {
      s.push_back(static_cast<int>(h.edge_members[e].size()));
    }
    std::sort(s.begin(), s.end());
    return s;
  };
  if (size_multiset(a) != size_multiset(b)) return false;

  auto prof_a = vertex_profiles(a);
  auto prof_b = vertex_profiles(b);
  {
    auto sa = prof_a;
    auto sb = prof_b;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    if (sa != sb) return false;
  }

  auto b_edges = sorted_edge_multiset(b);
  std::vector<Id> map(a.num_vertices, -1);
  std::vector<char> used(a.num_vertices, 0);
  return search_mapping(0, a, b_edges, prof_a, prof_b, map, used);
}

}  // namespace uhg::gwl
