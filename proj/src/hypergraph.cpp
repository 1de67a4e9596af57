#include "uhg/hypergraph.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

namespace uhg {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::no_vertices: return "NoVertices";
    case ErrorCode::empty_edge: return "EmptyEdge";
    case ErrorCode::vertex_id_out_of_range: return "VertexIdOutOfRange";
    case ErrorCode::not_a_bijection: return "NotABijection";
    case ErrorCode::empty_visible_set: return "EmptyVisibleSet";
    case ErrorCode::shape_mismatch: return "ShapeMismatch";
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::empty_group: return "EmptyGroup";
    case ErrorCode::index_out_of_range: return "IndexOutOfRange";
    case ErrorCode::invalid_probability: return "InvalidProbability";
    case ErrorCode::empty_mask: return "EmptyMask";
    case ErrorCode::label_out_of_range: return "LabelOutOfRange";
    case ErrorCode::non_scalar_loss: return "NonScalarLoss";
    case ErrorCode::non_finite: return "NonFinite";
    case ErrorCode::schema: return "SchemaError";
    case ErrorCode::invariant: return "InvariantViolation";
    case ErrorCode::too_large_for_brute_force: return "TooLargeForBruteForce";
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::io: return "IoError";
    case ErrorCode::internal: return "InternalError";
  }
  return "UnknownError";
}

Ragged Ragged::from_lists(const std::vector<std::vector<Id>>& lists) {
  Ragged r;
  for (const auto& l : lists) r.push_group(l);
  return r;
}

void Ragged::push_group(std::span<const Id> items) {
  items_.insert(items_.end(), items.begin(), items.end());
  offsets_.push_back(static_cast<int>(items_.size()));
}

std::vector<std::vector<Id>> Ragged::to_lists() const {
  std::vector<std::vector<Id>> out(size());
  for (int g = 0; g < size(); ++g) {
    auto s = (*this)[g];
    out[g].assign(s.begin(), s.end());
  }
  return out;
}

namespace {

// Transpose edge->members into vertex->edges. Walking edges in ascending id
// order leaves every incident list sorted.
Ragged transpose_members(const Ragged& edge_members, int num_vertices) {
  std::vector<int> counts(num_vertices, 0);
  for (Id v : edge_members.items()) counts[v]++;
  std::vector<int> offsets(num_vertices + 1, 0);
  std::partial_sum(counts.begin(), counts.end(), offsets.begin() + 1);
  std::vector<Id> items(edge_members.total());
  std::vector<int> cursor(offsets.begin(), offsets.end() - 1);
  for (int e = 0; e < edge_members.size(); ++e) {
    for (Id v : edge_members[e]) items[cursor[v]++] = static_cast<Id>(e);
  }
  Ragged r;
  for (int v = 0; v < num_vertices; ++v) {
    r.push_group(std::span<const Id>(items.data() + offsets[v],
                                     items.data() + offsets[v + 1]));
  }
  return r;
}

}  // namespace

IncidenceStructure build(int num_vertices,
                         const std::vector<std::vector<Id>>& edges) {
  require(num_vertices > 0, ErrorCode::no_vertices,
          "a hypergraph needs at least one vertex");
  IncidenceStructure h;
  h.num_vertices = num_vertices;
  std::vector<Id> members;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    members.assign(edges[e].begin(), edges[e].end());
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    if (members.empty()) {
      fail(ErrorCode::empty_edge,
           "hyperedges[" + std::to_string(e) + "] has no members");
    }
    if (members.front() < 0 || members.back() >= num_vertices) {
      Id bad = members.front() < 0 ? members.front() : members.back();
      fail(ErrorCode::vertex_id_out_of_range,
           "hyperedges[" + std::to_string(e) + "]: vertex id " +
               std::to_string(bad) + " outside [0, " +
               std::to_string(num_vertices) + ")");
    }
    h.edge_members.push_group(members);
  }
  h.vertex_incident = transpose_members(h.edge_members, num_vertices);
  h.symmetric = true;
  return h;
}

bool has_all_self_loops(const IncidenceStructure& h) {
  std::vector<char> has(h.num_vertices, 0);
  for (int e = 0; e < h.num_edges(); ++e) {
    auto m = h.edge_members[e];
    if (m.size() == 1) has[m[0]] = 1;
  }
  return std::all_of(has.begin(), has.end(), [](char c) { return c != 0; });
}

IncidenceStructure add_self_loops(const IncidenceStructure& h) {
  require(h.symmetric, ErrorCode::invalid_argument,
          "self-loop preprocessing requires a symmetric structure");
  std::vector<char> has(h.num_vertices, 0);
  auto lists = h.edge_members.to_lists();
  for (const auto& m : lists) {
    if (m.size() == 1) has[m[0]] = 1;
  }
  for (Id v = 0; v < h.num_vertices; ++v) {
    if (!has[v]) lists.push_back({v});
  }
  return build(h.num_vertices, lists);
}

DegreeInfo degrees(const IncidenceStructure& h) {
  DegreeInfo d;
  d.d_vertex.resize(h.num_vertices);
  for (int v = 0; v < h.num_vertices; ++v) {
    d.d_vertex[v] = static_cast<double>(h.vertex_incident[v].size());
  }
  d.d_edge.resize(h.num_edges());
  for (int e = 0; e < h.num_edges(); ++e) {
    auto m = h.edge_members[e];
    double sum = 0.0;
    for (Id v : m) sum += d.d_vertex[v];
    d.d_edge[e] = sum / static_cast<double>(m.size());
  }
  return d;
}

BipartiteIncidenceGraph incidence_graph(const IncidenceStructure& h) {
  require(h.symmetric, ErrorCode::invalid_argument,
          "incidence graph requires a symmetric structure");
  BipartiteIncidenceGraph g;
  g.num_left = h.num_vertices;
  g.num_right = h.num_edges();
  g.pairs.reserve(h.edge_members.total());
  for (int e = 0; e < h.num_edges(); ++e) {
    for (Id v : h.edge_members[e]) g.pairs.emplace_back(v, static_cast<Id>(e));
  }
  return g;
}

InducedResult induce(const IncidenceStructure& h,
                     const std::vector<Id>& visible) {
  require(!visible.empty(), ErrorCode::empty_visible_set,
          "induce needs a non-empty visible set");
  std::vector<Id> vis(visible);
  std::sort(vis.begin(), vis.end());
  vis.erase(std::unique(vis.begin(), vis.end()), vis.end());
  require(vis.front() >= 0 && vis.back() < h.num_vertices,
          ErrorCode::vertex_id_out_of_range, "visible vertex id out of range");

  InducedResult out;
  out.old_to_new.assign(h.num_vertices, -1);
  out.new_to_old = vis;
  for (std::size_t i = 0; i < vis.size(); ++i) {
    out.old_to_new[vis[i]] = static_cast<Id>(i);
  }
  std::vector<std::vector<Id>> edges;
  std::vector<Id> kept;
  for (int e = 0; e < h.num_edges(); ++e) {
    kept.clear();
    for (Id v : h.edge_members[e]) {
      if (out.old_to_new[v] >= 0) kept.push_back(out.old_to_new[v]);
    }
    if (!kept.empty()) edges.push_back(kept);
  }
  out.structure = build(static_cast<int>(vis.size()), edges);
  return out;
}

IncidenceStructure reduction_from_graph(
    const std::vector<std::vector<Id>>& adjacency, bool with_self) {
  const int n = static_cast<int>(adjacency.size());
  require(n > 0, ErrorCode::no_vertices, "empty adjacency");
  IncidenceStructure h;
  h.num_vertices = n;
  h.symmetric = false;
  for (Id j = 0; j < n; ++j) {
    Id self[1] = {j};
    h.edge_members.push_group(self);
  }
  std::vector<Id> inc;
  for (Id i = 0; i < n; ++i) {
    inc.assign(adjacency[i].begin(), adjacency[i].end());
    for (Id j : inc) {
      require(j >= 0 && j < n, ErrorCode::vertex_id_out_of_range,
              "adjacency[" + std::to_string(i) + "] references vertex " +
                  std::to_string(j));
    }
    if (with_self) inc.push_back(i);
    std::sort(inc.begin(), inc.end());
    inc.erase(std::unique(inc.begin(), inc.end()), inc.end());
    h.vertex_incident.push_group(inc);  // edge id of {j} is j
  }
  return h;
}

IncidenceStructure permute(const IncidenceStructure& h,
                           const std::vector<Id>& sigma) {
  require(static_cast<int>(sigma.size()) == h.num_vertices,
          ErrorCode::not_a_bijection, "sigma size differs from vertex count");
  std::vector<char> seen(h.num_vertices, 0);
  for (Id t : sigma) {
    if (t < 0 || t >= h.num_vertices || seen[t]) {
      fail(ErrorCode::not_a_bijection, "sigma is not a bijection on [0, n)");
    }
    seen[t] = 1;
  }
  require(h.symmetric, ErrorCode::invalid_argument,
          "permute requires a symmetric structure");
  std::vector<std::vector<Id>> edges(h.num_edges());
  for (int e = 0; e < h.num_edges(); ++e) {
    for (Id v : h.edge_members[e]) edges[e].push_back(sigma[v]);
  }
  return build(h.num_vertices, edges);
}

bool structurally_equal(const IncidenceStructure& a,
                        const IncidenceStructure& b) {
  return a.num_vertices == b.num_vertices && a.symmetric == b.symmetric &&
         a.edge_members == b.edge_members &&
         a.vertex_incident == b.vertex_incident;
}

IncidenceStructure hypergraph_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::schema, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("num_vertices") ||
      !j.contains("hyperedges")) {
    fail(ErrorCode::schema,
         "expected object with num_vertices and hyperedges fields");
  }
  if (!j["num_vertices"].is_number_integer()) {
    fail(ErrorCode::schema, "num_vertices: expected integer");
  }
  if (!j["hyperedges"].is_array()) {
    fail(ErrorCode::schema, "hyperedges: expected array of arrays");
  }
  int n = j["num_vertices"].get<int>();
  std::vector<std::vector<Id>> edges;
  edges.reserve(j["hyperedges"].size());
  std::size_t ei = 0;
  for (const auto& edge : j["hyperedges"]) {
    if (!edge.is_array()) {
      fail(ErrorCode::schema,
           "hyperedges[" + std::to_string(ei) + "]: expected array");
    }
    std::vector<Id> members;
    for (const auto& v : edge) {
      if (!v.is_number_integer()) {
        fail(ErrorCode::schema,
             "hyperedges[" + std::to_string(ei) + "]: expected integer ids");
      }
      members.push_back(v.get<Id>());
    }
    edges.push_back(std::move(members));
    ++ei;
  }
  return build(n, edges);
}

IncidenceStructure hypergraph_from_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::io, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return hypergraph_from_json(ss.str());
}

std::string hypergraph_to_json(const IncidenceStructure& h) {
  nlohmann::json j;
  j["num_vertices"] = h.num_vertices;
  j["hyperedges"] = h.edge_members.to_lists();
  return j.dump();
}

}  // namespace uhg
