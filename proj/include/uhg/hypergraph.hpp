#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "uhg/common.hpp"

namespace uhg {

// Ragged integer array in CSR layout: offsets (size m+1) into a flat item
// array. All hypergraph relations are stored this way so the segment kernels
// can walk them without pointer chasing.
class Ragged {
 public:
  Ragged() : offsets_{0} {}

  static Ragged from_lists(const std::vector<std::vector<Id>>& lists);

  int size() const { return static_cast<int>(offsets_.size()) - 1; }
  int total() const { return static_cast<int>(items_.size()); }

  std::span<const Id> operator[](int group) const {
    return {items_.data() + offsets_[group],
            items_.data() + offsets_[group + 1]};
  }

  void push_group(std::span<const Id> items);

  const std::vector<int>& offsets() const { return offsets_; }
  const std::vector<Id>& items() const { return items_; }

  std::vector<std::vector<Id>> to_lists() const;

  bool operator==(const Ragged&) const = default;

 private:
  std::vector<int> offsets_;
  std::vector<Id> items_;
};

// A hypergraph as a dual pair of sparse relations. When `symmetric` is true
// vertex_incident is exactly the transpose of edge_members; the asymmetric
// case carries the graph-reduction construction, where the incident edge set
// of a vertex is decoupled from edge membership.
struct IncidenceStructure {
  int num_vertices = 0;
  Ragged edge_members;     // per edge: sorted, deduplicated member vertex ids
  Ragged vertex_incident;  // per vertex: sorted incident edge ids
  bool symmetric = true;

  int num_edges() const { return edge_members.size(); }
};

struct DegreeInfo {
  std::vector<double> d_vertex;  // number of incident edges
  std::vector<double> d_edge;    // mean of member vertex degrees
};

struct BipartiteIncidenceGraph {
  int num_left = 0;   // vertices
  int num_right = 0;  // hyperedges
  std::vector<std::pair<Id, Id>> pairs;  // (vertex, hyperedge)
};

struct InducedResult {
  IncidenceStructure structure;
  std::vector<Id> old_to_new;  // -1 where the vertex was removed
  std::vector<Id> new_to_old;
};

IncidenceStructure build(int num_vertices,
                         const std::vector<std::vector<Id>>& edges);

// Appends a singleton edge {i} for every vertex lacking one. Idempotent;
// original edge ids are preserved.
IncidenceStructure add_self_loops(const IncidenceStructure& h);
bool has_all_self_loops(const IncidenceStructure& h);

DegreeInfo degrees(const IncidenceStructure& h);

BipartiteIncidenceGraph incidence_graph(const IncidenceStructure& h);

// Restricts h to `visible` vertices: edges are intersected with the visible
// set, emptied edges dropped, size-1 survivors kept.
InducedResult induce(const IncidenceStructure& h,
                     const std::vector<Id>& visible);

// Asymmetric structure realizing a plain graph: one singleton edge {j} per
// graph vertex j; vertex i is incident to the singletons of its neighbors
// (plus its own when with_self).
IncidenceStructure reduction_from_graph(
    const std::vector<std::vector<Id>>& adjacency, bool with_self);

IncidenceStructure permute(const IncidenceStructure& h,
                           const std::vector<Id>& sigma);

bool structurally_equal(const IncidenceStructure& a,
                        const IncidenceStructure& b);

// Canonical JSON: {"num_vertices": n, "hyperedges": [[ids...], ...]}.
// Extra fields (features/labels/splits) are ignored here; the dataset loader
// owns the full schema.
IncidenceStructure hypergraph_from_json(const std::string& text);
IncidenceStructure hypergraph_from_file(const std::string& path);
std::string hypergraph_to_json(const IncidenceStructure& h);

}  // namespace uhg
