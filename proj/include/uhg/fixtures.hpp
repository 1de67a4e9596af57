#pragma once

#include <string>
#include <utility>
#include <vector>

#include "uhg/dataset.hpp"
#include "uhg/hypergraph.hpp"

namespace uhg::fixtures {

// One 3-vertex hyperedge vs the triangle of its pairwise edges. The two have
// identical clique expansions but different hypergraph structure; refinement
// separates them at iteration 1.
IncidenceStructure triangle_hyperedge();
IncidenceStructure triangle_clique();

// A small hypergraph and the plain graph obtained by expanding each
// hyperedge into pairwise edges.
IncidenceStructure expansion_demo_hypergraph();
IncidenceStructure expansion_demo_graph();

// Random hypergraph: n in [1, max_vertices], up to max_edges edges with sizes
// in [1, max_edge_size].
IncidenceStructure random_hypergraph(int max_vertices, int max_edges,
                                     int max_edge_size, Rng& rng);
// Random hypergraph with exactly the given shape (for comparable pairs).
IncidenceStructure random_hypergraph_shaped(int num_vertices, int num_edges,
                                            int max_edge_size, Rng& rng);
std::vector<Id> random_permutation(int n, Rng& rng);
std::vector<std::vector<Id>> random_graph_adjacency(int num_vertices,
                                                    double edge_prob,
                                                    Rng& rng);

// Planted-partition classification task: vertices are assigned classes,
// hyperedges mostly join same-class vertices, features are a noisy class
// indicator. A two-layer model separates it easily.
DatasetBundle planted_dataset(int num_vertices, int num_classes,
                              int feature_dim, int num_edges,
                              double noise, std::uint64_t seed);

// Writes the named fixture files into dir; returns (name, path) pairs.
std::vector<std::pair<std::string, std::string>> write_fixtures(
    const std::string& dir);

}  // namespace uhg::fixtures
