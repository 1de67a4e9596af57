#include "uhg/fixtures.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>

namespace uhg::fixtures {

IncidenceStructure triangle_hyperedge() { return build(3, {{0, 1, 2}}); }

IncidenceStructure triangle_clique() {
  return build(3, {{0, 1}, {1, 2}, {0, 2}});
}

IncidenceStructure expansion_demo_hypergraph() {
  return build(4, {{0, 1, 2}, {2, 3}});
}

IncidenceStructure expansion_demo_graph() {
  return build(4, {{0, 1}, {0, 2}, {1, 2}, {2, 3}});
}

IncidenceStructure random_hypergraph(int max_vertices, int max_edges,
                                     int max_edge_size, Rng& rng) {
  std::uniform_int_distribution<int> nd(1, max_vertices);
  const int n = nd(rng);
  std::uniform_int_distribution<int> md(0, max_edges);
  const int m = md(rng);
  return random_hypergraph_shaped(n, m, max_edge_size, rng);
}

IncidenceStructure random_hypergraph_shaped(int num_vertices, int num_edges,
                                            int max_edge_size, Rng& rng) {
  std::vector<std::vector<Id>> edges;
  std::vector<Id> pool(num_vertices);
  std::iota(pool.begin(), pool.end(), 0);
  std::uniform_int_distribution<int> sized(
      1, std::max(1, std::min(num_vertices, max_edge_size)));
  for (int e = 0; e < num_edges; ++e) {
    const int size = sized(rng);
    for (int k = 0; k < size; ++k) {
      std::uniform_int_distribution<int> pick(k, num_vertices - 1);
      std::swap(pool[k], pool[pick(rng)]);
    }
    edges.emplace_back(pool.begin(), pool.begin() + size);
  }
  return build(num_vertices, edges);
}

std::vector<Id> random_permutation(int n, Rng& rng) {
  std::vector<Id> sigma(n);
  std::iota(sigma.begin(), sigma.end(), 0);
  std::shuffle(sigma.begin(), sigma.end(), rng);
  return sigma;
}

std::vector<std::vector<Id>> random_graph_adjacency(int num_vertices,
                                                    double edge_prob,
                                                    Rng& rng) {
  std::vector<std::vector<Id>> adj(num_vertices);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (Id i = 0; i < num_vertices; ++i) {
    for (Id j = i + 1; j < num_vertices; ++j) {
      if (uni(rng) < edge_prob) {
        adj[i].push_back(j);
        adj[j].push_back(i);
      }
    }
  }
  return adj;
}

DatasetBundle planted_dataset(int num_vertices, int num_classes,
                              int feature_dim, int num_edges, double noise,
                              std::uint64_t seed) {
  require(feature_dim >= num_classes, ErrorCode::invalid_argument,
          "planted_dataset needs feature_dim >= num_classes");
  Rng rng(seed);
  DatasetBundle b;
  b.name = "planted";
  b.num_classes = num_classes;
  b.labels.resize(num_vertices);
  std::vector<std::vector<Id>> by_class(num_classes);
  for (Id i = 0; i < num_vertices; ++i) {
    b.labels[i] = i % num_classes;
    by_class[b.labels[i]].push_back(i);
  }

  std::vector<std::vector<Id>> edges;
  std::uniform_int_distribution<int> sized(2, 4);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::uniform_int_distribution<int> classd(0, num_classes - 1);
  for (int e = 0; e < num_edges; ++e) {
    std::vector<Id>& pool = by_class[classd(rng)];
    const int size = std::min<int>(sized(rng), static_cast<int>(pool.size()));
    std::vector<Id> edge;
    for (int k = 0; k < size; ++k) {
      std::uniform_int_distribution<int> pick(0,
                                              static_cast<int>(pool.size()) - 1);
      edge.push_back(pool[pick(rng)]);
    }
    // occasional cross-class contamination
    if (uni(rng) < 0.1) {
      std::uniform_int_distribution<int> pick(0, num_vertices - 1);
      edge.push_back(pick(rng));
    }
    std::sort(edge.begin(), edge.end());
    edge.erase(std::unique(edge.begin(), edge.end()), edge.end());
    edges.push_back(edge);
  }
  // every vertex joins at least one edge
  for (Id i = 0; i < num_vertices; ++i) {
    Id buddy = by_class[b.labels[i]][0];
    if (buddy == i && by_class[b.labels[i]].size() > 1) {
      buddy = by_class[b.labels[i]][1];
    }
    if (buddy != i) edges.push_back({std::min(i, buddy), std::max(i, buddy)});
  }
  b.hypergraph = build(num_vertices, edges);

  std::normal_distribution<double> gauss(0.0, 1.0);
  b.features = ad::Tensor(num_vertices, feature_dim);
  for (Id i = 0; i < num_vertices; ++i) {
    for (int c = 0; c < feature_dim; ++c) {
      b.features.at(i, c) = noise * gauss(rng);
    }
    b.features.at(i, b.labels[i]) += 1.0;
  }
  b.label_rate = 0.2;
  return b;
}

std::vector<std::pair<std::string, std::string>> write_fixtures(
    const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::pair<std::string, std::string>> written;
  auto emit = [&](const std::string& name, const std::string& text) {
    const std::string path = (std::filesystem::path(dir) / name).string();
    std::ofstream out(path);
    require(out.good(), ErrorCode::io, "cannot write " + path);
    out << text << "\n";
    written.emplace_back(name, path);
  };
  emit("triangle_hyperedge.json", hypergraph_to_json(triangle_hyperedge()));
  emit("triangle_clique.json", hypergraph_to_json(triangle_clique()));
  emit("expansion_demo_hypergraph.json",
       hypergraph_to_json(expansion_demo_hypergraph()));
  emit("expansion_demo_graph.json",
       hypergraph_to_json(expansion_demo_graph()));
  emit("planted_small.json",
       dataset_to_json(planted_dataset(60, 3, 8, 40, 0.3, 7)));
  return written;
}

}  // namespace uhg::fixtures
