#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "uhg/hypergraph.hpp"

namespace uhg::gwl {

// Injective compression dictionary: each distinct multiset signature gets a
// fresh dense code. A dictionary is shared across the pair of hypergraphs
// under comparison so colors are comparable between them.
class Dictionary {
 public:
  int code_for(const std::vector<std::int64_t>& signature);
  std::size_t size() const { return reverse_.size(); }
  const std::vector<std::int64_t>& signature_of(int code) const;

 private:
  std::map<std::vector<std::int64_t>, int> codes_;
  std::vector<const std::vector<std::int64_t>*> reverse_;
};

struct ColorAssignment {
  std::vector<int> vertex_colors;
  std::vector<int> edge_colors;
  int iteration = 0;
};

// Sorted (color, count) pairs over the vertex colors.
using Histogram = std::vector<std::pair<int, int>>;

ColorAssignment initial_colors(const IncidenceStructure& h);
Histogram vertex_histogram(const ColorAssignment& colors);

// One refinement round: edge colors from the multiset of current member
// vertex colors, then vertex colors from the multiset of (own color,
// edge color) pairs over incident edges. A vertex with no incident edges
// keeps its own color inside an empty-incidence signature, so it never
// collides with an incident vertex.
ColorAssignment refine_step(const IncidenceStructure& h,
                            const ColorAssignment& colors, Dictionary& dict);

struct RefinementTrace {
  std::vector<Histogram> histograms;  // index = iteration (0-based)
  int stabilization_iteration = 0;
  bool stabilized = false;
};

// Iterates until the vertex partition stops changing (or max_iters).
// max_iters == 0 selects the structural cap n * max(1, |E|).
RefinementTrace refine_to_stability(const IncidenceStructure& h,
                                    int max_iters = 0,
                                    Dictionary* shared = nullptr);

enum class Verdict { distinguishable, not_distinguished };

struct DistinguishResult {
  Verdict verdict = Verdict::not_distinguished;
  int iteration = 0;  // first differing iteration when distinguishable
};

DistinguishResult distinguish(const IncidenceStructure& a,
                              const IncidenceStructure& b, int max_iters = 0);

// Color of one vertex after k refinement rounds under a shared dictionary.
int local_color(const IncidenceStructure& h, Id vertex, int k,
                Dictionary& dict);

// Exhaustive isomorphism check for n <= 8 (test oracle).
bool brute_force_isomorphic(const IncidenceStructure& a,
                            const IncidenceStructure& b);

}  // namespace uhg::gwl
