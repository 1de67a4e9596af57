#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uhg/common.hpp"

namespace uhg::gradcheck {

struct CheckResult {
  std::string name;
  double max_rel_err = 0.0;
  int entries_checked = 0;
  bool pass = true;
};

struct Summary {
  double tolerance = 1e-5;
  double step = 1e-5;
  double max_rel_err = 0.0;
  bool pass = true;
  std::vector<CheckResult> checks;
};

std::vector<std::string> all_op_names();

// Central finite differences against the recorded backward rules, in f64.
// `ops` empty means all ops. Each trial draws fresh random shapes (dims <= 6)
// and data.
Summary check_ops(const std::vector<std::string>& ops, std::uint64_t seed,
                  int trials, double h = 1e-5, double tol = 1e-5);

// Same, over every assembled 2-layer model variant on small random
// hypergraphs with a cross-entropy head; checks every parameter entry.
Summary check_models(std::uint64_t seed, int trials, double h = 1e-5,
                     double tol = 1e-5);

Summary merge(const Summary& a, const Summary& b);
nlohmann::json summary_to_json(const Summary& s);

}  // namespace uhg::gradcheck
