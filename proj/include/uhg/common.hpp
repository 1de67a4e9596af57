#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace uhg {

// Dense 0-based vertex/edge id.
using Id = std::int32_t;

enum class ErrorCode {
  no_vertices,
  empty_edge,
  vertex_id_out_of_range,
  not_a_bijection,
  empty_visible_set,
  shape_mismatch,
  dimension_mismatch,
  empty_group,
  index_out_of_range,
  invalid_probability,
  empty_mask,
  label_out_of_range,
  non_scalar_loss,
  non_finite,
  schema,
  invariant,
  too_large_for_brute_force,
  invalid_argument,
  io,
  internal,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool ok, ErrorCode code, const std::string& message) {
  if (!ok) fail(code, message);
}

// splitmix64 step; used to derive independent seeds from (base, stream) pairs.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

using Rng = std::mt19937_64;

}  // namespace uhg
