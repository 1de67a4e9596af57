#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "uhg/common.hpp"
#include "uhg/hypergraph.hpp"

namespace uhg::ad {

enum class Precision { f32, f64 };

Precision precision_from_string(const std::string& s);
const char* precision_to_string(Precision p);

// Dense row-major real matrix with an optional gradient slot. Handles share
// storage, so ops can capture their operands in backward closures.
class Tensor {
 public:
  struct Data {
    int rows = 0, cols = 0;
    std::vector<double> v;
    std::vector<double> g;  // allocated when the tensor joins a tape
    bool requires_grad = false;
  };

  Tensor() = default;
  Tensor(int rows, int cols, bool requires_grad = false);

  static Tensor zeros(int rows, int cols, bool requires_grad = false);
  static Tensor full(int rows, int cols, double value,
                     bool requires_grad = false);
  static Tensor from_flat(int rows, int cols, std::vector<double> values,
                          bool requires_grad = false);
  static Tensor from_rows(const std::vector<std::vector<double>>& rows,
                          bool requires_grad = false);

  bool defined() const { return static_cast<bool>(d_); }
  int rows() const { return d_->rows; }
  int cols() const { return d_->cols; }
  int size() const { return d_->rows * d_->cols; }

  double operator()(int r, int c) const { return d_->v[r * d_->cols + c]; }
  double& at(int r, int c) { return d_->v[r * d_->cols + c]; }

  std::vector<double>& values() { return d_->v; }
  const std::vector<double>& values() const { return d_->v; }

  bool requires_grad() const { return d_->requires_grad; }
  void set_requires_grad(bool rg);

  // Gradient accumulator; sized on first access. Returns mutable storage even
  // through const handles (Tensor is a shared handle, like shared_ptr).
  std::vector<double>& grad() const;
  bool has_grad() const { return !d_->g.empty(); }
  void zero_grad() const;

  Tensor detached_copy() const;
  void round_to_f32();

  std::shared_ptr<Data> d_;
};

// Ragged gather plan: group g collects source rows
// indices[offsets[g] .. offsets[g+1]).
struct SegmentMap {
  int num_sources = 0;
  std::vector<int> offsets;  // size num_groups + 1
  std::vector<Id> indices;

  int num_groups() const { return static_cast<int>(offsets.size()) - 1; }
  int group_size(int g) const { return offsets[g + 1] - offsets[g]; }

  static SegmentMap from_ragged(const Ragged& r, int num_sources);
  // Identity grouping over `counts[g]` consecutive slots per group.
  static SegmentMap contiguous(const std::vector<int>& offsets);
  void validate() const;
};

// Reverse-mode tape over Tensors. Ops record a backward closure in creation
// order; backward() replays them in reverse. Reduction loops run in ascending
// index order, so results are bit-reproducible for a fixed input.
class Tape {
 public:
  explicit Tape(Precision precision = Precision::f64,
                bool grad_enabled = true);

  Precision precision() const { return precision_; }
  bool grad_enabled() const { return grad_enabled_; }
  void set_check_finite(bool on) { check_finite_ = on; }

  // Smallest distance of any relu/leaky_relu input to its kink and of any
  // normalized row to the zero row (exact zeros excluded; those are fixed
  // points). Finite-difference checks resample when this is too small.
  double kink_margin() const { return kink_margin_; }

  Tensor matmul(const Tensor& a, const Tensor& b);
  Tensor add(const Tensor& a, const Tensor& b);
  Tensor sub(const Tensor& a, const Tensor& b);
  Tensor scale(const Tensor& a, double c);
  // Elementwise product with a 1x1 tensor (learnable scalar coefficients).
  Tensor scalar_mul(const Tensor& a, const Tensor& s);
  Tensor add_row_broadcast(const Tensor& a, const Tensor& bias);
  Tensor concat_cols(const std::vector<Tensor>& parts);
  Tensor row_slice(const Tensor& a, int row_begin, int row_end);
  Tensor gather_rows(const Tensor& a, const std::vector<Id>& rows);
  // Scale row r by weights[r] (constant, non-differentiable weights).
  Tensor row_scale(const Tensor& a, const std::vector<double>& weights);
  // Elementwise multiply each row of a [p x d] by w[p x 1]; both inputs
  // differentiable.
  Tensor col_mul(const Tensor& a, const Tensor& w);

  Tensor segment_mean(const Tensor& x, const SegmentMap& map);
  Tensor segment_sum(const Tensor& x, const SegmentMap& map);
  // Within-group softmax over a [pairs x 1] score column, stabilized by the
  // group max.
  Tensor segment_softmax(const Tensor& scores, const SegmentMap& map);

  Tensor relu(const Tensor& a);
  Tensor leaky_relu(const Tensor& a, double negative_slope);
  Tensor dropout(const Tensor& a, double p, bool training, Rng& rng);
  Tensor row_l2_normalize(const Tensor& a);
  Tensor sum_rows(const Tensor& a);  // 1 x d column sums
  // sum(a .* weights) as a 1x1 tensor; weights constant.
  Tensor weighted_sum(const Tensor& a, const std::vector<double>& weights);

  Tensor softmax_cross_entropy(const Tensor& logits,
                               const std::vector<int>& labels,
                               const std::vector<Id>& mask);

  void backward(const Tensor& loss);
  std::size_t num_recorded() const { return steps_.size(); }

 private:
  Tensor finish(Tensor out, bool track, std::function<void()> bw,
                const char* op_name);

  Precision precision_;
  bool grad_enabled_;
  bool check_finite_;
  double kink_margin_;
  std::vector<std::function<void()>> steps_;
};

void zero_grads(std::span<Tensor> params);

// Row-major argmax per row.
std::vector<int> argmax_rows(const Tensor& t);

}  // namespace uhg::ad
