#include "uhg/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace uhg::ad {

namespace {
using EMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<EMat>;
using ECMap = Eigen::Map<const EMat>;
}  // namespace

Precision precision_from_string(const std::string& s) {
  if (s == "f32") return Precision::f32;
  if (s == "f64") return Precision::f64;
  fail(ErrorCode::invalid_argument, "precision must be f32 or f64, got " + s);
}

const char* precision_to_string(Precision p) {
  return p == Precision::f32 ? "f32" : "f64";
}

Tensor::Tensor(int rows, int cols, bool requires_grad) {
  require(rows >= 0 && cols >= 0, ErrorCode::invalid_argument,
          "negative tensor shape");
  d_ = std::make_shared<Data>();
  d_->rows = rows;
  d_->cols = cols;
  d_->v.assign(static_cast<std::size_t>(rows) * cols, 0.0);
  d_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(int rows, int cols, bool requires_grad) {
  return Tensor(rows, cols, requires_grad);
}

Tensor Tensor::full(int rows, int cols, double value, bool requires_grad) {
  Tensor t(rows, cols, requires_grad);
  std::fill(t.values().begin(), t.values().end(), value);
  return t;
}

Tensor Tensor::from_flat(int rows, int cols, std::vector<double> values,
                         bool requires_grad) {
  require(static_cast<std::size_t>(rows) * cols == values.size(),
          ErrorCode::shape_mismatch, "from_flat: value count mismatch");
  Tensor t(rows, cols, requires_grad);
  t.d_->v = std::move(values);
  return t;
}

Tensor Tensor::from_rows(const std::vector<std::vector<double>>& rows,
                         bool requires_grad) {
  int r = static_cast<int>(rows.size());
  int c = r > 0 ? static_cast<int>(rows[0].size()) : 0;
  Tensor t(r, c, requires_grad);
  for (int i = 0; i < r; ++i) {
    require(static_cast<int>(rows[i].size()) == c, ErrorCode::shape_mismatch,
            "from_rows: ragged input");
    std::copy(rows[i].begin(), rows[i].end(), t.values().begin() + i * c);
  }
  return t;
}

void Tensor::set_requires_grad(bool rg) { d_->requires_grad = rg; }

std::vector<double>& Tensor::grad() const {
  if (d_->g.empty()) d_->g.assign(d_->v.size(), 0.0);
  return d_->g;
}

void Tensor::zero_grad() const {
  std::fill(d_->g.begin(), d_->g.end(), 0.0);
}

Tensor Tensor::detached_copy() const {
  Tensor t(rows(), cols(), false);
  t.d_->v = d_->v;
  return t;
}

void Tensor::round_to_f32() {
  for (double& x : d_->v) x = static_cast<double>(static_cast<float>(x));
}

SegmentMap SegmentMap::from_ragged(const Ragged& r, int num_sources) {
  SegmentMap m;
  m.num_sources = num_sources;
  m.offsets = r.offsets();
  m.indices = r.items();
  return m;
}

SegmentMap SegmentMap::contiguous(const std::vector<int>& offsets) {
  SegmentMap m;
  m.offsets = offsets;
  m.num_sources = offsets.back();
  m.indices.resize(offsets.back());
  for (int i = 0; i < static_cast<int>(m.indices.size()); ++i) {
    m.indices[i] = static_cast<Id>(i);
  }
  return m;
}

void SegmentMap::validate() const {
  require(!offsets.empty() && offsets.front() == 0 &&
              offsets.back() == static_cast<int>(indices.size()),
          ErrorCode::invariant, "segment map offsets corrupt");
  for (std::size_t g = 1; g < offsets.size(); ++g) {
    require(offsets[g] >= offsets[g - 1], ErrorCode::invariant,
            "segment map offsets must be monotone");
  }
  for (Id s : indices) {
    require(s >= 0 && s < num_sources, ErrorCode::index_out_of_range,
            "segment map index " + std::to_string(s) + " outside [0, " +
                std::to_string(num_sources) + ")");
  }
}

Tape::Tape(Precision precision, bool grad_enabled)
    : precision_(precision),
      grad_enabled_(grad_enabled),
      kink_margin_(std::numeric_limits<double>::infinity()) {
#ifndef NDEBUG
  check_finite_ = true;
#else
  check_finite_ = false;
#endif
}

Tensor Tape::finish(Tensor out, bool track, std::function<void()> bw,
                    const char* op_name) {
  if (precision_ == Precision::f32) out.round_to_f32();
  if (check_finite_) {
    for (double x : out.values()) {
      if (!std::isfinite(x)) {
        fail(ErrorCode::non_finite,
             std::string(op_name) + " produced a non-finite value");
      }
    }
  }
  if (grad_enabled_ && track) {
    out.set_requires_grad(true);
    out.grad();  // allocate the accumulator up front
    steps_.push_back(std::move(bw));
  }
  return out;
}

void Tape::backward(const Tensor& loss) {
  require(loss.rows() == 1 && loss.cols() == 1, ErrorCode::non_scalar_loss,
          "backward expects a 1x1 loss tensor");
  require(loss.requires_grad(), ErrorCode::invalid_argument,
          "loss is not attached to this tape");
  loss.grad()[0] += 1.0;
  for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
  require(a.cols() == b.rows(), ErrorCode::shape_mismatch,
          "matmul: inner dimensions disagree (" + std::to_string(a.cols()) +
              " vs " + std::to_string(b.rows()) + ")");
  Tensor out(a.rows(), b.cols());
  {
    ECMap ma(a.values().data(), a.rows(), a.cols());
    ECMap mb(b.values().data(), b.rows(), b.cols());
    EMap mo(out.values().data(), out.rows(), out.cols());
    mo.noalias() = ma * mb;
  }
  bool track = a.requires_grad() || b.requires_grad();
  return finish(
      out, track,
      [a, b, out]() {
        ECMap go(out.grad().data(), out.rows(), out.cols());
        if (a.requires_grad()) {
          ECMap mb(b.values().data(), b.rows(), b.cols());
          EMap ga(a.grad().data(), a.rows(), a.cols());
          ga.noalias() += go * mb.transpose();
        }
        if (b.requires_grad()) {
          ECMap ma(a.values().data(), a.rows(), a.cols());
          EMap gb(b.grad().data(), b.rows(), b.cols());
          gb.noalias() += ma.transpose() * go;
        }
      },
      "matmul");
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          ErrorCode::shape_mismatch, "add: shape mismatch");
  Tensor out(a.rows(), a.cols());
  for (int i = 0; i < a.size(); ++i) {
    out.values()[i] = a.values()[i] + b.values()[i];
  }
  bool track = a.requires_grad() || b.requires_grad();
  return finish(
      out, track,
      [a, b, out]() {
        if (a.requires_grad()) {
          for (int i = 0; i < a.size(); ++i) a.grad()[i] += out.grad()[i];
        }
        if (b.requires_grad()) {
          for (int i = 0; i < b.size(); ++i) b.grad()[i] += out.grad()[i];
        }
      },
      "add");
}

Tensor Tape::sub(const Tensor& a, const Tensor& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          ErrorCode::shape_mismatch, "sub: shape mismatch");
  Tensor out(a.rows(), a.cols());
  for (int i = 0; i < a.size(); ++i) {
    out.values()[i] = a.values()[i] - b.values()[i];
  }
  bool track = a.requires_grad() || b.requires_grad();
  return finish(
      out, track,
      [a, b, out]() {
        if (a.requires_grad()) {
          for (int i = 0; i < a.size(); ++i) a.grad()[i] += out.grad()[i];
        }
        if (b.requires_grad()) {
          for (int i = 0; i < b.size(); ++i) b.grad()[i] -= out.grad()[i];
        }
      },
      "sub");
}

Tensor Tape::scale(const Tensor& a, double c) {
  Tensor out(a.rows(), a.cols());
  for (int i = 0; i < a.size(); ++i) out.values()[i] = a.values()[i] * c;
  return finish(
      out, a.requires_grad(),
      [a, out, c]() {
        for (int i = 0; i < a.size(); ++i) a.grad()[i] += c * out.grad()[i];
      },
      "scale");
}

Tensor Tape::scalar_mul(const Tensor& a, const Tensor& s) {
  require(s.rows() == 1 && s.cols() == 1, ErrorCode::shape_mismatch,
          "scalar_mul: coefficient must be 1x1");
  const double c = s.values()[0];
  Tensor out(a.rows(), a.cols());
  for (int i = 0; i < a.size(); ++i) out.values()[i] = a.values()[i] * c;
  bool track = a.requires_grad() || s.requires_grad();
  return finish(
      out, track,
      [a, s, out, c]() {
        if (a.requires_grad()) {
          for (int i = 0; i < a.size(); ++i) a.grad()[i] += c * out.grad()[i];
        }
        if (s.requires_grad()) {
          double acc = 0.0;
          for (int i = 0; i < a.size(); ++i) {
            acc += a.values()[i] * out.grad()[i];
          }
          s.grad()[0] += acc;
        }
      },
      "scalar_mul");
}

Tensor Tape::add_row_broadcast(const Tensor& a, const Tensor& bias) {
  require(bias.rows() == 1 && bias.cols() == a.cols(),
          ErrorCode::shape_mismatch, "add_row_broadcast: bias must be 1 x cols");
  Tensor out(a.rows(), a.cols());
  for (int r = 0; r < a.rows(); ++r) {
    for (int c = 0; c < a.cols(); ++c) {
      out.at(r, c) = a(r, c) + bias(0, c);
    }
  }
  bool track = a.requires_grad() || bias.requires_grad();
  return finish(
      out, track,
      [a, bias, out]() {
        if (a.requires_grad()) {
          for (int i = 0; i < a.size(); ++i) a.grad()[i] += out.grad()[i];
        }
        if (bias.requires_grad()) {
          for (int r = 0; r < a.rows(); ++r) {
            for (int c = 0; c < a.cols(); ++c) {
              bias.grad()[c] += out.grad()[r * a.cols() + c];
            }
          }
        }
      },
      "add_row_broadcast");
}

Tensor Tape::concat_cols(const std::vector<Tensor>& parts) {
  require(!parts.empty(), ErrorCode::invalid_argument,
          "concat_cols: no parts");
  int rows = parts[0].rows();
  int cols = 0;
  bool track = false;
  for (const auto& p : parts) {
    require(p.rows() == rows, ErrorCode::shape_mismatch,
            "concat_cols: row counts disagree");
    cols += p.cols();
    track = track || p.requires_grad();
  }
  Tensor out(rows, cols);
  int base = 0;
  for (const auto& p : parts) {
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < p.cols(); ++c) {
        out.at(r, base + c) = p(r, c);
      }
    }
    base += p.cols();
  }
  return finish(
      out, track,
      [parts, out, rows, cols]() {
        int base = 0;
        for (const auto& p : parts) {
          if (p.requires_grad()) {
            for (int r = 0; r < rows; ++r) {
              for (int c = 0; c < p.cols(); ++c) {
                p.grad()[r * p.cols() + c] += out.grad()[r * cols + base + c];
              }
            }
          }
          base += p.cols();
        }
      },
      "concat_cols");
}

Tensor Tape::row_slice(const Tensor& a, int row_begin, int row_end) {
  require(0 <= row_begin && row_begin <= row_end && row_end <= a.rows(),
          ErrorCode::index_out_of_range, "row_slice: bad range");
  Tensor out(row_end - row_begin, a.cols());
  std::copy(a.values().begin() + row_begin * a.cols(),
            a.values().begin() + row_end * a.cols(), out.values().begin());
  return finish(
      out, a.requires_grad(),
      [a, out, row_begin]() {
        const int c = a.cols();
        for (int i = 0; i < out.size(); ++i) {
          a.grad()[row_begin * c + i] += out.grad()[i];
        }
      },
      "row_slice");
}

Tensor Tape::gather_rows(const Tensor& a, const std::vector<Id>& rows) {
  for (Id r : rows) {
    require(r >= 0 && r < a.rows(), ErrorCode::index_out_of_range,
            "gather_rows: row " + std::to_string(r) + " out of range");
  }
  Tensor out(static_cast<int>(rows.size()), a.cols());
  const int c = a.cols();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(a.values().begin() + rows[i] * c,
              a.values().begin() + (rows[i] + 1) * c,
              out.values().begin() + static_cast<int>(i) * c);
  }
  return finish(
      out, a.requires_grad(),
      [a, out, rows]() {
        const int c = a.cols();
        for (std::size_t i = 0; i < rows.size(); ++i) {
          for (int j = 0; j < c; ++j) {
            a.grad()[rows[i] * c + j] += out.grad()[i * c + j];
          }
        }
      },
      "gather_rows");
}

Tensor Tape::row_scale(const Tensor& a, const std::vector<double>& weights) {
  require(static_cast<int>(weights.size()) == a.rows(),
          ErrorCode::shape_mismatch, "row_scale: weight count != rows");
  Tensor out(a.rows(), a.cols());
  for (int r = 0; r < a.rows(); ++r) {
    for (int c = 0; c < a.cols(); ++c) out.at(r, c) = a(r, c) * weights[r];
  }
  return finish(
      out, a.requires_grad(),
      [a, out, weights]() {
        const int c = a.cols();
        for (int r = 0; r < a.rows(); ++r) {
          for (int j = 0; j < c; ++j) {
            a.grad()[r * c + j] += weights[r] * out.grad()[r * c + j];
          }
        }
      },
      "row_scale");
}

Tensor Tape::col_mul(const Tensor& a, const Tensor& w) {
  require(w.cols() == 1 && w.rows() == a.rows(), ErrorCode::shape_mismatch,
          "col_mul: weights must be rows x 1");
  Tensor out(a.rows(), a.cols());
  for (int r = 0; r < a.rows(); ++r) {
    for (int c = 0; c < a.cols(); ++c) out.at(r, c) = a(r, c) * w(r, 0);
  }
  bool track = a.requires_grad() || w.requires_grad();
  return finish(
      out, track,
      [a, w, out]() {
        const int c = a.cols();
        if (a.requires_grad()) {
          for (int r = 0; r < a.rows(); ++r) {
            for (int j = 0; j < c; ++j) {
              a.grad()[r * c + j] += w(r, 0) * out.grad()[r * c + j];
            }
          }
        }
        if (w.requires_grad()) {
          for (int r = 0; r < a.rows(); ++r) {
            double acc = 0.0;
            for (int j = 0; j < c; ++j) {
              acc += a.values()[r * c + j] * out.grad()[r * c + j];
            }
            w.grad()[r] += acc;
          }
        }
      },
      "col_mul");
}

Tensor Tape::segment_mean(const Tensor& x, const SegmentMap& map) {
  map.validate();
  require(map.num_sources == x.rows(), ErrorCode::shape_mismatch,
          "segment_mean: map built for a different source count");
  const int d = x.cols();
  Tensor out(map.num_groups(), d);
  for (int g = 0; g < map.num_groups(); ++g) {
    const int sz = map.group_size(g);
    require(sz > 0, ErrorCode::empty_group,
            "segment_mean: group " + std::to_string(g) + " is empty");
    for (int s = map.offsets[g]; s < map.offsets[g + 1]; ++s) {
      const Id src = map.indices[s];
      for (int j = 0; j < d; ++j) out.at(g, j) += x(src, j);
    }
    const double inv = 1.0 / sz;
    for (int j = 0; j < d; ++j) out.at(g, j) *= inv;
  }
  return finish(
      out, x.requires_grad(),
      [x, out, map]() {
        const int d = x.cols();
        for (int g = 0; g < map.num_groups(); ++g) {
          const double inv = 1.0 / map.group_size(g);
          for (int s = map.offsets[g]; s < map.offsets[g + 1]; ++s) {
            const Id src = map.indices[s];
            for (int j = 0; j < d; ++j) {
              x.grad()[src * d + j] += inv * out.grad()[g * d + j];
            }
          }
        }
      },
      "segment_mean");
}

Tensor Tape::segment_sum(const Tensor& x, const SegmentMap& map) {
  map.validate();
  require(map.num_sources == x.rows(), ErrorCode::shape_mismatch,
          "segment_sum: map built for a different source count");
  const int d = x.cols();
  Tensor out(map.num_groups(), d);  // empty groups stay zero
  for (int g = 0; g < map.num_groups(); ++g) {
    for (int s = map.offsets[g]; s < map.offsets[g + 1]; ++s) {
      const Id src = map.indices[s];
      for (int j = 0; j < d; ++j) out.at(g, j) += x(src, j);
    }
  }
  return finish(
      out, x.requires_grad(),
      [x, out, map]() {
        const int d = x.cols();
        for (int g = 0; g < map.num_groups(); ++g) {
          for (int s = map.offsets[g]; s < map.offsets[g + 1]; ++s) {
            const Id src = map.indices[s];
            for (int j = 0; j < d; ++j) {
              x.grad()[src * d + j] += out.grad()[g * d + j];
            }
          }
        }
      },
      "segment_sum");
}

Tensor Tape::segment_softmax(const Tensor& scores, const SegmentMap& map) {
  map.validate();
  require(scores.cols() == 1, ErrorCode::shape_mismatch,
          "segment_softmax: scores must be a column");
  require(map.num_sources == scores.rows(), ErrorCode::shape_mismatch,
          "segment_softmax: map built for a different source count");
  Tensor out(scores.rows(), 1);
  for (int g = 0; g < map.num_groups(); ++g) {
    require(map.group_size(g) > 0, ErrorCode::empty_group,
            "segment_softmax: group " + std::to_string(g) + " is empty");
    double mx = -std::numeric_limits<double>::infinity();
    for (int s = map.offsets[g]; s < map.offsets[g + 1]; ++s) {
      mx = std::max(mx, scores(map.indices[s], 0));
    }
    double z = 0.0;
    for (int s = map.offsets[g]; s < map.offsets[g + 1]; ++s) {
      z += std::exp(scores(map.indices[s], 0) - mx);
    }
    for (int s = map.offsets[g]; s < map.offsets[g + 1]; ++s) {
      const Id p = map.indices[s];
      out.at(p, 0) = std::exp(scores(p, 0) - mx) / z;
    }
  }
  return finish(
      out, scores.requires_grad(),
      [scores, out, map]() {
        // ds_p = a_p * (dout_p - sum_q a_q dout_q) within each group
        for (int g = 0; g < map.num_groups(); ++g) {
          double dot = 0.0;
          for (int s = map.offsets[g]; s < map.offsets[g + 1]; ++s) {
            const Id p = map.indices[s];
            dot += out.values()[p] * out.grad()[p];
          }
          for (int s = map.offsets[g]; s < map.offsets[g + 1]; ++s) {
            const Id p = map.indices[s];
            scores.grad()[p] += out.values()[p] * (out.grad()[p] - dot);
          }
        }
      },
      "segment_softmax");
}

Tensor Tape::relu(const Tensor& a) {
  Tensor out(a.rows(), a.cols());
  for (int i = 0; i < a.size(); ++i) {
    const double x = a.values()[i];
    if (x != 0.0) kink_margin_ = std::min(kink_margin_, std::abs(x));
    out.values()[i] = x > 0.0 ? x : 0.0;
  }
  return finish(
      out, a.requires_grad(),
      [a, out]() {
        for (int i = 0; i < a.size(); ++i) {
          if (a.values()[i] > 0.0) a.grad()[i] += out.grad()[i];
        }
      },
      "relu");
}

Tensor Tape::leaky_relu(const Tensor& a, double negative_slope) {
  Tensor out(a.rows(), a.cols());
  for (int i = 0; i < a.size(); ++i) {
    const double x = a.values()[i];
    if (x != 0.0) kink_margin_ = std::min(kink_margin_, std::abs(x));
    out.values()[i] = x > 0.0 ? x : negative_slope * x;
  }
  return finish(
      out, a.requires_grad(),
      [a, out, negative_slope]() {
        for (int i = 0; i < a.size(); ++i) {
          a.grad()[i] +=
              (a.values()[i] > 0.0 ? 1.0 : negative_slope) * out.grad()[i];
        }
      },
      "leaky_relu");
}

Tensor Tape::dropout(const Tensor& a, double p, bool training, Rng& rng) {
  require(p >= 0.0 && p < 1.0, ErrorCode::invalid_probability,
          "dropout probability must satisfy 0 <= p < 1");
  if (!training || p == 0.0) {
    Tensor out(a.rows(), a.cols());
    out.values() = a.values();
    return finish(
        out, a.requires_grad(),
        [a, out]() {
          for (int i = 0; i < a.size(); ++i) a.grad()[i] += out.grad()[i];
        },
        "dropout");
  }
  const double keep = 1.0 - p;
  const double inv_keep = 1.0 / keep;
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  auto mask = std::make_shared<std::vector<char>>(a.size());
  Tensor out(a.rows(), a.cols());
  for (int i = 0; i < a.size(); ++i) {
    const bool keep_it = uni(rng) >= p;
    (*mask)[i] = keep_it;
    out.values()[i] = keep_it ? a.values()[i] * inv_keep : 0.0;
  }
  return finish(
      out, a.requires_grad(),
      [a, out, mask, inv_keep]() {
        for (int i = 0; i < a.size(); ++i) {
          if ((*mask)[i]) a.grad()[i] += inv_keep * out.grad()[i];
        }
      },
      "dropout");
}

Tensor Tape::row_l2_normalize(const Tensor& a) {
  Tensor out(a.rows(), a.cols());
  const int d = a.cols();
  std::vector<double> norms(a.rows(), 0.0);
  for (int r = 0; r < a.rows(); ++r) {
    double sq = 0.0;
    for (int j = 0; j < d; ++j) sq += a(r, j) * a(r, j);
    const double n = std::sqrt(sq);
    norms[r] = n;
    if (n == 0.0) {
      // exactly-zero rows pass through unchanged
      continue;
    }
    kink_margin_ = std::min(kink_margin_, n);
    for (int j = 0; j < d; ++j) out.at(r, j) = a(r, j) / n;
  }
  return finish(
      out, a.requires_grad(),
      [a, out, norms]() {
        const int d = a.cols();
        for (int r = 0; r < a.rows(); ++r) {
          if (norms[r] == 0.0) {
            for (int j = 0; j < d; ++j) {
              a.grad()[r * d + j] += out.grad()[r * d + j];
            }
            continue;
          }
          double dot = 0.0;
          for (int j = 0; j < d; ++j) {
            dot += out.values()[r * d + j] * out.grad()[r * d + j];
          }
          for (int j = 0; j < d; ++j) {
            a.grad()[r * d + j] +=
                (out.grad()[r * d + j] - out.values()[r * d + j] * dot) /
                norms[r];
          }
        }
      },
      "row_l2_normalize");
}

Tensor Tape::sum_rows(const Tensor& a) {
  Tensor out(1, a.cols());
  for (int r = 0; r < a.rows(); ++r) {
    for (int c = 0; c < a.cols(); ++c) out.at(0, c) += a(r, c);
  }
  return finish(
      out, a.requires_grad(),
      [a, out]() {
        const int c = a.cols();
        for (int r = 0; r < a.rows(); ++r) {
          for (int j = 0; j < c; ++j) a.grad()[r * c + j] += out.grad()[j];
        }
      },
      "sum_rows");
}

Tensor Tape::weighted_sum(const Tensor& a,
                          const std::vector<double>& weights) {
  require(static_cast<int>(weights.size()) == a.size(),
          ErrorCode::shape_mismatch, "weighted_sum: weight count mismatch");
  Tensor out(1, 1);
  double acc = 0.0;
  for (int i = 0; i < a.size(); ++i) acc += a.values()[i] * weights[i];
  out.values()[0] = acc;
  return finish(
      out, a.requires_grad(),
      [a, out, weights]() {
        for (int i = 0; i < a.size(); ++i) {
          a.grad()[i] += weights[i] * out.grad()[0];
        }
      },
      "weighted_sum");
}

Tensor Tape::softmax_cross_entropy(const Tensor& logits,
                                   const std::vector<int>& labels,
                                   const std::vector<Id>& mask) {
  require(!mask.empty(), ErrorCode::empty_mask,
          "cross entropy over an empty mask");
  require(static_cast<int>(labels.size()) == logits.rows(),
          ErrorCode::shape_mismatch, "labels size != logit rows");
  const int C = logits.cols();
  for (Id i : mask) {
    require(i >= 0 && i < logits.rows(), ErrorCode::index_out_of_range,
            "mask index " + std::to_string(i) + " out of range");
    require(labels[i] >= 0 && labels[i] < C, ErrorCode::label_out_of_range,
            "label " + std::to_string(labels[i]) + " for vertex " +
                std::to_string(i) + " outside [0, " + std::to_string(C) + ")");
  }
  Tensor out(1, 1);
  double total = 0.0;
  for (Id i : mask) {
    double mx = logits(i, 0);
    for (int c = 1; c < C; ++c) mx = std::max(mx, logits(i, c));
    double z = 0.0;
    for (int c = 0; c < C; ++c) z += std::exp(logits(i, c) - mx);
    total += std::log(z) + mx - logits(i, labels[i]);
  }
  out.values()[0] = total / static_cast<double>(mask.size());
  return finish(
      out, logits.requires_grad(),
      [logits, out, labels, mask]() {
        const int C = logits.cols();
        const double g = out.grad()[0] / static_cast<double>(mask.size());
        for (Id i : mask) {
          double mx = logits(i, 0);
          for (int c = 1; c < C; ++c) mx = std::max(mx, logits(i, c));
          double z = 0.0;
          for (int c = 0; c < C; ++c) z += std::exp(logits(i, c) - mx);
          for (int c = 0; c < C; ++c) {
            const double p = std::exp(logits(i, c) - mx) / z;
            logits.grad()[i * C + c] +=
                g * (p - (c == labels[i] ? 1.0 : 0.0));
          }
        }
      },
      "softmax_cross_entropy");
}

void zero_grads(std::span<Tensor> params) {
  for (auto& p : params) p.zero_grad();
}

std::vector<int> argmax_rows(const Tensor& t) {
  std::vector<int> out(t.rows());
  for (int r = 0; r < t.rows(); ++r) {
    int best = 0;
    for (int c = 1; c < t.cols(); ++c) {
      if (t(r, c) > t(r, best)) best = c;
    }
    out[r] = best;
  }
  return out;
}

}  // namespace uhg::ad
