#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "uhg/adam.hpp"
#include "uhg/gradcheck.hpp"
#include "uhg/tensor.hpp"

using namespace uhg;
using ad::Precision;
using ad::SegmentMap;
using ad::Tape;
using ad::Tensor;

namespace {

SegmentMap map_of(const std::vector<std::vector<Id>>& groups,
                  int num_sources) {
  SegmentMap m;
  m.num_sources = num_sources;
  m.offsets.push_back(0);
  for (const auto& g : groups) {
    m.indices.insert(m.indices.end(), g.begin(), g.end());
    m.offsets.push_back(static_cast<int>(m.indices.size()));
  }
  return m;
}

}  // namespace

TEST_CASE("matmul identity and scalar product rule") {
  Tape t;
  auto b = Tensor::from_rows({{1, 2}, {3, 4}});
  auto eye = Tensor::from_rows({{1, 0}, {0, 1}});
  auto out = t.matmul(eye, b);
  CHECK(out.values() == b.values());

  auto a1 = Tensor::from_rows({{2}}, true);
  auto b1 = Tensor::from_rows({{3}}, true);
  auto prod = t.matmul(a1, b1);
  CHECK(prod(0, 0) == 6);
  t.backward(prod);
  CHECK(a1.grad()[0] == 3);
  CHECK(b1.grad()[0] == 2);

  CHECK_THROWS_AS(t.matmul(Tensor(2, 3), Tensor(2, 3)), Error);
}

TEST_CASE("segment_mean examples") {
  Tape t;
  auto x = Tensor::from_rows({{1, 0}, {3, 2}});
  auto singleton = t.segment_mean(x, map_of({{1}}, 2));
  CHECK(singleton.values() == std::vector<double>{3, 2});

  auto mean = t.segment_mean(x, map_of({{0, 1}}, 2));
  CHECK(mean.values() == std::vector<double>{2, 1});

  CHECK_THROWS_AS(t.segment_mean(x, map_of({{0}, {}}, 2)), Error);
  CHECK_THROWS_AS(t.segment_mean(x, map_of({{0, 5}}, 2)), Error);
}

TEST_CASE("segment_sum empty group and multiset semantics") {
  Tape t;
  auto x = Tensor::from_rows({{1.5, -2}});
  auto out = t.segment_sum(x, map_of({{}, {0, 0}}, 1));
  CHECK(out(0, 0) == 0);
  CHECK(out(0, 1) == 0);
  CHECK(out(1, 0) == 3.0);
  CHECK(out(1, 1) == -4.0);
}

TEST_CASE("segment_softmax normalizes within groups") {
  Tape t;
  auto single = t.segment_softmax(Tensor::from_rows({{4.2}}),
                                  map_of({{0}}, 1));
  CHECK(single(0, 0) == doctest::Approx(1.0));

  auto pair = t.segment_softmax(Tensor::from_rows({{0.0}, {0.0}}),
                                map_of({{0, 1}}, 2));
  CHECK(pair(0, 0) == doctest::Approx(0.5));
  CHECK(pair(1, 0) == doctest::Approx(0.5));

  // shift invariance within a group
  auto shifted = t.segment_softmax(
      Tensor::from_rows({{1.25 + 100}, {-0.5 + 100}, {2.0 + 100}}),
      map_of({{0, 1, 2}}, 3));
  auto base = t.segment_softmax(Tensor::from_rows({{1.25}, {-0.5}, {2.0}}),
                                map_of({{0, 1, 2}}, 3));
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(shifted(i, 0) - base(i, 0)) < 1e-12);
  }

  // rows within each group sum to one
  Rng rng(3);
  std::normal_distribution<double> g;
  Tensor scores(7, 1);
  for (double& v : scores.values()) v = 3.0 * g(rng);
  auto map = map_of({{0, 1, 2}, {3}, {4, 5, 6}}, 7);
  auto soft = t.segment_softmax(scores, map);
  for (int grp = 0; grp < map.num_groups(); ++grp) {
    double sum = 0;
    for (int s = map.offsets[grp]; s < map.offsets[grp + 1]; ++s) {
      sum += soft(map.indices[s], 0);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("dropout modes") {
  Tape t;
  Rng rng(1);
  auto x = Tensor::from_rows({{1, 2, 3}, {4, 5, 6}});
  CHECK(t.dropout(x, 0.0, true, rng).values() == x.values());
  CHECK(t.dropout(x, 0.6, false, rng).values() == x.values());
  CHECK_THROWS_AS(t.dropout(x, 1.0, true, rng), Error);
  CHECK_THROWS_AS(t.dropout(x, -0.1, true, rng), Error);

  // surviving entries are scaled by 1/(1-p)
  Tensor big = Tensor::full(100, 10, 1.0);
  auto dropped = t.dropout(big, 0.5, true, rng);
  int kept = 0;
  for (double v : dropped.values()) {
    if (v != 0.0) {
      CHECK(v == doctest::Approx(2.0));
      ++kept;
    }
  }
  CHECK(kept > 300);
  CHECK(kept < 700);
}

TEST_CASE("row_l2_normalize") {
  Tape t;
  auto x = Tensor::from_rows({{3, 4}, {0, 0}});
  auto out = t.row_l2_normalize(x);
  CHECK(out(0, 0) == doctest::Approx(0.6));
  CHECK(out(0, 1) == doctest::Approx(0.8));
  CHECK(out(1, 0) == 0.0);  // zero rows pass through
  CHECK(out(1, 1) == 0.0);
}

TEST_CASE("cross entropy closed forms") {
  Tape t;
  const int C = 5;
  Tensor uniform(3, C);
  std::vector<int> labels{0, 3, 2};
  auto loss = t.softmax_cross_entropy(uniform, labels, {0, 1, 2});
  CHECK(loss(0, 0) == doctest::Approx(std::log(double(C))));

  Tensor confident(1, 3);
  confident.at(0, 1) = 50.0;
  auto small = t.softmax_cross_entropy(confident, {1}, {0});
  CHECK(small(0, 0) < 1e-8);

  CHECK_THROWS_AS(t.softmax_cross_entropy(uniform, labels, {}), Error);
  CHECK_THROWS_AS(t.softmax_cross_entropy(uniform, {9, 3, 2}, {0}), Error);
}

TEST_CASE("backward requires a scalar") {
  Tape t;
  auto x = Tensor::from_rows({{1, 2}}, true);
  auto y = t.scale(x, 2.0);
  CHECK_THROWS_AS(t.backward(y), Error);
}

TEST_CASE("adam first step has closed form") {
  // loss = sum(W): every gradient entry is 1, so the bias-corrected first
  // step moves each weight by ~lr
  Tensor w = Tensor::from_rows({{0.5, -1.25}, {2.0, 0.0}}, true);
  const std::vector<double> before = w.values();
  ad::Adam adam({w}, {0.0}, {.lr = 0.01});
  Tape t;
  auto loss = t.weighted_sum(w, std::vector<double>(4, 1.0));
  adam.zero_grads();
  t.backward(loss);
  adam.step();
  for (int i = 0; i < 4; ++i) {
    CHECK(w.values()[i] ==
          doctest::Approx(before[i] - 0.01).epsilon(1e-6));
  }

  // zero gradient, zero decay: parameter unchanged
  Tensor still = Tensor::from_rows({{1.0}}, true);
  ad::Adam adam2({still}, {0.0}, {.lr = 0.01});
  adam2.zero_grads();
  adam2.step();
  CHECK(still(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("weight decay couples into the gradient") {
  // with loss == 0, the first step still moves theta against wd * theta
  Tensor w = Tensor::from_rows({{2.0}}, true);
  ad::Adam adam({w}, {0.1}, {.lr = 0.01});
  adam.zero_grads();
  adam.step();
  CHECK(w(0, 0) < 2.0);
}

TEST_CASE("precision f32 rounds op outputs") {
  Tape t32(Precision::f32);
  Tape t64(Precision::f64);
  auto a = Tensor::from_rows({{0.1}});
  auto b = Tensor::from_rows({{0.2}});
  auto s32 = t32.add(a, b);
  auto s64 = t64.add(a, b);
  CHECK(s32(0, 0) == static_cast<double>(static_cast<float>(0.1 + 0.2)));
  CHECK(s64(0, 0) == 0.1 + 0.2);
}

TEST_CASE("determinism: identical seeds give identical dropout masks") {
  auto x = Tensor::full(8, 8, 1.0);
  auto run = [&]() {
    Tape t;
    Rng rng(99);
    return t.dropout(x, 0.4, true, rng).values();
  };
  CHECK(run() == run());
}

TEST_CASE("segment ops are group-permutation invariant") {
  // permuting the source rows together with the map indices leaves every
  // group aggregate unchanged
  Rng rng(17);
  std::normal_distribution<double> g;
  Tensor x(6, 3);
  for (double& v : x.values()) v = g(rng);
  auto map = map_of({{0, 3}, {1, 2, 4}, {5}}, 6);

  std::vector<Id> perm{3, 5, 0, 1, 4, 2};  // new row of old source i
  Tensor xp(6, 3);
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 3; ++c) xp.at(perm[r], c) = x(r, c);
  }
  auto mapped = map;
  for (auto& idx : mapped.indices) idx = perm[idx];

  Tape t;
  CHECK(t.segment_mean(x, map).values() ==
        t.segment_mean(xp, mapped).values());
  CHECK(t.segment_sum(x, map).values() == t.segment_sum(xp, mapped).values());
}

TEST_CASE("finite-difference gradcheck across all ops") {
  auto summary = gradcheck::check_ops({}, /*seed=*/20250810, /*trials=*/20);
  for (const auto& c : summary.checks) {
    INFO(c.name, " max_rel_err=", c.max_rel_err);
    CHECK(c.pass);
    CHECK(c.entries_checked > 0);
  }
  CHECK(summary.max_rel_err < 1e-5);
}
