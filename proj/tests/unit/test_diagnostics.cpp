// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "test_support.hpp"
#include "pllab/diagnostics/diagnostics.hpp"
#include "pllab/diagnostics/report.hpp"
#include "pllab/errors.hpp"

using namespace pllab;
using pllab::test::random_tensor;

TEST_SUITE("diagnostics") {

TEST_CASE("token_norms examples") {
  const NormStats one = token_norms(Tensor::from_rows({{3.0, 4.0}}));
  CHECK(one.norms == std::vector<double>{5.0});
  CHECK(one.max_over_median == 1.0);
  CHECK(one.dominant_count == 0);

  const NormStats out = token_norms(Tensor::from_rows({{1.0}, {1.0}, {-1.0}, {100.0}}));
  CHECK(out.median == 1.0);
  CHECK(out.max_over_median == 100.0);
  CHECK(out.dominant_count == 1);
  CHECK(out.dominant_indices == std::vector<std::size_t>{3});

  const NormStats flat = token_norms(Tensor({6, 3}, 0.5));
  CHECK(flat.max_over_median == 1.0);
  CHECK(flat.dominant_count == 0);

  const NormStats zero = token_norms(Tensor({3, 2}, 0.0));
  CHECK(zero.max_over_median == 1.0);

  CHECK_THROWS_AS(token_norms(Tensor()), ArgumentError);
}

TEST_CASE("norm histogram covers every token") {
  const Tensor x = random_tensor({97, 5}, 3);
  for (std::size_t bins : {1, 7, 50}) {
    const NormStats s = token_norms(x, bins);
    CHECK(s.histogram.counts.size() == bins);
    CHECK(s.histogram.edges.size() == bins + 1);
    CHECK(std::accumulate(s.histogram.counts.begin(), s.histogram.counts.end(), std::size_t{0}) == 97);
    CHECK(s.histogram.edges.front() == 0.0);
    CHECK(s.max_over_median >= 1.0);
  }
}

TEST_CASE("dominance detector on injected outliers") {
  Rng rng(21);
  for (double factor : {10.0, 100.0}) {
    for (std::size_t pos = 0; pos < 27; ++pos) {
      const FeatureGrid g = test::outlier_grid(3, 3, 3, 4, rng, pos, factor);
      const NormStats s = token_norms(g);
      CHECK(s.dominant_indices == std::vector<std::size_t>{pos});
    }
    const NormStats none = token_norms(test::outlier_grid(3, 3, 3, 4, rng, 99, factor));
    CHECK(none.dominant_count == 0);
  }
}

TEST_CASE("neighbor_similarity constructed grids") {
  const FeatureGrid same(Tensor({3, 2, 2, 4}, 0.7));
  const SimilarityStats a = neighbor_similarity(same);
  CHECK(*a.mean_spatial == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(*a.mean_temporal == doctest::Approx(1.0).epsilon(1e-14));

  Tensor x({3, 2, 2, 3});
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t s = 0; s < 4; ++s) x[(t * 4 + s) * 3 + t] = 1.0;
  const SimilarityStats b = neighbor_similarity(FeatureGrid(x));
  CHECK(*b.mean_spatial == 1.0);
  CHECK(*b.mean_temporal == 0.0);
}

TEST_CASE("neighbor_similarity matches the all-pairs oracle") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const FeatureGrid g(random_tensor({2, 2, 2, 3}, seed));
    const SimilarityStats s = neighbor_similarity(g);
    const test::PairOracle o = test::oracle_pairs(g);
    REQUIRE(s.spatial.size() == o.spatial.size());
    REQUIRE(s.temporal.size() == o.temporal.size());
    CHECK(std::abs(*s.mean_spatial - o.sum_spatial / static_cast<double>(o.spatial.size())) < 1e-12);
    CHECK(std::abs(*s.mean_temporal - o.sum_temporal / static_cast<double>(o.temporal.size())) < 1e-12);
    std::vector<double> a = s.spatial, b = o.spatial;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-12);
  }
}

TEST_CASE("pair counts follow the closed forms") {
  for (std::size_t T = 1; T <= 4; ++T)
    for (std::size_t W = 1; W <= 4; ++W)
      for (std::size_t H = 1; H <= 4; ++H) {
        const SimilarityStats s = neighbor_similarity(FeatureGrid(random_tensor({T, W, H, 2}, T * 16 + W * 4 + H)));
        CHECK(s.spatial.size() == T * (W * (H - 1) + (W - 1) * H));
        CHECK(s.temporal.size() == (T - 1) * W * H);
        CHECK(s.mean_spatial.has_value() == (W * H >= 2));
        CHECK(s.mean_temporal.has_value() == (T >= 2));
      }
}

TEST_CASE("cosine similarity is scale invariant") {
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    const Tensor a = random_tensor({6}, 100 + i), b = random_tensor({6}, 200 + i);
    const double sa = rng.uniform(1e-3, 1e3), sb = rng.uniform(1e-3, 1e3);
    Tensor a2 = a, b2 = b;
    for (std::size_t k = 0; k < 6; ++k) {
      a2[k] *= sa;
      b2[k] *= sb;
    }
    CHECK(std::abs(cosine_similarity(a.values(), b.values()) - cosine_similarity(a2.values(), b2.values())) < 1e-12);
  }
  const Tensor z({3}, 0.0), o({3}, 1.0);
  CHECK(cosine_similarity(z.values(), o.values()) == 0.0);
}

TEST_CASE("text_length_stats") {
  const LengthStats s = text_length_stats({tokenize("ab"), tokenize("abcd")});
  CHECK(s.lengths == std::vector<std::size_t>{2, 4});
  CHECK(s.mean == 3.0);
  TokenSeq stopped = tokenize("xyz");
  stopped.insert(stopped.begin() + 1, kEos);
  CHECK(text_length_stats({stopped}).lengths == std::vector<std::size_t>{1});
  const LengthStats empty = text_length_stats({{}, {kEos}, {}});
  CHECK(empty.lengths == std::vector<std::size_t>{0, 0, 0});
  CHECK_THROWS_AS(text_length_stats({}), ArgumentError);

  Rng rng(8);
  std::vector<std::size_t> lengths;
  for (int i = 0; i < 100; ++i) lengths.push_back(rng.below(40));
  const LengthStats r = length_stats(lengths);
  double sum = 0.0;
  for (auto l : lengths) sum += static_cast<double>(l);
  std::vector<std::size_t> sorted = lengths;
  std::sort(sorted.begin(), sorted.end());
  CHECK(r.mean == doctest::Approx(sum / 100.0).epsilon(1e-15));
  CHECK(r.median == (static_cast<double>(sorted[49]) + static_cast<double>(sorted[50])) / 2.0);
  CHECK(std::accumulate(r.histogram.counts.begin(), r.histogram.counts.end(), std::size_t{0}) == 100);
}

TEST_CASE("statistics are pure") {
  const FeatureGrid g(random_tensor({2, 3, 2, 4}, 9));
  const NormStats a = token_norms(g), b = token_norms(g);
  CHECK(a.norms == b.norms);
  CHECK(a.histogram.counts == b.histogram.counts);
  CHECK(neighbor_similarity(g).spatial == neighbor_similarity(g).spatial);
}

TEST_CASE("diagnostics JSON keys") {
  const FeatureGrid g(random_tensor({2, 2, 2, 4}, 10));
  const NormStats n = token_norms(g);
  const SimilarityStats s = neighbor_similarity(g);
  const LengthStats l = length_stats({1, 2, 3});
  const auto j = diagnostics_json(&n, &s, &l);
  for (const char* key : {"norms", "histogram", "max_over_median", "dominant_count", "mean_spatial",
                          "mean_temporal", "lengths"}) {
    CAPTURE(key);
    CHECK(j.contains(key));
  }
  CHECK(j["norms"].size() == 8);
  const auto partial = diagnostics_json(&n, nullptr, nullptr);
  CHECK(partial["mean_spatial"].is_null());
  CHECK(partial["lengths"].is_null());
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(format_number(std::nan("")) == "nan");
}

}  // TEST_SUITE
