#include "catch2/catch_amalgamated.hpp"

#include <cmath>

#include "gridcrf/types.hpp"
#include "helpers.hpp"

using namespace gridcrf;

TEST_CASE("one_hot places the unit entry", "[types]") {
  CHECK(one_hot(0, 2) == std::vector<double>{1.0, 0.0});
  CHECK(one_hot(1, 3) == std::vector<double>{0.0, 1.0, 0.0});
  CHECK_THROWS_AS(one_hot(2, 2), std::invalid_argument);
  CHECK_THROWS_AS(one_hot(-1, 2), std::invalid_argument);
  CHECK_THROWS_AS(one_hot(0, 0), std::invalid_argument);
}

TEST_CASE("softmax basics", "[types]") {
  const auto half = softmax(std::vector<double>{0.0, 0.0});
  CHECK(half[0] == Catch::Approx(0.5).margin(1e-15));
  CHECK(half[1] == Catch::Approx(0.5).margin(1e-15));

  const auto thirds = softmax(std::vector<double>{7.3, 7.3, 7.3});
  for (double v : thirds) CHECK(v == Catch::Approx(1.0 / 3.0).margin(1e-15));

  const auto sat = softmax(std::vector<double>{1000.0, 0.0});
  CHECK(sat[0] == Catch::Approx(1.0).margin(1e-12));
  CHECK(sat[1] == Catch::Approx(0.0).margin(1e-12));
  CHECK(std::isfinite(sat[0]));

  CHECK_THROWS_AS(softmax(std::vector<double>{std::nan(""), 0.0}), std::domain_error);
  CHECK_THROWS_AS(softmax(std::vector<double>{}), std::invalid_argument);

  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> scores(4);
    for (double& s : scores) s = rng.uniform(-30.0, 30.0);
    const auto probs = softmax(scores);
    double sum = 0.0;
    for (double p : probs) sum += p;
    CHECK(sum == Catch::Approx(1.0).margin(1e-12));
  }
}

namespace {

ScribbleMask chain_mask(int length, int label = 0) {
  ScribbleMask m = ScribbleMask::empty(length, 1, 2);
  ScribbleChain ch;
  ch.label = label;
  for (int x = 0; x < length; ++x) ch.pixels.push_back({x, 0});
  m.paint_chain(ch);
  return m;
}

}  // namespace

TEST_CASE("shorten_scribbles keeps the centered sub-chain", "[types]") {
  SECTION("ratio 1.0 keeps everything") {
    const ScribbleMask out = shorten_scribbles(chain_mask(10), 1.0);
    CHECK(out.num_labeled() == 10);
    for (int x = 0; x < 10; ++x) CHECK(out.label_at(x) == 0);
  }
  SECTION("ratio 0.0 degenerates to the center click") {
    const ScribbleMask out = shorten_scribbles(chain_mask(10), 0.0);
    CHECK(out.num_labeled() == 1);
    CHECK(out.is_labeled(5));  // round-half-up center of 0..9
  }
  SECTION("9 pixels at ratio 0.5 keep indices 2..6") {
    const ScribbleMask out = shorten_scribbles(chain_mask(9), 0.5);
    CHECK(out.num_labeled() == 5);
    for (int x = 2; x <= 6; ++x) CHECK(out.is_labeled(x));
  }
  SECTION("chains are required") {
    ScribbleMask no_chains = ScribbleMask::empty(4, 1, 2);
    no_chains.entries[0] = 1;
    CHECK_THROWS_AS(shorten_scribbles(no_chains, 0.5), unsupported_input);
  }
  SECTION("invalid ratio") {
    CHECK_THROWS_AS(shorten_scribbles(chain_mask(5), 1.5), std::invalid_argument);
    CHECK_THROWS_AS(shorten_scribbles(chain_mask(5), -0.1), std::invalid_argument);
  }
  SECTION("labeled count is monotone in the ratio") {
    Rng rng(11);
    for (int trial = 0; trial < 10; ++trial) {
      const ScribbleMask m = chain_mask(rng.uniform_int(1, 40));
      int prev = 0;
      for (double ratio : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        const int count = shorten_scribbles(m, ratio).num_labeled();
        CHECK(count >= prev);
        prev = count;
      }
    }
  }
  SECTION("full ratio reproduces the chain-derived raster") {
    const ScribbleMask m = chain_mask(17, 1);
    const ScribbleMask out = shorten_scribbles(m, 1.0);
    CHECK(out.entries == m.entries);
  }
}

TEST_CASE("type invariants reject malformed inputs", "[types]") {
  CHECK_THROWS_AS(GridImage(2, 1, 1, {0.5, 1.5}), std::invalid_argument);
  CHECK_THROWS_AS(GridImage(2, 1, 1, {0.5}), std::invalid_argument);
  CHECK_THROWS_AS(GridImage(2, 1, 2, {0.1, 0.2, 0.3, 0.4}), std::invalid_argument);

  CHECK_THROWS_AS(Labeling(2, 1, 2, {0, 2}), std::invalid_argument);
  CHECK_THROWS_AS(Labeling(2, 1, 2, {0}), std::invalid_argument);

  CHECK_THROWS_AS(SoftSegmentation(1, 1, 2, {0.7, 0.7}), std::invalid_argument);
  CHECK_THROWS_AS(SoftSegmentation(1, 1, 2, {1.2, -0.2}), std::invalid_argument);
  CHECK_NOTHROW(SoftSegmentation(1, 1, 2, {0.25, 0.75}));

  CHECK_THROWS_AS(PairwiseGraph(2, {{0, 0, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(PairwiseGraph(2, {{0, 1, 1.0}, {1, 0, 0.5}}), std::invalid_argument);
  CHECK_THROWS_AS(PairwiseGraph(2, {{0, 1, -1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(PairwiseGraph(2, {{0, 2, 1.0}}), std::invalid_argument);

  ScribbleMask bad = ScribbleMask::empty(2, 2, 2);
  bad.entries[1] = 5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("adjacency mirrors every edge in both directions", "[types]") {
  const PairwiseGraph g(4, {{0, 1, 0.5}, {1, 2, 1.5}, {0, 3, 2.0}});
  const Adjacency adj = build_adjacency(g);
  CHECK(adj.of(0).size() == 2);
  CHECK(adj.of(1).size() == 2);
  CHECK(adj.of(2).size() == 1);
  CHECK(adj.of(3).size() == 1);
  CHECK(adj.of(2)[0].first == 1);
  CHECK(adj.of(2)[0].second == 1.5);
  CHECK(adj.of(3)[0].first == 0);

  double mirrored = 0.0;
  for (int p = 0; p < 4; ++p)
    for (auto [q, w] : adj.of(p)) mirrored += w;
  CHECK(mirrored == Catch::Approx(2.0 * g.total_weight()));
}

TEST_CASE("soft segmentation argmax and row access", "[types]") {
  SoftSegmentation seg(2, 1, 3, {0.2, 0.5, 0.3, 0.6, 0.1, 0.3});
  const Labeling arg = seg.argmax();
  CHECK(arg[0] == 1);
  CHECK(arg[1] == 0);
  CHECK(seg.row(1)[0] == 0.6);
}
