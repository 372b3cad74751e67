#include "catch2/catch_amalgamated.hpp"

#include <cmath>
#include <vector>

#include "gridcrf/energy.hpp"
#include "gridcrf/random.hpp"
#include "gridcrf/solvers.hpp"
#include "gridcrf/types.hpp"
#include "helpers.hpp"

using namespace gridcrf;

namespace {

SoftSegmentation uniform_soft(int width, int height, int k) {
  return SoftSegmentation(
      width, height, k,
      std::vector<double>(static_cast<std::size_t>(width) * height * k, 1.0 / k));
}

// Two pixels, one edge of weight 3; unaries pull them to opposite labels.
// Optimum is (1,1) at energy 1, but flipping either pixel alone from (0,0)
// costs more than staying, so single-site descent stalls at energy 2.
DiscreteProblem trap_problem() {
  UnaryTable u(2, 2, {0.0, 1.0, 2.0, 0.0});
  PairwiseGraph g(2, {{0, 1, 3.0}});
  return DiscreteProblem(std::move(u), std::move(g), 2);
}

}  // namespace

TEST_CASE("min-cut solves binary instances exactly", "[solvers]") {
  SECTION("cutting the pairwise edge is cheaper than fighting the unaries") {
    UnaryTable u(2, 2, {0.0, 10.0, 10.0, 0.0});
    PairwiseGraph g(2, {{0, 1, 1.0}});
    const DiscreteProblem problem(std::move(u), std::move(g), 2);
    const SolveReport rep = maxflow_binary(problem);
    CHECK(rep.labeling[0] == 0);
    CHECK(rep.labeling[1] == 1);
    CHECK(rep.final_energy == 1.0);
    CHECK(rep.converged);
  }

  SECTION("all-zero unaries admit a zero-energy constant labeling") {
    Rng rng(3);
    DiscreteProblem problem = testutil::random_problem(3, 3, 2, rng);
    std::fill(problem.unary.costs.begin(), problem.unary.costs.end(), 0.0);
    const SolveReport rep = maxflow_binary(problem);
    CHECK(rep.final_energy == 0.0);
    for (int p = 1; p < 9; ++p) CHECK(rep.labeling[p] == rep.labeling[0]);
  }

  SECTION("agrees with exhaustive search on random instances") {
    Rng rng(101);
    for (int trial = 0; trial < 60; ++trial) {
      const int w = rng.uniform_int(1, 4);
      const int h = rng.uniform_int(1, 3);
      const DiscreteProblem problem = testutil::random_problem(w, h, 2, rng);
      const SolveReport mc = maxflow_binary(problem);
      const SolveReport bf = brute_force(problem);
      INFO("trial " << trial << " (" << w << "x" << h << ")");
      CHECK(mc.final_energy == bf.final_energy);
    }
  }

  SECTION("only two labels are supported") {
    Rng rng(5);
    const DiscreteProblem problem = testutil::random_problem(2, 2, 3, rng);
    CHECK_THROWS_AS(maxflow_binary(problem), std::invalid_argument);
  }
}

TEST_CASE("expansion moves reach near-optimal multilabel energies", "[solvers]") {
  SECTION("binary instances are solved exactly in one expansion") {
    Rng rng(202);
    for (int trial = 0; trial < 30; ++trial) {
      const DiscreteProblem problem = testutil::random_problem(3, 3, 2, rng);
      const Labeling init = Labeling::constant(9, 1, 2, 0);
      const SolveReport ae = alpha_expansion(problem, init);
      const SolveReport mc = maxflow_binary(problem);
      CHECK(ae.final_energy == Catch::Approx(mc.final_energy).margin(1e-12));
    }
  }

  SECTION("three-label grids: optimal on most seeds, never past twice optimal") {
    Rng rng(303);
    int optimal = 0;
    for (int trial = 0; trial < 100; ++trial) {
      // Non-negative unaries keep the multiplicative bound meaningful.
      DiscreteProblem problem = testutil::random_problem(3, 3, 3, rng);
      for (double& c : problem.unary.costs) c = std::abs(c);
      const Labeling init = testutil::random_labeling(3, 3, 3, rng);
      const SolveReport ae = alpha_expansion(problem, init);
      const SolveReport bf = brute_force(problem);
      if (ae.final_energy <= bf.final_energy + 1e-9) ++optimal;
      CHECK(ae.final_energy <= 2.0 * bf.final_energy + 1e-9);
      for (std::size_t i = 1; i < ae.energy_trace.size(); ++i)
        CHECK(ae.energy_trace[i] <= ae.energy_trace[i - 1] + 1e-12);
    }
    CHECK(optimal >= 95);
  }

  SECTION("an optimal initialization converges in a single sweep") {
    Rng rng(404);
    const DiscreteProblem problem = testutil::random_problem(3, 2, 3, rng);
    const SolveReport bf = brute_force(problem);
    const SolveReport ae = alpha_expansion(problem, bf.labeling);
    CHECK(ae.sweeps == 1);
    CHECK(ae.converged);
    CHECK(ae.final_energy == bf.final_energy);
    CHECK(ae.labeling.labels == bf.labeling.labels);
  }

  SECTION("input validation") {
    Rng rng(6);
    const DiscreteProblem problem = testutil::random_problem(2, 2, 3, rng);
    CHECK_THROWS_AS(alpha_expansion(problem, Labeling::constant(4, 1, 2, 0)),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        alpha_expansion(problem, Labeling::constant(4, 1, 3, 0), 0),
        std::invalid_argument);
  }
}

TEST_CASE("single-site descent improves but can stall", "[solvers]") {
  SECTION("an isolated pixel takes its cheapest label") {
    UnaryTable u(1, 4, {3.0, 1.0, 0.0, 2.0});
    const DiscreteProblem problem(std::move(u), PairwiseGraph(1, {}), 4);
    const SolveReport rep = icm(problem, Labeling::constant(1, 1, 4, 0));
    CHECK(rep.labeling[0] == 2);
    CHECK(rep.final_energy == 0.0);
    CHECK(rep.converged);
  }

  SECTION("ties keep the current label") {
    UnaryTable u(1, 2, {0.0, 0.0});
    const DiscreteProblem problem(std::move(u), PairwiseGraph(1, {}), 2);
    const SolveReport rep = icm(problem, Labeling::constant(1, 1, 2, 1));
    CHECK(rep.labeling[0] == 1);
  }

  SECTION("the coupled trap stalls above the min-cut optimum") {
    const DiscreteProblem problem = trap_problem();
    const SolveReport stuck = icm(problem, Labeling::constant(2, 1, 2, 0));
    CHECK(stuck.final_energy == 2.0);
    CHECK(stuck.converged);
    const SolveReport mc = maxflow_binary(problem);
    CHECK(mc.final_energy == 1.0);
    CHECK(mc.labeling[0] == 1);
    CHECK(mc.labeling[1] == 1);
  }

  SECTION("never beats expansion moves on seeded instances") {
    Rng rng(505);
    for (int trial = 0; trial < 20; ++trial) {
      const DiscreteProblem problem = testutil::random_problem(3, 3, 3, rng);
      const Labeling init = testutil::random_labeling(3, 3, 3, rng);
      const SolveReport ic = icm(problem, init);
      const SolveReport ae = alpha_expansion(problem, init);
      const SolveReport bf = brute_force(problem);
      CHECK(ic.final_energy >= bf.final_energy - 1e-9);
      CHECK(ae.final_energy <= ic.final_energy + 1e-9);
      for (std::size_t i = 1; i < ic.energy_trace.size(); ++i)
        CHECK(ic.energy_trace[i] <= ic.energy_trace[i - 1] + 1e-12);
    }
  }
}

TEST_CASE("mean field approximates the label marginals", "[solvers]") {
  SECTION("without pairwise terms the fixed point is the unary softmax") {
    Rng rng(606);
    const int n = 5, k = 3;
    std::vector<double> costs(static_cast<std::size_t>(n) * k);
    for (double& c : costs) c = rng.uniform(-2.0, 2.0);
    const DiscreteProblem problem(UnaryTable(n, k, costs), PairwiseGraph(n, {}), k);
    const MeanFieldResult res = mean_field(problem, uniform_soft(n, 1, k), 10);
    CHECK(res.converged);
    for (int p = 0; p < n; ++p) {
      std::vector<double> neg(k);
      for (int i = 0; i < k; ++i) neg[i] = -problem.unary.at(p, i);
      const std::vector<double> expect = softmax(neg);
      for (int i = 0; i < k; ++i)
        CHECK(res.q.row(p)[i] == Catch::Approx(expect[i]).margin(1e-9));
    }
  }

  SECTION("a symmetric pair settles on matching marginals") {
    UnaryTable u(2, 2, {0.3, 0.7, 0.3, 0.7});
    const DiscreteProblem problem(std::move(u), PairwiseGraph(2, {{0, 1, 0.8}}), 2);
    const MeanFieldResult res = mean_field(problem, uniform_soft(2, 1, 2), 200);
    CHECK(res.converged);
    CHECK(res.q.row(0)[0] == Catch::Approx(res.q.row(1)[0]).margin(1e-6));
    CHECK(res.q.row(0)[0] + res.q.row(0)[1] == Catch::Approx(1.0).margin(1e-12));
    // The cheaper label carries more mass.
    CHECK(res.q.row(0)[0] > res.q.row(0)[1]);
  }

  SECTION("undamped sweeps never increase the free energy") {
    Rng rng(707);
    for (int trial = 0; trial < 10; ++trial) {
      const DiscreteProblem problem = testutil::random_problem(3, 3, 3, rng);
      const MeanFieldResult res = mean_field(problem, uniform_soft(3, 3, 3), 50);
      REQUIRE(res.free_energy_trace.size() >= 2);
      for (std::size_t i = 1; i < res.free_energy_trace.size(); ++i)
        CHECK(res.free_energy_trace[i] <= res.free_energy_trace[i - 1] + 1e-10);
      // Decoding yields a feasible labeling, so it cannot beat the optimum.
      const SolveReport bf = brute_force(problem);
      CHECK(problem.energy(res.q.argmax()) >= bf.final_energy - 1e-9);
    }
  }

  SECTION("damping is accepted inside [0,1) and converges to the same point") {
    const DiscreteProblem problem = trap_problem();
    const MeanFieldResult plain = mean_field(problem, uniform_soft(2, 1, 2), 300);
    const MeanFieldResult damped = mean_field(problem, uniform_soft(2, 1, 2), 300, 0.5);
    REQUIRE(plain.converged);
    REQUIRE(damped.converged);
    for (int p = 0; p < 2; ++p)
      CHECK(plain.q.row(p)[0] == Catch::Approx(damped.q.row(p)[0]).margin(1e-5));
  }

  SECTION("input validation") {
    const DiscreteProblem problem = trap_problem();
    CHECK_THROWS_AS(mean_field(problem, uniform_soft(2, 1, 2), 10, 1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(mean_field(problem, uniform_soft(2, 1, 2), 10, -0.1),
                    std::invalid_argument);
    CHECK_THROWS_AS(mean_field(problem, uniform_soft(2, 1, 2), 0),
                    std::invalid_argument);
    CHECK_THROWS_AS(mean_field(problem, uniform_soft(3, 1, 2), 10),
                    std::invalid_argument);
  }
}

TEST_CASE("exhaustive search is the ground-truth oracle", "[solvers]") {
  SECTION("single pixel returns the cheapest label") {
    UnaryTable u(1, 3, {0.5, -1.0, 2.0});
    const DiscreteProblem problem(std::move(u), PairwiseGraph(1, {}), 3);
    const SolveReport rep = brute_force(problem);
    CHECK(rep.labeling[0] == 1);
    CHECK(rep.final_energy == -1.0);
  }

  SECTION("2x2 checkerboard pays every edge once") {
    // Unaries force the checkerboard; the optimum pays all four edges.
    std::vector<double> costs(8, 5.0);
    const int checker[4] = {0, 1, 1, 0};
    for (int p = 0; p < 4; ++p) costs[static_cast<std::size_t>(p) * 2 + checker[p]] = 0.0;
    const PairwiseGraph g = testutil::grid4_graph(2, 2, [](int, int) { return 0.5; });
    const DiscreteProblem problem(UnaryTable(4, 2, std::move(costs)), g, 2);
    const SolveReport rep = brute_force(problem);
    CHECK(rep.labeling.labels == std::vector<int>{0, 1, 1, 0});
    CHECK(rep.final_energy == 2.0);
  }

  SECTION("ties resolve to the lexicographically smallest labeling") {
    const DiscreteProblem problem(UnaryTable(3, 3), PairwiseGraph(3, {}), 3);
    const SolveReport rep = brute_force(problem);
    CHECK(rep.labeling.labels == std::vector<int>{0, 0, 0});
  }

  SECTION("state spaces beyond 2^24 are rejected") {
    const DiscreteProblem problem(UnaryTable(25, 2), PairwiseGraph(25, {}), 2);
    CHECK_THROWS_AS(brute_force(problem), resource_error);
  }
}

TEST_CASE("every solver reports the energy of the labeling it returns", "[solvers]") {
  Rng rng(808);
  const DiscreteProblem problem = testutil::random_problem(3, 3, 2, rng);
  const Labeling init = testutil::random_labeling(3, 3, 2, rng);

  const SolveReport reports[] = {maxflow_binary(problem),
                                 alpha_expansion(problem, init),
                                 icm(problem, init), brute_force(problem)};
  for (const SolveReport& rep : reports)
    CHECK(rep.final_energy == problem.energy(rep.labeling));
}

TEST_CASE("discrete problem validation", "[solvers]") {
  SECTION("label count must match the unary table") {
    CHECK_THROWS_AS(DiscreteProblem(UnaryTable(4, 2), PairwiseGraph(4, {}), 3),
                    std::invalid_argument);
  }

  SECTION("pixel count must match the graph") {
    CHECK_THROWS_AS(DiscreteProblem(UnaryTable(4, 2), PairwiseGraph(5, {}), 2),
                    std::invalid_argument);
  }

  SECTION("prohibitive constants must dominate the finite costs") {
    UnaryTable u(2, 2, {kProhibitive, 6e8, 6e8, kProhibitive});
    CHECK_THROWS_AS(DiscreteProblem(std::move(u), PairwiseGraph(2, {}), 2),
                    std::logic_error);
  }
}
