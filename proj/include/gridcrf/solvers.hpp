#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "gridcrf/energy.hpp"
#include "gridcrf/maxflow.hpp"
#include "gridcrf/types.hpp"

namespace gridcrf {

/// Unary + Potts instance over a shared pairwise graph.
struct DiscreteProblem {
  UnaryTable unary;
  PairwiseGraph graph;
  int num_labels = 0;

  DiscreteProblem() = default;
  DiscreteProblem(UnaryTable u, PairwiseGraph g, int k)
      : unary(std::move(u)), graph(std::move(g)), num_labels(k) {
    validate();
  }

  int num_pixels() const { return unary.num_pixels; }

  double energy(const Labeling& l) const {
    return unary.total_at(l) + potts_energy(l, graph);
  }

  void validate() const {
    unary.validate();
    graph.validate();
    if (num_labels <= 0 || unary.num_labels != num_labels)
      throw std::invalid_argument("DiscreteProblem: label count mismatch");
    if (unary.num_pixels != graph.num_pixels)
      throw std::invalid_argument("DiscreteProblem: pixel count mismatch");
    // When prohibitive constraints are present, every feasible finite
    // configuration must stay strictly below them.
    double finite_bound = graph.total_weight();
    bool has_prohibitive = false;
    for (int p = 0; p < unary.num_pixels; ++p) {
      double row_max = 0.0;
      for (int k = 0; k < num_labels; ++k) {
        const double c = unary.at(p, k);
        if (c == kProhibitive)
          has_prohibitive = true;
        else
          row_max = std::max(row_max, std::abs(c));
      }
      finite_bound += row_max;
    }
    if (has_prohibitive && finite_bound >= kProhibitive)
      throw std::logic_error("DiscreteProblem: prohibitive constant not dominant");
  }
};

struct SolveReport {
  Labeling labeling;
  double final_energy = 0.0;
  std::vector<double> energy_trace;  // initial energy, then one entry per sweep
  int sweeps = 0;
  bool converged = false;
};

struct MeanFieldResult {
  SoftSegmentation q;
  std::vector<double> free_energy_trace;
  int sweeps = 0;
  bool converged = false;
};

namespace detail {

// Shared two-terminal reduction. Binary variable y_p: 0 = first option,
// 1 = second option; cost0/cost1 accumulate the per-pixel costs of each and
// pairwise terms contribute through the standard decomposition whose cross
// term lands on a directed arc. Returns the minimizing assignment.
class BinarySubproblem {
 public:
  void begin(int num_pixels) {
    n_ = num_pixels;
    cost0_.assign(n_, 0.0);
    cost1_.assign(n_, 0.0);
    arcs_.clear();
  }

  void add_unary(int p, double c0, double c1) {
    cost0_[p] += c0;
    cost1_[p] += c1;
  }

  // Pairwise table e00/e01/e10/e11 with e01 + e10 >= e00 + e11 (submodular).
  void add_pairwise(int p, int q, double e00, double e01, double e10, double e11) {
    cost1_[p] += e10 - e00;
    cost1_[q] += e11 - e10;
    const double cross = e01 + e10 - e00 - e11;
    if (cross > 0.0) arcs_.push_back({p, q, cross});
  }

  // Solves the accumulated instance; out[p] in {0,1}.
  void solve(std::vector<std::uint8_t>& out, MaxFlow& flow) {
    const int s = n_;
    const int t = n_ + 1;
    flow.reset(n_ + 2);
    for (int p = 0; p < n_; ++p) {
      const double m = std::min(cost0_[p], cost1_[p]);
      const double to_sink = cost0_[p] - m;
      const double from_source = cost1_[p] - m;
      if (from_source > 0.0) flow.add_arc(s, p, from_source);
      if (to_sink > 0.0) flow.add_arc(p, t, to_sink);
    }
    for (const CrossArc& a : arcs_) flow.add_arc(a.p, a.q, a.cap);
    flow.solve(s, t);
    out.resize(n_);
    for (int p = 0; p < n_; ++p)
      out[p] = flow.source_side(p) ? 0 : 1;
  }

 private:
  struct CrossArc {
    int p, q;
    double cap;
  };
  int n_ = 0;
  std::vector<double> cost0_, cost1_;
  std::vector<CrossArc> arcs_;
};

}  // namespace detail

/// Exact minimizer for K=2 via a single min-cut: normalized unaries become
/// terminal capacities, each Potts weight the symmetric edge capacity.
/// Source side <=> label 0.
inline SolveReport maxflow_binary(const DiscreteProblem& problem) {
  if (problem.num_labels != 2)
    throw std::invalid_argument("maxflow_binary: requires exactly 2 labels");
  const int n = problem.num_pixels();
  const int s = n;
  const int t = n + 1;

  MaxFlow flow(n + 2);
  for (int p = 0; p < n; ++p) {
    const double u0 = problem.unary.at(p, 0);
    const double u1 = problem.unary.at(p, 1);
    const double m = std::min(u0, u1);
    if (u1 - m > 0.0) flow.add_arc(s, p, u1 - m);
    if (u0 - m > 0.0) flow.add_arc(p, t, u0 - m);
  }
  for (const Edge& e : problem.graph.edges)
    if (e.w > 0.0) flow.add_arc(e.p, e.q, e.w, e.w);
  flow.solve(s, t);

  SolveReport report;
  std::vector<int> labels(n);
  for (int p = 0; p < n; ++p) labels[p] = flow.source_side(p) ? 0 : 1;
  report.labeling = Labeling(n, 1, 2, std::move(labels));
  report.final_energy = problem.energy(report.labeling);
  report.energy_trace = {report.final_energy};
  report.sweeps = 1;
  report.converged = true;
  return report;
}

/// Move-making multi-label minimizer; each move expands one label via an
/// exact binary cut and is kept only when it strictly lowers the energy.
inline SolveReport alpha_expansion(const DiscreteProblem& problem, const Labeling& init,
                                   int max_sweeps = 5) {
  if (init.num_pixels() != problem.num_pixels() || init.num_labels != problem.num_labels)
    throw std::invalid_argument("alpha_expansion: init mismatch");
  if (max_sweeps < 1)
    throw std::invalid_argument("alpha_expansion: max_sweeps must be >= 1");

  const int n = problem.num_pixels();
  const int k = problem.num_labels;
  Labeling current = init;
  double current_energy = problem.energy(current);

  SolveReport report;
  report.energy_trace.push_back(current_energy);

  detail::BinarySubproblem sub;
  MaxFlow flow;
  std::vector<std::uint8_t> assign;
  Labeling proposal = current;

  bool converged = false;
  int sweeps = 0;
  while (sweeps < max_sweeps && !converged) {
    bool any_change = false;
    for (int alpha = 0; alpha < k; ++alpha) {
      // y_p = 0 keeps the current label, y_p = 1 switches to alpha.
      sub.begin(n);
      for (int p = 0; p < n; ++p)
        sub.add_unary(p, problem.unary.at(p, current[p]), problem.unary.at(p, alpha));
      for (const Edge& e : problem.graph.edges) {
        const int sp = current[e.p];
        const int sq = current[e.q];
        sub.add_pairwise(e.p, e.q,
                         e.w * (sp != sq),     // both keep
                         e.w * (sp != alpha),  // q switches
                         e.w * (sq != alpha),  // p switches
                         0.0);                 // both alpha
      }
      sub.solve(assign, flow);

      proposal.labels = current.labels;
      for (int p = 0; p < n; ++p)
        if (assign[p]) proposal.labels[p] = alpha;
      const double proposal_energy = problem.energy(proposal);
      if (proposal_energy < current_energy) {
        current.labels.swap(proposal.labels);
        current_energy = proposal_energy;
        any_change = true;
      }
    }
    ++sweeps;
    report.energy_trace.push_back(current_energy);
    converged = !any_change;
  }

  report.labeling = std::move(current);
  report.final_energy = problem.energy(report.labeling);
  report.sweeps = sweeps;
  report.converged = converged;
  return report;
}

/// Coordinate descent over pixels in raster order; ties keep the current label.
inline SolveReport icm(const DiscreteProblem& problem, const Labeling& init,
                       int max_sweeps = 50) {
  if (init.num_pixels() != problem.num_pixels() || init.num_labels != problem.num_labels)
    throw std::invalid_argument("icm: init mismatch");
  if (max_sweeps < 1) throw std::invalid_argument("icm: max_sweeps must be >= 1");

  const Adjacency adj = build_adjacency(problem.graph);
  const int n = problem.num_pixels();
  const int k = problem.num_labels;
  Labeling current = init;

  SolveReport report;
  report.energy_trace.push_back(problem.energy(current));

  bool converged = false;
  int sweeps = 0;
  while (sweeps < max_sweeps && !converged) {
    bool any_change = false;
    for (int p = 0; p < n; ++p) {
      const int cur = current[p];
      int best = cur;
      double best_cost = problem.unary.at(p, cur);
      for (auto [q, w] : adj.of(p)) best_cost += w * (cur != current[q]);
      for (int cand = 0; cand < k; ++cand) {
        if (cand == cur) continue;
        double cost = problem.unary.at(p, cand);
        for (auto [q, w] : adj.of(p)) cost += w * (cand != current[q]);
        if (cost < best_cost) {
          best_cost = cost;
          best = cand;
        }
      }
      if (best != cur) {
        current.labels[p] = best;
        any_change = true;
      }
    }
    ++sweeps;
    report.energy_trace.push_back(problem.energy(current));
    converged = !any_change;
  }

  report.labeling = std::move(current);
  report.final_energy = problem.energy(report.labeling);
  report.sweeps = sweeps;
  report.converged = converged;
  return report;
}

namespace detail {

// Naive mean-field objective: expected unary + expected Potts + negative entropy.
inline double mean_field_free_energy(const DiscreteProblem& problem,
                                     const SoftSegmentation& q) {
  const int n = problem.num_pixels();
  const int k = problem.num_labels;
  double f = 0.0;
  for (int p = 0; p < n; ++p) {
    const double* row = q.row(p);
    for (int i = 0; i < k; ++i) {
      f += row[i] * problem.unary.at(p, i);
      if (row[i] > 0.0) f += row[i] * std::log(row[i]);
    }
  }
  for (const Edge& e : problem.graph.edges) {
    const double* qp = q.row(e.p);
    const double* qq = q.row(e.q);
    double agree = 0.0;
    for (int i = 0; i < k; ++i) agree += qp[i] * qq[i];
    f += e.w * (1.0 - agree);
  }
  return f;
}

}  // namespace detail

/// Sequential naive mean-field updates
/// Q_p(k) <- softmax_k(-unary(p,k) - sum_q w_pq (1 - Q_q(k))), optionally
/// damped toward the previous row. Undamped sequential updates never increase
/// the recorded free energy.
inline MeanFieldResult mean_field(const DiscreteProblem& problem,
                                  const SoftSegmentation& init, int max_sweeps,
                                  double damping = 0.0) {
  if (init.num_pixels() != problem.num_pixels() || init.num_labels != problem.num_labels)
    throw std::invalid_argument("mean_field: init mismatch");
  if (!(damping >= 0.0 && damping < 1.0))
    throw std::invalid_argument("mean_field: damping must be in [0,1)");
  if (max_sweeps < 1) throw std::invalid_argument("mean_field: max_sweeps must be >= 1");

  const Adjacency adj = build_adjacency(problem.graph);
  const int n = problem.num_pixels();
  const int k = problem.num_labels;
  SoftSegmentation q = init;

  MeanFieldResult result;
  result.free_energy_trace.push_back(detail::mean_field_free_energy(problem, q));

  std::vector<double> scores(k), fresh(k);
  constexpr double kConvergenceTol = 1e-7;
  int sweeps = 0;
  bool converged = false;
  while (sweeps < max_sweeps && !converged) {
    double max_delta = 0.0;
    for (int p = 0; p < n; ++p) {
      for (int i = 0; i < k; ++i) scores[i] = -problem.unary.at(p, i);
      for (auto [nb, w] : adj.of(p)) {
        const double* qn = q.row(nb);
        for (int i = 0; i < k; ++i) scores[i] -= w * (1.0 - qn[i]);
      }
      softmax_row(scores.data(), fresh.data(), k);
      double* row = q.row(p);
      for (int i = 0; i < k; ++i) {
        const double updated = damping * row[i] + (1.0 - damping) * fresh[i];
        max_delta = std::max(max_delta, std::abs(updated - row[i]));
        row[i] = updated;
      }
    }
    ++sweeps;
    result.free_energy_trace.push_back(detail::mean_field_free_energy(problem, q));
    converged = max_delta < kConvergenceTol;
  }

  result.q = std::move(q);
  result.sweeps = sweeps;
  result.converged = converged;
  return result;
}

/// Exact optimum by enumeration; guarded, lexicographically smallest argmin.
inline SolveReport brute_force(const DiscreteProblem& problem) {
  const int n = problem.num_pixels();
  const int k = problem.num_labels;
  double states = 1.0;
  for (int p = 0; p < n; ++p) {
    states *= k;
    if (states > static_cast<double>(1 << 24))
      throw resource_error("brute_force: state space exceeds 2^24");
  }

  Labeling current = Labeling(n, 1, k, std::vector<int>(n, 0));
  Labeling best = current;
  double best_energy = problem.energy(current);

  // Odometer over labels, last pixel fastest: lexicographic ascending order,
  // so strict improvement keeps the lexicographically smallest optimum.
  while (true) {
    int p = n - 1;
    while (p >= 0 && current.labels[p] == k - 1) {
      current.labels[p] = 0;
      --p;
    }
    if (p < 0) break;
    ++current.labels[p];
    const double e = problem.energy(current);
    if (e < best_energy) {
      best_energy = e;
      best = current;
    }
  }

  SolveReport report;
  report.labeling = std::move(best);
  report.final_energy = best_energy;
  report.energy_trace = {best_energy};
  report.sweeps = 1;
  report.converged = true;
  return report;
}

}  // namespace gridcrf
