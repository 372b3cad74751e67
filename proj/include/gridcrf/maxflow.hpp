#pragma once

#include <cstddef>
#include <limits>
#include <vector>

namespace gridcrf {

/// s/t max-flow via shortest augmenting paths on level graphs (Dinic).
/// Capacities are doubles; the bottleneck arc of every augmentation is
/// zeroed exactly, so the search terminates without epsilon thresholds.
/// Instances are reusable through reset() to avoid reallocation in
/// move-making solvers.
class MaxFlow {
 public:
  MaxFlow() = default;
  explicit MaxFlow(int num_nodes) { reset(num_nodes); }

  void reset(int num_nodes) {
    n_ = num_nodes;
    head_.assign(n_, -1);
    arcs_.clear();
  }

  int num_nodes() const { return n_; }

  /// Adds a directed arc u->v with capacity `cap` and its reverse with
  /// capacity `rev_cap` (0 for a one-way arc).
  void add_arc(int u, int v, double cap, double rev_cap = 0.0) {
    arcs_.push_back({v, head_[u], cap});
    head_[u] = static_cast<int>(arcs_.size()) - 1;
    arcs_.push_back({u, head_[v], rev_cap});
    head_[v] = static_cast<int>(arcs_.size()) - 1;
  }

  double solve(int s, int t) {
    s_ = s;
    t_ = t;
    double flow = 0.0;
    level_.assign(n_, -1);
    it_.assign(n_, -1);
    queue_.resize(n_);
    while (bfs()) {
      for (int u = 0; u < n_; ++u) it_[u] = head_[u];
      while (true) {
        const double pushed = dfs(s_, std::numeric_limits<double>::infinity());
        if (pushed <= 0.0) break;
        flow += pushed;
      }
    }
    return flow;
  }

  /// After solve(): true when `u` lies on the source side of the min cut.
  bool source_side(int u) const { return level_[u] >= 0; }

 private:
  struct Arc {
    int to;
    int next;
    double cap;
  };

  bool bfs() {
    level_.assign(n_, -1);
    int qh = 0, qt = 0;
    level_[s_] = 0;
    queue_[qt++] = s_;
    while (qh < qt) {
      const int u = queue_[qh++];
      for (int a = head_[u]; a != -1; a = arcs_[a].next) {
        if (arcs_[a].cap > 0.0 && level_[arcs_[a].to] < 0) {
          level_[arcs_[a].to] = level_[u] + 1;
          queue_[qt++] = arcs_[a].to;
        }
      }
    }
    return level_[t_] >= 0;
  }

  double dfs(int u, double limit) {
    if (u == t_) return limit;
    for (int& a = it_[u]; a != -1; a = arcs_[a].next) {
      Arc& arc = arcs_[a];
      if (arc.cap <= 0.0 || level_[arc.to] != level_[u] + 1) continue;
      const double pushed = dfs(arc.to, std::min(limit, arc.cap));
      if (pushed > 0.0) {
        arc.cap -= pushed;
        arcs_[a ^ 1].cap += pushed;
        if (arc.cap <= 0.0) arc.cap = 0.0;
        return pushed;
      }
      level_[arc.to] = -2;  // dead end on this level graph
    }
    return 0.0;
  }

  int n_ = 0;
  int s_ = 0;
  int t_ = 0;
  std::vector<Arc> arcs_;
  std::vector<int> head_;
  std::vector<int> level_;
  std::vector<int> it_;
  std::vector<int> queue_;
};

}  // namespace gridcrf
