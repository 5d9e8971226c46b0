#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

namespace cocrf {

/// Dinic's max-flow on real capacities. After solve(), source_side(v) tells
/// which side of the minimum cut v ended up on.
class MaxFlow {
 public:
  explicit MaxFlow(int num_vertices) : adj_(num_vertices), level_(num_vertices), iter_(num_vertices) {}

  int num_vertices() const noexcept { return static_cast<int>(adj_.size()); }

  void add_edge(int u, int v, double cap, double reverse_cap = 0.0) {
    if (u == v) return;
    adj_[u].push_back(static_cast<int>(arcs_.size()));
    arcs_.push_back({v, cap});
    adj_[v].push_back(static_cast<int>(arcs_.size()));
    arcs_.push_back({u, reverse_cap});
  }

  double solve(int source, int sink) {
    double flow = 0.0;
    while (bfs(source, sink)) {
      std::fill(iter_.begin(), iter_.end(), 0);
      for (;;) {
        const double f = dfs(source, sink, std::numeric_limits<double>::infinity());
        if (f <= 0.0) break;
        flow += f;
      }
    }
    // Final residual reachability defines the source side of the cut.
    bfs(source, -1);
    return flow;
  }

  bool source_side(int v) const { return level_[v] >= 0; }

 private:
  struct Arc {
    int to;
    double cap;
  };

  bool bfs(int s, int t) {
    std::fill(level_.begin(), level_.end(), -1);
    std::queue<int> q;
    level_[s] = 0;
    q.push(s);
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int id : adj_[u]) {
        const auto& a = arcs_[id];
        if (a.cap > 0.0 && level_[a.to] < 0) {
          level_[a.to] = level_[u] + 1;
          q.push(a.to);
        }
      }
    }
    return t >= 0 && level_[t] >= 0;
  }

  double dfs(int u, int t, double pushed) {
    if (u == t) return pushed;
    for (int& i = iter_[u]; i < static_cast<int>(adj_[u].size()); ++i) {
      const int id = adj_[u][i];
      auto& a = arcs_[id];
      if (a.cap <= 0.0 || level_[a.to] != level_[u] + 1) continue;
      const double d = dfs(a.to, t, std::min(pushed, a.cap));
      if (d > 0.0) {
        a.cap -= d;
        arcs_[id ^ 1].cap += d;
        return d;
      }
    }
    return 0.0;
  }

  std::vector<std::vector<int>> adj_;
  std::vector<Arc> arcs_;
  std::vector<int> level_;
  std::vector<int> iter_;
};

}  // namespace cocrf
