#pragma once

// Reference implementations shared by the test binaries. Each is written the
// dumbest way that is obviously correct and stays independent of the library's
// algorithms: union-find over sorted vertices, Prim in O(n^2), Kuhn matching
// for diagram comparison, the contingency-table ARI formula.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace testhelp {

// Sublevel H0 of a grid (values at vertices, 4-connectivity), elder rule.
// Returns (birth, death) pairs: the essential class capped at the grid max,
// zero-persistence merges dropped. Sorted by (birth, death).
inline std::vector<std::pair<double, double>> grid_h0(const Eigen::MatrixXd& g) {
  const int R = static_cast<int>(g.rows()), C = static_cast<int>(g.cols());
  const int n = R * C;
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  auto val = [&](int i) { return g(i / C, i % C); };
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return val(a) != val(b) ? val(a) < val(b) : a < b;
  });

  std::vector<int> parent(n, -1);     // -1: not yet in the filtration
  std::vector<double> birth(n, 0.0);  // valid at roots
  auto find = [&](int i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  };

  std::vector<std::pair<double, double>> pairs;
  for (int idx : order) {
    parent[idx] = idx;
    birth[idx] = val(idx);
    const int r = idx / C, c = idx % C;
    const int nb[4] = {r > 0 ? idx - C : -1, r + 1 < R ? idx + C : -1,
                       c > 0 ? idx - 1 : -1, c + 1 < C ? idx + 1 : -1};
    for (int j : nb) {
      if (j < 0 || parent[j] < 0) continue;
      int a = find(idx), b = find(j);
      if (a == b) continue;
      if (birth[a] > birth[b]) std::swap(a, b);  // a is the elder
      if (birth[b] < val(idx)) pairs.emplace_back(birth[b], val(idx));
      parent[b] = a;
    }
  }
  pairs.emplace_back(g.minCoeff(), g.maxCoeff());  // essential, capped
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

// Euclidean MST edge lengths of a point cloud (rows), Prim, ascending.
inline std::vector<double> mst_edge_lengths(const Eigen::MatrixXd& pts) {
  const int n = static_cast<int>(pts.rows());
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<bool> used(n, false);
  std::vector<double> lengths;
  best[0] = 0.0;
  for (int it = 0; it < n; ++it) {
    int v = -1;
    for (int i = 0; i < n; ++i)
      if (!used[i] && (v < 0 || best[i] < best[v])) v = i;
    used[v] = true;
    if (it > 0) lengths.push_back(std::sqrt(best[v]));
    for (int i = 0; i < n; ++i) {
      if (used[i]) continue;
      const double d2 = (pts.row(i) - pts.row(v)).squaredNorm();
      best[i] = std::min(best[i], d2);
    }
  }
  std::sort(lengths.begin(), lengths.end());
  return lengths;
}

// Can diagrams A and B be matched within L-infinity eps? Points may retire to
// the diagonal when their half-persistence is <= eps. Kuhn augmenting paths on
// the standard (|A|+|B|)-vertex completion.
inline bool diagrams_match_within(const std::vector<std::pair<double, double>>& A,
                                  const std::vector<std::pair<double, double>>& B,
                                  double eps) {
  const int na = static_cast<int>(A.size()), nb = static_cast<int>(B.size());
  const int L = na + nb, Rn = nb + na;  // left: A + diag copies; right: B + diag copies
  auto linf = [](const std::pair<double, double>& p, const std::pair<double, double>& q) {
    return std::max(std::fabs(p.first - q.first), std::fabs(p.second - q.second));
  };
  auto diag_ok = [&](const std::pair<double, double>& p) {
    return 0.5 * (p.second - p.first) <= eps;
  };
  std::vector<std::vector<int>> adj(L);
  for (int i = 0; i < L; ++i) {
    const bool left_real = i < na;
    for (int j = 0; j < Rn; ++j) {
      const bool right_real = j < nb;
      bool ok;
      if (left_real && right_real)
        ok = linf(A[i], B[j]) <= eps;
      else if (left_real)
        ok = diag_ok(A[i]);
      else if (right_real)
        ok = diag_ok(B[j]);
      else
        ok = true;  // diagonal to diagonal
      if (ok) adj[i].push_back(j);
    }
  }
  std::vector<int> match_r(Rn, -1);
  std::vector<char> seen;
  std::function<bool(int)> tryk = [&](int u) -> bool {
    for (int v : adj[u]) {
      if (seen[v]) continue;
      seen[v] = 1;
      if (match_r[v] < 0 || tryk(match_r[v])) {
        match_r[v] = u;
        return true;
      }
    }
    return false;
  };
  int matched = 0;
  for (int u = 0; u < L; ++u) {
    seen.assign(Rn, 0);
    if (tryk(u)) ++matched;
  }
  return matched == L;
}

// Adjusted Rand index between two labelings of the same items.
inline double adjusted_rand(const std::vector<int>& a, const std::vector<int>& b) {
  const int n = static_cast<int>(a.size());
  std::map<int, int> ra, rb;
  std::map<std::pair<int, int>, int> joint;
  for (int i = 0; i < n; ++i) {
    ++ra[a[i]];
    ++rb[b[i]];
    ++joint[{a[i], b[i]}];
  }
  auto c2 = [](double m) { return m * (m - 1.0) / 2.0; };
  double sij = 0.0, sa = 0.0, sb = 0.0;
  for (const auto& kv : joint) sij += c2(kv.second);
  for (const auto& kv : ra) sa += c2(kv.second);
  for (const auto& kv : rb) sb += c2(kv.second);
  const double expect = sa * sb / c2(n);
  const double maxi = 0.5 * (sa + sb);
  if (maxi == expect) return 1.0;  // both trivial partitions
  return (sij - expect) / (maxi - expect);
}

}  // namespace testhelp
