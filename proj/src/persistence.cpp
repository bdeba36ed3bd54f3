#include "vocluster/persistence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "delaunay.hpp"

namespace vocluster {

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  }
  void link(int a, int b) { parent[a] = b; }
};

}  // namespace

PersistenceDiagram sublevel_cubical_persistence(const Spectrogram& spec) {
  const int rows = static_cast<int>(spec.values.rows());
  const int cols = static_cast<int>(spec.values.cols());
  if (rows == 0 || cols == 0) throw std::invalid_argument("cubical: empty grid");
  const int n = rows * cols;
  const double* v = spec.values.data();  // column-major; index r + c*rows
  auto idx = [&](int r, int c) { return r + c * rows; };

  PersistenceDiagram dgm;
  dgm.source = DiagramSource::spectrogram;
  dgm.cap_value = spec.values.maxCoeff();
  const double cap = dgm.cap_value;

  // ---- H0: sublevel sweep, 4-connectivity, elder rule ----
  {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (v[a] != v[b]) return v[a] < v[b];
      return a < b;
    });
    std::vector<int> rank_of(n);
    for (int i = 0; i < n; ++i) rank_of[order[i]] = i;

    UnionFind uf(n);
    std::vector<double> birth(n);  // per current root
    std::vector<char> seen(n, 0);
    for (int i = 0; i < n; ++i) {
      const int p = order[i];
      const int r = p % rows, c = p / rows;
      seen[p] = 1;
      birth[p] = v[p];
      const int nb[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
      for (const auto& q : nb) {
        if (q[0] < 0 || q[0] >= rows || q[1] < 0 || q[1] >= cols) continue;
        const int u = idx(q[0], q[1]);
        if (!seen[u]) continue;
        const int ra = uf.find(p), rb = uf.find(u);
        if (ra == rb) continue;
        // elder rule: the younger component (larger birth, ties by later
        // arrival) dies at the current value
        int young = ra, old = rb;
        if (birth[ra] < birth[rb] ||
            (birth[ra] == birth[rb] && rank_of[ra] < rank_of[rb])) {
          young = rb;
          old = ra;
        }
        if (v[p] > birth[young])
          dgm.points.push_back({birth[young], v[p], 0});
        uf.link(young, old);
      }
    }
    // essential component, capped; kept even when zero-length (constant grid)
    dgm.points.push_back({v[order[0]], cap, 0});
  }

  // ---- H1 via the dual superlevel sweep: 8-connectivity plus a virtual
  // outside region that border pixels join. A superlevel component born
  // at local max M and absorbed at value s corresponds to a sublevel
  // 1-cycle born at s and filled at M. ----
  {
    const int OUT = n;  // virtual outside node, elder to everything
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (v[a] != v[b]) return v[a] > v[b];
      return a < b;
    });
    std::vector<int> rank_of(n);
    for (int i = 0; i < n; ++i) rank_of[order[i]] = i;

    UnionFind uf(n + 1);
    std::vector<double> birth(n + 1);
    std::vector<char> seen(n + 1, 0);
    birth[OUT] = std::numeric_limits<double>::infinity();
    seen[OUT] = 1;

    auto link_comps = [&](int a, int b, double value) {
      const int ra = uf.find(a), rb = uf.find(b);
      if (ra == rb) return;
      int young = ra, old = rb;
      const bool a_elder =
          birth[ra] > birth[rb] ||
          (birth[ra] == birth[rb] && ra != OUT && rb != OUT && rank_of[ra] < rank_of[rb]) ||
          ra == OUT;
      if (a_elder) {
        young = rb;
        old = ra;
      }
      if (birth[young] > value)
        dgm.points.push_back({value, birth[young], 1});
      uf.link(young, old);
    };

    for (int i = 0; i < n; ++i) {
      const int p = order[i];
      const int r = p % rows, c = p / rows;
      seen[p] = 1;
      birth[p] = v[p];
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          const int rr = r + dr, cc = c + dc;
          if (rr < 0 || rr >= rows || cc < 0 || cc >= cols) continue;
          const int u = idx(rr, cc);
          if (!seen[u]) continue;
          link_comps(p, u, v[p]);
        }
      }
      if (r == 0 || r == rows - 1 || c == 0 || c == cols - 1) link_comps(p, OUT, v[p]);
    }
  }

  return dgm;
}

namespace {

struct Simplex {
  std::array<int, 4> v = {-1, -1, -1, -1};  // ascending, unused slots -1
  int dim = 0;
  double value = 0.0;
};

// squared circumradius and center of 2..4 affinely independent points
std::pair<double, Eigen::Vector3d> circumsphere(const Eigen::MatrixXd& pts,
                                                const int* ids, int count) {
  const Eigen::Vector3d p0 = pts.row(ids[0]).transpose();
  const int k = count - 1;
  Eigen::MatrixXd A(k, 3);
  Eigen::VectorXd b(k);
  for (int i = 0; i < k; ++i) {
    const Eigen::Vector3d d = pts.row(ids[i + 1]).transpose() - p0;
    A.row(i) = d.transpose();
    b(i) = 0.5 * d.squaredNorm();
  }
  Eigen::Vector3d c;
  if (k == 3) {
    c = A.fullPivLu().solve(b);
  } else {
    // constrained to the affine hull: c = A^T y, (A A^T) y = b
    const Eigen::MatrixXd G = A * A.transpose();
    const Eigen::VectorXd y = G.fullPivLu().solve(b);
    c = A.transpose() * y;
  }
  return {c.squaredNorm(), p0 + c};
}

}  // namespace

PersistenceDiagram alpha_persistence(const PointCloud& cloud, std::uint64_t seed) {
  const int n = cloud.size();
  if (n < 1 || cloud.dim() != 3) throw std::invalid_argument("alpha: need a 3-D cloud");
  const Eigen::MatrixXd& P = cloud.points;

  PersistenceDiagram dgm;
  dgm.source = DiagramSource::embedding;

  if (n == 1) {
    dgm.cap_value = 0.0;
    dgm.points.push_back({0.0, 0.0, 0});
    return dgm;
  }
  {
    const Eigen::RowVector3d mn = P.colwise().minCoeff(), mx = P.colwise().maxCoeff();
    if ((mx - mn).norm() <= 0.0) {  // all points identical
      dgm.cap_value = 0.0;
      dgm.points.push_back({0.0, 0.0, 0});
      return dgm;
    }
  }

  // collect simplices: full complex for n <= 4, Delaunay otherwise
  std::vector<std::array<int, 4>> tets;
  if (n >= 5) {
    tets = delaunay3d(P, seed).tets;
  } else if (n == 4) {
    tets.push_back({0, 1, 2, 3});
  }

  std::map<std::array<int, 3>, double> tri_val;
  std::map<std::array<int, 2>, double> edge_val;
  std::vector<Simplex> simplices;

  auto tri_key = [](int a, int b, int c) {
    std::array<int, 3> k = {a, b, c};
    std::sort(k.begin(), k.end());
    return k;
  };
  auto edge_key = [](int a, int b) {
    return std::array<int, 2>{std::min(a, b), std::max(a, b)};
  };

  // tetrahedra own their squared circumradius
  std::map<std::array<int, 3>, double> tri_coface_min;
  for (const auto& t : tets) {
    const int ids[4] = {t[0], t[1], t[2], t[3]};
    const double r2 = circumsphere(P, ids, 4).first;
    Simplex s;
    s.v = {t[0], t[1], t[2], t[3]};
    s.dim = 3;
    s.value = r2;
    simplices.push_back(s);
    const std::array<int, 3> faces[4] = {tri_key(t[0], t[1], t[2]), tri_key(t[0], t[1], t[3]),
                                         tri_key(t[0], t[2], t[3]), tri_key(t[1], t[2], t[3])};
    for (const auto& f : faces) {
      auto it = tri_coface_min.find(f);
      if (it == tri_coface_min.end() || r2 < it->second) tri_coface_min[f] = r2;
    }
  }

  if (n == 3) tri_coface_min[tri_key(0, 1, 2)] = std::numeric_limits<double>::infinity();
  if (n == 2) { /* no triangles */ }

  // triangles: Gabriel -> own value, else inherited from cofaces
  auto gabriel = [&](const Eigen::Vector3d& c, double r2, const int* ids, int count) {
    for (int q = 0; q < n; ++q) {
      bool own = false;
      for (int t = 0; t < count; ++t) own |= (q == ids[t]);
      if (own) continue;
      if ((P.row(q).transpose() - c).squaredNorm() < r2 * (1.0 - 1e-12)) return false;
    }
    return true;
  };

  std::map<std::array<int, 2>, double> edge_coface_min;
  for (auto& [f, cof] : tri_coface_min) {
    const int ids[3] = {f[0], f[1], f[2]};
    const auto [r2, c] = circumsphere(P, ids, 3);
    double val = gabriel(c, r2, ids, 3) ? r2 : cof;
    if (std::isinf(val)) val = r2;   // boundary triangle of a tiny cloud
    val = std::min(val, cof);
    tri_val[f] = val;
    Simplex s;
    s.v = {f[0], f[1], f[2], -1};
    s.dim = 2;
    s.value = val;
    simplices.push_back(s);
    const std::array<int, 2> edges[3] = {edge_key(f[0], f[1]), edge_key(f[0], f[2]),
                                         edge_key(f[1], f[2])};
    for (const auto& e : edges) {
      auto it = edge_coface_min.find(e);
      if (it == edge_coface_min.end() || val < it->second) edge_coface_min[e] = val;
    }
  }

  // edges of the triangulation plus, for tiny clouds, all pairs
  if (n <= 4) {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (!edge_coface_min.count({i, j}))
          edge_coface_min[{i, j}] = std::numeric_limits<double>::infinity();
  }
  for (auto& [e, cof] : edge_coface_min) {
    const Eigen::Vector3d a = P.row(e[0]).transpose(), b = P.row(e[1]).transpose();
    const double r2 = 0.25 * (a - b).squaredNorm();
    const Eigen::Vector3d c = 0.5 * (a + b);
    const int ids[2] = {e[0], e[1]};
    double val = gabriel(c, r2, ids, 2) ? r2 : cof;
    if (std::isinf(val)) val = r2;
    val = std::min(val, cof);
    edge_val[e] = val;
    Simplex s;
    s.v = {e[0], e[1], -1, -1};
    s.dim = 1;
    s.value = val;
    simplices.push_back(s);
  }

  for (int i = 0; i < n; ++i) {
    Simplex s;
    s.v = {i, -1, -1, -1};
    s.dim = 0;
    s.value = 0.0;
    simplices.push_back(s);
  }

  // filtration order: value, then dimension, then vertex ids
  std::sort(simplices.begin(), simplices.end(), [](const Simplex& a, const Simplex& b) {
    if (a.value != b.value) return a.value < b.value;
    if (a.dim != b.dim) return a.dim < b.dim;
    return a.v < b.v;
  });

  double cap = 0.0;
  for (const auto& s : simplices) cap = std::max(cap, s.value);
  dgm.cap_value = cap;

  // boundary-matrix reduction
  const int m = static_cast<int>(simplices.size());
  std::map<std::array<int, 4>, int> position;  // keyed by vertices + dim
  for (int i = 0; i < m; ++i)
    position[{simplices[i].v[0], simplices[i].v[1], simplices[i].v[2],
              simplices[i].v[3] * 8 + simplices[i].dim}] = i;
  auto pos_of = [&](std::array<int, 4> v, int dim) {
    return position.at({v[0], v[1], v[2], v[3] * 8 + dim});
  };

  std::vector<std::vector<int>> cols(m);
  for (int i = 0; i < m; ++i) {
    const Simplex& s = simplices[i];
    std::vector<int> bd;
    if (s.dim == 1) {
      bd.push_back(pos_of({s.v[0], -1, -1, -1}, 0));
      bd.push_back(pos_of({s.v[1], -1, -1, -1}, 0));
    } else if (s.dim == 2) {
      bd.push_back(pos_of({s.v[0], s.v[1], -1, -1}, 1));
      bd.push_back(pos_of({s.v[0], s.v[2], -1, -1}, 1));
      bd.push_back(pos_of({s.v[1], s.v[2], -1, -1}, 1));
    } else if (s.dim == 3) {
      bd.push_back(pos_of({s.v[0], s.v[1], s.v[2], -1}, 2));
      bd.push_back(pos_of({s.v[0], s.v[1], s.v[3], -1}, 2));
      bd.push_back(pos_of({s.v[0], s.v[2], s.v[3], -1}, 2));
      bd.push_back(pos_of({s.v[1], s.v[2], s.v[3], -1}, 2));
    }
    std::sort(bd.begin(), bd.end());
    cols[i] = std::move(bd);
  }

  std::vector<int> owner(m, -1);  // owner[low] = column with that low entry
  std::vector<char> paired(m, 0);
  for (int j = 0; j < m; ++j) {
    auto& col = cols[j];
    while (!col.empty()) {
      const int low = col.back();
      const int other = owner[low];
      if (other < 0) {
        owner[low] = j;
        paired[low] = 1;
        paired[j] = 1;
        const double birth = simplices[low].value;
        const double death = simplices[j].value;
        if (death > birth)
          dgm.points.push_back({birth, death, simplices[low].dim});
        break;
      }
      // symmetric difference with the competing column
      std::vector<int> merged;
      merged.reserve(col.size() + cols[other].size());
      std::set_symmetric_difference(col.begin(), col.end(), cols[other].begin(),
                                    cols[other].end(), std::back_inserter(merged));
      col = std::move(merged);
    }
  }
  for (int i = 0; i < m; ++i) {
    if (paired[i] || !cols[i].empty()) continue;
    // essential class; only H0 survives for a full alpha complex
    if (simplices[i].dim == 0)
      dgm.points.push_back({simplices[i].value, cap, 0});
    else
      dgm.points.push_back({simplices[i].value, cap, simplices[i].dim});
  }

  std::sort(dgm.points.begin(), dgm.points.end(), [](const DiagramPoint& a, const DiagramPoint& b) {
    if (a.dim != b.dim) return a.dim < b.dim;
    if (a.birth != b.birth) return a.birth < b.birth;
    return a.death < b.death;
  });
  return dgm;
}

}  // namespace vocluster
