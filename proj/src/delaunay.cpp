#include "delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "vocluster/rng.hpp"

namespace vocluster {

namespace {

using ld = long double;

struct P3 {
  ld x, y, z;
};

ld orient3d(const P3& a, const P3& b, const P3& c, const P3& d) {
  const ld bx = b.x - a.x, by = b.y - a.y, bz = b.z - a.z;
  const ld cx = c.x - a.x, cy = c.y - a.y, cz = c.z - a.z;
  const ld dx = d.x - a.x, dy = d.y - a.y, dz = d.z - a.z;
  return bx * (cy * dz - cz * dy) - by * (cx * dz - cz * dx) + bz * (cx * dy - cy * dx);
}

// > 0 when p lies strictly inside the circumsphere of (a,b,c,d),
// independent of the tetrahedron's orientation
ld insphere(const P3& a, const P3& b, const P3& c, const P3& d, const P3& p) {
  const P3 pts[4] = {a, b, c, d};
  ld m[4][4];
  for (int i = 0; i < 4; ++i) {
    const ld ex = pts[i].x - p.x, ey = pts[i].y - p.y, ez = pts[i].z - p.z;
    m[i][0] = ex;
    m[i][1] = ey;
    m[i][2] = ez;
    m[i][3] = ex * ex + ey * ey + ez * ez;
  }
  ld det = 0.0L;
  for (int c0 = 0; c0 < 4; ++c0) {
    ld sub[3][3];
    for (int r = 1; r < 4; ++r) {
      int cc = 0;
      for (int c1 = 0; c1 < 4; ++c1) {
        if (c1 == c0) continue;
        sub[r - 1][cc++] = m[r][c1];
      }
    }
    const ld minor = sub[0][0] * (sub[1][1] * sub[2][2] - sub[1][2] * sub[2][1]) -
                     sub[0][1] * (sub[1][0] * sub[2][2] - sub[1][2] * sub[2][0]) +
                     sub[0][2] * (sub[1][0] * sub[2][1] - sub[1][1] * sub[2][0]);
    det += (c0 % 2 == 0 ? 1.0L : -1.0L) * m[0][c0] * minor;
  }
  const ld orient = orient3d(a, b, c, d);
  if (orient == 0.0L) return 0.0L;  // flat tetra: treat as degenerate
  return orient > 0.0L ? -det : det;
}

struct Face {
  int a, b, c;
  bool operator<(const Face& o) const {
    if (a != o.a) return a < o.a;
    if (b != o.b) return b < o.b;
    return c < o.c;
  }
};

Face make_face(int a, int b, int c) {
  int v[3] = {a, b, c};
  std::sort(v, v + 3);
  return {v[0], v[1], v[2]};
}

struct BuildFailure {};

struct TetRec {
  std::array<int, 4> v;  // ascending
  bool alive = true;
  // cached circumsphere, used only as a conservative candidate filter
  double cx = 0.0, cy = 0.0, cz = 0.0;
  double r2 = std::numeric_limits<double>::infinity();
};

void cache_sphere(TetRec& t, const std::vector<P3>& all) {
  const P3& p0 = all[t.v[0]];
  ld A[3][3], b[3];
  ld scale = 0.0L;
  for (int i = 0; i < 3; ++i) {
    const P3& pi = all[t.v[i + 1]];
    A[i][0] = pi.x - p0.x;
    A[i][1] = pi.y - p0.y;
    A[i][2] = pi.z - p0.z;
    b[i] = 0.5L * (A[i][0] * A[i][0] + A[i][1] * A[i][1] + A[i][2] * A[i][2]);
    for (int j = 0; j < 3; ++j)
      scale = std::max(scale, static_cast<ld>(std::fabs(static_cast<double>(A[i][j]))));
  }
  const ld det = A[0][0] * (A[1][1] * A[2][2] - A[1][2] * A[2][1]) -
                 A[0][1] * (A[1][0] * A[2][2] - A[1][2] * A[2][0]) +
                 A[0][2] * (A[1][0] * A[2][1] - A[1][1] * A[2][0]);
  if (std::abs(static_cast<double>(det)) <= 1e-40 * scale * scale * scale) {
    t.r2 = std::numeric_limits<double>::infinity();
    return;
  }
  const ld inv = 1.0L / det;
  const ld yx = inv * (b[0] * (A[1][1] * A[2][2] - A[1][2] * A[2][1]) -
                       A[0][1] * (b[1] * A[2][2] - A[1][2] * b[2]) +
                       A[0][2] * (b[1] * A[2][1] - A[1][1] * b[2]));
  const ld yy = inv * (A[0][0] * (b[1] * A[2][2] - A[1][2] * b[2]) -
                       b[0] * (A[1][0] * A[2][2] - A[1][2] * A[2][0]) +
                       A[0][2] * (A[1][0] * b[2] - b[1] * A[2][0]));
  const ld yz = inv * (A[0][0] * (A[1][1] * b[2] - b[1] * A[2][1]) -
                       A[0][1] * (A[1][0] * b[2] - b[1] * A[2][0]) +
                       b[0] * (A[1][0] * A[2][1] - A[1][1] * A[2][0]));
  t.cx = static_cast<double>(p0.x + yx);
  t.cy = static_cast<double>(p0.y + yy);
  t.cz = static_cast<double>(p0.z + yz);
  t.r2 = static_cast<double>(yx * yx + yy * yy + yz * yz);
}

// conservative: may say yes for points slightly outside, never drops a true hit
bool sphere_candidate(const TetRec& t, const P3& p) {
  if (!std::isfinite(t.r2)) return true;
  const double dx = static_cast<double>(p.x) - t.cx;
  const double dy = static_cast<double>(p.y) - t.cy;
  const double dz = static_cast<double>(p.z) - t.cz;
  const double d2 = dx * dx + dy * dy + dz * dz;
  const double mag = t.r2 + t.cx * t.cx + t.cy * t.cy + t.cz * t.cz + d2;
  return d2 <= t.r2 + 1e-9 * mag;
}

bool contains_point(const TetRec& t, const std::vector<P3>& all, const P3& p) {
  const P3& a = all[t.v[0]];
  const P3& b = all[t.v[1]];
  const P3& c = all[t.v[2]];
  const P3& d = all[t.v[3]];
  const ld o = orient3d(a, b, c, d);
  if (o == 0.0L) return false;
  const ld s0 = orient3d(p, b, c, d);
  const ld s1 = orient3d(a, p, c, d);
  const ld s2 = orient3d(a, b, p, d);
  const ld s3 = orient3d(a, b, c, p);
  if (o > 0.0L) return s0 >= 0.0L && s1 >= 0.0L && s2 >= 0.0L && s3 >= 0.0L;
  return s0 <= 0.0L && s1 <= 0.0L && s2 <= 0.0L && s3 <= 0.0L;
}

// vertex of t not on face f
int opposite_vertex(const TetRec& t, const Face& f) {
  for (int x : t.v)
    if (x != f.a && x != f.b && x != f.c) return x;
  return -1;
}

Delaunay3D try_build(const std::vector<P3>& pts) {
  const int n = static_cast<int>(pts.size());

  // bounding super-tetrahedron, far outside the data
  ld lo[3] = {pts[0].x, pts[0].y, pts[0].z};
  ld hi[3] = {pts[0].x, pts[0].y, pts[0].z};
  for (const auto& p : pts) {
    lo[0] = std::min(lo[0], p.x);
    hi[0] = std::max(hi[0], p.x);
    lo[1] = std::min(lo[1], p.y);
    hi[1] = std::max(hi[1], p.y);
    lo[2] = std::min(lo[2], p.z);
    hi[2] = std::max(hi[2], p.z);
  }
  ld span = std::max({hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2], static_cast<ld>(1.0)});
  const ld cx = 0.5L * (lo[0] + hi[0]), cy = 0.5L * (lo[1] + hi[1]), cz = 0.5L * (lo[2] + hi[2]);
  const ld R = 1e4L * span;
  std::vector<P3> all = pts;
  all.push_back({cx - R, cy - R, cz - R});
  all.push_back({cx + 3.0L * R, cy - R, cz - R});
  all.push_back({cx - R, cy + 3.0L * R, cz - R});
  all.push_back({cx - R, cy - R, cz + 3.0L * R});

  std::vector<TetRec> tets;
  tets.push_back({{n, n + 1, n + 2, n + 3}, true, 0, 0, 0, 0});
  cache_sphere(tets.back(), all);
  std::size_t dead = 0;

  std::vector<int> candidates, cavity;
  for (int ip = 0; ip < n; ++ip) {
    const P3& p = all[ip];

    candidates.clear();
    int seed = -1;
    for (int t = 0; t < static_cast<int>(tets.size()); ++t) {
      if (!tets[t].alive || !sphere_candidate(tets[t], p)) continue;
      candidates.push_back(t);
      if (seed < 0 && contains_point(tets[t], all, p)) seed = t;
    }
    if (seed < 0) {
      // filter miss: locate by exhaustive containment before giving up
      for (int t = 0; t < static_cast<int>(tets.size()) && seed < 0; ++t)
        if (tets[t].alive && contains_point(tets[t], all, p)) seed = t;
      if (seed < 0) throw BuildFailure{};  // coverage hole
    }

    std::set<int> bad;
    for (int t : candidates) {
      const auto& v = tets[t].v;
      if (insphere(all[v[0]], all[v[1]], all[v[2]], all[v[3]], p) > 0.0L) bad.insert(t);
    }
    bad.insert(seed);

    // keep only the face-connected component of the seed
    {
      std::map<Face, std::vector<int>> by_face;
      for (int t : bad) {
        const auto& v = tets[t].v;
        by_face[make_face(v[0], v[1], v[2])].push_back(t);
        by_face[make_face(v[0], v[1], v[3])].push_back(t);
        by_face[make_face(v[0], v[2], v[3])].push_back(t);
        by_face[make_face(v[1], v[2], v[3])].push_back(t);
      }
      std::set<int> keep;
      std::vector<int> stack = {seed};
      keep.insert(seed);
      while (!stack.empty()) {
        const int t = stack.back();
        stack.pop_back();
        const auto& v = tets[t].v;
        const Face fs[4] = {make_face(v[0], v[1], v[2]), make_face(v[0], v[1], v[3]),
                            make_face(v[0], v[2], v[3]), make_face(v[1], v[2], v[3])};
        for (const Face& f : fs)
          for (int u : by_face[f])
            if (!keep.count(u)) {
              keep.insert(u);
              stack.push_back(u);
            }
      }
      bad = std::move(keep);
    }

    // cavity repair: evict tets whose boundary faces p cannot see, so the
    // remaining cavity is star-shaped around p and the carve stays valid
    cavity.assign(bad.begin(), bad.end());
    for (;;) {
      std::map<Face, int> count;
      for (int t : cavity) {
        const auto& v = tets[t].v;
        count[make_face(v[0], v[1], v[2])]++;
        count[make_face(v[0], v[1], v[3])]++;
        count[make_face(v[0], v[2], v[3])]++;
        count[make_face(v[1], v[2], v[3])]++;
      }
      std::set<int> evict;
      for (int t : cavity) {
        const auto& v = tets[t].v;
        const Face fs[4] = {make_face(v[0], v[1], v[2]), make_face(v[0], v[1], v[3]),
                            make_face(v[0], v[2], v[3]), make_face(v[1], v[2], v[3])};
        for (const Face& f : fs) {
          if (count[f] != 1) continue;
          const ld sp = orient3d(all[f.a], all[f.b], all[f.c], p);
          const ld sq = orient3d(all[f.a], all[f.b], all[f.c], all[opposite_vertex(tets[t], f)]);
          if (sp == 0.0L || sq == 0.0L || (sp > 0.0L) != (sq > 0.0L)) evict.insert(t);
        }
      }
      evict.erase(seed);
      if (evict.empty()) break;
      std::vector<int> next;
      for (int t : cavity)
        if (!evict.count(t)) next.push_back(t);
      cavity = std::move(next);
      if (cavity.empty()) throw BuildFailure{};
    }

    // boundary must close up into a 2-manifold or the star carve overlaps
    std::map<Face, int> count;
    for (int t : cavity) {
      const auto& v = tets[t].v;
      count[make_face(v[0], v[1], v[2])]++;
      count[make_face(v[0], v[1], v[3])]++;
      count[make_face(v[0], v[2], v[3])]++;
      count[make_face(v[1], v[2], v[3])]++;
    }
    std::map<std::pair<int, int>, int> edge_use;
    for (const auto& [f, c] : count) {
      if (c != 1) continue;
      edge_use[{f.a, f.b}]++;
      edge_use[{f.a, f.c}]++;
      edge_use[{f.b, f.c}]++;
    }
    for (const auto& [e, c] : edge_use)
      if (c != 2) throw BuildFailure{};

    for (int t : cavity) {
      tets[t].alive = false;
      ++dead;
    }
    for (const auto& [f, c] : count) {
      if (c != 1) continue;
      std::array<int, 4> v = {f.a, f.b, f.c, ip};
      std::sort(v.begin(), v.end());
      tets.push_back({v, true, 0, 0, 0, 0});
      cache_sphere(tets.back(), all);
    }

    if (dead > tets.size() / 2 && tets.size() > 1024) {
      std::vector<TetRec> compact;
      compact.reserve(tets.size() - dead);
      for (auto& t : tets)
        if (t.alive) compact.push_back(t);
      tets = std::move(compact);
      dead = 0;
    }
  }

  Delaunay3D out;
  for (const auto& t : tets) {
    if (!t.alive) continue;
    if (t.v[3] >= n) continue;  // touches the super-tetrahedron
    out.tets.push_back(t.v);
  }

  // sanity: every interior face shared by <= 2 tets
  std::map<Face, int> shared;
  for (const auto& t : out.tets) {
    shared[make_face(t[0], t[1], t[2])]++;
    shared[make_face(t[0], t[1], t[3])]++;
    shared[make_face(t[0], t[2], t[3])]++;
    shared[make_face(t[1], t[2], t[3])]++;
  }
  for (const auto& [f, c] : shared)
    if (c > 2) throw BuildFailure{};
  return out;
}

}  // namespace

Delaunay3D delaunay3d(const Eigen::MatrixXd& pts, std::uint64_t seed) {
  const int n = static_cast<int>(pts.rows());
  if (n < 1 || pts.cols() != 3) throw std::invalid_argument("delaunay3d: need n x 3 points");

  double diam = 0.0;
  Eigen::RowVector3d mn = pts.colwise().minCoeff(), mx = pts.colwise().maxCoeff();
  diam = (mx - mn).norm();
  if (diam <= 0.0) diam = 1.0;

  const double scales[3] = {1e-9, 1e-7, 1e-5};
  for (int attempt = 0; attempt < 3; ++attempt) {
    Rng rng(seed + attempt);
    std::vector<P3> jp(n);
    const double j = scales[attempt] * diam;
    for (int i = 0; i < n; ++i) {
      jp[i] = {static_cast<ld>(pts(i, 0) + j * (rng.uniform() - 0.5)),
               static_cast<ld>(pts(i, 1) + j * (rng.uniform() - 0.5)),
               static_cast<ld>(pts(i, 2) + j * (rng.uniform() - 0.5))};
    }
    try {
      Delaunay3D d = try_build(jp);
      d.attempts_used = attempt + 1;
      return d;
    } catch (const BuildFailure&) {
      continue;
    }
  }
  throw std::runtime_error("delaunay3d: degenerate input survived jitter escalation");
}

}  // namespace vocluster
