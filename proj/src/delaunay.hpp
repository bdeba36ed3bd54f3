#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace vocluster {

// 3-D Delaunay triangulation by incremental insertion (Bowyer-Watson).
// Predicates run in long double on jittered copies of the input points;
// the jitter (1e-9 * diameter, seeded, escalated x100 on failure) only
// breaks ties, so for inputs in general position the complex equals the
// unjittered triangulation. Intended scale: a few thousand points.
struct Delaunay3D {
  std::vector<std::array<int, 4>> tets;  // vertex ids, sorted ascending
  int attempts_used = 1;
};

Delaunay3D delaunay3d(const Eigen::MatrixXd& pts, std::uint64_t seed);

}  // namespace vocluster
