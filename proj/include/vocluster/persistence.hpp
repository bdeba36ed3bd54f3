#pragma once

#include <cstdint>
#include <vector>

#include "vocluster/embedding.hpp"
#include "vocluster/spectral.hpp"

namespace vocluster {

enum class DiagramSource { spectrogram, embedding };

struct DiagramPoint {
  double birth = 0.0;
  double death = 0.0;
  int dim = 0;
};

struct PersistenceDiagram {
  // zero-persistence pairs dropped, except the capped essential class
  std::vector<DiagramPoint> points;
  double cap_value = 0.0;  // finite stand-in for infinite deaths
  DiagramSource source = DiagramSource::spectrogram;
};

// Sublevel filtration of the grid (vertex-based, 4-connectivity). H0 by
// an elder-rule union-find sweep; H1 through the dual superlevel sweep
// (8-connectivity with a virtual outside region). The single essential
// H0 class is capped at the maximum grid value.
PersistenceDiagram sublevel_cubical_persistence(const Spectrogram& spec);

// Alpha filtration of a 3-D cloud: simplex value = squared circumradius
// of its smallest empty circumscribing ball. H0+H1+H2 by boundary-matrix
// reduction. Connectivity comes from a seeded-jitter Delaunay pass while
// filtration values use the caller's coordinates unchanged.
PersistenceDiagram alpha_persistence(const PointCloud& cloud, std::uint64_t seed = 7);

}  // namespace vocluster
