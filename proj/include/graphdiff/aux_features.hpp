#pragma once

#include <cstddef>
#include <vector>

#include "graphdiff/graph.hpp"

namespace graphdiff {

// Structural conditioning features. Cycle membership counts are exact
// integers stored as reals; the graph is binarized first (any nonzero edge
// type counts as an edge), so everything here is invariant to relabeling
// among nonzero edge types.
struct AuxFeatures {
  // per node: 3-cycle, 4-cycle, 5-cycle membership counts, then 1 if the
  // node lies in a connected component of maximum size (ties: all marked).
  static constexpr std::size_t kNodeDim = 4;
  // totals for cycle lengths 3..6, component count, the 5 smallest nonzero
  // Laplacian eigenvalues ascending (zero-padded), then t / horizon.
  static constexpr std::size_t kGlobalDim = 11;

  std::size_t n = 0;
  std::vector<double> node_aux;    // n x kNodeDim, row-major
  std::vector<double> global_aux;  // kGlobalDim
};

// Eigenvalues of a symmetric n x n matrix (row-major), ascending, via cyclic
// Jacobi rotations. Off-diagonals are driven below tol * max|entry|.
std::vector<double> symmetric_eigenvalues(std::vector<double> a, std::size_t n,
                                          double tol = 1e-12);

AuxFeatures compute_aux(const CategoricalGraph& g, double t, double horizon);

}  // namespace graphdiff
