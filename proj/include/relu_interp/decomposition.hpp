#pragma once

#include "relu_interp/types.hpp"

namespace relu_interp {

struct DecompositionCell {
  std::vector<Index> members;  // point indices, ascending
  VectorXd w;                  // fitted target: y ~ w.x + b
  double b = 0.0;
  double residual = 0.0;       // l2 fit error, exactly 0 when <= n+1 points fit
};

struct Decomposition {
  std::vector<Hyperplane> cuts;  // the arrangement that induced the partition
  std::vector<DecompositionCell> cells;
  double total_residual = 0.0;
};

struct DecompositionOptions {
  int n_cuts = 1;
  int samples = 32;
  std::uint64_t seed = 0;
  double tau_act = kDefaultTauAct;  // signature threshold when partitioning
};

// Samples random hyperplane arrangements, partitions the data by region
// signature, fits each cell with an affine target and returns the distinct
// partitions sorted by total residual then cell count. The no-cut single-cell
// decomposition is always present. Scalar targets only.
std::vector<Decomposition> explore_decompositions(const Dataset& data,
                                                  const DecompositionOptions& opt);

}  // namespace relu_interp
