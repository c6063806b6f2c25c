#pragma once

#include "relu_interp/types.hpp"

namespace relu_interp {

struct RowMeta {
  Index point = 0;
  int subdomain = 0;  // 0 = unlabeled
};

struct ColMeta {
  int layer = 0;  // 0-based index into Network::layers
  int unit = 0;
};

// Matrix of unit outputs: entry (k, u) is the post-activation of unit u of
// the source layer when the network is fed data point k. Entries whose
// pre-activation is <= tau_act are stored as exact zeros.
struct InterpMatrix {
  MatrixXd values;
  std::vector<RowMeta> row_meta;
  std::vector<ColMeta> col_meta;
  int source_layer = 0;
};

// layer = 0-based index of a hidden layer; -1 = last hidden layer.
InterpMatrix build_interp_matrix(const Network& net, const Dataset& data,
                                 int layer = -1, double tau_act = kDefaultTauAct);

struct RankReport {
  Index rank = 0;
  bool is_square = false;
  bool singular = false;  // square and rank < dimension
  double min_singular_value = 0.0;
  double max_singular_value = 0.0;
  double tol_used = 0.0;  // absolute cutoff applied to singular values
};

RankReport rank_and_singularity(const MatrixXd& m, double tol_rel = kDefaultRankTol);

// Fraction of exactly-zero entries.
double sparsity(const MatrixXd& m);

struct NecessaryConditionReport {
  bool pass = true;
  std::vector<Index> witness_columns;  // first n+2 all-positive columns when failing
};

// A square matrix of relu outputs cannot be nonsingular if n+2 or more of its
// columns are strictly positive throughout (n = network input dimension).
NecessaryConditionReport necessary_condition_check(const MatrixXd& m, int input_dim);

// Submatrix grid over a row partition (e.g. by subdomain) and a column
// partition (unit groups). Partitions may reorder indices; block (i, j) is
// rows of cell i against columns of cell j, in the cells' listed order.
struct BlockView {
  std::vector<std::vector<MatrixXd>> blocks;
  std::vector<std::vector<Index>> row_partition;
  std::vector<std::vector<Index>> col_partition;
};

BlockView block_view(const MatrixXd& m,
                     const std::vector<std::vector<Index>>& row_partition,
                     const std::vector<std::vector<Index>>& col_partition);

// Inverse of block_view up to the partitions' orderings: row i of the result
// is the i-th listed row index overall.
MatrixXd reassemble(const BlockView& view);

// Row partition by subdomain id (cells ordered by id 1..N).
std::vector<std::vector<Index>> subdomain_row_partition(const Dataset& data);

}  // namespace relu_interp
