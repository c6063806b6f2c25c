#include "relu_interp/interp_matrix.hpp"

#include <Eigen/SVD>
#include <algorithm>

#include "relu_interp/core_model.hpp"
#include "relu_interp/parallel.hpp"

namespace relu_interp {

InterpMatrix build_interp_matrix(const Network& net, const Dataset& data,
                                 int layer, double tau_act) {
  validate_network(net);
  if (!data.points.empty()) validate_dataset(data);  // empty set gives a 0 x m matrix
  if (net.hidden_count() < 1)
    throw ValidationError("build_interp_matrix: network has no hidden layer");
  if (layer == -1) layer = net.hidden_count() - 1;
  if (layer < 0 || layer >= static_cast<int>(net.layers.size()))
    throw ValidationError("build_interp_matrix: layer index out of range");
  if (net.layers[static_cast<size_t>(layer)].act != Activation::Relu)
    throw ValidationError("build_interp_matrix: source layer must be relu");

  const Index C = data.size();
  const Index m = net.layers[static_cast<size_t>(layer)].units();
  InterpMatrix out;
  out.values.resize(C, m);
  out.row_meta.resize(static_cast<size_t>(C));
  out.col_meta.resize(static_cast<size_t>(m));
  out.source_layer = layer;
  for (Index u = 0; u < m; ++u)
    out.col_meta[static_cast<size_t>(u)] = ColMeta{layer, static_cast<int>(u)};

  parallel_for(C, [&](Index k) {
    const DataPoint& p = data.points[static_cast<size_t>(k)];
    Trace tr = eval_network(net, p.x);
    const VectorXd& pre = tr.pre[static_cast<size_t>(layer)];
    for (Index u = 0; u < m; ++u)
      out.values(k, u) = pre(u) > tau_act ? pre(u) : 0.0;
    out.row_meta[static_cast<size_t>(k)] = RowMeta{k, p.subdomain};
  });
  return out;
}

RankReport rank_and_singularity(const MatrixXd& m, double tol_rel) {
  RankReport rep;
  rep.is_square = m.rows() == m.cols();
  if (m.size() == 0) {
    rep.singular = rep.is_square && m.rows() > 0;
    return rep;
  }
  Eigen::JacobiSVD<MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  rep.max_singular_value = sv(0);
  rep.min_singular_value = sv(sv.size() - 1);
  rep.tol_used = tol_rel * rep.max_singular_value;
  rep.rank = 0;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv(i) > rep.tol_used) ++rep.rank;
  rep.singular = rep.is_square && rep.rank < m.rows();
  return rep;
}

double sparsity(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Index zeros = 0;
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      if (m(i, j) == 0.0) ++zeros;
  return static_cast<double>(zeros) / static_cast<double>(m.size());
}

NecessaryConditionReport necessary_condition_check(const MatrixXd& m, int input_dim) {
  if (m.rows() != m.cols())
    throw ValidationError("necessary_condition_check: matrix must be square");
  if (input_dim < 1)
    throw ValidationError("necessary_condition_check: input_dim must be positive");
  NecessaryConditionReport rep;
  std::vector<Index> positive;
  for (Index j = 0; j < m.cols(); ++j)
    if ((m.col(j).array() > 0.0).all()) positive.push_back(j);
  const Index limit = static_cast<Index>(input_dim) + 2;
  if (static_cast<Index>(positive.size()) >= limit) {
    rep.pass = false;
    rep.witness_columns.assign(positive.begin(), positive.begin() + limit);
  }
  return rep;
}

namespace {

void check_partition(const std::vector<std::vector<Index>>& part, Index total,
                     const char* what) {
  std::vector<char> seen(static_cast<size_t>(total), 0);
  Index count = 0;
  for (const auto& cell : part) {
    if (cell.empty()) throw ValidationError(std::string("block_view: empty ") + what + " cell");
    for (Index i : cell) {
      if (i < 0 || i >= total)
        throw ValidationError(std::string("block_view: ") + what + " index out of range");
      if (seen[static_cast<size_t>(i)])
        throw ValidationError(std::string("block_view: duplicate ") + what + " index");
      seen[static_cast<size_t>(i)] = 1;
      ++count;
    }
  }
  if (count != total)
    throw ValidationError(std::string("block_view: ") + what + " partition must cover all indices");
}

}  // namespace

BlockView block_view(const MatrixXd& m,
                     const std::vector<std::vector<Index>>& row_partition,
                     const std::vector<std::vector<Index>>& col_partition) {
  check_partition(row_partition, m.rows(), "row");
  check_partition(col_partition, m.cols(), "column");
  BlockView view;
  view.row_partition = row_partition;
  view.col_partition = col_partition;
  view.blocks.resize(row_partition.size());
  for (size_t i = 0; i < row_partition.size(); ++i) {
    view.blocks[i].resize(col_partition.size());
    for (size_t j = 0; j < col_partition.size(); ++j) {
      MatrixXd b(row_partition[i].size(), col_partition[j].size());
      for (size_t r = 0; r < row_partition[i].size(); ++r)
        for (size_t c = 0; c < col_partition[j].size(); ++c)
          b(static_cast<Index>(r), static_cast<Index>(c)) =
              m(row_partition[i][r], col_partition[j][c]);
      view.blocks[i][j] = std::move(b);
    }
  }
  return view;
}

MatrixXd reassemble(const BlockView& view) {
  Index rows = 0, cols = 0;
  for (const auto& cell : view.row_partition) rows += static_cast<Index>(cell.size());
  for (const auto& cell : view.col_partition) cols += static_cast<Index>(cell.size());
  MatrixXd m(rows, cols);
  Index r0 = 0;
  for (size_t i = 0; i < view.row_partition.size(); ++i) {
    Index c0 = 0;
    for (size_t j = 0; j < view.col_partition.size(); ++j) {
      const MatrixXd& b = view.blocks[i][j];
      m.block(r0, c0, b.rows(), b.cols()) = b;
      c0 += b.cols();
    }
    r0 += static_cast<Index>(view.row_partition[i].size());
  }
  return m;
}

std::vector<std::vector<Index>> subdomain_row_partition(const Dataset& data) {
  int n = subdomain_count(data);
  std::vector<std::vector<Index>> part;
  part.reserve(static_cast<size_t>(n));
  for (int id = 1; id <= n; ++id) part.push_back(subdomain_indices(data, id));
  return part;
}

}  // namespace relu_interp
