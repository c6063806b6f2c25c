#include "relu_interp/solvers.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <random>
#include <set>

#include "relu_interp/core_model.hpp"
#include "relu_interp/interp_matrix.hpp"
#include "relu_interp/parallel.hpp"

namespace relu_interp {

void validate_system(const BlockTriangularSystem& sys) {
  const int n = sys.blocks();
  if (n == 0) throw ValidationError("block system: empty");
  if (static_cast<int>(sys.sub.size()) != n || static_cast<int>(sys.y.size()) != n)
    throw ValidationError("block system: P, sub, y must have the same block count");
  for (int j = 0; j < n; ++j) {
    const MatrixXd& p = sys.P[static_cast<size_t>(j)];
    if (p.rows() != p.cols() || p.rows() == 0)
      throw ValidationError("block system: diagonal block " + std::to_string(j) +
                            " must be square and nonempty");
    if (sys.y[static_cast<size_t>(j)].size() != p.rows())
      throw ValidationError("block system: target " + std::to_string(j) + " size mismatch");
    if (static_cast<int>(sys.sub[static_cast<size_t>(j)].size()) != j)
      throw ValidationError("block system: row " + std::to_string(j) +
                            " needs exactly " + std::to_string(j) + " lower blocks");
    for (int i = 0; i < j; ++i) {
      const MatrixXd& u = sys.sub[static_cast<size_t>(j)][static_cast<size_t>(i)];
      if (u.rows() != p.rows() || u.cols() != sys.P[static_cast<size_t>(i)].cols())
        throw ValidationError("block system: lower block (" + std::to_string(j) + "," +
                              std::to_string(i) + ") shape mismatch");
    }
  }
}

BlockTriangularSystem block_triangular_from(const MatrixXd& m, const VectorXd& y,
                                            const std::vector<Index>& block_sizes) {
  if (m.rows() != m.cols())
    throw ValidationError("block_triangular_from: matrix must be square");
  Index total = 0;
  for (Index s : block_sizes) {
    if (s <= 0) throw ValidationError("block_triangular_from: block sizes must be positive");
    total += s;
  }
  if (total != m.rows())
    throw ValidationError("block_triangular_from: block sizes must sum to the matrix size");
  if (y.size() != m.rows())
    throw ValidationError("block_triangular_from: target size mismatch");

  std::vector<Index> offset(block_sizes.size() + 1, 0);
  for (size_t i = 0; i < block_sizes.size(); ++i) offset[i + 1] = offset[i] + block_sizes[i];

  BlockTriangularSystem sys;
  for (size_t j = 0; j < block_sizes.size(); ++j) {
    for (size_t i = j + 1; i < block_sizes.size(); ++i) {
      MatrixXd upper = m.block(offset[j], offset[i], block_sizes[j], block_sizes[i]);
      if ((upper.array() != 0.0).any())
        throw ValidationError("block_triangular_from: block (" + std::to_string(j) + "," +
                              std::to_string(i) + ") above the diagonal is nonzero");
    }
    sys.P.push_back(m.block(offset[j], offset[j], block_sizes[j], block_sizes[j]));
    std::vector<MatrixXd> row;
    for (size_t i = 0; i < j; ++i)
      row.push_back(m.block(offset[j], offset[i], block_sizes[j], block_sizes[i]));
    sys.sub.push_back(std::move(row));
    sys.y.push_back(y.segment(offset[j], block_sizes[j]));
  }
  return sys;
}

std::vector<VectorXd> solve_block_triangular(const BlockTriangularSystem& sys,
                                             double rank_tol) {
  validate_system(sys);
  std::vector<VectorXd> alpha;
  alpha.reserve(static_cast<size_t>(sys.blocks()));
  for (int j = 0; j < sys.blocks(); ++j) {
    const MatrixXd& p = sys.P[static_cast<size_t>(j)];
    RankReport r = rank_and_singularity(p, rank_tol);
    if (r.singular) throw SingularBlockError(j);
    VectorXd rhs = sys.y[static_cast<size_t>(j)];
    for (int i = 0; i < j; ++i)
      rhs -= sys.sub[static_cast<size_t>(j)][static_cast<size_t>(i)] *
             alpha[static_cast<size_t>(i)];
    alpha.push_back(p.partialPivLu().solve(rhs));
  }
  return alpha;
}

MatrixXd assemble_dense(const BlockTriangularSystem& sys) {
  validate_system(sys);
  Index total = 0;
  for (const auto& p : sys.P) total += p.rows();
  MatrixXd m = MatrixXd::Zero(total, total);
  std::vector<Index> offset;
  Index cur = 0;
  for (const auto& p : sys.P) {
    offset.push_back(cur);
    cur += p.rows();
  }
  for (int j = 0; j < sys.blocks(); ++j) {
    const MatrixXd& p = sys.P[static_cast<size_t>(j)];
    m.block(offset[static_cast<size_t>(j)], offset[static_cast<size_t>(j)], p.rows(), p.cols()) = p;
    for (int i = 0; i < j; ++i) {
      const MatrixXd& u = sys.sub[static_cast<size_t>(j)][static_cast<size_t>(i)];
      m.block(offset[static_cast<size_t>(j)], offset[static_cast<size_t>(i)], u.rows(), u.cols()) = u;
    }
  }
  return m;
}

VectorXd stack(const std::vector<VectorXd>& parts) {
  Index total = 0;
  for (const auto& v : parts) total += v.size();
  VectorXd out(total);
  Index at = 0;
  for (const auto& v : parts) {
    out.segment(at, v.size()) = v;
    at += v.size();
  }
  return out;
}

std::uint64_t count_combos(int m, int rows) {
  if (rows < 0 || m < rows)
    throw ValidationError("count_combos: need 0 <= rows <= m");
  int k = std::min(rows, m - rows);
  unsigned __int128 acc = 1;
  for (int i = 1; i <= k; ++i) {
    acc = acc * static_cast<unsigned>(m - k + i) / static_cast<unsigned>(i);
    if (acc > static_cast<unsigned __int128>(UINT64_MAX))
      throw ComputeError("count_combos: result exceeds 64 bits");
  }
  return static_cast<std::uint64_t>(acc);
}

namespace {

bool next_combination(std::vector<Index>& c, Index m) {
  const Index k = static_cast<Index>(c.size());
  for (Index i = k - 1; i >= 0; --i) {
    if (c[static_cast<size_t>(i)] < m - k + i) {
      ++c[static_cast<size_t>(i)];
      for (Index j = i + 1; j < k; ++j)
        c[static_cast<size_t>(j)] = c[static_cast<size_t>(j - 1)] + 1;
      return true;
    }
  }
  return false;
}

std::vector<std::vector<Index>> enumerate_combos(Index m, Index k,
                                                 const OverparamOptions& opts) {
  std::vector<std::vector<Index>> out;
  std::uint64_t total = 0;
  bool total_known = true;
  try {
    total = count_combos(static_cast<int>(m), static_cast<int>(k));
  } catch (const ComputeError&) {
    total_known = false;
  }
  std::uint64_t budget = opts.max_combos;
  if (total_known) budget = std::min(budget, total);
  if (budget == 0) return out;
  out.reserve(static_cast<size_t>(std::min<std::uint64_t>(budget, 1u << 20)));

  if (!opts.random_order) {
    std::vector<Index> c(static_cast<size_t>(k));
    for (Index i = 0; i < k; ++i) c[static_cast<size_t>(i)] = i;
    std::uint64_t n = 0;
    do {
      out.push_back(c);
      ++n;
    } while (n < budget && next_combination(c, m));
    return out;
  }

  std::mt19937_64 rng(opts.seed);
  std::set<std::vector<Index>> seen;
  std::uint64_t attempts = 0;
  const std::uint64_t max_attempts = budget * 64 + 256;
  while (out.size() < budget && attempts < max_attempts) {
    ++attempts;
    // Draw k distinct columns via a partial shuffle.
    std::vector<Index> pool(static_cast<size_t>(m));
    for (Index i = 0; i < m; ++i) pool[static_cast<size_t>(i)] = i;
    std::vector<Index> c;
    for (Index i = 0; i < k; ++i) {
      std::uint64_t r = rng() % static_cast<std::uint64_t>(m - i);
      std::swap(pool[static_cast<size_t>(i)], pool[static_cast<size_t>(i + static_cast<Index>(r))]);
      c.push_back(pool[static_cast<size_t>(i)]);
    }
    std::sort(c.begin(), c.end());
    if (seen.insert(c).second) out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

OverparamResult solve_overparam(const MatrixXd& psi, const VectorXd& y,
                                const OverparamOptions& opts) {
  const Index C = psi.rows();
  const Index m = psi.cols();
  if (C == 0) throw ValidationError("solve_overparam: empty system");
  if (y.size() != C) throw ValidationError("solve_overparam: target size mismatch");
  if (m < C)
    throw ValidationError("solve_overparam: needs at least as many columns as rows");
  for (const auto& [col, val] : opts.free_values) {
    (void)val;
    if (col < 0 || col >= m)
      throw ValidationError("solve_overparam: free value column out of range");
  }

  std::vector<std::vector<Index>> combos = enumerate_combos(m, C, opts);
  OverparamResult res;
  res.combos_enumerated = combos.size();

  std::vector<char> success(combos.size(), 0);
  std::vector<OverparamSolution> sols(combos.size());
  parallel_for(static_cast<Index>(combos.size()), [&](Index i) {
    const std::vector<Index>& chosen = combos[static_cast<size_t>(i)];
    std::vector<char> in_chosen(static_cast<size_t>(m), 0);
    for (Index c : chosen) in_chosen[static_cast<size_t>(c)] = 1;

    VectorXd rhs = y;
    VectorXd alpha = VectorXd::Zero(m);
    for (Index c = 0; c < m; ++c) {
      if (in_chosen[static_cast<size_t>(c)]) continue;
      auto it = opts.free_values.find(c);
      double v = it == opts.free_values.end() ? 0.0 : it->second;
      alpha(c) = v;
      if (v != 0.0) rhs -= v * psi.col(c);
    }
    MatrixXd sub(C, C);
    for (Index j = 0; j < C; ++j) sub.col(j) = psi.col(chosen[static_cast<size_t>(j)]);
    RankReport r = rank_and_singularity(sub, opts.rank_tol);
    if (r.singular) return;
    VectorXd a = sub.partialPivLu().solve(rhs);
    for (Index j = 0; j < C; ++j) alpha(chosen[static_cast<size_t>(j)]) = a(j);
    double residual = (psi * alpha - y).lpNorm<Eigen::Infinity>();
    if (residual > opts.residual_tol) return;
    sols[static_cast<size_t>(i)] = OverparamSolution{chosen, std::move(alpha), residual};
    success[static_cast<size_t>(i)] = 1;
  });

  for (size_t i = 0; i < combos.size(); ++i) {
    if (!success[i]) continue;
    res.solutions.push_back(std::move(sols[i]));
    if (opts.stop_at_first) {
      res.combos_enumerated = static_cast<std::uint64_t>(i) + 1;
      break;
    }
  }
  res.status = res.solutions.empty() ? "no_nonsingular_combination_in_budget" : "found";
  return res;
}

FitResult fit_output_layer(const MatrixXd& psi, const VectorXd& y) {
  if (y.size() != psi.rows()) throw ValidationError("fit_output_layer: target size mismatch");
  if (psi.size() == 0) throw ValidationError("fit_output_layer: empty system");
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(psi);
  FitResult res;
  res.alpha = cod.solve(y);
  res.residual = (psi * res.alpha - y).norm();
  res.rank = cod.rank();
  return res;
}

MultiFitResult solve_multi_output(const MatrixXd& psi, const MatrixXd& targets) {
  if (targets.rows() != psi.rows())
    throw ValidationError("solve_multi_output: target rows mismatch");
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(psi);
  MultiFitResult res;
  res.alpha = cod.solve(targets);
  res.residuals.resize(targets.cols());
  for (Index j = 0; j < targets.cols(); ++j)
    res.residuals(j) = (psi * res.alpha.col(j) - targets.col(j)).norm();
  return res;
}

std::pair<MatrixXd, VectorXd> lowdim_system(const LowDimConstraint& c) {
  const Index np1 = c.x0.size();
  if (np1 < 2) throw ValidationError("lowdim: ambient dimension must be at least 2");
  const Index n = np1 - 1;
  const Index k = static_cast<Index>(c.lambdas.size());
  if (c.W_out.rows() != np1)
    throw ValidationError("lowdim: output matrix must have n+1 rows");
  const Index nu = c.W_out.cols();
  if (nu < k + 1)
    throw ValidationError("lowdim: needs at least k+1 output units");
  if (c.w_last == 0.0) throw ValidationError("lowdim: w_last must be nonzero");
  for (const auto& l : c.lambdas)
    if (l.size() != np1) throw ValidationError("lowdim: direction size mismatch");

  // Unknown alpha defines [w'; b] = W_out alpha, and w = [w'; w_last].
  // Containment gives lambda_j . w = 0 and x0 . w + b = 0.
  const MatrixXd& W_top = c.W_out.topRows(n);
  MatrixXd M(k + 1, nu);
  VectorXd rhs(k + 1);
  for (Index j = 0; j < k; ++j) {
    M.row(j) = c.lambdas[static_cast<size_t>(j)].head(n).transpose() * W_top;
    rhs(j) = -c.w_last * c.lambdas[static_cast<size_t>(j)](n);
  }
  M.row(k) = c.x0.head(n).transpose() * W_top + c.W_out.row(n);
  rhs(k) = -c.w_last * c.x0(n);
  return {M, rhs};
}

LowDimResult solve_lowdim(const LowDimConstraint& c, double rank_tol) {
  auto [M, rhs] = lowdim_system(c);
  LowDimResult res;
  res.rank_system = rank_and_singularity(M, rank_tol).rank;
  MatrixXd aug(M.rows(), M.cols() + 1);
  aug << M, rhs;
  res.rank_augmented = rank_and_singularity(aug, rank_tol).rank;
  if (res.rank_augmented > res.rank_system) {
    res.feasible = false;
    return res;
  }
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(M);
  res.alpha = cod.solve(rhs);
  res.residual = (M * res.alpha - rhs).norm();
  res.feasible = true;
  return res;
}

namespace {

// One cluster-separating group: a leading cut plus per-coordinate tilted
// replicas anchored at the same point, plus one parallel shifted cut. The
// mixed replica styles keep the group's functionals linearly independent.
struct CutGroup {
  std::vector<Hyperplane> cuts;
};

CutGroup make_cut_group(const VectorXd& direction, const VectorXd& anchor,
                        double shift, double eps0, int dim,
                        const std::vector<VectorXd>& positive,
                        const std::vector<VectorXd>& nonpositive,
                        double tau_act) {
  auto classify_ok = [&](const Hyperplane& h) {
    for (const auto& x : positive)
      if (h.pre(x) <= tau_act) return false;
    for (const auto& x : nonpositive)
      if (h.pre(x) > 0.0) return false;
    return true;
  };

  CutGroup g;
  Hyperplane lead{direction, -direction.dot(anchor)};
  if (!classify_ok(lead))
    throw ComputeError("fixture: leading cut fails to separate the clusters");
  g.cuts.push_back(lead);

  int pivot = 0;
  direction.cwiseAbs().maxCoeff(&pivot);
  for (int c = 0; c < dim; ++c) {
    if (c == pivot) continue;
    double eps = eps0;
    bool placed = false;
    for (int halve = 0; halve < 60 && !placed; ++halve, eps *= 0.5) {
      VectorXd w = direction;
      w(c) += eps;
      Hyperplane h{w, -w.dot(anchor)};
      if (classify_ok(h)) {
        g.cuts.push_back(h);
        placed = true;
      }
    }
    if (!placed) throw ComputeError("fixture: no tilt preserves the separation");
  }

  double s = shift;
  bool placed = false;
  for (int halve = 0; halve < 60 && !placed; ++halve, s *= 0.5) {
    Hyperplane h{direction, -direction.dot(anchor) - s};
    if (classify_ok(h)) {
      g.cuts.push_back(h);
      placed = true;
    }
  }
  if (!placed) throw ComputeError("fixture: no parallel shift preserves the separation");
  return g;
}

}  // namespace

DistinguishableFixture make_distinguishable_fixture(int dim, int subdomains,
                                                    std::uint64_t seed,
                                                    double tau_act) {
  if (dim != 1 && dim != 2)
    throw ValidationError("fixture: only input dimensions 1 and 2 are supported");
  if (subdomains < 1) throw ValidationError("fixture: need at least one subdomain");

  const int per = dim + 1;
  std::mt19937_64 rng(seed);

  for (int attempt = 0; attempt < 64; ++attempt) {
    VectorXd u = VectorXd::Zero(dim);
    if (dim == 1) {
      u(0) = 1.0;
    } else {
      double angle = uniform_double(rng, 0.0, 6.283185307179586);
      u << std::cos(angle), std::sin(angle);
    }

    // Clusters spaced 3.0 apart along u, points jittered within radius 0.4.
    std::vector<std::vector<VectorXd>> clusters(static_cast<size_t>(subdomains));
    for (int i = 0; i < subdomains; ++i) {
      VectorXd center = u * (3.0 * i);
      if (dim == 2) {
        VectorXd perp(2);
        perp << -u(1), u(0);
        center += perp * uniform_double(rng, -1.0, 1.0);
      }
      for (int p = 0; p < per; ++p) {
        VectorXd x = center;
        for (int c = 0; c < dim; ++c) x(c) += uniform_double(rng, -0.4, 0.4);
        clusters[static_cast<size_t>(i)].push_back(x);
      }
    }

    // Per-cluster affine targets.
    Dataset data;
    VectorXd y(subdomains * per);
    Index at = 0;
    for (int i = 0; i < subdomains; ++i) {
      VectorXd a(dim);
      for (int c = 0; c < dim; ++c) a(c) = uniform_double(rng, -1.0, 1.0);
      double b = uniform_double(rng, -1.0, 1.0);
      for (const auto& x : clusters[static_cast<size_t>(i)]) {
        double target = a.dot(x) + b;
        DataPoint p;
        p.x = x;
        p.y = VectorXd::Constant(1, target);
        p.subdomain = i + 1;
        data.points.push_back(p);
        y(at++) = target;
      }
    }

    // Group i: cuts in the gap below cluster i; cluster j >= i on the positive
    // side, clusters j < i on the zero side.
    bool ok = true;
    std::vector<CutGroup> groups;
    try {
      for (int i = 0; i < subdomains; ++i) {
        VectorXd anchor = u * (3.0 * i - 1.5);
        std::vector<VectorXd> pos, nonpos;
        for (int j = 0; j < subdomains; ++j)
          for (const auto& x : clusters[static_cast<size_t>(j)])
            (j >= i ? pos : nonpos).push_back(x);
        groups.push_back(make_cut_group(u, anchor, 0.5, 0.25, dim, pos, nonpos, tau_act));
      }
    } catch (const ComputeError&) {
      ok = false;
    }
    if (!ok) continue;

    Network net;
    net.input_dim = dim;
    AffineLayer hidden;
    hidden.W.resize(subdomains * per, dim);
    hidden.b.resize(subdomains * per);
    Index row = 0;
    for (const auto& g : groups)
      for (const auto& h : g.cuts) {
        hidden.W.row(row) = h.w.transpose();
        hidden.b(row) = h.b;
        ++row;
      }
    hidden.act = Activation::Relu;
    net.layers.push_back(hidden);
    AffineLayer outl;
    outl.W = MatrixXd::Ones(1, subdomains * per);
    outl.b = VectorXd::Zero(1);
    outl.act = Activation::Linear;
    net.layers.push_back(outl);

    InterpMatrix phi = build_interp_matrix(net, data, 0, tau_act);
    std::vector<Index> sizes(static_cast<size_t>(subdomains), per);
    BlockTriangularSystem sys;
    try {
      sys = block_triangular_from(phi.values, y, sizes);
    } catch (const ValidationError&) {
      continue;  // a cut grazed a cluster; retry with fresh geometry
    }
    bool nonsingular = true;
    for (const auto& p : sys.P)
      if (rank_and_singularity(p).singular) {
        nonsingular = false;
        break;
      }
    if (!nonsingular) continue;

    DistinguishableFixture fx;
    fx.net = std::move(net);
    fx.data = std::move(data);
    fx.system = std::move(sys);
    fx.phi = phi.values;
    fx.y = y;
    return fx;
  }
  throw ComputeError("fixture: could not realize a distinguishable arrangement");
}

}  // namespace relu_interp
