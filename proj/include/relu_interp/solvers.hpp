#pragma once

#include <cstdint>

#include "relu_interp/types.hpp"

namespace relu_interp {

// Square block lower triangular system: diagonal blocks P[i] (square), strictly
// lower blocks sub[j][i] for i < j, stacked targets y[i].
struct BlockTriangularSystem {
  std::vector<MatrixXd> P;
  std::vector<std::vector<MatrixXd>> sub;  // sub[j] has j entries
  std::vector<VectorXd> y;

  int blocks() const { return static_cast<int>(P.size()); }
};

void validate_system(const BlockTriangularSystem& sys);

// Splits a square matrix into uniform blocks and checks the upper blocks are
// exactly zero.
BlockTriangularSystem block_triangular_from(const MatrixXd& m, const VectorXd& y,
                                            const std::vector<Index>& block_sizes);

// Forward substitution:
//   alpha_1 = P_1^{-1} y_1,   P_j alpha_j = y_j - sum_{i<j} sub[j][i] alpha_i.
// Throws SingularBlockError naming the offending diagonal block.
std::vector<VectorXd> solve_block_triangular(const BlockTriangularSystem& sys,
                                             double rank_tol = kDefaultRankTol);

MatrixXd assemble_dense(const BlockTriangularSystem& sys);
VectorXd stack(const std::vector<VectorXd>& parts);

// Number of ways to choose `rows` columns out of m.
std::uint64_t count_combos(int m, int rows);

struct OverparamOptions {
  std::uint64_t max_combos = 10000;
  bool random_order = false;  // lexicographic by default
  std::uint64_t seed = 0;
  bool stop_at_first = true;
  std::map<Index, double> free_values;  // unchosen coefficients; default 0
  double residual_tol = 1e-8;           // infinity norm
  double rank_tol = kDefaultRankTol;
};

struct OverparamSolution {
  std::vector<Index> chosen;  // column indices solved for
  VectorXd alpha;             // full-length coefficients
  double residual = 0.0;      // |Psi alpha - y|_inf
};

struct OverparamResult {
  std::vector<OverparamSolution> solutions;
  std::uint64_t combos_enumerated = 0;
  std::string status;  // "found" or "no_nonsingular_combination_in_budget"
};

// Enumerates square column subsets of a wide system Psi (C x m, m >= C),
// moves the unchosen columns to the right-hand side with fixed coefficients,
// and solves each nonsingular subset exactly.
OverparamResult solve_overparam(const MatrixXd& psi, const VectorXd& y,
                                const OverparamOptions& opts = {});

struct FitResult {
  VectorXd alpha;
  double residual = 0.0;  // l2 norm
  Index rank = 0;
};

// Minimum-norm least squares fit of Psi alpha = y.
FitResult fit_output_layer(const MatrixXd& psi, const VectorXd& y);

struct MultiFitResult {
  MatrixXd alpha;  // m x outputs
  VectorXd residuals;
};

// Shared factorization, one solve per target column.
MultiFitResult solve_multi_output(const MatrixXd& psi, const MatrixXd& targets);

// Constraint: realize a hyperplane w = [w', -1] containing the affine set
// x = x0 + sum_j t_j lambda_j, where [w'; b] must be a linear combination
// W_out * alpha of nu basis functionals.
struct LowDimConstraint {
  VectorXd x0;                   // length n+1
  std::vector<VectorXd> lambdas; // k directions, each length n+1
  MatrixXd W_out;                // (n+1) x nu
  double w_last = -1.0;          // fixed last entry of w
};

struct LowDimResult {
  bool feasible = false;
  VectorXd alpha;
  double residual = 0.0;
  Index rank_system = 0;
  Index rank_augmented = 0;
};

LowDimResult solve_lowdim(const LowDimConstraint& c, double rank_tol = kDefaultRankTol);

// System matrix (k+1) x nu and right-hand side for a constraint; exposed for
// verification.
std::pair<MatrixXd, VectorXd> lowdim_system(const LowDimConstraint& c);

// Test fixture: N point clusters along a line, each with n+1 points fitted by
// its own affine target, plus one hyperplane group per cluster placed so the
// resulting unit-output matrix is block lower triangular with positive
// diagonal blocks. Supported for input dimension 1 and 2.
struct DistinguishableFixture {
  Network net;  // single hidden layer of N*(n+1) units, linear output
  Dataset data;
  BlockTriangularSystem system;
  MatrixXd phi;  // assembled matrix, rows/columns in subdomain/group order
  VectorXd y;
};

DistinguishableFixture make_distinguishable_fixture(int dim, int subdomains,
                                                    std::uint64_t seed,
                                                    double tau_act = kDefaultTauAct);

}  // namespace relu_interp
