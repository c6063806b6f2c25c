#pragma once

#include "relu_interp/interp_matrix.hpp"

namespace relu_interp {

// Block classes for activation-mode matrices.
//   P  : every entry positive
//   Z  : every entry zero
//   Zp : at least one all-zero column (written 0'); Z is a special case
//   U  : anything else (mixed)
enum class ModeSymbol { P, Z, Zp, U };

const char* mode_symbol_name(ModeSymbol s);  // "P", "0", "0'", "U"

struct ModeMatrix {
  std::vector<std::vector<ModeSymbol>> grid;  // grid[i][j], subdomains x groups
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;

  size_t rows() const { return grid.size(); }
  size_t cols() const { return grid.empty() ? 0 : grid.front().size(); }
};

// Precedence: P, then Z, then Zp, then U.
ModeSymbol classify_block(const MatrixXd& block);

ModeMatrix extract_mode(const MatrixXd& m,
                        const std::vector<std::vector<Index>>& row_partition,
                        const std::vector<std::vector<Index>>& col_partition);

// Columns grouped by which subdomains activate them (some point of the
// subdomain has a positive entry). Groups are ordered by first column index;
// columns never activated form their own group.
std::vector<std::vector<Index>> auto_group_columns(
    const MatrixXd& m, const std::vector<std::vector<Index>>& row_partition);

enum class NormalForm { StrictLowerTriangular, RelaxedLowerTriangular, Failed };

const char* normal_form_name(NormalForm f);

struct NormalizationResult {
  NormalForm achieved = NormalForm::Failed;
  std::vector<int> row_perm;  // normalized[i][j] = input[row_perm[i]][col_perm[j]]
  std::vector<int> col_perm;
  ModeMatrix normalized;
};

// Searches row/column permutations putting the mode matrix into lower
// triangular form with an all-P diagonal. Strict form requires Z strictly
// above the diagonal; the relaxed form allows Z or 0'. Among successful
// permutations the lexicographically smallest row permutation is returned,
// then the smallest column permutation. Block count is capped at 12.
NormalizationResult normalize_mode(const ModeMatrix& mode);

std::string render_mode_table(const ModeMatrix& mode);

}  // namespace relu_interp
