#include "relu_interp/activation_mode.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace relu_interp {

const char* mode_symbol_name(ModeSymbol s) {
  switch (s) {
    case ModeSymbol::P: return "P";
    case ModeSymbol::Z: return "0";
    case ModeSymbol::Zp: return "0'";
    case ModeSymbol::U: return "U";
  }
  return "?";
}

ModeSymbol classify_block(const MatrixXd& block) {
  if (block.size() == 0) throw ValidationError("classify_block: empty block");
  if ((block.array() > 0.0).all()) return ModeSymbol::P;
  if ((block.array() == 0.0).all()) return ModeSymbol::Z;
  for (Index j = 0; j < block.cols(); ++j)
    if ((block.col(j).array() == 0.0).all()) return ModeSymbol::Zp;
  return ModeSymbol::U;
}

ModeMatrix extract_mode(const MatrixXd& m,
                        const std::vector<std::vector<Index>>& row_partition,
                        const std::vector<std::vector<Index>>& col_partition) {
  BlockView view = block_view(m, row_partition, col_partition);
  ModeMatrix mode;
  mode.grid.resize(view.blocks.size());
  for (size_t i = 0; i < view.blocks.size(); ++i) {
    mode.grid[i].resize(view.blocks[i].size());
    for (size_t j = 0; j < view.blocks[i].size(); ++j)
      mode.grid[i][j] = classify_block(view.blocks[i][j]);
  }
  for (size_t i = 0; i < row_partition.size(); ++i)
    mode.row_labels.push_back("D" + std::to_string(i + 1));
  for (size_t j = 0; j < col_partition.size(); ++j)
    mode.col_labels.push_back("L" + std::to_string(j + 1));
  return mode;
}

std::vector<std::vector<Index>> auto_group_columns(
    const MatrixXd& m, const std::vector<std::vector<Index>>& row_partition) {
  // Signature of a column: the set of row cells with some positive entry.
  std::vector<std::vector<size_t>> sig(static_cast<size_t>(m.cols()));
  for (Index c = 0; c < m.cols(); ++c)
    for (size_t i = 0; i < row_partition.size(); ++i)
      for (Index r : row_partition[i])
        if (m(r, c) > 0.0) {
          sig[static_cast<size_t>(c)].push_back(i);
          break;
        }
  std::vector<std::vector<Index>> groups;
  for (Index c = 0; c < m.cols(); ++c) {
    int found = -1;
    for (size_t g = 0; g < groups.size(); ++g)
      if (sig[static_cast<size_t>(groups[g].front())] == sig[static_cast<size_t>(c)]) {
        found = static_cast<int>(g);
        break;
      }
    if (found < 0)
      groups.push_back({c});
    else
      groups[static_cast<size_t>(found)].push_back(c);
  }
  return groups;
}

const char* normal_form_name(NormalForm f) {
  switch (f) {
    case NormalForm::StrictLowerTriangular: return "strict_lower_triangular";
    case NormalForm::RelaxedLowerTriangular: return "relaxed_lower_triangular";
    case NormalForm::Failed: return "failed";
  }
  return "?";
}

namespace {

bool upper_ok(ModeSymbol s, bool relaxed) {
  if (s == ModeSymbol::Z) return true;
  return relaxed && s == ModeSymbol::Zp;
}

// Can the prefix of (row, col) diagonal assignments be completed? Rows in
// the prefix are fixed in order; remaining rows/cols may be placed freely.
struct PairSearch {
  const ModeMatrix& mode;
  bool relaxed;
  int n;

  bool feasible_with_row_prefix(const std::vector<int>& row_prefix) const {
    std::vector<int> forced(static_cast<size_t>(n), -1);  // -1 = free position
    for (size_t i = 0; i < row_prefix.size(); ++i) forced[i] = row_prefix[i];
    std::vector<int> rows, cols;
    std::vector<char> row_used(static_cast<size_t>(n), 0), col_used(static_cast<size_t>(n), 0);
    return extend_prefix(rows, cols, row_used, col_used, forced);
  }

  bool extend_prefix(std::vector<int>& rows, std::vector<int>& cols,
                     std::vector<char>& row_used, std::vector<char>& col_used,
                     const std::vector<int>& forced) const {
    int pos = static_cast<int>(rows.size());
    if (pos == n) return true;
    int lo = 0, hi = n - 1;
    if (forced[static_cast<size_t>(pos)] >= 0) lo = hi = forced[static_cast<size_t>(pos)];
    for (int r = lo; r <= hi; ++r) {
      if (row_used[static_cast<size_t>(r)]) continue;
      for (int c = 0; c < n; ++c) {
        if (col_used[static_cast<size_t>(c)]) continue;
        if (mode.grid[static_cast<size_t>(r)][static_cast<size_t>(c)] != ModeSymbol::P) continue;
        bool ok = true;
        for (int a = 0; a < pos; ++a)
          if (!upper_ok(mode.grid[static_cast<size_t>(rows[static_cast<size_t>(a)])]
                                 [static_cast<size_t>(c)],
                        relaxed)) {
            ok = false;
            break;
          }
        if (!ok) continue;
        rows.push_back(r);
        cols.push_back(c);
        row_used[static_cast<size_t>(r)] = 1;
        col_used[static_cast<size_t>(c)] = 1;
        if (extend_prefix(rows, cols, row_used, col_used, forced)) return true;
        rows.pop_back();
        cols.pop_back();
        row_used[static_cast<size_t>(r)] = 0;
        col_used[static_cast<size_t>(c)] = 0;
      }
    }
    return false;
  }

  // Lexicographically smallest row permutation admitting a solution, then the
  // smallest column permutation for that row order. Empty result = infeasible.
  bool solve(std::vector<int>& row_perm, std::vector<int>& col_perm) const {
    std::vector<int> prefix;
    if (!feasible_with_row_prefix(prefix)) return false;
    for (int pos = 0; pos < n; ++pos) {
      for (int r = 0; r < n; ++r) {
        if (std::find(prefix.begin(), prefix.end(), r) != prefix.end()) continue;
        prefix.push_back(r);
        if (feasible_with_row_prefix(prefix)) break;
        prefix.pop_back();
      }
      if (static_cast<int>(prefix.size()) != pos + 1)
        return false;  // should not happen once the empty prefix is feasible
    }
    row_perm = prefix;
    // Now fix columns greedily against the frozen row order.
    std::vector<int> cols;
    std::vector<char> col_used(static_cast<size_t>(n), 0);
    for (int pos = 0; pos < n; ++pos) {
      bool placed = false;
      for (int c = 0; c < n && !placed; ++c) {
        if (col_used[static_cast<size_t>(c)]) continue;
        int r = row_perm[static_cast<size_t>(pos)];
        if (mode.grid[static_cast<size_t>(r)][static_cast<size_t>(c)] != ModeSymbol::P) continue;
        bool ok = true;
        for (int a = 0; a < pos; ++a)
          if (!upper_ok(mode.grid[static_cast<size_t>(row_perm[static_cast<size_t>(a)])]
                                 [static_cast<size_t>(c)],
                        relaxed)) {
            ok = false;
            break;
          }
        if (!ok) continue;
        cols.push_back(c);
        col_used[static_cast<size_t>(c)] = 1;
        if (cols_completable(row_perm, cols, col_used)) {
          placed = true;
        } else {
          cols.pop_back();
          col_used[static_cast<size_t>(c)] = 0;
        }
      }
      if (!placed) return false;  // cannot happen for a feasible row order
    }
    col_perm = cols;
    return true;
  }

  bool cols_completable(const std::vector<int>& row_perm, std::vector<int>& cols,
                        std::vector<char>& col_used) const {
    int pos = static_cast<int>(cols.size());
    if (pos == n) return true;
    int r = row_perm[static_cast<size_t>(pos)];
    for (int c = 0; c < n; ++c) {
      if (col_used[static_cast<size_t>(c)]) continue;
      if (mode.grid[static_cast<size_t>(r)][static_cast<size_t>(c)] != ModeSymbol::P) continue;
      bool ok = true;
      for (int a = 0; a < pos; ++a)
        if (!upper_ok(mode.grid[static_cast<size_t>(row_perm[static_cast<size_t>(a)])]
                               [static_cast<size_t>(c)],
                      relaxed)) {
          ok = false;
          break;
        }
      if (!ok) continue;
      cols.push_back(c);
      col_used[static_cast<size_t>(c)] = 1;
      if (cols_completable(row_perm, cols, col_used)) {
        cols.pop_back();
        col_used[static_cast<size_t>(c)] = 0;
        return true;
      }
      cols.pop_back();
      col_used[static_cast<size_t>(c)] = 0;
    }
    return false;
  }
};

ModeMatrix apply_perms(const ModeMatrix& in, const std::vector<int>& rp,
                       const std::vector<int>& cp) {
  ModeMatrix out;
  size_t n = in.rows();
  out.grid.resize(n);
  for (size_t i = 0; i < n; ++i) {
    out.grid[i].resize(n);
    for (size_t j = 0; j < n; ++j)
      out.grid[i][j] = in.grid[static_cast<size_t>(rp[i])][static_cast<size_t>(cp[j])];
  }
  for (size_t i = 0; i < n; ++i) {
    out.row_labels.push_back(i < in.row_labels.size() ? in.row_labels[static_cast<size_t>(rp[i])]
                                                      : std::string());
    out.col_labels.push_back(i < in.col_labels.size() ? in.col_labels[static_cast<size_t>(cp[i])]
                                                      : std::string());
  }
  return out;
}

}  // namespace

NormalizationResult normalize_mode(const ModeMatrix& mode) {
  const size_t n = mode.rows();
  if (n == 0 || mode.cols() != n)
    throw ValidationError("normalize_mode: mode matrix must be square in block count");
  for (const auto& row : mode.grid)
    if (row.size() != n)
      throw ValidationError("normalize_mode: ragged mode matrix");
  if (n > 12)
    throw ValidationError("normalize_mode: block count exceeds the supported budget (12)");

  NormalizationResult res;
  for (bool relaxed : {false, true}) {
    PairSearch search{mode, relaxed, static_cast<int>(n)};
    std::vector<int> rp, cp;
    if (search.solve(rp, cp)) {
      res.achieved = relaxed ? NormalForm::RelaxedLowerTriangular
                             : NormalForm::StrictLowerTriangular;
      res.row_perm = rp;
      res.col_perm = cp;
      res.normalized = apply_perms(mode, rp, cp);
      return res;
    }
  }
  res.achieved = NormalForm::Failed;
  res.normalized = mode;
  return res;
}

std::string render_mode_table(const ModeMatrix& mode) {
  std::ostringstream os;
  size_t label_w = 0;
  for (const auto& l : mode.row_labels) label_w = std::max(label_w, l.size());
  auto pad = [](const std::string& s, size_t w) {
    return s + std::string(w > s.size() ? w - s.size() : 0, ' ');
  };
  if (!mode.col_labels.empty()) {
    os << pad("", label_w + 2);
    for (const auto& l : mode.col_labels) os << pad(l, 4);
    os << "\n";
  }
  for (size_t i = 0; i < mode.rows(); ++i) {
    std::string label = i < mode.row_labels.size() ? mode.row_labels[i] : "";
    os << pad(label, label_w + 2);
    for (size_t j = 0; j < mode.cols(); ++j)
      os << pad(mode_symbol_name(mode.grid[i][j]), 4);
    os << "\n";
  }
  return os.str();
}

}  // namespace relu_interp
