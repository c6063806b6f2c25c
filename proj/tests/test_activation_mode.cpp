#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include "helpers.hpp"
#include "relu_interp/activation_mode.hpp"
#include "relu_interp/interp_matrix.hpp"

using namespace relu_interp;

namespace {

ModeSymbol sym(const std::string& tok) {
  if (tok == "P") return ModeSymbol::P;
  if (tok == "0") return ModeSymbol::Z;
  if (tok == "0'") return ModeSymbol::Zp;
  if (tok == "U") return ModeSymbol::U;
  throw std::runtime_error("bad symbol token: " + tok);
}

// Rows are space-separated symbol tokens, e.g. "P U 0' 0".
ModeMatrix grid_from(const std::vector<std::string>& rows) {
  ModeMatrix m;
  for (const auto& line : rows) {
    std::istringstream is(line);
    std::vector<ModeSymbol> row;
    std::string tok;
    while (is >> tok) row.push_back(sym(tok));
    m.grid.push_back(row);
  }
  return m;
}

bool upper_allows(ModeSymbol s, bool relaxed) {
  return s == ModeSymbol::Z || (relaxed && s == ModeSymbol::Zp);
}

bool pair_feasible(const ModeMatrix& m, const std::vector<int>& rp,
                   const std::vector<int>& cp, bool relaxed) {
  int n = static_cast<int>(m.rows());
  for (int i = 0; i < n; ++i) {
    if (m.grid[static_cast<size_t>(rp[static_cast<size_t>(i)])]
              [static_cast<size_t>(cp[static_cast<size_t>(i)])] != ModeSymbol::P)
      return false;
    for (int j = i + 1; j < n; ++j)
      if (!upper_allows(m.grid[static_cast<size_t>(rp[static_cast<size_t>(i)])]
                              [static_cast<size_t>(cp[static_cast<size_t>(j)])],
                        relaxed))
        return false;
  }
  return true;
}

// Reference search: enumerate permutation pairs in lexicographic order and
// keep the first feasible one. next_permutation visits row orders smallest
// first and, within a row order, column orders smallest first, so the hit is
// the lex-minimal row permutation followed by the lex-minimal column
// permutation for it.
bool brute_force_pair(const ModeMatrix& m, bool relaxed, std::vector<int>& rp_out,
                      std::vector<int>& cp_out) {
  int n = static_cast<int>(m.rows());
  std::vector<int> rp(static_cast<size_t>(n)), cp(static_cast<size_t>(n));
  std::iota(rp.begin(), rp.end(), 0);
  do {
    std::iota(cp.begin(), cp.end(), 0);
    do {
      if (pair_feasible(m, rp, cp, relaxed)) {
        rp_out = rp;
        cp_out = cp;
        return true;
      }
    } while (std::next_permutation(cp.begin(), cp.end()));
  } while (std::next_permutation(rp.begin(), rp.end()));
  return false;
}

void check_against_oracle(const ModeMatrix& m) {
  NormalizationResult got = normalize_mode(m);
  std::vector<int> rp, cp;
  if (brute_force_pair(m, false, rp, cp)) {
    REQUIRE(got.achieved == NormalForm::StrictLowerTriangular);
    CHECK(got.row_perm == rp);
    CHECK(got.col_perm == cp);
  } else if (brute_force_pair(m, true, rp, cp)) {
    REQUIRE(got.achieved == NormalForm::RelaxedLowerTriangular);
    CHECK(got.row_perm == rp);
    CHECK(got.col_perm == cp);
  } else {
    REQUIRE(got.achieved == NormalForm::Failed);
    CHECK(got.row_perm.empty());
    CHECK(got.col_perm.empty());
    CHECK(got.normalized.grid == m.grid);
    return;
  }
  // The reported permutations must actually reproduce the normalized grid.
  for (size_t i = 0; i < m.rows(); ++i)
    for (size_t j = 0; j < m.rows(); ++j)
      CHECK(got.normalized.grid[i][j] ==
            m.grid[static_cast<size_t>(got.row_perm[i])][static_cast<size_t>(got.col_perm[j])]);
  bool relaxed = got.achieved == NormalForm::RelaxedLowerTriangular;
  for (size_t i = 0; i < m.rows(); ++i) {
    CHECK(got.normalized.grid[i][i] == ModeSymbol::P);
    for (size_t j = i + 1; j < m.rows(); ++j)
      CHECK(upper_allows(got.normalized.grid[i][j], relaxed));
  }
}

}  // namespace

TEST_CASE("block classification covers the four symbol classes") {
  CHECK(classify_block(fixtures::mat(2, 2, {1.0, 0.5, 3.0, 2.0})) == ModeSymbol::P);
  CHECK(classify_block(fixtures::mat(2, 2, {0.0, 0.0, 0.0, 0.0})) == ModeSymbol::Z);
  // Some all-zero column while other entries are positive.
  CHECK(classify_block(fixtures::mat(2, 2, {3.0, 0.0, 4.0, 0.0})) == ModeSymbol::Zp);
  // Zeros present but no column is entirely zero.
  CHECK(classify_block(fixtures::mat(2, 2, {3.0, 0.0, 0.0, 4.0})) == ModeSymbol::U);
  CHECK(classify_block(fixtures::mat(1, 1, {2.0})) == ModeSymbol::P);
  CHECK(classify_block(fixtures::mat(1, 1, {0.0})) == ModeSymbol::Z);
  CHECK_THROWS_AS(classify_block(MatrixXd(0, 0)), ValidationError);
}

TEST_CASE("the all-zero block is classified as 0, not 0'") {
  // Every column of a zero block is a zero column; the plain-zero class wins.
  CHECK(classify_block(fixtures::mat(3, 2, {0, 0, 0, 0, 0, 0})) == ModeSymbol::Z);
}

TEST_CASE("mode extraction of the absolute-value interpolation matrix") {
  InterpMatrix phi = build_interp_matrix(fixtures::abs_net(), fixtures::abs_data());
  auto rows = subdomain_row_partition(fixtures::abs_data());
  std::vector<std::vector<Index>> cols = {{0}, {1}};
  ModeMatrix mode = extract_mode(phi.values, rows, cols);
  REQUIRE(mode.rows() == 2);
  REQUIRE(mode.cols() == 2);
  CHECK(mode.grid[0][0] == ModeSymbol::Z);
  CHECK(mode.grid[0][1] == ModeSymbol::U);
  CHECK(mode.grid[1][0] == ModeSymbol::P);
  CHECK(mode.grid[1][1] == ModeSymbol::Z);
  CHECK(mode.row_labels == std::vector<std::string>{"D1", "D2"});
  CHECK(mode.col_labels == std::vector<std::string>{"L1", "L2"});
}

TEST_CASE("column auto-grouping keys on which row cells see activity") {
  SUBCASE("absolute-value units land in separate groups") {
    InterpMatrix phi = build_interp_matrix(fixtures::abs_net(), fixtures::abs_data());
    auto rows = subdomain_row_partition(fixtures::abs_data());
    auto groups = auto_group_columns(phi.values, rows);
    REQUIRE(groups.size() == 2);
    CHECK(groups[0] == std::vector<Index>{0});
    CHECK(groups[1] == std::vector<Index>{1});
  }
  SUBCASE("columns active in the same cells share a group") {
    MatrixXd m = fixtures::mat(2, 3, {1.0, 2.0, 0.0, 0.0, 0.0, 3.0});
    std::vector<std::vector<Index>> rows = {{0}, {1}};
    auto groups = auto_group_columns(m, rows);
    REQUIRE(groups.size() == 2);
    CHECK(groups[0] == std::vector<Index>({0, 1}));
    CHECK(groups[1] == std::vector<Index>{2});
  }
  SUBCASE("a fully positive matrix collapses to one group") {
    MatrixXd m = fixtures::mat(3, 4, {1, 2, 3, 4, 5, 6, 7, 8, 9, 1, 2, 3});
    std::vector<std::vector<Index>> rows = {{0, 1}, {2}};
    auto groups = auto_group_columns(m, rows);
    REQUIRE(groups.size() == 1);
    CHECK(groups[0] == std::vector<Index>({0, 1, 2, 3}));
  }
}

TEST_CASE("normalization solves the four-block shuffled grid exactly") {
  ModeMatrix shuffled = grid_from({"P U 0 U", "0 P 0 0", "U U P U", "0 U 0 P"});
  shuffled.row_labels = {"D1", "D2", "D3", "D4"};
  shuffled.col_labels = {"L1", "L2", "L3", "L4"};
  NormalizationResult res = normalize_mode(shuffled);
  REQUIRE(res.achieved == NormalForm::StrictLowerTriangular);
  CHECK(res.row_perm == std::vector<int>({1, 3, 0, 2}));
  CHECK(res.col_perm == std::vector<int>({1, 3, 0, 2}));
  ModeMatrix target = grid_from({"P 0 0 0", "U P 0 0", "U U P 0", "U U U P"});
  CHECK(res.normalized.grid == target.grid);
  CHECK(res.normalized.row_labels == std::vector<std::string>({"D2", "D4", "D1", "D3"}));
  CHECK(res.normalized.col_labels == std::vector<std::string>({"L2", "L4", "L1", "L3"}));
}

TEST_CASE("grids needing the weak zero above the diagonal fall back to relaxed") {
  ModeMatrix m = grid_from({"P U U", "0 P 0'", "0' U P"});
  NormalizationResult res = normalize_mode(m);
  REQUIRE(res.achieved == NormalForm::RelaxedLowerTriangular);
  CHECK(res.row_perm == std::vector<int>({1, 2, 0}));
  CHECK(res.col_perm == std::vector<int>({1, 2, 0}));
  ModeMatrix target = grid_from({"P 0' 0", "U P 0'", "U U P"});
  CHECK(res.normalized.grid == target.grid);
}

TEST_CASE("already triangular grids normalize with identity permutations") {
  ModeMatrix m = grid_from({"P 0 0 0", "U P 0 0", "U U P 0", "U U U P"});
  NormalizationResult res = normalize_mode(m);
  REQUIRE(res.achieved == NormalForm::StrictLowerTriangular);
  CHECK(res.row_perm == std::vector<int>({0, 1, 2, 3}));
  CHECK(res.col_perm == std::vector<int>({0, 1, 2, 3}));
  CHECK(res.normalized.grid == m.grid);
}

TEST_CASE("single-block and infeasible grids") {
  SUBCASE("one positive block is trivially triangular") {
    NormalizationResult res = normalize_mode(grid_from({"P"}));
    REQUIRE(res.achieved == NormalForm::StrictLowerTriangular);
    CHECK(res.row_perm == std::vector<int>{0});
    CHECK(res.col_perm == std::vector<int>{0});
  }
  SUBCASE("no positive diagonal can exist") {
    ModeMatrix m = grid_from({"U U", "U U"});
    NormalizationResult res = normalize_mode(m);
    REQUIRE(res.achieved == NormalForm::Failed);
    CHECK(res.row_perm.empty());
    CHECK(res.col_perm.empty());
    CHECK(res.normalized.grid == m.grid);
  }
  SUBCASE("positives exist but every order leaves mixing above the diagonal") {
    // Both diagonals can be made P, yet the off-diagonal blocks are U both
    // ways, so neither strict nor relaxed triangularity is reachable.
    check_against_oracle(grid_from({"P U", "U P"}));
    ModeMatrix m = grid_from({"P U", "U P"});
    CHECK(normalize_mode(m).achieved == NormalForm::Failed);
  }
}

TEST_CASE("normalization input validation") {
  CHECK_THROWS_AS(normalize_mode(ModeMatrix{}), ValidationError);
  ModeMatrix ragged;
  ragged.grid = {{ModeSymbol::P, ModeSymbol::Z}, {ModeSymbol::P}};
  CHECK_THROWS_AS(normalize_mode(ragged), ValidationError);
  ModeMatrix wide;
  wide.grid = {{ModeSymbol::P, ModeSymbol::Z, ModeSymbol::Z},
               {ModeSymbol::P, ModeSymbol::P, ModeSymbol::Z}};
  CHECK_THROWS_AS(normalize_mode(wide), ValidationError);
  ModeMatrix big;
  big.grid.assign(13, std::vector<ModeSymbol>(13, ModeSymbol::P));
  CHECK_THROWS_AS(normalize_mode(big), ValidationError);
}

TEST_CASE("normalization agrees with exhaustive search on sampled grids") {
  std::mt19937_64 rng(2026);
  const ModeSymbol alphabet[4] = {ModeSymbol::P, ModeSymbol::Z, ModeSymbol::Zp, ModeSymbol::U};
  for (int n = 2; n <= 4; ++n) {
    for (int trial = 0; trial < 150; ++trial) {
      ModeMatrix m;
      m.grid.assign(static_cast<size_t>(n), std::vector<ModeSymbol>(static_cast<size_t>(n)));
      for (auto& row : m.grid)
        for (auto& cell : row) cell = alphabet[rng() % 4];
      check_against_oracle(m);
    }
  }
}

TEST_CASE("rendered table lists labels and symbols") {
  ModeMatrix m = grid_from({"P 0'", "U P"});
  m.row_labels = {"D1", "D2"};
  m.col_labels = {"L1", "L2"};
  std::string table = render_mode_table(m);
  CHECK(table.find("D1") != std::string::npos);
  CHECK(table.find("L2") != std::string::npos);
  CHECK(table.find("0'") != std::string::npos);
  CHECK(table.find("P") != std::string::npos);
  // One line per row plus the column header.
  CHECK(std::count(table.begin(), table.end(), '\n') == 3);
}
