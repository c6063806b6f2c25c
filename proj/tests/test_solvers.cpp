#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <vector>

#include "helpers.hpp"
#include "relu_interp/interp_matrix.hpp"
#include "relu_interp/solvers.hpp"

using namespace relu_interp;

namespace {

// Random block lower triangular system with well-conditioned diagonals.
BlockTriangularSystem random_system(std::mt19937_64& rng, const std::vector<Index>& sizes) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  BlockTriangularSystem sys;
  for (size_t j = 0; j < sizes.size(); ++j) {
    Index s = sizes[j];
    MatrixXd p(s, s);
    for (Index r = 0; r < s; ++r)
      for (Index c = 0; c < s; ++c) p(r, c) = u(rng);
    p += 3.0 * static_cast<double>(s) * MatrixXd::Identity(s, s);  // keep it nonsingular
    sys.P.push_back(p);
    std::vector<MatrixXd> row;
    for (size_t i = 0; i < j; ++i) {
      MatrixXd b(s, sizes[i]);
      for (Index r = 0; r < s; ++r)
        for (Index c = 0; c < sizes[i]; ++c) b(r, c) = u(rng);
      row.push_back(b);
    }
    sys.sub.push_back(row);
    VectorXd y(s);
    for (Index r = 0; r < s; ++r) y(r) = u(rng);
    sys.y.push_back(y);
  }
  return sys;
}

}  // namespace

TEST_CASE("two-block forward substitution solves the worked example") {
  BlockTriangularSystem sys;
  sys.P = {fixtures::mat(1, 1, {2.0}), fixtures::mat(1, 1, {1.0})};
  sys.sub = {{}, {fixtures::mat(1, 1, {1.0})}};
  sys.y = {fixtures::vec({4.0}), fixtures::vec({5.0})};
  auto alpha = solve_block_triangular(sys);
  REQUIRE(alpha.size() == 2);
  CHECK(alpha[0](0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(alpha[1](0) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(stack(alpha).size() == 2);

  MatrixXd dense = assemble_dense(sys);
  CHECK(dense == fixtures::mat(2, 2, {2.0, 0.0, 1.0, 1.0}));
}

TEST_CASE("a singular diagonal block is reported by index") {
  BlockTriangularSystem sys;
  sys.P = {fixtures::mat(1, 1, {1.0}), fixtures::mat(2, 2, {1.0, 2.0, 2.0, 4.0})};
  sys.sub = {{}, {fixtures::mat(2, 1, {0.0, 0.0})}};
  sys.y = {fixtures::vec({1.0}), fixtures::vec({1.0, 2.0})};
  try {
    solve_block_triangular(sys);
    FAIL("expected a singular block error");
  } catch (const SingularBlockError& e) {
    CHECK(e.block_index == 1);
    CHECK(std::string(e.what()).find("singular diagonal block") != std::string::npos);
  }
}

TEST_CASE("dense splitting validates the strictly upper region") {
  MatrixXd m = fixtures::mat(2, 2, {2.0, 0.0, 1.0, 1.0});
  VectorXd y = fixtures::vec({4.0, 5.0});
  BlockTriangularSystem sys = block_triangular_from(m, y, {1, 1});
  REQUIRE(sys.blocks() == 2);
  CHECK(sys.P[0](0, 0) == 2.0);
  CHECK(sys.sub[1][0](0, 0) == 1.0);
  CHECK(assemble_dense(sys) == m);

  MatrixXd bad = fixtures::mat(2, 2, {2.0, 0.5, 1.0, 1.0});
  CHECK_THROWS_AS(block_triangular_from(bad, y, {1, 1}), ValidationError);
  CHECK_THROWS_AS(block_triangular_from(m, y, {1, 2}), ValidationError);
  CHECK_THROWS_AS(block_triangular_from(m, y, {3}), ValidationError);
  CHECK_THROWS_AS(block_triangular_from(m, fixtures::vec({1.0}), {1, 1}), ValidationError);
  CHECK_THROWS_AS(block_triangular_from(MatrixXd::Zero(2, 3), y, {1, 1}), ValidationError);
}

TEST_CASE("forward substitution matches a dense solve on random systems") {
  std::mt19937_64 rng(7);
  std::vector<std::vector<Index>> shapes = {{1, 1}, {2, 1}, {1, 2, 3}, {3, 3}, {2, 2, 2, 2}};
  for (int trial = 0; trial < 40; ++trial) {
    const auto& sizes = shapes[static_cast<size_t>(trial) % shapes.size()];
    BlockTriangularSystem sys = random_system(rng, sizes);
    auto alpha = solve_block_triangular(sys);
    VectorXd stacked = stack(alpha);
    MatrixXd dense = assemble_dense(sys);
    VectorXd y = stack(sys.y);
    VectorXd direct = dense.fullPivLu().solve(y);
    CHECK((stacked - direct).lpNorm<Eigen::Infinity>() < 1e-9);
    CHECK((dense * stacked - y).lpNorm<Eigen::Infinity>() < 1e-9);
  }
}

TEST_CASE("combination counts follow the additive recurrence") {
  CHECK(count_combos(5, 3) == 10);
  CHECK(count_combos(7, 7) == 1);
  CHECK(count_combos(8, 0) == 1);
  CHECK(count_combos(0, 0) == 1);
  // Row-by-row table check against C(m,k) = C(m-1,k-1) + C(m-1,k).
  std::vector<std::vector<std::uint64_t>> pascal(31);
  for (int m = 0; m <= 30; ++m) {
    pascal[static_cast<size_t>(m)].resize(static_cast<size_t>(m) + 1);
    for (int k = 0; k <= m; ++k) {
      std::uint64_t expect =
          (k == 0 || k == m)
              ? 1
              : pascal[static_cast<size_t>(m - 1)][static_cast<size_t>(k - 1)] +
                    pascal[static_cast<size_t>(m - 1)][static_cast<size_t>(k)];
      pascal[static_cast<size_t>(m)][static_cast<size_t>(k)] = expect;
      CHECK(count_combos(m, k) == expect);
    }
  }
  CHECK_THROWS_AS(count_combos(3, 4), ValidationError);
  CHECK_THROWS_AS(count_combos(3, -1), ValidationError);
  CHECK_THROWS_AS(count_combos(70, 35), ComputeError);  // past 64 bits
}

TEST_CASE("overparameterized solve picks the first nonsingular subset") {
  MatrixXd psi = fixtures::mat(2, 3, {1.0, 0.0, 1.0, 0.0, 1.0, 1.0});
  VectorXd y = fixtures::vec({2.0, 3.0});

  SUBCASE("default free coefficients are zero") {
    OverparamResult res = solve_overparam(psi, y);
    REQUIRE(res.status == "found");
    REQUIRE(res.solutions.size() == 1);
    const auto& s = res.solutions[0];
    CHECK(s.chosen == std::vector<Index>({0, 1}));
    CHECK(s.alpha(0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(s.alpha(1) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(s.alpha(2) == 0.0);
    CHECK(s.residual < 1e-12);
    CHECK(res.combos_enumerated == 1);
  }

  SUBCASE("a pinned free coefficient shifts the solved part") {
    OverparamOptions opts;
    opts.free_values[2] = 1.0;
    OverparamResult res = solve_overparam(psi, y, opts);
    REQUIRE(res.status == "found");
    const auto& s = res.solutions[0];
    CHECK(s.alpha(0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(s.alpha(1) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(s.alpha(2) == 1.0);
    CHECK((psi * s.alpha - y).lpNorm<Eigen::Infinity>() < 1e-12);
  }

  SUBCASE("exhaustive mode returns every exact combination") {
    OverparamOptions opts;
    opts.stop_at_first = false;
    OverparamResult res = solve_overparam(psi, y, opts);
    REQUIRE(res.status == "found");
    REQUIRE(res.solutions.size() == 3);
    CHECK(res.combos_enumerated == 3);
    std::set<std::vector<Index>> seen;
    for (const auto& s : res.solutions) {
      seen.insert(s.chosen);
      CHECK((psi * s.alpha - y).lpNorm<Eigen::Infinity>() < 1e-12);
    }
    CHECK(seen == std::set<std::vector<Index>>({{0, 1}, {0, 2}, {1, 2}}));
  }

  SUBCASE("distinct free values give distinct exact solutions") {
    OverparamOptions a, b;
    a.free_values[2] = 0.0;
    b.free_values[2] = 5.0;
    auto ra = solve_overparam(psi, y, a);
    auto rb = solve_overparam(psi, y, b);
    REQUIRE(ra.status == "found");
    REQUIRE(rb.status == "found");
    CHECK((ra.solutions[0].alpha - rb.solutions[0].alpha).norm() > 1e-6);
    CHECK((psi * rb.solutions[0].alpha - y).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("overparameterized solve reports exhaustion honestly") {
  SUBCASE("proportional columns never yield a nonsingular subset") {
    MatrixXd psi = fixtures::mat(2, 2, {1.0, 2.0, 2.0, 4.0});
    VectorXd y = fixtures::vec({1.0, 3.0});
    OverparamResult res = solve_overparam(psi, y);
    CHECK(res.status == "no_nonsingular_combination_in_budget");
    CHECK(res.solutions.empty());
    CHECK(res.combos_enumerated == 1);
  }
  SUBCASE("a zero budget enumerates nothing") {
    MatrixXd psi = fixtures::mat(2, 3, {1.0, 0.0, 1.0, 0.0, 1.0, 1.0});
    OverparamOptions opts;
    opts.max_combos = 0;
    OverparamResult res = solve_overparam(psi, fixtures::vec({2.0, 3.0}), opts);
    CHECK(res.status == "no_nonsingular_combination_in_budget");
    CHECK(res.combos_enumerated == 0);
  }
  SUBCASE("input validation") {
    MatrixXd psi = fixtures::mat(2, 3, {1.0, 0.0, 1.0, 0.0, 1.0, 1.0});
    CHECK_THROWS_AS(solve_overparam(psi, fixtures::vec({1.0})), ValidationError);
    CHECK_THROWS_AS(solve_overparam(fixtures::mat(3, 2, {1, 0, 0, 1, 1, 1}),
                                    fixtures::vec({1.0, 2.0, 3.0})),
                    ValidationError);
    OverparamOptions opts;
    opts.free_values[9] = 1.0;
    CHECK_THROWS_AS(solve_overparam(psi, fixtures::vec({2.0, 3.0}), opts), ValidationError);
  }
}

TEST_CASE("randomized subset order is reproducible per seed") {
  std::mt19937_64 rng(11);
  MatrixXd psi(3, 7);
  for (Index r = 0; r < 3; ++r)
    for (Index c = 0; c < 7; ++c)
      psi(r, c) = static_cast<double>((rng() >> 11)) * 0x1.0p-53 * 2.0 - 1.0;
  VectorXd y = psi * VectorXd::Ones(7);

  OverparamOptions opts;
  opts.random_order = true;
  opts.seed = 42;
  opts.stop_at_first = false;
  opts.max_combos = 20;
  auto first = solve_overparam(psi, y, opts);
  auto second = solve_overparam(psi, y, opts);
  REQUIRE(first.solutions.size() == second.solutions.size());
  CHECK(first.combos_enumerated == second.combos_enumerated);
  for (size_t i = 0; i < first.solutions.size(); ++i) {
    CHECK(first.solutions[i].chosen == second.solutions[i].chosen);
    CHECK(first.solutions[i].alpha == second.solutions[i].alpha);
  }

  opts.seed = 43;
  auto third = solve_overparam(psi, y, opts);
  bool same_order = third.solutions.size() == first.solutions.size();
  if (same_order)
    for (size_t i = 0; i < first.solutions.size(); ++i)
      same_order = same_order && third.solutions[i].chosen == first.solutions[i].chosen;
  CHECK_FALSE(same_order);
}

TEST_CASE("least squares fit covers exact, inconsistent, and wide systems") {
  SUBCASE("square identity") {
    FitResult r = fit_output_layer(MatrixXd::Identity(2, 2), fixtures::vec({5.0, 6.0}));
    CHECK(r.alpha(0) == doctest::Approx(5.0).epsilon(1e-14));
    CHECK(r.alpha(1) == doctest::Approx(6.0).epsilon(1e-14));
    CHECK(r.residual < 1e-13);
    CHECK(r.rank == 2);
  }
  SUBCASE("inconsistent tall system keeps the projection residual") {
    FitResult r = fit_output_layer(fixtures::mat(2, 1, {1.0, 1.0}), fixtures::vec({0.0, 2.0}));
    CHECK(r.alpha(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.residual == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK(r.rank == 1);
  }
  SUBCASE("absolute-value unit activations reproduce their labels") {
    InterpMatrix phi = build_interp_matrix(fixtures::abs_net(), fixtures::abs_data());
    FitResult r = fit_output_layer(phi.values, fixtures::vec({1.0, 0.0, 2.0}));
    CHECK(r.alpha(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.alpha(1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.residual < 1e-12);
  }
  SUBCASE("wide systems take the minimum-norm solution") {
    FitResult r = fit_output_layer(fixtures::mat(1, 2, {1.0, 1.0}), fixtures::vec({2.0}));
    CHECK(r.alpha(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.alpha(1) == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(fit_output_layer(MatrixXd(), fixtures::vec({})), ValidationError);
  CHECK_THROWS_AS(fit_output_layer(MatrixXd::Identity(2, 2), fixtures::vec({1.0})),
                  ValidationError);
}

TEST_CASE("multi-output fits share the factorization and stay per-column") {
  SUBCASE("identity system copies the targets") {
    MatrixXd targets = fixtures::mat(2, 2, {1.0, 9.0, 2.0, 8.0});
    MultiFitResult r = solve_multi_output(MatrixXd::Identity(2, 2), targets);
    CHECK((r.alpha - targets).lpNorm<Eigen::Infinity>() < 1e-13);
    CHECK(r.residuals.lpNorm<Eigen::Infinity>() < 1e-13);
  }
  SUBCASE("identical target columns produce identical coefficients") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    MatrixXd psi(4, 3);
    for (Index r = 0; r < 4; ++r)
      for (Index c = 0; c < 3; ++c) psi(r, c) = u(rng);
    VectorXd t(4);
    for (Index r = 0; r < 4; ++r) t(r) = u(rng);
    MatrixXd targets(4, 2);
    targets.col(0) = t;
    targets.col(1) = t;
    MultiFitResult r = solve_multi_output(psi, targets);
    CHECK((r.alpha.col(0) - r.alpha.col(1)).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(r.residuals(0) == r.residuals(1));
  }
  SUBCASE("the solve is linear in the target") {
    InterpMatrix phi = build_interp_matrix(fixtures::abs_net(), fixtures::abs_data());
    VectorXd y = fixtures::vec({1.0, 0.0, 2.0});
    MatrixXd targets(3, 2);
    targets.col(0) = y;
    targets.col(1) = 2.0 * y;
    MultiFitResult r = solve_multi_output(phi.values, targets);
    CHECK((r.alpha.col(1) - 2.0 * r.alpha.col(0)).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK(r.residuals(1) == doctest::Approx(2.0 * r.residuals(0)).epsilon(1e-10));
  }
  CHECK_THROWS_AS(solve_multi_output(MatrixXd::Identity(2, 2), MatrixXd::Zero(3, 1)),
                  ValidationError);
}

TEST_CASE("constrained hyperplane realization in the graph space") {
  SUBCASE("a single point with identity functionals has the minimum-norm answer") {
    LowDimConstraint c;
    c.x0 = fixtures::vec({1.0, 1.0});
    c.W_out = MatrixXd::Identity(2, 2);
    LowDimResult r = solve_lowdim(c);
    REQUIRE(r.feasible);
    CHECK(r.alpha(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r.alpha(1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r.residual < 1e-12);
    CHECK(r.rank_system == 1);
    CHECK(r.rank_augmented == 1);
  }
  SUBCASE("a vertical direction can never lie in the realized hyperplane") {
    LowDimConstraint c;
    c.x0 = fixtures::vec({1.0, 1.0});
    c.lambdas = {fixtures::vec({0.0, 1.0})};
    c.W_out = MatrixXd::Identity(2, 2);
    LowDimResult r = solve_lowdim(c);
    CHECK_FALSE(r.feasible);
    CHECK(r.rank_augmented > r.rank_system);
  }
  SUBCASE("feasible solutions satisfy the containment equations") {
    LowDimConstraint c;
    c.x0 = fixtures::vec({0.5, -1.0, 2.0});
    c.lambdas = {fixtures::vec({1.0, 1.0, 0.5})};
    c.W_out = fixtures::mat(3, 3, {1.0, 0.0, 0.2, 0.0, 1.0, -0.3, 0.1, 0.0, 1.0});
    LowDimResult r = solve_lowdim(c);
    REQUIRE(r.feasible);
    VectorXd wb = c.W_out * r.alpha;  // (w', b)
    VectorXd w(3);
    w << wb(0), wb(1), c.w_last;
    double b = wb(2);
    CHECK(std::abs(w.dot(c.lambdas[0])) < 1e-10);
    CHECK(std::abs(w.head(2).dot(c.x0.head(2)) + c.w_last * c.x0(2) + b) < 1e-10);
  }
  SUBCASE("validation") {
    LowDimConstraint c;
    c.x0 = fixtures::vec({1.0});
    c.W_out = MatrixXd::Identity(1, 1);
    CHECK_THROWS_AS(solve_lowdim(c), ValidationError);
    c.x0 = fixtures::vec({1.0, 1.0});
    c.W_out = MatrixXd::Identity(2, 2);
    c.w_last = 0.0;
    CHECK_THROWS_AS(solve_lowdim(c), ValidationError);
    c.w_last = -1.0;
    c.lambdas = {fixtures::vec({1.0, 0.0}), fixtures::vec({0.0, 1.0})};
    CHECK_THROWS_AS(solve_lowdim(c), ValidationError);  // needs k+1 <= nu
  }
}

TEST_CASE("generated fixtures are block triangular and exactly solvable") {
  for (int dim : {1, 2}) {
    for (int subdomains : {1, 2, 3, 4}) {
      for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        DistinguishableFixture fx = make_distinguishable_fixture(dim, subdomains, seed);
        const Index group = dim + 1;
        const Index total = static_cast<Index>(subdomains) * group;
        REQUIRE(fx.phi.rows() == total);
        REQUIRE(fx.phi.cols() == total);
        REQUIRE(fx.net.layers.size() == 2);
        CHECK(fx.net.layers[0].units() == total);
        CHECK(static_cast<Index>(fx.data.size()) == total);
        CHECK(assemble_dense(fx.system) == fx.phi);

        // Upper blocks vanish exactly and diagonals are nonsingular.
        for (int j = 0; j < fx.system.blocks(); ++j) {
          CHECK_FALSE(rank_and_singularity(fx.system.P[static_cast<size_t>(j)]).singular);
          for (int i = j + 1; i < fx.system.blocks(); ++i) {
            MatrixXd upper = fx.phi.block(j * group, i * group, group, group);
            CHECK(upper.lpNorm<Eigen::Infinity>() == 0.0);
          }
        }

        auto alpha = solve_block_triangular(fx.system);
        VectorXd stacked = stack(alpha);
        CHECK((fx.phi * stacked - fx.y).lpNorm<Eigen::Infinity>() < 1e-8);
        VectorXd direct = fx.phi.fullPivLu().solve(fx.y);
        CHECK((stacked - direct).lpNorm<Eigen::Infinity>() < 1e-8);
      }
    }
  }
  CHECK_THROWS_AS(make_distinguishable_fixture(3, 2, 1), ValidationError);
  CHECK_THROWS_AS(make_distinguishable_fixture(1, 0, 1), ValidationError);
}
