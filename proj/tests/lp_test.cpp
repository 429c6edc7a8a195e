#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "napv/lp.hpp"
#include "oracle/rational_lp.hpp"

using napv::LinearConstraint;
using napv::LinearProgram;
using napv::Relation;

namespace {

LinearProgram random_integer_system(std::mt19937_64& rng, std::size_t vars, std::size_t rows, bool boxed) {
    std::uniform_int_distribution<int> coef(-10, 10);
    std::uniform_int_distribution<int> rel(0, 5);
    LinearProgram lp(vars);
    if (boxed) {
        for (auto& b : lp.bounds) b = {-1.0, 1.0};
    }
    while (lp.constraints.size() < rows) {
        std::vector<napv::LinearTerm> terms;
        for (std::size_t j = 0; j < vars; ++j) terms.push_back({j, static_cast<double>(coef(rng))});
        const int r = rel(rng);
        const Relation relation = r < 3 ? Relation::less_equal : (r < 5 ? Relation::greater_equal : Relation::equal);
        LinearConstraint c(terms, relation, static_cast<double>(coef(rng)));
        if (c.terms.empty()) continue;
        lp.add(std::move(c));
    }
    return lp;
}

} // namespace

TEST(Lp, ContradictoryBounds) {
    LinearProgram lp(1);
    lp.add({{{0, 1.0}}, Relation::greater_equal, 1.0});
    lp.add({{{0, 1.0}}, Relation::less_equal, 0.0});
    EXPECT_FALSE(napv::solve_feasibility(lp).feasible());
}

TEST(Lp, SimpleFeasible) {
    LinearProgram lp(2);
    lp.add({{{0, 1.0}, {1, 1.0}}, Relation::less_equal, 1.0});
    lp.add({{{0, 1.0}}, Relation::greater_equal, 0.0});
    lp.add({{{1, 1.0}}, Relation::greater_equal, 0.0});
    const auto r = napv::solve_feasibility(lp);
    ASSERT_TRUE(r.feasible());
    EXPECT_LE(lp.max_violation(r.point), 1e-7);
}

TEST(Lp, CornerOnlySystem) {
    LinearProgram lp(2);
    lp.bounds = {{0.0, 0.3}, {0.0, 0.3}};
    lp.add({{{0, 0.1}, {1, -0.6}}, Relation::greater_equal, 0.0});
    lp.add({{{0, 4.2}, {1, -4.2}}, Relation::less_equal, 0.0});
    const auto r = napv::solve_feasibility(lp);
    ASSERT_TRUE(r.feasible());
    EXPECT_LE(std::max(std::abs(r.point[0]), std::abs(r.point[1])), 1e-7);
    EXPECT_TRUE(oracle::feasible(lp));
}

TEST(Lp, EqualityIsHonored) {
    LinearProgram lp(2);
    lp.add({{{0, 1.0}, {1, -2.0}}, Relation::equal, 3.0});
    lp.add({{{0, 1.0}}, Relation::less_equal, 1.0});
    const auto r = napv::solve_feasibility(lp);
    ASSERT_TRUE(r.feasible());
    EXPECT_NEAR(r.point[0] - 2.0 * r.point[1], 3.0, 1e-7);
    EXPECT_LE(r.point[0], 1.0 + 1e-7);
}

TEST(Lp, FreeAndUpperBoundedVariables) {
    LinearProgram lp;
    const auto x = lp.add_variable();
    const auto y = lp.add_variable(std::nullopt, -2.0);
    lp.add({{{x, 1.0}, {y, 1.0}}, Relation::greater_equal, 5.0});
    const auto r = napv::solve_feasibility(lp);
    ASSERT_TRUE(r.feasible());
    EXPECT_LE(r.point[y], -2.0);
    EXPECT_GE(r.point[x] + r.point[y], 5.0 - 1e-7);
}

TEST(Lp, ConstraintMergesTerms) {
    const LinearConstraint c({{2, 1.0}, {0, 3.0}, {2, -1.0}}, Relation::less_equal, 1.0);
    ASSERT_EQ(c.terms.size(), 1u);
    EXPECT_EQ(c.terms[0].variable, 0u);
}

TEST(Lp, Validation) {
    LinearProgram lp(1);
    lp.add({{{3, 1.0}}, Relation::less_equal, 0.0});
    EXPECT_THROW((void)napv::solve_feasibility(lp), napv::ValidationError);

    LinearProgram zero(1);
    zero.add({{{0, 0.0}}, Relation::less_equal, 0.0});
    EXPECT_THROW((void)napv::solve_feasibility(zero), napv::ValidationError);

    LinearProgram crossed(1);
    crossed.bounds[0] = {1.0, 0.0};
    EXPECT_THROW((void)napv::solve_feasibility(crossed), napv::ValidationError);
}

TEST(Lp, IterationCapReportsInstability) {
    LinearProgram lp(2);
    lp.add({{{0, 1.0}, {1, 1.0}}, Relation::greater_equal, 1.0});
    napv::SolverOptions opts;
    opts.iteration_factor = 0;
    EXPECT_THROW((void)napv::solve_feasibility(lp, opts), napv::LpInstabilityError);
}

TEST(Lp, TableauDump) {
    LinearProgram lp(2);
    lp.add({{{0, 1.0}, {1, 1.0}}, Relation::greater_equal, 1.0});
    std::ostringstream dump;
    napv::SolverOptions opts;
    opts.tableau_dump = &dump;
    ASSERT_TRUE(napv::solve_feasibility(lp, opts).feasible());
    EXPECT_EQ(dump.str().rfind("basis,c0", 0), 0u);
    EXPECT_NE(dump.str().find("\nobj,"), std::string::npos);
}

TEST(LpProperty, AgreesWithRationalOracle) {
    std::mt19937_64 rng(2024);
    std::size_t feasible = 0;
    std::size_t infeasible = 0;
    std::size_t disagreements = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto lp = random_integer_system(rng, 5, 10, trial % 2 == 1);
        const bool expected = oracle::feasible(lp);
        (expected ? feasible : infeasible) += 1;
        try {
            const auto r = napv::solve_feasibility(lp);
            if (r.feasible() != expected) {
                ++disagreements;
                ADD_FAILURE() << "trial " << trial << ": oracle says " << expected;
            }
            if (r.feasible()) { EXPECT_LE(lp.max_violation(r.point), 1e-7); }
        } catch (const napv::LpInstabilityError& e) {
            ++disagreements;
            ADD_FAILURE() << "trial " << trial << ": " << e.what();
        }
    }
    EXPECT_EQ(disagreements, 0u);
    // both outcomes must be exercised
    EXPECT_GT(feasible, 100u);
    EXPECT_GT(infeasible, 100u);
}

TEST(LpProperty, PositiveScalingKeepsStatus) {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> log_scale(-4.0, 4.0);
    for (int trial = 0; trial < 300; ++trial) {
        const auto lp = random_integer_system(rng, 5, 10, trial % 2 == 0);
        auto scaled = lp;
        for (auto& c : scaled.constraints) {
            const double s = std::pow(10.0, log_scale(rng));
            c.rhs *= s;
            for (auto& t : c.terms) t.coefficient *= s;
        }
        EXPECT_EQ(napv::solve_feasibility(lp).feasible(), napv::solve_feasibility(scaled).feasible()) << trial;
    }
}

TEST(Oracle, SolvesSmallOptimum) {
    // max x + y s.t. x + 2y <= 4, 3x + y <= 6
    oracle::QProgram p;
    p.vars = 2;
    p.add_row({1, 2}, 4);
    p.add_row({3, 1}, 6);
    p.objective = {1, 1};
    const auto r = oracle::solve(p);
    ASSERT_TRUE(r.feasible);
    EXPECT_EQ(r.optimum, oracle::Q(14, 5));
    // infeasible: x <= -1 with x >= 0
    oracle::QProgram q;
    q.vars = 1;
    q.add_row({1}, -1);
    EXPECT_FALSE(oracle::solve(q).feasible);
}
