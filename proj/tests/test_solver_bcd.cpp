#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace sblr;
using namespace sblr::testutil;

TEST(SolverBcdTest, BlockResidualHandValues)
{
    Matrix factor = Matrix::Constant(1, 1, 1.0);
    Matrix grad = Matrix::Constant(1, 1, 0.2);
    // positive entry: g + l2*x + l1 = 0.2 + 0.1 + 0.05, intercept adds 0.1
    const double expected = std::sqrt(0.35 * 0.35 + 0.1 * 0.1);
    EXPECT_NEAR(block_optimality_residual(factor, grad, 0.1, 0.05, 0.1), expected, 1e-15);

    // zero entry inside the l1 band contributes nothing
    EXPECT_DOUBLE_EQ(
        block_optimality_residual(Matrix::Zero(1, 1), Matrix::Constant(1, 1, 0.3), 0.0, 0.5, 0.0),
        0.0);
    EXPECT_THROW(block_optimality_residual(Matrix::Zero(2, 1), Matrix::Zero(1, 1), 0.0, 0.0, 0.0),
                 std::invalid_argument);
}

TEST(SolverBcdTest, SolveUBlockWithZeroVKillsUAndSolvesIntercept)
{
    Dataset data = random_instance(12, 3, 4, 5);
    data.labels = {1, 1, 1, 1, 1, 1, 1, 1, -1, -1, -1, -1};
    const Matrix vFixed = Matrix::Zero(4, 1);
    const Matrix uStart = Matrix::Constant(3, 1, 0.37);
    const RegConfig reg{0.1, 0.0, 0.1, 0.0, 1};
    const InnerSolverConfig inner{1e-10, 5000, true};

    const BlockSolveResult result = solve_u_block(data, vFixed, uStart, 0.0, reg, inner);
    EXPECT_TRUE(result.factor.isZero(0.0));

    ModelParams zeroFactors = make_model_params(Matrix::Zero(3, 1), vFixed, 0.0);
    const double bStar = newton_intercept(zeroFactors, data);
    EXPECT_NEAR(result.intercept, bStar, 1e-6);
}

TEST(SolverBcdTest, SolveVBlockMirrorsTheZeroCase)
{
    Dataset data = random_instance(10, 3, 3, 7);
    const Matrix uFixed = Matrix::Zero(3, 1);
    const RegConfig reg{0.1, 0.0, 0.1, 0.0, 1};
    const InnerSolverConfig inner{1e-10, 5000, true};

    const BlockSolveResult result =
        solve_v_block(data, uFixed, Matrix::Constant(3, 1, -0.8), 0.0, reg, inner);
    EXPECT_TRUE(result.factor.isZero(0.0));
}

TEST(SolverBcdTest, SolveUBlockBeatsGridOracleOnTinyInstance)
{
    const Dataset data = random_instance(4, 2, 2, 9);
    const RegConfig reg{0.0, 0.0, 0.0, 0.0, 1};
    const InnerSolverConfig inner{1e-9, 4000, true};
    const ModelParams start = init_params(data, 1);

    const BlockSolveResult result = solve_u_block(data, start.V, start.U, start.b, reg, inner);
    const double solved =
        loss(make_model_params(result.factor, start.V, result.intercept), data);

    // dense search over the plane spanned by the gradient directions at the start
    LossGradient g;
    loss_and_gradients(start, data, g);
    Matrix dir = g.gU.norm() > 0.0 ? Matrix(g.gU / g.gU.norm()) : Matrix::Ones(2, 1);
    double best = std::numeric_limits<double>::infinity();
    for (int a = -60; a <= 60; ++a) {
        for (int c = -60; c <= 60; ++c) {
            const Matrix u = start.U + 0.25 * a * dir;
            const double b = start.b + 0.25 * c;
            best = std::min(best, loss(make_model_params(u, start.V, b), data));
        }
    }
    EXPECT_LE(solved, best + 1e-3);
}

TEST(SolverBcdTest, SolveBlockMeetsResidualContract)
{
    for (std::uint64_t seed = 50; seed < 56; ++seed) {
        const Dataset data = random_instance(10, 4, 3, seed);
        const RegConfig reg{0.05, 0.3, 0.05, 0.3, 2};
        const InnerSolverConfig inner;
        const ModelParams start = init_params(data, 2);

        const BlockSolveResult result =
            solve_u_block(data, start.V, start.U, start.b, reg, inner);

        LossGradient g;
        loss_and_gradients(make_model_params(result.factor, start.V, result.intercept), data, g);
        const double gradNorm = std::sqrt(g.gU.squaredNorm() + g.gb * g.gb);
        const double residual =
            block_optimality_residual(result.factor, g.gU, g.gb, reg.mu1, reg.mu2);
        EXPECT_LE(residual, 10.0 * inner.innerTol * (1.0 + gradNorm));
    }
}

TEST(SolverBcdTest, InnerIterationsAreMonotoneInBlockObjective)
{
    const Dataset data = random_instance(14, 4, 4, 61);
    const RegConfig reg{0.1, 0.1, 0.1, 0.1, 1};
    const ModelParams start = init_params(data, 1);

    // the block solve must never return anything worse than its warm start
    for (const bool accel : {true, false}) {
        const InnerSolverConfig inner{1e-8, 500, accel};
        const BlockSolveResult result =
            solve_u_block(data, start.V, start.U, start.b, reg, inner);
        const double before = loss(start, data) + elastic_net(start.U, reg.mu1, reg.mu2);
        const double after =
            loss(make_model_params(result.factor, start.V, result.intercept), data) +
            elastic_net(result.factor, reg.mu1, reg.mu2);
        EXPECT_LE(after, before + 1e-12);
    }
}

TEST(SolverBcdTest, FitBcdRequiresInnerTolBelowOuterTol)
{
    const Dataset data = random_instance(8, 3, 3, 63);
    BcdConfig config;
    config.outer.reg.rank = 1;
    config.inner.innerTol = config.outer.tol;
    EXPECT_THROW(fit_bcd(data, config), std::invalid_argument);
}

TEST(SolverBcdTest, FitBcdConvergesWithMonotoneObjective)
{
    const Dataset data = generate_synthetic(30, 6, 6, 1.0, RngSpec{65});
    BcdConfig config;
    config.outer.reg = RegConfig{0.1, 0.5, 0.1, 0.5, 1};

    const FitReport report = fit_bcd(data, config);
    EXPECT_EQ(report.terminationReason, TerminationReason::ToleranceReached);
    EXPECT_LE(report.trace.back().relErr, config.outer.tol);
    for (std::size_t i = 1; i < report.trace.size(); ++i) {
        EXPECT_LE(report.trace[i].objective, report.trace[i - 1].objective + 1e-12);
    }
}

TEST(SolverBcdTest, FitBcdAgreesWithProxDescentAtConvergence)
{
    const Dataset data = generate_synthetic(40, 8, 8, 1.0, RngSpec{67});
    SolverConfig outer;
    outer.reg = RegConfig{0.1, 1.0, 0.1, 1.0, 1};
    outer.tol = 1e-4;
    outer.maxIter = 500;

    const FitReport bcpd = fit(data, outer);
    const FitReport bcd = fit_bcd(data, BcdConfig{outer, {}});
    EXPECT_EQ(bcpd.terminationReason, TerminationReason::ToleranceReached);
    EXPECT_EQ(bcd.terminationReason, TerminationReason::ToleranceReached);
    EXPECT_LT(rel_err(bcpd.trace.back().objective, bcd.trace.back().objective), 1e-2);
}

TEST(SolverBcdTest, FitBcdZeroIterationsGivesInitializationRecordOnly)
{
    const Dataset data = random_instance(6, 3, 3, 69);
    BcdConfig config;
    config.outer.reg.rank = 1;
    config.outer.maxIter = 0;
    const FitReport report = fit_bcd(data, config);
    EXPECT_EQ(report.trace.size(), 1u);
    EXPECT_EQ(report.trace.front().k, 0);
    EXPECT_EQ(report.totalIters, 0);
}

TEST(SolverBcdTest, FitBcdIsDeterministic)
{
    const Dataset data = generate_synthetic(20, 5, 4, 1.0, RngSpec{71});
    BcdConfig config;
    config.outer.reg = RegConfig{0.05, 0.2, 0.05, 0.2, 1};
    const FitReport a = fit_bcd(data, config);
    const FitReport c = fit_bcd(data, config);
    ASSERT_EQ(a.trace.size(), c.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
        EXPECT_EQ(a.trace[i].objective, c.trace[i].objective);
    }
    EXPECT_EQ(a.params.U, c.params.U);
    EXPECT_EQ(a.params.V, c.params.V);
    EXPECT_EQ(a.params.b, c.params.b);
}
