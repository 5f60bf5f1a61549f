#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "emel/experiments.hpp"
#include "emel/fd_oracle.hpp"

using namespace emel;

namespace {

ProblemSpec constant_state() {
    ProblemSpec s;
    s.h0_1 = SpatialField::fourier(0.7, {}, {});
    s.h0_2 = SpatialField::fourier(-0.2, {}, {});
    s.T = 0.5;
    return s;
}

ProblemSpec zero_with_jumps() {
    ProblemSpec s;
    s.r = PiecewiseCoefficient({0.25, 0.75}, {{1.0}, {0.5}, {1.0}});
    s.nu = PiecewiseCoefficient({0.5}, {{1.0}, {1.5}});
    s.T = 0.5;
    return s;
}

double dt_for(const ProblemSpec& s, int cells, double factor = 0.5) {
    double numax = 0.0;
    for (int i = 0; i < 1024; ++i) numax = std::max(numax, s.nu((i + 0.5) / 1024.0));
    return factor / (cells * numax);
}

}  // namespace

TEST(ParallelMap, OrderedAndPropagatesErrors) {
    const auto v = parallel_map<int>(10, 3, [](std::size_t i) { return static_cast<int>(i * i); });
    for (int i = 0; i < 10; ++i) EXPECT_EQ(v[i], i * i);
    EXPECT_THROW(parallel_map<int>(4, 2,
                                   [](std::size_t i) -> int {
                                       if (i == 2) throw SolverError("boom", 0.0);
                                       return 0;
                                   }),
                 SolverError);
}

TEST(Convergence, ConstantStateHasZeroDifferences) {
    const ConvergenceStudy s = convergence_study(constant_state(), {4, 8, 16}, IntegratorConfig{});
    for (const auto& r : s.rows) {
        EXPECT_LE(r.d_V2, 1e-12);
        EXPECT_LE(r.d_W11, 1e-12);
    }
}

TEST(Convergence, SmoothInstanceIsCauchy) {
    ProblemSpec s;
    s.p = 1.0;
    s.r = PiecewiseCoefficient({}, {{1.0, 0.5, -0.5}});
    s.h0_1 = SpatialField::fourier(0.1, {0.5, 0.2}, {0.1});
    s.u1 = SpatialField::fourier(0.0, {}, {0.3});
    s.T = 0.5;
    EXPECT_TRUE(convergence_study(s, {8, 16, 32}, IntegratorConfig{}).strictly_decreasing);
}

TEST(Convergence, DiscontinuousInstanceIsCauchy) {
    const ConvergenceStudy s = convergence_study(discontinuous_instance(0), {8, 16, 32}, IntegratorConfig{}, 2);
    ASSERT_EQ(s.rows.size(), 2u);
    EXPECT_TRUE(s.strictly_decreasing);
}

TEST(Convergence, RejectsBadLists) {
    EXPECT_THROW(convergence_study(constant_state(), {8}, IntegratorConfig{}), ValidationError);
    EXPECT_THROW(convergence_study(constant_state(), {16, 8}, IntegratorConfig{}), ValidationError);
}

TEST(Stability, LadderMagnitudesDecrease) {
    StabilityLadder l;
    l.base = constant_state();
    for (int m = 1; m < 4; ++m) EXPECT_LT(l.magnitude(m + 1), l.magnitude(m));
    EXPECT_THROW(parse_target("nu"), ValidationError);
    for (const char* t : {"r", "j", "f", "h0", "u0", "u1"}) EXPECT_EQ(target_name(parse_target(t)), t);
}

TEST(Stability, ZeroPerturbationGivesZero) {
    const ProblemSpec base = discontinuous_instance(0);
    const Trajectory tb = solve(base, 8, IntegratorConfig{});
    const StabilityRung r = stability_measure(base, tb, base, tb);
    EXPECT_EQ(r.lhs, 0.0);
    EXPECT_EQ(r.rhs, 0.0);
}

TEST(Stability, ShiftedViscosityLadder) {
    StabilityLadder l;
    l.base = discontinuous_instance(0);
    l.target = PerturbTarget::R;
    const StabilityReport rep = stability_experiment(l, 8, IntegratorConfig{});
    ASSERT_EQ(rep.rungs.size(), 4u);
    EXPECT_TRUE(rep.discontinuous_base);
    EXPECT_TRUE(rep.decreasing);
    EXPECT_TRUE(rep.bounded);
}

TEST(Stability, InitialDataLadderIsBoundedByItsRhs) {
    StabilityLadder l;
    l.base = discontinuous_instance(1);
    l.target = PerturbTarget::H0;
    const StabilityReport rep = stability_experiment(l, 8, IntegratorConfig{});
    for (const auto& r : rep.rungs) EXPECT_LE(r.lhs, 8.0 * r.rhs);
    EXPECT_TRUE(rep.decreasing);
    EXPECT_LE(rep.ratio_spread, 2.0);
}

TEST(Uniqueness, ZeroData) {
    IntegratorConfig a, b;
    b.scheme = "esdirk324";
    ProblemSpec s;
    s.T = 0.5;
    const UniquenessResult r = uniqueness_crosscheck(s, a, b, 8);
    EXPECT_EQ(r.difference.V2, 0.0);
    EXPECT_TRUE(r.pass);
}

TEST(Uniqueness, ToleranceLadderOnManufacturedCase) {
    IntegratorConfig a, b;
    a.rel_tol = 1e-8;
    b.rel_tol = 1e-10;
    b.abs_tol = 1e-12;
    const ProblemSpec s = manufactured_problem(manufactured_case("wave"));
    const UniquenessResult r = uniqueness_crosscheck(s, a, b, 16);
    EXPECT_LE(r.difference.V2, 1e-6);
    EXPECT_LE(r.difference.W11, 1e-6);
}

TEST(Uniqueness, SchemesAgreeOnDiscontinuousInstance) {
    IntegratorConfig a, b;
    b.scheme = "esdirk324";
    const UniquenessResult r = uniqueness_crosscheck(discontinuous_instance(1), a, b, 16);
    EXPECT_TRUE(r.pass) << r.difference.V2 << " " << r.difference.W11 << " bound " << r.bound;
}

TEST(RandomInstance, DeterministicAndValid) {
    for (int m : {0, 1, 2}) {
        const ProblemSpec a = random_instance(42, m), b = random_instance(42, m);
        EXPECT_NO_THROW(validate(a));
        EXPECT_EQ(a.p, b.p);
        EXPECT_EQ(a.r.breakpoints(), b.r.breakpoints());
        EXPECT_EQ(static_cast<int>(a.r.breakpoints().size()), m);
        for (double z : a.r.breakpoints()) EXPECT_EQ(z * 64.0, std::round(z * 64.0));
        const Bounds br = verify_bounds(a.r), bn = verify_bounds(a.nu);
        EXPECT_GE(br.min, 0.5);
        EXPECT_LE(br.max, 2.0);
        EXPECT_GE(bn.min, 0.5);
        EXPECT_LE(bn.max, 2.0);
    }
    EXPECT_NE(random_instance(1, 1).p, random_instance(2, 1).p);
}

TEST(FdOracle, ZeroAndConstantStates) {
    const FdSolution z = fd_oracle(zero_with_jumps(), 64, 0.005);
    for (std::size_t i = 0; i < z.z.size(); ++i) {
        EXPECT_EQ(z.h1[i], 0.0);
        EXPECT_EQ(z.u[i], 0.0);
    }
    const ProblemSpec c = constant_state();
    const FdSolution s = fd_oracle(c, 64, 0.005);
    for (std::size_t i = 0; i < s.z.size(); ++i) {
        EXPECT_NEAR(s.h1[i], 0.7, 1e-12);
        EXPECT_NEAR(s.h2[i], -0.2, 1e-12);
        EXPECT_NEAR(s.u[i], 0.0, 1e-12);
        EXPECT_NEAR(s.ut[i], 0.0, 1e-12);
    }
}

TEST(FdOracle, PreconditionsAreChecked) {
    const ProblemSpec s = discontinuous_instance(2);  // jump at 3/8
    EXPECT_THROW(fd_oracle(s, 100, 1e-4), ValidationError);
    EXPECT_THROW(fd_oracle(s, 64, 0.1), ValidationError);  // CFL
    EXPECT_NO_THROW(fd_oracle(s, 64, dt_for(s, 64)));
}

TEST(FdOracle, AgreesWithSpectralSolutionAndConverges) {
    IntegratorConfig tight;
    tight.rel_tol = 1e-10;
    tight.abs_tol = 1e-12;
    const ProblemSpec s = manufactured_problem(manufactured_case("wave"));
    const Trajectory tr = solve(s, 32, tight);
    const SpectralState end = dense_eval(tr, s.T);
    const auto d128 = oracle_discrepancy(end, 32, fd_oracle(s, 128, dt_for(s, 128)));
    const auto d256 = oracle_discrepancy(end, 32, fd_oracle(s, 256, dt_for(s, 256)));
    EXPECT_LE(d256.max(), 1e-3);
    EXPECT_LT(d256.max(), 1.2 * d128.max());
    // second order: halving dz cuts the FD error by about four
    EXPECT_LT(d256.max(), 0.4 * d128.max());
}
