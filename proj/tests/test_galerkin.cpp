#include <gtest/gtest.h>

#include <random>

#include "emel/galerkin.hpp"

using namespace emel;

namespace {

constexpr double pi = std::numbers::pi;

ForcingField separable(double (*time)(double), SpatialField space) { return ForcingField({{time, std::move(space), json()}}); }

ProblemSpec discontinuous_spec() {
    ProblemSpec s;
    s.p = 1.3;
    s.r = PiecewiseCoefficient({0.3, 0.7}, {{1.0}, {2.0, 0.5}, {0.7}});
    s.nu = PiecewiseCoefficient({0.5}, {{1.5}, {0.8}});
    s.j1 = separable([](double t) { return std::cos(t); }, SpatialField::from_coefficient(PiecewiseCoefficient({0.4}, {{0.3}, {-0.2, 1.0}})));
    s.j2 = separable([](double t) { return 1.0 + t; }, SpatialField::fourier(0.1, {0.2}, {0.0, -0.3}));
    s.f = separable([](double t) { return std::exp(-t); }, SpatialField::fourier(0.5, {0.0, 1.0}, {0.4}));
    s.T = 1.0;
    return s;
}

SpectralState random_state(int n, std::mt19937_64& rng, double t = 0.37) {
    std::normal_distribution<double> nd;
    SpectralState s = SpectralState::zero(n, t);
    for (int k = 0; k < n; ++k) {
        const double damp = 1.0 / (1.0 + k);
        s.a1[k] = nd(rng) * damp;
        s.a2[k] = nd(rng) * damp;
        s.b[k] = nd(rng) * damp;
        s.bdot[k] = nd(rng) * damp;
    }
    return s;
}

// Midpoint rule on a fine uniform grid aligned with every breakpoint used below.
template <class F>
double fine_integral(F&& f, int M = 200000) {
    double s = 0.0;
    for (int i = 0; i < M; ++i) s += f((i + 0.5) / M);
    return s / M;
}

}  // namespace

TEST(Problem, Validation) {
    ProblemSpec s;
    s.p = -1.0;
    try {
        validate(s);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("positivity hypothesis"), std::string::npos);
    }
    s.p = 0.0;
    EXPECT_THROW(validate(s), ValidationError);
    s.allow_zero_p = true;
    EXPECT_NO_THROW(validate(s));
    s.p = 1.0;
    s.r = PiecewiseCoefficient({0.5}, {{1.0}, {-0.1}});
    EXPECT_THROW(validate(s), ValidationError);
    s.r = PiecewiseCoefficient::constant(1.0);
    s.T = 0.0;
    EXPECT_THROW(validate(s), ValidationError);
}

TEST(Problem, FromJson) {
    auto doc = json::parse(R"({"p":2,"T":0.5,"r":{"breakpoints":[0.5],"pieces":[[1],[2]]},
        "h0_1":{"fourier":{"cos":[1.0]}},
        "j1":{"terms":[{"time":{"kind":"poly","params":[1]},"space":{"pieces":[[0.5]]}}]}})");
    auto s = problem_from_json(doc);
    EXPECT_EQ(s.p, 2.0);
    EXPECT_EQ(s.T, 0.5);
    EXPECT_EQ(s.r(0.75), 2.0);
    EXPECT_NEAR(s.h0_1(0.0), 1.0, 1e-15);
    EXPECT_EQ(s.j1(0.0, 0.2), 0.5);
    EXPECT_EQ(s.coefficient_jumps(), (std::vector<double>{0.0, 0.5}));
    EXPECT_THROW(problem_from_json(json::parse(R"({"p":-1,"T":1})")), ValidationError);
    EXPECT_THROW(problem_from_json(json::parse(R"({"T":1})")), ValidationError);
}

TEST(State, PackRoundTrip) {
    std::mt19937_64 rng(1);
    auto s = random_state(6, rng);
    auto u = SpectralState::unpack(s.pack(), s.t);
    EXPECT_EQ(u.a1, s.a1);
    EXPECT_EQ(u.bdot, s.bdot);
    EXPECT_TRUE(u.finite());
}

TEST(InitState, Examples) {
    ProblemSpec s;
    s.h0_1 = SpatialField::fourier(0.0, {1.0}, {});
    auto basis = build_basis(5);
    auto grid = grid_for(s, 5);
    auto st = init_state(s, basis, grid);
    EXPECT_NEAR(st.a1[1], 1.0 / std::sqrt(2.0), 1e-14);
    EXPECT_NEAR(st.a1[0], 0.0, 1e-15);
    EXPECT_LE(st.a2.norm() + st.b.norm() + st.bdot.norm(), 0.0);
    s = ProblemSpec{};
    s.u1 = SpatialField::from_coefficient(PiecewiseCoefficient::constant(1.0));
    auto st2 = init_state(s, basis, grid);
    EXPECT_NEAR(st2.bdot[0], 1.0, 1e-14);
    EXPECT_LE(st2.bdot.tail(4).norm(), 1e-14);
}

TEST(Rhs, ZeroAndConstantStates) {
    ProblemSpec s;
    s.r = PiecewiseCoefficient({0.5}, {{1.0}, {2.0}});
    auto basis = build_basis(9);
    auto grid = grid_for(s, 9);
    auto d0 = rhs(SpectralState::zero(9), s, basis, grid);
    EXPECT_EQ(d0.pack().norm(), 0.0);
    auto c = SpectralState::zero(9);
    c.a1[0] = 0.8;
    c.a2[0] = -1.7;
    auto dc = rhs(c, s, basis, grid);
    EXPECT_LE(dc.pack().lpNorm<Eigen::Infinity>(), 1e-13);
}

TEST(Rhs, SingleModeInnerProducts) {
    ProblemSpec s;
    const int n = 7;
    auto basis = build_basis(n);
    auto grid = grid_for(s, n);
    auto st = SpectralState::zero(n);
    st.a1[1] = 1.0 / std::sqrt(2.0);  // h1 = cos 2 pi z
    auto d = rhs(st, s, basis, grid);
    for (int k = 0; k < n; ++k) {
        const double oracle_h = fine_integral([&](double z) { return 2 * pi * std::sin(2 * pi * z) * basis.derivative(k, z); });
        const double oracle_u = fine_integral([&](double z) {
            const double c = std::cos(2 * pi * z);
            return c * c * basis.derivative(k, z);
        });
        EXPECT_NEAR(d.a1[k], oracle_h, 1e-8);
        EXPECT_NEAR(d.bdot[k], oracle_u, 1e-8);
    }
    EXPECT_NEAR(d.a1[1], -4 * pi * pi / std::sqrt(2.0), 1e-11);
    // cos^2 2 pi z = 1/2 + 1/2 cos 4 pi z pairs only with the derivative of sqrt2 sin 4 pi z
    EXPECT_NEAR(d.bdot[4], std::sqrt(2.0) * pi, 1e-12);
    for (int k = 0; k < n; ++k)
        if (k != 4) {
            EXPECT_NEAR(d.bdot[k], 0.0, 1e-12);
        }
}

TEST(Rhs, SplitOperatorMatchesNodalAssembly) {
    auto s = discontinuous_spec();
    const int n = 13;
    auto basis = build_basis(n);
    GalerkinSystem sys(s, basis, grid_for(s, n));
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 5; ++trial) {
        auto st = random_state(n, rng, 0.1 * trial);
        Vector a = sys(st.t, st.pack());
        Vector b = sys.rhs_nodal(st).pack();
        EXPECT_LE((a - b).lpNorm<Eigen::Infinity>(), 1e-10 * std::max(1.0, b.lpNorm<Eigen::Infinity>()));
    }
}

TEST(Rhs, AffineInForcing) {
    auto s = discontinuous_spec();
    auto s2 = s;
    s2.j1 = s.j1.scaled(2.0);
    s2.j2 = s.j2.scaled(2.0);
    s2.f = s.f.scaled(2.0);
    const int n = 11;
    auto basis = build_basis(n);
    auto grid = grid_for(s, n);
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 5; ++trial) {
        auto st = random_state(n, rng);
        auto z = SpectralState::zero(n, st.t);
        const Vector diff = rhs(st, s2, basis, grid).pack() - rhs(st, s, basis, grid).pack();
        const Vector forcing = rhs(z, s, basis, grid).pack();
        EXPECT_LE((diff - forcing).lpNorm<Eigen::Infinity>(), 1e-10 * std::max(1.0, forcing.norm()));
    }
}

TEST(Rhs, MeanModeOfHIsStationary) {
    auto s = discontinuous_spec();
    s.j1 = ForcingField();
    s.j2 = ForcingField();
    const int n = 9;
    auto basis = build_basis(n);
    auto grid = grid_for(s, n);
    std::mt19937_64 rng(6);
    auto d = rhs(random_state(n, rng), s, basis, grid);
    EXPECT_EQ(d.a1[0], 0.0);
    EXPECT_EQ(d.a2[0], 0.0);
}

TEST(Rhs, SemidiscreteEnergyLaw) {
    // 2p a.da + bdot.dbdot + b^T K bdot = -2p a^T R a + 2p (r j, h_z) + (f, u_t)
    auto s = discontinuous_spec();
    const int n = 15;
    auto basis = build_basis(n);
    GalerkinSystem sys(s, basis, grid_for(s, n));
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 5; ++trial) {
        auto st = random_state(n, rng, 0.2 * trial);
        auto d = sys.rhs_nodal(st);
        const auto fld = sys.nodal(st);
        const auto& g = sys.grid();
        double uz_utz = 0.0, diss = 0.0, wj = 0.0, wf = 0.0;
        const auto j1 = sys.nodal_j(0, st.t), j2 = sys.nodal_j(1, st.t), f = sys.nodal_f(st.t);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double w = g.weights()[i], r = sys.nodal_r()[i];
            uz_utz += w * sys.nodal_nu2()[i] * fld.uz[i] * fld.utz[i];
            diss += w * r * (fld.h1z[i] * fld.h1z[i] + fld.h2z[i] * fld.h2z[i]);
            wj += w * r * (j1[i] * fld.h1z[i] + j2[i] * fld.h2z[i]);
            wf += w * f[i] * fld.ut[i];
        }
        const double lhs = 2 * s.p * (st.a1.dot(d.a1) + st.a2.dot(d.a2)) + st.bdot.dot(d.bdot) + uz_utz;
        const double rhs_v = -2 * s.p * diss + 2 * s.p * wj + wf;
        EXPECT_NEAR(lhs, rhs_v, 1e-10 * std::max(1.0, std::abs(rhs_v)));
    }
}

TEST(Energy, Examples) {
    ProblemSpec s;
    s.p = 2.0;
    auto basis = build_basis(5);
    auto grid = grid_for(s, 5);
    auto z = energy(SpectralState::zero(5), s, basis, grid);
    EXPECT_EQ(z.total(), 0.0);
    auto st = SpectralState::zero(5);
    st.a1[1] = 1.0 / std::sqrt(2.0);
    EXPECT_NEAR(energy(st, s, basis, grid).term_h, 0.5, 1e-14);
    auto st2 = SpectralState::zero(5);
    st2.bdot[0] = 1.0;
    EXPECT_NEAR(energy(st2, s, basis, grid).term_ut, 0.5, 1e-14);
}

TEST(Energy, MatchesMatrixForms) {
    auto s = discontinuous_spec();
    const int n = 9;
    auto basis = build_basis(n);
    GalerkinSystem sys(s, basis, grid_for(s, n));
    std::mt19937_64 rng(10);
    auto st = random_state(n, rng);
    auto e = sys.energy(st);
    EXPECT_NEAR(e.term_h, 0.5 * s.p * (st.a1.squaredNorm() + st.a2.squaredNorm()), 1e-12);
    EXPECT_NEAR(e.term_ut, 0.5 * st.bdot.squaredNorm(), 1e-12);
    EXPECT_NEAR(e.term_uz, 0.5 * st.b.dot(sys.stiffness_matrix() * st.b), 1e-10);
}

TEST(Galerkin, Deterministic) {
    auto s = discontinuous_spec();
    const int n = 9;
    auto basis = build_basis(n);
    auto grid = grid_for(s, n);
    std::mt19937_64 rng(12);
    auto st = random_state(n, rng);
    EXPECT_EQ(rhs(st, s, basis, grid).pack(), rhs(st, s, basis, grid).pack());
}
