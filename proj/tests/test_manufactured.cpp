#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "emel/manufactured.hpp"

using namespace emel;

namespace {

constexpr double pi = std::numbers::pi;

IntegratorConfig tight() {
    IntegratorConfig c;
    c.rel_tol = 1e-10;
    c.abs_tol = 1e-12;
    return c;
}

// int_a^b g by 20-point Gauss-Legendre
template <class F>
double integral(F g, double a, double b) {
    static const GaussRule rule = gauss_legendre(20);
    double s = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
        s += rule.weights[i] * g(0.5 * (a + b) + 0.5 * (b - a) * rule.nodes[i]);
    return 0.5 * (b - a) * s;
}

// Flux-form residuals on the cells [z_i, z_i+1]:
//   int h_t - [r h_z - h u_t - r j]   and   int (u_tt - f) - [nu^2 u_z - p |h|^2]
double flux_residual(const ManufacturedCase& c, const DerivedForcing& d, double t) {
    auto F = [&](const ExactField& h, const ForcingField& j, double z) {
        return c.r(z) * (h.dz(t, z) - j(t, z)) - h.value(t, z) * c.u.dt(t, z);
    };
    auto G = [&](double z) {
        const double h1 = c.h1.value(t, z), h2 = c.h2.value(t, z), nu = c.nu(z);
        return nu * nu * c.u.dz(t, z) - c.p * (h1 * h1 + h2 * h2);
    };
    double worst = 0.0;
    const int cells = 64;
    for (int i = 0; i < cells; ++i) {
        const double a = double(i) / cells, b = double(i + 1) / cells;
        const double r1 = integral([&](double z) { return c.h1.dt(t, z); }, a, b) - (F(c.h1, d.j1, b) - F(c.h1, d.j1, a));
        const double r2 = integral([&](double z) { return c.h2.dt(t, z); }, a, b) - (F(c.h2, d.j2, b) - F(c.h2, d.j2, a));
        const double ru = integral([&](double z) { return c.u.dtt(t, z) - d.f(t, z); }, a, b) - (G(b) - G(a));
        worst = std::max({worst, std::abs(r1), std::abs(r2), std::abs(ru)});
    }
    return worst;
}

}  // namespace

TEST(DeriveForcing, ZeroAndConstantCases) {
    ManufacturedCase c = manufactured_case("zero");
    DerivedForcing d = derive_forcing(c);
    EXPECT_TRUE(d.j1.empty() || d.j1(0.3, 0.4) == 0.0);
    EXPECT_EQ(d.f(0.3, 0.4), 0.0);

    c.h1 = ExactField({{TimeFn::constant_value(1.0), SpaceFn::constant_value(0.6)}});
    d = derive_forcing(c);
    for (double z : {0.0, 0.3, 0.9}) {
        EXPECT_EQ(d.j1(0.2, z), 0.0);
        EXPECT_EQ(d.f(0.2, z), 0.0);
    }
}

TEST(DeriveForcing, HeatLikeMatchesClosedForm) {
    const ManufacturedCase c = manufactured_case("heat_like");
    const DerivedForcing d = derive_forcing(c);
    for (double t : {0.0, 0.4, 1.0})
        for (int i = 0; i < 64; ++i) {
            const double z = (i + 0.5) / 64.0;
            // W = -e^{-t} sin(2 pi z) / (2 pi); j = h_z - W; f = p (h^2)_z
            const double j = -2.0 * pi * std::exp(-t) * std::sin(2 * pi * z) + std::exp(-t) * std::sin(2 * pi * z) / (2 * pi);
            const double f = -2.0 * pi * std::exp(-2.0 * t) * std::sin(4 * pi * z);
            EXPECT_NEAR(d.j1(t, z), j, 1e-12);
            EXPECT_NEAR(d.j2(t, z), 0.0, 1e-15);
            EXPECT_NEAR(d.f(t, z), f, 1e-12);
        }
}

TEST(DeriveForcing, SuiteSatisfiesBalanceLaws) {
    for (const auto& name : manufactured_case_names()) {
        const ManufacturedCase c = manufactured_case(name);
        const DerivedForcing d = derive_forcing(c);
        for (double t : {0.0, 0.5 * c.T, c.T}) EXPECT_LE(flux_residual(c, d, t), 1e-12) << name << " t=" << t;
    }
}

TEST(DeriveForcing, RejectsIllPosedCases) {
    ManufacturedCase c = manufactured_case("heat_like");
    c.r = PiecewiseCoefficient({0.5}, {{1.0}, {2.0}});
    EXPECT_THROW(derive_forcing(c), ValidationError);

    c = manufactured_case("heat_like");
    c.h1 = ExactField({{TimeFn::exp(1.0, -1.0), SpaceFn::constant_value(0.5)}});
    EXPECT_THROW(derive_forcing(c), ValidationError);

    EXPECT_THROW(manufactured_case("missing"), ValidationError);
}

TEST(ManufacturedRun, ZeroCaseHasZeroError) {
    const ManufacturedRun run = manufactured_run(manufactured_case("zero"), 8, IntegratorConfig{});
    EXPECT_EQ(run.errors.l2_h_T, 0.0);
    EXPECT_EQ(run.errors.V2, 0.0);
    EXPECT_EQ(run.errors.W11, 0.0);
}

TEST(ManufacturedRun, HeatLikeIsResolved) {
    const ManufacturedRun run = manufactured_run(manufactured_case("heat_like"), 16, tight());
    EXPECT_LE(run.errors.l2_h_T, 1e-6);
    EXPECT_LE(run.errors.l2_u_T, 1e-6);
}

TEST(ManufacturedRun, RefinementLadder) {
    const ManufacturedCase c = manufactured_case("wave");
    const auto coarse = manufactured_run(c, 8, tight()), fine = manufactured_run(c, 32, tight());
    EXPECT_LE(fine.errors.l2_h_T, 0.1 * coarse.errors.l2_h_T);
    EXPECT_LE(fine.errors.l2_u_T, 0.1 * coarse.errors.l2_u_T);
    EXPECT_LE(fine.errors.V2, 0.1 * coarse.errors.V2);
}
