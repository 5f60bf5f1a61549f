#include <gtest/gtest.h>

#include <random>

#include "emel/coefficients.hpp"

using namespace emel;

namespace {

PiecewiseCoefficient two_level() { return PiecewiseCoefficient({0.5}, {{1.0}, {2.0}}); }

}  // namespace

TEST(Coefficient, ParsePiecewiseConstant) {
    auto r = parse_coefficient(json::parse(R"({"breakpoints":[0.5],"pieces":[[1],[2]]})"));
    EXPECT_EQ(r(0.25), 1.0);
    EXPECT_EQ(r(0.75), 2.0);
}

TEST(Coefficient, ParseConstant) {
    auto c = parse_coefficient(json::parse(R"({"breakpoints":[],"pieces":[[3]]})"));
    EXPECT_EQ(c(0.1), 3.0);
    EXPECT_EQ(c(0.9), 3.0);
    EXPECT_TRUE(c.jump_points().empty());
}

TEST(Coefficient, RejectsBadDocuments) {
    EXPECT_THROW(parse_coefficient(json::parse(R"({"breakpoints":[0.7,0.3],"pieces":[[1],[2],[3]]})")),
                 ValidationError);
    EXPECT_THROW(parse_coefficient(json::parse(R"({"breakpoints":[1.2],"pieces":[[1],[2]]})")), ValidationError);
    EXPECT_THROW(parse_coefficient(json::parse(R"({"breakpoints":[0.5],"pieces":[[1]]})")), ValidationError);
    EXPECT_THROW(parse_coefficient(json::parse(R"({"breakpoints":[0.5]})")), ValidationError);
    EXPECT_THROW(parse_coefficient(json::parse(R"({"pieces":"x"})")), ValidationError);
}

TEST(Coefficient, EvaluationConventions) {
    auto r = two_level();
    EXPECT_EQ(r(0.25), 1.0);
    EXPECT_EQ(r(1.25), 1.0);
    EXPECT_EQ(r(0.5), 2.0);
    EXPECT_EQ(r(-0.25), 2.0);
    EXPECT_EQ(r.left_limit(0.5), 1.0);
}

TEST(Coefficient, LocalCoordinatePieces) {
    PiecewiseCoefficient c({0.25, 0.75}, {{1.0, 2.0}, {0.0, 0.0, 4.0}, {-1.0, 1.0, 0.0, 3.0}});
    EXPECT_DOUBLE_EQ(c(0.125), 1.25);
    EXPECT_DOUBLE_EQ(c(0.5), 4.0 * 0.25 * 0.25);
    EXPECT_DOUBLE_EQ(c(0.875), -1.0 + 0.125 + 3.0 * 0.125 * 0.125 * 0.125);
    EXPECT_DOUBLE_EQ(c.derivative(0.5), 8.0 * 0.25);
}

TEST(Coefficient, PeriodicityIsExact) {
    PiecewiseCoefficient c({0.3, 0.6}, {{1.0, 0.5, -0.25}, {2.0, -1.0}, {0.7, 0.1, 0.2, 0.3}});
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<std::int64_t> k(0, (std::int64_t{1} << 30) - 1);
    for (int i = 0; i < 1000; ++i) {
        // dyadic points: z + 1 is representable exactly
        const double z = std::ldexp(static_cast<double>(k(rng)), -30);
        EXPECT_EQ(c(z + 1.0), c(z));
    }
}

TEST(Coefficient, PieceConsistency) {
    PiecewiseCoefficient c({0.3, 0.6}, {{1.0, 0.5, -0.25}, {2.0, -1.0}, {0.7, 0.1, 0.2, 0.3}});
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const double z = u(rng);
        const std::size_t k = c.locate(z);
        ASSERT_GE(z, c.piece_begin(k));
        ASSERT_LT(z, c.piece_end(k));
        EXPECT_NEAR(c(z), c.piece(k)(z - c.piece_begin(k)), 1e-15);
    }
}

TEST(Coefficient, VerifyBounds) {
    auto b = verify_bounds(two_level());
    EXPECT_EQ(b.min, 1.0);
    EXPECT_EQ(b.max, 2.0);
    auto m = verify_bounds(PiecewiseCoefficient({}, {{2.0, 1.0}}));
    EXPECT_DOUBLE_EQ(m.min, 2.0);
    EXPECT_NEAR(m.max, 3.0, 1e-15);
    EXPECT_THROW(verify_bounds(PiecewiseCoefficient({}, {{-0.5, 1.0}}), true), ValidationError);
    EXPECT_NO_THROW(verify_bounds(PiecewiseCoefficient({}, {{-0.5, 1.0}}), false));
}

TEST(Coefficient, VerifyBoundsFindsInteriorExtremum) {
    // vertex slightly off the sampling lattice
    const double c0 = 1.0, c1 = -4.0 + 1e-3, c2 = 4.0;
    auto b = verify_bounds(PiecewiseCoefficient({}, {{c0, c1, c2}}));
    EXPECT_NEAR(b.min, c0 - c1 * c1 / (4 * c2), 1e-15);
}

TEST(Coefficient, BoundsBracketSamples) {
    PiecewiseCoefficient c({0.2, 0.65}, {{1.0, 3.0, -9.0}, {0.4, -2.0, 5.0, 1.0}, {1.5, 0.0, -3.0}});
    auto b = verify_bounds(c);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 3.0);
    for (int i = 0; i < 1000; ++i) {
        const double v = c(u(rng));
        EXPECT_LE(b.min, v);
        EXPECT_GE(b.max, v);
    }
}

TEST(Coefficient, JumpPointsIncludeWrap) {
    EXPECT_EQ(two_level().jump_points(), (std::vector<double>{0.0, 0.5}));
    PiecewiseCoefficient cont({0.5}, {{1.0, 2.0}, {2.0, -2.0}});
    EXPECT_TRUE(cont.continuous_at_wrap());
}

TEST(Coefficient, JsonRoundTrip) {
    PiecewiseCoefficient c({0.1, 0.9}, {{0.1}, {1.0 / 3.0, 2.0}, {7.0}});
    auto d = json::parse(c.to_json().dump());
    auto c2 = parse_coefficient(d);
    for (double z : {0.05, 0.3, 0.95}) EXPECT_EQ(c(z), c2(z));
}

TEST(Forcing, SeparableEvaluation) {
    auto doc = json::parse(R"({"terms":[
        {"time":{"kind":"exp","params":[2.0,-1.0]},"space":{"breakpoints":[0.5],"pieces":[[1],[3]]}},
        {"time":{"kind":"poly","params":[0.0,1.0]},"space":{"fourier":{"mean":0,"cos":[1.0]}}}]})");
    auto f = ForcingField::from_json(doc);
    const double t = 0.3, z = 0.75;
    EXPECT_NEAR(f(t, z), 2.0 * std::exp(-t) * 3.0 + t * std::cos(2 * std::numbers::pi * z), 1e-15);
    EXPECT_EQ(f(t, z + 1.0), f(t, z));
    EXPECT_EQ(f.breakpoints(), std::vector<double>{0.5});
    auto back = ForcingField::from_json(f.to_json());
    EXPECT_EQ(back(t, z), f(t, z));
}

TEST(Forcing, TimeProfiles) {
    EXPECT_DOUBLE_EQ(TimeProfile(TimeProfile::Kind::Trig, {2.0, 3.0, 0.5})(1.0), 2.0 * std::cos(3.5));
    EXPECT_DOUBLE_EQ(TimeProfile(TimeProfile::Kind::Poly, {1.0, 2.0, 3.0})(2.0), 17.0);
    EXPECT_THROW(TimeProfile(TimeProfile::Kind::Exp, {1.0}), ValidationError);
    EXPECT_THROW(TimeProfile::from_json(json::parse(R"({"kind":"bad","params":[1]})")), ValidationError);
}

TEST(Forcing, ScaledAndPlus) {
    ForcingField a({{[](double t) { return t; }, SpatialField::fourier(1.0, {}, {}), json()}});
    auto b = a.plus(a.scaled(2.0));
    EXPECT_DOUBLE_EQ(b(0.5, 0.2), 1.5);
    EXPECT_FALSE(b.serializable());
    EXPECT_THROW(b.to_json(), ValidationError);
}

TEST(Nondimensional, Formulas) {
    auto d = nondimensionalize({1, 1, 1, 1, std::sqrt(2.0), 1, 2});
    EXPECT_DOUBLE_EQ(d.r, 1.0);
    EXPECT_NEAR(d.p, 1.0, 1e-15);
    EXPECT_DOUBLE_EQ(d.nu, 2.0);
    auto e = nondimensionalize({2, 3, 5, 7, 11, 13, 17});
    EXPECT_DOUBLE_EQ(e.r, 1.0 / (2 * 3 * 5 * 7));
    EXPECT_DOUBLE_EQ(e.p, 2.0 * 121 / (2 * 13 * 25));
    EXPECT_DOUBLE_EQ(e.nu, 17.0 / 5.0);
    EXPECT_THROW(nondimensionalize({0, 1, 1, 1, 1, 1, 1}), ValidationError);
    EXPECT_THROW(nondimensionalize({1, 1, 1, 1, 1, 1, -2}), ValidationError);
}
