#pragma once

// Manufactured solutions: exact fields as finite sums of separable terms
// tau(t) s(z), and the forcing (j, f) that makes them solve the system
//
//   h_t  = (r h_z - h u_t - r j)_z
//   u_tt = (nu^2 u_z - p |h|^2)_z + f
//
// The derived forcing is again separable, so it feeds the cached projections of
// the Galerkin system without any space-time tabulation.

#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "emel/diagnostics.hpp"

namespace emel {

struct TimeFn {
    std::function<double(double)> f, df, ddf;
    bool constant = false;

    static TimeFn constant_value(double c) {
        return {[c](double) { return c; }, [](double) { return 0.0; }, [](double) { return 0.0; }, true};
    }
    // A exp(lambda t)
    static TimeFn exp(double A, double lambda) {
        return {[=](double t) { return A * std::exp(lambda * t); },
                [=](double t) { return A * lambda * std::exp(lambda * t); },
                [=](double t) { return A * lambda * lambda * std::exp(lambda * t); }, false};
    }
    // A cos(omega t + phi)
    static TimeFn trig(double A, double omega, double phi) {
        return {[=](double t) { return A * std::cos(omega * t + phi); },
                [=](double t) { return -A * omega * std::sin(omega * t + phi); },
                [=](double t) { return -A * omega * omega * std::cos(omega * t + phi); }, false};
    }
    // c0 + c1 t
    static TimeFn linear(double c0, double c1) {
        return {[=](double t) { return c0 + c1 * t; }, [=](double) { return c1; }, [](double) { return 0.0; },
                c1 == 0.0};
    }
};

// Smooth 1-periodic shape with two derivatives and, when the mean vanishes,
// the mean-zero periodic antiderivative.
struct SpaceFn {
    std::function<double(double)> f, fz, fzz, anti;
    double mean = 0.0;

    static SpaceFn constant_value(double c) {
        return {[c](double) { return c; }, [](double) { return 0.0; }, [](double) { return 0.0; },
                [](double) { return std::numeric_limits<double>::quiet_NaN(); }, c};
    }
    // A cos(2 pi k z)
    static SpaceFn cos_mode(int k, double A) {
        const double w = 2.0 * std::numbers::pi * k;
        return {[=](double z) { return A * std::cos(w * z); }, [=](double z) { return -A * w * std::sin(w * z); },
                [=](double z) { return -A * w * w * std::cos(w * z); },
                [=](double z) { return A * std::sin(w * z) / w; }, 0.0};
    }
    // A sin(2 pi k z)
    static SpaceFn sin_mode(int k, double A) {
        const double w = 2.0 * std::numbers::pi * k;
        return {[=](double z) { return A * std::sin(w * z); }, [=](double z) { return A * w * std::cos(w * z); },
                [=](double z) { return -A * w * w * std::sin(w * z); },
                [=](double z) { return -A * std::cos(w * z) / w; }, 0.0};
    }
    // A cos(phi) exp(a sin phi), phi = 2 pi k z: every harmonic of k present.
    static SpaceFn expcos(int k, double a, double A = 1.0) {
        const double w = 2.0 * std::numbers::pi * k;
        const double i0 = std::cyl_bessel_i(0.0, a);
        return {[=](double z) { return A * std::cos(w * z) * std::exp(a * std::sin(w * z)); },
                [=](double z) {
                    const double s = std::sin(w * z), c = std::cos(w * z);
                    return A * w * std::exp(a * s) * (a * c * c - s);
                },
                [=](double z) {
                    const double s = std::sin(w * z), c = std::cos(w * z);
                    return A * w * w * std::exp(a * s) * c * (a * a * c * c - 3.0 * a * s - 1.0);
                },
                [=](double z) { return A * (std::exp(a * std::sin(w * z)) - i0) / (w * a); }, 0.0};
    }
    // A sin(phi) exp(a cos phi), phi = 2 pi k z.
    static SpaceFn expsin(int k, double a, double A = 1.0) {
        const double w = 2.0 * std::numbers::pi * k;
        const double i0 = std::cyl_bessel_i(0.0, a);
        return {[=](double z) { return A * std::sin(w * z) * std::exp(a * std::cos(w * z)); },
                [=](double z) {
                    const double s = std::sin(w * z), c = std::cos(w * z);
                    return A * w * std::exp(a * c) * (c - a * s * s);
                },
                [=](double z) {
                    const double s = std::sin(w * z), c = std::cos(w * z);
                    return A * w * w * std::exp(a * c) * s * (a * a * s * s - 3.0 * a * c - 1.0);
                },
                [=](double z) { return -A * (std::exp(a * std::cos(w * z)) - i0) / (w * a); }, 0.0};
    }
};

struct SeparableTerm {
    TimeFn time;
    SpaceFn space;
};

class ExactField {
public:
    ExactField() = default;
    explicit ExactField(std::vector<SeparableTerm> terms) : terms_(std::move(terms)) {}

    const std::vector<SeparableTerm>& terms() const { return terms_; }

    double value(double t, double z) const { return sum(t, z, 0, 0); }
    double dz(double t, double z) const { return sum(t, z, 0, 1); }
    double dt(double t, double z) const { return sum(t, z, 1, 0); }
    double dtt(double t, double z) const { return sum(t, z, 2, 0); }

    // Initial value (derivative order k in time) as a spatial field.
    SpatialField at_zero(int k = 0) const {
        auto self = std::make_shared<ExactField>(*this);
        return {[self, k](double z) { return self->sum(0.0, z, k, 0); },
                [self, k](double z) { return self->sum(0.0, z, k, 1); }, {}, json()};
    }

private:
    double sum(double t, double z, int kt, int kz) const {
        double v = 0.0;
        for (const auto& term : terms_) {
            const double a = kt == 0 ? term.time.f(t) : kt == 1 ? term.time.df(t) : term.time.ddf(t);
            const double b = kz == 0 ? term.space.f(z) : kz == 1 ? term.space.fz(z) : term.space.fzz(z);
            v += a * b;
        }
        return v;
    }

    std::vector<SeparableTerm> terms_;
};

struct ManufacturedCase {
    std::string name;
    double p = 1.0;
    PiecewiseCoefficient r = PiecewiseCoefficient::constant(1.0);
    PiecewiseCoefficient nu = PiecewiseCoefficient::constant(1.0);
    double T = 1.0;
    ExactField h1, h2, u;
};

struct DerivedForcing {
    ForcingField j1, j2, f;
};

namespace detail {

inline SpatialField spatial(std::function<double(double)> v) {
    return {std::move(v), [](double) { return std::numeric_limits<double>::quiet_NaN(); }, {}, json()};
}

inline ForcingTerm term(std::function<double(double)> time, std::function<double(double)> space) {
    return {std::move(time), spatial(std::move(space)), json()};
}

}  // namespace detail

// j_l = h_l,z - (h_l u_t + W_l) / r with W_l the mean-zero periodic
// antiderivative of h_l,t;  f = u_tt - (nu^2 u_z)_z + p (|h|^2)_z.
inline DerivedForcing derive_forcing(const ManufacturedCase& c) {
    if (!c.r.breakpoints().empty() || !c.nu.breakpoints().empty() || !c.r.continuous_at_wrap() ||
        !c.nu.continuous_at_wrap())
        throw ValidationError("manufactured cases need smooth (m = 0, periodic) coefficients");
    auto r = std::make_shared<PiecewiseCoefficient>(c.r);
    auto nu = std::make_shared<PiecewiseCoefficient>(c.nu);
    const double p = c.p;

    auto induction = [&](const ExactField& h) {
        std::vector<ForcingTerm> out;
        for (const auto& a : h.terms()) {
            if (!a.time.constant && std::abs(a.space.mean) > 0.0)
                throw ValidationError("manufactured h has a time-varying spatial mean; W is not periodic");
            out.push_back(detail::term(a.time.f, a.space.fz));
            for (const auto& b : c.u.terms()) {
                auto ta = a.time.f, tb = b.time.df;
                auto sa = a.space.f, sb = b.space.f;
                out.push_back(detail::term([ta, tb](double t) { return -ta(t) * tb(t); },
                                           [sa, sb, r](double z) { return sa(z) * sb(z) / (*r)(z); }));
            }
            if (!a.time.constant) {
                auto anti = a.space.anti;
                out.push_back(detail::term([d = a.time.df](double t) { return -d(t); },
                                           [anti, r](double z) { return anti(z) / (*r)(z); }));
            }
        }
        return ForcingField(std::move(out));
    };

    std::vector<ForcingTerm> f;
    for (const auto& b : c.u.terms()) {
        f.push_back(detail::term(b.time.ddf, b.space.f));
        auto q1 = b.space.fz, q2 = b.space.fzz;
        f.push_back(detail::term([s = b.time.f](double t) { return -s(t); }, [q1, q2, nu](double z) {
            const double v = (*nu)(z), vz = nu->derivative(z);
            return 2.0 * v * vz * q1(z) + v * v * q2(z);
        }));
    }
    for (const ExactField* h : {&c.h1, &c.h2})
        for (const auto& a : h->terms())
            for (const auto& b : h->terms()) {
                auto ta = a.time.f, tb = b.time.f;
                auto sa = a.space.f, sb = b.space.f, dsa = a.space.fz, dsb = b.space.fz;
                f.push_back(detail::term([ta, tb, p](double t) { return p * ta(t) * tb(t); },
                                         [sa, sb, dsa, dsb](double z) { return dsa(z) * sb(z) + sa(z) * dsb(z); }));
            }
    return {induction(c.h1), induction(c.h2), ForcingField(std::move(f))};
}

inline ProblemSpec manufactured_problem(const ManufacturedCase& c) {
    const DerivedForcing d = derive_forcing(c);
    ProblemSpec s;
    s.p = c.p;
    s.r = c.r;
    s.nu = c.nu;
    s.T = c.T;
    s.j1 = d.j1;
    s.j2 = d.j2;
    s.f = d.f;
    s.h0_1 = c.h1.at_zero();
    s.h0_2 = c.h2.at_zero();
    s.u0 = c.u.at_zero();
    s.u1 = c.u.at_zero(1);
    return s;
}

// Built-in cases. All fields are smooth and 1-periodic; "heat_like" is
// band-limited, the others carry every harmonic.
inline ManufacturedCase manufactured_case(const std::string& name) {
    ManufacturedCase c;
    c.name = name;
    // 1 + 64 z^4 (1 - z)^4: C^4 on the torus, range [1, 1.25]
    const PiecewiseCoefficient bump({}, {{1.0, 0.0, 0.0, 0.0, 64.0, -256.0, 384.0, -256.0, 64.0}});
    if (name == "zero") {
        c.T = 1.0;
    } else if (name == "heat_like") {
        c.T = 1.0;
        c.h1 = ExactField({{TimeFn::exp(1.0, -1.0), SpaceFn::cos_mode(1, 1.0)}});
    } else if (name == "coupled") {
        c.p = 0.8;
        c.r = bump;
        c.nu = PiecewiseCoefficient::constant(1.2);
        c.T = 0.5;
        c.h1 = ExactField({{TimeFn::constant_value(1.0), SpaceFn::constant_value(0.3)},
                           {TimeFn::exp(1.0, -0.5), SpaceFn::expcos(1, 0.8)}});
        c.h2 = ExactField({{TimeFn::trig(0.5, 3.0, 0.2), SpaceFn::expsin(1, 0.6)}});
        c.u = ExactField({{TimeFn::trig(0.4, 2.0, 0.0), SpaceFn::expcos(1, 0.7)},
                          {TimeFn::linear(0.1, 0.2), SpaceFn::sin_mode(2, 1.0)}});
    } else if (name == "wave") {
        c.p = 2.0;
        c.r = PiecewiseCoefficient::constant(0.5);
        c.nu = bump;
        c.T = 0.5;
        c.h1 = ExactField({{TimeFn::linear(1.0, 0.5), SpaceFn::expsin(1, 0.5, 0.5)}});
        c.h2 = ExactField({{TimeFn::constant_value(1.0), SpaceFn::constant_value(-0.2)}});
        c.u = ExactField({{TimeFn::trig(0.6, 4.0, 0.3), SpaceFn::expsin(1, 0.9)},
                          {TimeFn::exp(0.3, 0.4), SpaceFn::cos_mode(1, 1.0)}});
    } else {
        throw ValidationError("unknown manufactured case \"" + name + "\"");
    }
    return c;
}

inline std::vector<std::string> manufactured_case_names() { return {"zero", "heat_like", "coupled", "wave"}; }

struct ManufacturedErrors {
    double l2_h_T = 0.0;   // ||h_N(T) - h(T)||
    double l2_u_T = 0.0;   // ||u_N(T) - u(T)||
    double l2_ut_T = 0.0;  // ||u_t,N(T) - u_t(T)||
    double V2 = 0.0;       // V2 norm of h_N - h
    double W11 = 0.0;      // W11 norm of u_N - u
    double scale = 0.0;    // V2 + W11 of the exact solution
    Trajectory trajectory;
};

struct ManufacturedRun {
    ProblemSpec spec;
    ManufacturedErrors errors;
};

// Error of the Galerkin trajectory against the exact fields, by quadrature on a
// grid resolving both (spatial) and the per-step Gauss rule (temporal).
inline ManufacturedErrors manufactured_errors(const ManufacturedCase& c, const Trajectory& traj) {
    const int n = traj.modes;
    const GalerkinBasis basis = build_basis(n);
    const QuadratureGrid grid = build_grid({}, std::max(32, 2 * n), default_gauss_order).with_basis(basis);
    const std::size_t m = grid.size();
    struct Point {
        double eh, ehz, eu, euz, eut, xh, xhz, xu, xuz, xut;
    };
    auto at = [&](const SpectralState& s) {
        const auto h1 = synthesize(s.a1, basis, grid), h2 = synthesize(s.a2, basis, grid);
        const auto u = synthesize(s.b, basis, grid), ut = synthesize(s.bdot, basis, grid);
        Point sum{};
        for (std::size_t i = 0; i < m; ++i) {
            const double z = grid.nodes()[i], w = grid.weights()[i], t = s.t;
            const double x1 = c.h1.value(t, z), x2 = c.h2.value(t, z), x1z = c.h1.dz(t, z), x2z = c.h2.dz(t, z);
            const double xu = c.u.value(t, z), xuz = c.u.dz(t, z), xut = c.u.dt(t, z);
            auto sq = [](double a, double b) { return a * a + b * b; };
            sum.eh += w * sq(h1.values[i] - x1, h2.values[i] - x2);
            sum.ehz += w * sq(h1.derivatives[i] - x1z, h2.derivatives[i] - x2z);
            sum.eu += w * std::pow(u.values[i] - xu, 2);
            sum.euz += w * std::pow(u.derivatives[i] - xuz, 2);
            sum.eut += w * std::pow(ut.values[i] - xut, 2);
            sum.xh += w * sq(x1, x2);
            sum.xhz += w * sq(x1z, x2z);
            sum.xu += w * xu * xu;
            sum.xuz += w * xuz * xuz;
            sum.xut += w * xut * xut;
        }
        return sum;
    };
    ManufacturedErrors e;
    // fixed uniform partition of [0,T]; the dense output is smooth within it
    constexpr int intervals = 256;
    std::vector<double> times(intervals + 1);
    for (int k = 0; k <= intervals; ++k) times[static_cast<std::size_t>(k)] = traj.T * k / intervals;
    times.back() = traj.T;
    double sup_e = 0.0, sup_x = 0.0;
    for (double t : times) {
        const Point pt = at(dense_eval(traj, t));
        sup_e = std::max(sup_e, std::sqrt(pt.eh));
        sup_x = std::max(sup_x, std::sqrt(pt.xh));
    }
    Point integ{};
    const auto& g = detail::gauss4_unit();
    for (std::size_t k = 0; k + 1 < times.size(); ++k)
        for (std::size_t q = 0; q < g.nodes.size(); ++q) {
            const double t = times[k] + g.nodes[q] * (times[k + 1] - times[k]);
            const double w = g.weights[q] * (times[k + 1] - times[k]);
            const Point pt = at(dense_eval(traj, t));
            integ.ehz += w * pt.ehz;
            integ.eu += w * pt.eu;
            integ.euz += w * pt.euz;
            integ.eut += w * pt.eut;
            integ.xhz += w * pt.xhz;
            integ.xu += w * pt.xu;
            integ.xuz += w * pt.xuz;
            integ.xut += w * pt.xut;
        }
    const Point fin = at(traj.samples.back());
    e.l2_h_T = std::sqrt(fin.eh);
    e.l2_u_T = std::sqrt(fin.eu);
    e.l2_ut_T = std::sqrt(fin.eut);
    e.V2 = sup_e + std::sqrt(integ.ehz);
    e.W11 = std::sqrt(integ.eu) + std::sqrt(integ.euz) + std::sqrt(integ.eut);
    e.scale = sup_x + std::sqrt(integ.xhz) + std::sqrt(integ.xu) + std::sqrt(integ.xuz) + std::sqrt(integ.xut);
    return e;
}

inline ManufacturedRun manufactured_run(const ManufacturedCase& c, int n, const IntegratorConfig& config,
                                        std::vector<double> output_times = {}) {
    ManufacturedRun run{manufactured_problem(c), {}};
    const GalerkinBasis basis = build_basis(n);
    Trajectory traj = integrate(run.spec, config, basis, grid_for(run.spec, n), std::move(output_times));
    run.errors = manufactured_errors(c, traj);
    run.errors.trajectory = std::move(traj);
    return run;
}

}  // namespace emel
