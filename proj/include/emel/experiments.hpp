#pragma once

// Verification campaigns: N-refinement Cauchy studies, coefficient/data
// perturbation ladders, integrator cross-checks and randomized instances.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "emel/diagnostics.hpp"
#include "emel/manufactured.hpp"

namespace emel {

// Runs fn(0..count-1) on up to `threads` workers; results are stored by index.
template <class R, class F>
std::vector<R> parallel_map(std::size_t count, int threads, F&& fn) {
    std::vector<R> out(count);
    std::vector<std::exception_ptr> errors(count);
    const auto workers = static_cast<std::size_t>(std::max(1, threads));
    auto body = [&](std::size_t worker) {
        for (std::size_t i = worker; i < count; i += workers) {
            try {
                out[i] = fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers == 1 || count <= 1) {
        body(0);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < std::min(workers, count); ++w) pool.emplace_back(body, w);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

inline Trajectory solve(const ProblemSpec& spec, int n, const IntegratorConfig& config,
                        std::vector<double> output_times = {}) {
    const GalerkinBasis basis = build_basis(n);
    return integrate(spec, config, basis, grid_for(spec, n), std::move(output_times));
}

struct ConvergenceRow {
    int n_coarse = 0;
    int n_fine = 0;
    double d_V2 = 0.0;
    double d_W11 = 0.0;
};

struct ConvergenceStudy {
    std::vector<ConvergenceRow> rows;
    std::vector<SolutionNorms> norms;  // per N
    bool strictly_decreasing = true;
};

inline ConvergenceStudy convergence_study(const ProblemSpec& spec, const std::vector<int>& n_list,
                                          const IntegratorConfig& config, int threads = 1) {
    if (n_list.size() < 2 || !std::is_sorted(n_list.begin(), n_list.end()) ||
        std::adjacent_find(n_list.begin(), n_list.end()) != n_list.end())
        throw ValidationError("convergence study needs a strictly increasing list of at least two N");
    auto trajs = parallel_map<Trajectory>(n_list.size(), threads,
                                          [&](std::size_t i) { return solve(spec, n_list[i], config); });
    ConvergenceStudy s;
    for (const auto& t : trajs) s.norms.push_back(solution_norms(t));
    for (std::size_t i = 0; i + 1 < trajs.size(); ++i) {
        const SolutionNorms d = difference_norms(trajs[i + 1], trajs[i]);
        s.rows.push_back({n_list[i], n_list[i + 1], d.V2, d.W11});
    }
    for (std::size_t i = 1; i < s.rows.size(); ++i)
        if (!(s.rows[i].d_V2 < s.rows[i - 1].d_V2) || !(s.rows[i].d_W11 < s.rows[i - 1].d_W11))
            s.strictly_decreasing = false;
    return s;
}

// field helpers for perturbations
inline SpatialField field_sum(const SpatialField& a, const SpatialField& b, double scale_b) {
    auto A = std::make_shared<SpatialField>(a);
    auto B = std::make_shared<SpatialField>(b);
    std::vector<double> br = merge_breakpoints({a.breakpoints, b.breakpoints});
    return {[A, B, scale_b](double z) { return A->value(z) + scale_b * B->value(z); },
            [A, B, scale_b](double z) { return A->derivative(z) + scale_b * B->derivative(z); }, br, json()};
}

enum class PerturbTarget { R, J, F, H0, U0, U1 };

inline PerturbTarget parse_target(const std::string& s) {
    if (s == "r") return PerturbTarget::R;
    if (s == "j") return PerturbTarget::J;
    if (s == "f") return PerturbTarget::F;
    if (s == "h0") return PerturbTarget::H0;
    if (s == "u0") return PerturbTarget::U0;
    if (s == "u1") return PerturbTarget::U1;
    throw ValidationError("unknown perturbation target \"" + s + "\" (expected r, j, f, h0, u0, u1)");
}

inline std::string target_name(PerturbTarget t) {
    switch (t) {
        case PerturbTarget::R: return "r";
        case PerturbTarget::J: return "j";
        case PerturbTarget::F: return "f";
        case PerturbTarget::H0: return "h0";
        case PerturbTarget::U0: return "u0";
        case PerturbTarget::U1: return "u1";
    }
    return "?";
}

struct StabilityLadder {
    ProblemSpec base;
    PerturbTarget target = PerturbTarget::R;
    double amplitude = 0.25;
    double ratio = 0.5;
    int rungs = 4;

    double magnitude(int m) const { return amplitude * std::pow(ratio, m); }

    // Perturbed problem for rung m = 1..rungs.
    ProblemSpec rung(int m) const {
        const double d = magnitude(m);
        ProblemSpec s = base;
        const auto mode_cos = SpatialField::fourier(0.0, {1.0}, {});
        const auto mode_sin = SpatialField::fourier(0.0, {}, {1.0});
        auto unit = [](const SpatialField& sp, double scale) {
            return ForcingField({{[scale](double) { return scale; }, sp, json()}});
        };
        switch (target) {
            case PerturbTarget::R: s.r = base.r.shifted(d); break;
            case PerturbTarget::J: s.j1 = base.j1.plus(unit(mode_cos, d)); break;
            case PerturbTarget::F: s.f = base.f.plus(unit(mode_sin, d)); break;
            case PerturbTarget::H0: s.h0_1 = field_sum(base.h0_1, mode_cos, d); break;
            case PerturbTarget::U0: s.u0 = field_sum(base.u0, mode_sin, d); break;
            case PerturbTarget::U1: s.u1 = field_sum(base.u1, mode_cos, d); break;
        }
        return s;
    }
};

struct StabilityRung {
    int m = 0;
    double magnitude = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio() const { return rhs > 0.0 ? lhs / rhs : 0.0; }
};

struct StabilityReport {
    std::string target;
    bool discontinuous_base = false;
    std::vector<StabilityRung> rungs;
    bool decreasing = true;      // LHS(m+1) <= (1 - decay_slack) LHS(m) at every rung
    double decay_slack = 0.1;
    double ratio_spread = 0.0;   // max / min of LHS/RHS
    double max_ratio = 0.0;
    bool bounded = true;         // ratio_spread <= 2
};

// LHS and RHS (C = 1) of the quantitative stability estimate on [0,T]:
//   LHS = max_t {p|v|^2 + |w_t|^2 + 2|nu w_z|^2} + 2 p r0 ||v_z||^2_Pi
//   RHS = p (||(r^m - r) h_z||^2_Pi + ||r^m j^m - r j||^2_Pi) + ||f^m - f||^2_Pi
//         + 2p |v(0)|^2 + 2|w_t(0)|^2 + 2|nu w_z(0)|^2
inline StabilityRung stability_measure(const ProblemSpec& base, const Trajectory& tb, const ProblemSpec& pert,
                                       const Trajectory& tp) {
    const int n = tb.modes;
    const GalerkinBasis basis = build_basis(n);
    const GalerkinSystem sys(base, basis, grid_for(pert, n));
    const QuadratureGrid& grid = sys.grid();
    const Matrix& K = sys.stiffness_matrix();
    const double p = base.p;
    const double r0 = verify_bounds(base.r).min;

    auto diff = [&](double t) {
        const SpectralState a = dense_eval(tp, t), b = dense_eval(tb, t);
        return SpectralState{t, a.a1 - b.a1, a.a2 - b.a2, a.b - b.b, a.bdot - b.bdot};
    };
    auto energy_like = [&](const SpectralState& d) {
        return p * (d.a1.squaredNorm() + d.a2.squaredNorm()) + d.bdot.squaredNorm() + 2.0 * d.b.dot(K * d.b);
    };
    const auto times = detail::merged_times(tb, &tp);

    StabilityRung out;
    double mx = 0.0;
    for (double t : times) mx = std::max(mx, energy_like(diff(t)));

    const std::size_t m = grid.size();
    std::vector<double> dr(m), rb(m), rp(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double z = grid.nodes()[i];
        rb[i] = base.r(z);
        rp[i] = pert.r(z);
        dr[i] = rp[i] - rb[i];
    }
    double vz = 0.0, rterm = 0.0, jterm = 0.0, fterm = 0.0;
    const auto& g = detail::gauss4_unit();
    for (std::size_t k = 0; k + 1 < times.size(); ++k) {
        const double t0 = times[k], t1 = times[k + 1];
        for (std::size_t q = 0; q < g.nodes.size(); ++q) {
            const double t = t0 + g.nodes[q] * (t1 - t0), w = g.weights[q] * (t1 - t0);
            const SpectralState d = diff(t);
            vz += w * (detail::weighted_sq(d.a1, basis) + detail::weighted_sq(d.a2, basis));
            const SpectralState sb = dense_eval(tb, t);
            const auto h1z = sys.synthesize_derivatives(sb.a1), h2z = sys.synthesize_derivatives(sb.a2);
            double rs = 0.0, js = 0.0, fs = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                const double z = grid.nodes()[i], wi = grid.weights()[i];
                rs += wi * dr[i] * dr[i] * (h1z[i] * h1z[i] + h2z[i] * h2z[i]);
                const double dj1 = rp[i] * pert.j1(t, z) - rb[i] * base.j1(t, z);
                const double dj2 = rp[i] * pert.j2(t, z) - rb[i] * base.j2(t, z);
                js += wi * (dj1 * dj1 + dj2 * dj2);
                const double df = pert.f(t, z) - base.f(t, z);
                fs += wi * df * df;
            }
            rterm += w * rs;
            jterm += w * js;
            fterm += w * fs;
        }
    }
    const SpectralState d0 = diff(0.0);
    out.lhs = mx + 2.0 * p * r0 * vz;
    out.rhs = p * (rterm + jterm) + fterm + 2.0 * p * (d0.a1.squaredNorm() + d0.a2.squaredNorm()) +
              2.0 * d0.bdot.squaredNorm() + 2.0 * d0.b.dot(K * d0.b);
    return out;
}

inline StabilityReport stability_experiment(const StabilityLadder& ladder, int n, const IntegratorConfig& config,
                                            int threads = 1) {
    if (ladder.rungs < 2 || !(ladder.ratio > 0.0 && ladder.ratio < 1.0) || !(ladder.amplitude > 0.0))
        throw ValidationError("stability ladder needs >= 2 rungs, ratio in (0,1) and positive amplitude");
    // shared partition so the base run resolves every rung's output
    const Trajectory base = solve(ladder.base, n, config);
    StabilityReport rep;
    rep.target = target_name(ladder.target);
    rep.discontinuous_base = !ladder.base.coefficient_jumps().empty();
    rep.rungs = parallel_map<StabilityRung>(static_cast<std::size_t>(ladder.rungs), threads, [&](std::size_t i) {
        const int m = static_cast<int>(i) + 1;
        const ProblemSpec pert = ladder.rung(m);
        StabilityRung r = stability_measure(ladder.base, base, pert, solve(pert, n, config));
        r.m = m;
        r.magnitude = ladder.magnitude(m);
        return r;
    });
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t i = 0; i < rep.rungs.size(); ++i) {
        if (i > 0 && !(rep.rungs[i].lhs <= (1.0 - rep.decay_slack) * rep.rungs[i - 1].lhs)) rep.decreasing = false;
        lo = std::min(lo, rep.rungs[i].ratio());
        hi = std::max(hi, rep.rungs[i].ratio());
    }
    rep.max_ratio = hi;
    rep.ratio_spread = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    rep.bounded = rep.ratio_spread <= 2.0;
    return rep;
}

struct UniquenessResult {
    SolutionNorms difference;
    double scale = 0.0;  // V2 + W11 of the first solution
    double bound = 0.0;  // 10 (tolA + tolB) scale
    bool pass = false;
};

inline UniquenessResult uniqueness_crosscheck(const ProblemSpec& spec, const IntegratorConfig& a,
                                              const IntegratorConfig& b, int n) {
    const Trajectory ta = solve(spec, n, a), tb = solve(spec, n, b);
    UniquenessResult r;
    r.difference = difference_norms(ta, tb);
    const SolutionNorms na = solution_norms(ta);
    r.scale = na.V2 + na.W11;
    r.bound = 10.0 * (a.rel_tol + b.rel_tol) * r.scale;
    r.pass = r.difference.V2 <= r.bound && r.difference.W11 <= r.bound;
    return r;
}

// Random instance: m breakpoints, piecewise-constant r, nu in [0.5, 2],
// data and forcing on the first two harmonics.
inline ProblemSpec random_instance(std::uint64_t seed, int m, double T = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coef(0.5, 2.0), amp(-0.5, 0.5), brk(0.1, 0.9), pc(0.5, 2.0);
    auto breakpoints = [&] {
        std::vector<double> b;
        while (static_cast<int>(b.size()) < m) {
            const double z = std::round(brk(rng) * 64.0) / 64.0;
            if (std::none_of(b.begin(), b.end(), [z](double x) { return std::abs(x - z) < 0.1; })) b.push_back(z);
        }
        std::sort(b.begin(), b.end());
        return b;
    };
    auto piecewise = [&] {
        auto b = breakpoints();
        std::vector<std::vector<double>> pieces;
        for (std::size_t k = 0; k <= b.size(); ++k) pieces.push_back({coef(rng)});
        return PiecewiseCoefficient(std::move(b), std::move(pieces));
    };
    auto low_mode = [&](double mean_scale) {
        return SpatialField::fourier(mean_scale * amp(rng), {amp(rng), 0.5 * amp(rng)}, {amp(rng), 0.5 * amp(rng)});
    };
    ProblemSpec s;
    s.p = pc(rng);
    s.r = piecewise();
    s.nu = piecewise();
    s.h0_1 = low_mode(1.0);
    s.h0_2 = low_mode(1.0);
    s.u0 = low_mode(0.0);
    s.u1 = low_mode(1.0);
    const double lj = amp(rng), wj = 2.0 * coef(rng), wf = 2.0 * coef(rng);
    s.j1 = ForcingField({{[lj](double t) { return std::exp(-lj * t); }, low_mode(1.0), json()}});
    s.f = ForcingField({{[wf](double t) { return std::cos(wf * t); }, low_mode(1.0), json()}});
    s.j2 = ForcingField({{[wj](double t) { return std::sin(wj * t); }, low_mode(0.0), json()}});
    s.T = T;
    return s;
}

// Diffusion-dominated instance with discontinuous magnetic viscosity.
inline ProblemSpec discontinuous_instance(int variant = 0) {
    ProblemSpec s;
    switch (variant % 3) {
        case 0:
            s.p = 1.0;
            s.r = PiecewiseCoefficient({0.5}, {{0.5}, {2.0}});
            s.nu = PiecewiseCoefficient::constant(1.0);
            s.h0_1 = SpatialField::fourier(0.2, {1.0}, {0.5});
            s.h0_2 = SpatialField::fourier(0.0, {}, {0.4});
            break;
        case 1:
            s.p = 0.5;
            s.r = PiecewiseCoefficient({0.25, 0.625}, {{1.0}, {0.4}, {1.6}});
            s.nu = PiecewiseCoefficient({0.5}, {{0.8}, {1.4}});
            s.h0_1 = SpatialField::fourier(0.0, {0.6, 0.3}, {});
            s.h0_2 = SpatialField::fourier(0.1, {}, {0.5});
            s.u1 = SpatialField::fourier(0.0, {0.3}, {});
            break;
        default:
            s.p = 1.5;
            s.r = PiecewiseCoefficient({0.375}, {{1.5}, {0.6}});
            s.nu = PiecewiseCoefficient::constant(1.2);
            s.h0_1 = SpatialField::fourier(0.0, {0.8}, {0.2});
            s.j1 = ForcingField({{[](double t) { return std::exp(-t); }, SpatialField::fourier(0.0, {0.0, 0.5}, {}), json()}});
            break;
    }
    s.T = 0.5;
    return s;
}

}  // namespace emel
