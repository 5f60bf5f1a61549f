#pragma once

// A-posteriori certificates on computed trajectories: energy balance, energy
// inequality, weak-form defects, interface jump estimates and the V2 / W11
// solution norms.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "emel/timestepper.hpp"

namespace emel {

// Signed defect of the balance law at every sample:
//   2 [term_h] + [term_ut] + [term_uz] + 2 D - 2 W_j - W_f,
// with [.] the change since t = 0.
inline std::vector<double> energy_balance_residual(const Trajectory& traj) {
    std::vector<double> out;
    if (traj.ledger.empty()) return out;
    const EnergyRecord& e0 = traj.ledger.front();
    out.reserve(traj.ledger.size());
    for (const auto& e : traj.ledger)
        out.push_back(2.0 * (e.term_h - e0.term_h) + (e.term_ut - e0.term_ut) + (e.term_uz - e0.term_uz) +
                      2.0 * e.dissipation_cum - 2.0 * e.work_j_cum - e.work_f_cum);
    return out;
}

inline double initial_total_energy(const Trajectory& traj) {
    return traj.ledger.empty() ? 0.0 : traj.ledger.front().total();
}

struct SlackSeries {
    std::vector<double> slack;
    std::vector<double> rhs;
};

// RHS - LHS of the a-priori inequality at every sample:
//   LHS = 1/2 int (p h^2 + u_t^2 + nu^2 u_z^2) + 1/2 int_0^t int p r h_z^2
//   RHS = int (p h0^2 + u1^2 + nu^2 u0_z^2) + int_0^t int p r |j|^2 + 2 t int_0^t int f^2
inline SlackSeries energy_inequality_slack_series(const Trajectory& traj, const ProblemSpec& spec) {
    const QuadratureGrid grid = grid_for(spec, std::max(traj.modes, 1));
    const double initial = grid.integrate([&](double z) {
        const double h1 = spec.h0_1(z), h2 = spec.h0_2(z), u1 = spec.u1(z), nu = spec.nu(z);
        const double u0z = spec.u0.derivative(z);
        return spec.p * (h1 * h1 + h2 * h2) + u1 * u1 + nu * nu * u0z * u0z;
    });
    SlackSeries s;
    for (const auto& e : traj.ledger) {
        const double lhs = e.total() + 0.5 * e.dissipation_cum;
        const double rhs = initial + e.jsq_cum + 2.0 * e.t * e.fsq_cum;
        s.slack.push_back(rhs - lhs);
        s.rhs.push_back(rhs);
    }
    return s;
}

inline std::vector<double> energy_inequality_slack(const Trajectory& traj, const ProblemSpec& spec) {
    return energy_inequality_slack_series(traj, spec).slack;
}

// Test family alpha_i(t) psi_k(z), alpha polynomial in t with alpha(T) = 0, and
// k over the first max_mode basis functions (which may exceed N).
struct WeakTestSpec {
    std::vector<std::vector<double>> alphas;
    int max_mode = 0;  // 0: min(N, 16)

    static WeakTestSpec standard(double T, int max_mode = 0) {
        return {{{T, -1.0}, {T * T, -2.0 * T, 1.0}}, max_mode};
    }
};

struct WeakResidual {
    double h1 = 0.0;
    double h2 = 0.0;
    double u = 0.0;

    double max() const { return std::max({h1, h2, u}); }
};

inline WeakResidual weak_residual(const Trajectory& traj, const ProblemSpec& spec, const GalerkinBasis& basis,
                                  const QuadratureGrid& grid, const WeakTestSpec& test) {
    const double T = traj.T;
    std::vector<Polynomial> alpha, dalpha;
    for (const auto& c : test.alphas) {
        Polynomial a(c);
        const double scale = std::max(1.0, std::abs(a(0.0)));
        if (c.empty() || std::abs(a(T)) > 1e-12 * scale)
            throw ValidationError("weak-form test function must vanish at t = T");
        alpha.push_back(a);
        dalpha.push_back(a.derivative());
    }
    const int n = basis.size();
    const int kmax = test.max_mode > 0 ? test.max_mode : std::min(n, 16);
    const GalerkinBasis tb = build_basis(kmax);
    const QuadratureGrid tgrid = grid.with_basis(tb);
    const QuadratureGrid sgrid = grid.with_basis(basis);
    const std::size_t m = grid.size();
    const auto A = alpha.size();
    const auto K = static_cast<std::size_t>(kmax);

    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const Eigen::Map<const RowMajor> tv(tgrid.table().values.data(), static_cast<Eigen::Index>(m), kmax);
    const Eigen::Map<const RowMajor> td(tgrid.table().derivatives.data(), static_cast<Eigen::Index>(m), kmax);
    const Eigen::Map<const Vector> w(grid.weights().data(), static_cast<Eigen::Index>(m));
    std::vector<double> r(m), nu2(m);
    for (std::size_t i = 0; i < m; ++i) {
        r[i] = spec.r(grid.nodes()[i]);
        nu2[i] = spec.nu(grid.nodes()[i]) * spec.nu(grid.nodes()[i]);
    }

    // acc[field][a * K + k]
    std::vector<std::vector<double>> acc(3, std::vector<double>(A * K, 0.0));
    const auto& g4 = detail::gauss4_unit();
    const auto times = traj.times();
    Vector gh1(static_cast<Eigen::Index>(m)), gh2(static_cast<Eigen::Index>(m)), gu(static_cast<Eigen::Index>(m)),
        gf(static_cast<Eigen::Index>(m));
    for (std::size_t step = 0; step + 1 < times.size(); ++step) {
        const double ta = times[step], tbnd = times[step + 1];
        for (std::size_t q = 0; q < g4.nodes.size(); ++q) {
            const double t = ta + g4.nodes[q] * (tbnd - ta);
            const double wt = g4.weights[q] * (tbnd - ta);
            const SpectralState s = dense_eval(traj, t);
            const auto h1 = synthesize(s.a1, basis, sgrid), h2 = synthesize(s.a2, basis, sgrid);
            const auto u = synthesize(s.b, basis, sgrid), ut = synthesize(s.bdot, basis, sgrid);
            for (std::size_t i = 0; i < m; ++i) {
                const auto ii = static_cast<Eigen::Index>(i);
                const double z = grid.nodes()[i];
                const double hsq = h1.values[i] * h1.values[i] + h2.values[i] * h2.values[i];
                gh1[ii] = w[ii] * (r[i] * (h1.derivatives[i] - spec.j1(t, z)) - h1.values[i] * ut.values[i]);
                gh2[ii] = w[ii] * (r[i] * (h2.derivatives[i] - spec.j2(t, z)) - h2.values[i] * ut.values[i]);
                gu[ii] = w[ii] * (nu2[i] * u.derivatives[i] - spec.p * hsq);
                gf[ii] = w[ii] * spec.f(t, z);
            }
            const Vector fh1 = td.transpose() * gh1, fh2 = td.transpose() * gh2;
            const Vector fu = td.transpose() * gu - tv.transpose() * gf;
            const Vector mh1 = tv.transpose() * (w.cwiseProduct(Eigen::Map<const Vector>(h1.values.data(), static_cast<Eigen::Index>(m))));
            const Vector mh2 = tv.transpose() * (w.cwiseProduct(Eigen::Map<const Vector>(h2.values.data(), static_cast<Eigen::Index>(m))));
            const Vector mut = tv.transpose() * (w.cwiseProduct(Eigen::Map<const Vector>(ut.values.data(), static_cast<Eigen::Index>(m))));
            for (std::size_t a = 0; a < A; ++a) {
                const double al = alpha[a](t), dal = dalpha[a](t);
                for (std::size_t k = 0; k < K; ++k) {
                    const auto kk = static_cast<Eigen::Index>(k);
                    acc[0][a * K + k] += wt * (al * fh1[kk] - dal * mh1[kk]);
                    acc[1][a * K + k] += wt * (al * fh2[kk] - dal * mh2[kk]);
                    acc[2][a * K + k] += wt * (al * fu[kk] - dal * mut[kk]);
                }
            }
        }
    }
    const Vector p01 = project_function(spec.h0_1, tb, tgrid);
    const Vector p02 = project_function(spec.h0_2, tb, tgrid);
    const Vector pu1 = project_function(spec.u1, tb, tgrid);
    WeakResidual res;
    for (std::size_t a = 0; a < A; ++a) {
        const double a0 = alpha[a](0.0);
        for (std::size_t k = 0; k < K; ++k) {
            const auto kk = static_cast<Eigen::Index>(k);
            res.h1 = std::max(res.h1, std::abs(acc[0][a * K + k] - a0 * p01[kk]));
            res.h2 = std::max(res.h2, std::abs(acc[1][a * K + k] - a0 * p02[kk]));
            res.u = std::max(res.u, std::abs(acc[2][a * K + k] - a0 * pu1[kk]));
        }
    }
    return res;
}

struct JumpValues {
    double h1 = 0.0, h2 = 0.0, u = 0.0;
    double flux_h1 = 0.0, flux_h2 = 0.0;  // [r (h_l,z - j_l)]
    double flux_u = 0.0;                  // [nu^2 u_z]

    double max_flux_h() const { return std::max(std::abs(flux_h1), std::abs(flux_h2)); }
};

struct JumpEntry {
    double z = 0.0;
    JumpValues at_delta;      // right minus left at z +- delta
    JumpValues extrapolated;  // 2 J(delta/2) - J(delta)
    // Window form: right-minus-left averages over [z, z+delta] and [z-delta, z],
    // with the flux entries corrected by the local balance (hat test function of
    // half-width delta); identically zero for an exact weak solution.
    JumpValues weak;
};

struct JumpReport {
    double t = 0.0;
    double delta = 0.0;
    std::vector<JumpEntry> points;
};

namespace detail {

inline double synth_value(const Vector& c, const GalerkinBasis& b, double z) {
    double s = 0.0;
    for (int k = 0; k < b.size(); ++k) s += c[k] * b.value(k, z);
    return s;
}

inline double synth_derivative(const Vector& c, const GalerkinBasis& b, double z) {
    double s = 0.0;
    for (int k = 0; k < b.size(); ++k) s += c[k] * b.derivative(k, z);
    return s;
}

inline JumpValues jump_at(const SpectralState& s, const ProblemSpec& spec, const GalerkinBasis& b, double z,
                          double delta) {
    const double zr = z + delta, zl = z - delta;
    auto side = [&](double x) {
        struct Side {
            double h1, h2, u, fh1, fh2, fu;
        } out;
        const double r = spec.r(x), nu = spec.nu(x);
        out.h1 = synth_value(s.a1, b, x);
        out.h2 = synth_value(s.a2, b, x);
        out.u = synth_value(s.b, b, x);
        out.fh1 = r * (synth_derivative(s.a1, b, x) - spec.j1(s.t, x));
        out.fh2 = r * (synth_derivative(s.a2, b, x) - spec.j2(s.t, x));
        out.fu = nu * nu * synth_derivative(s.b, b, x);
        return out;
    };
    const auto R = side(zr), L = side(zl);
    return {R.h1 - L.h1, R.h2 - L.h2, R.u - L.u, R.fh1 - L.fh1, R.fh2 - L.fh2, R.fu - L.fu};
}

}  // namespace detail

// Smallest distance between consecutive coefficient jump points on the torus.
inline double smallest_piece_width(const std::vector<double>& jumps) {
    if (jumps.empty()) return 1.0;
    if (jumps.size() == 1) return 1.0;
    double w = 1.0 - jumps.back() + jumps.front();
    for (std::size_t i = 1; i < jumps.size(); ++i) w = std::min(w, jumps[i] - jumps[i - 1]);
    return w;
}

namespace detail {

// Window averages and the hat-weighted balance terms around z.
inline JumpValues weak_jump(const SpectralState& s, const SpectralState& ds, const ProblemSpec& spec,
                            const GalerkinBasis& b, double z, double delta) {
    static const GaussRule rule = gauss_legendre(12);
    constexpr int panels = 16;
    JumpValues out;
    for (int side = -1; side <= 1; side += 2) {
        const double a = side < 0 ? z - delta : z;
        for (int k = 0; k < panels; ++k) {
            const double lo = a + delta * k / panels, hi = a + delta * (k + 1) / panels;
            for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
                const double x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * rule.nodes[q];
                const double w = 0.5 * (hi - lo) * rule.weights[q] / delta;  // averaging weight
                const double hat = 1.0 - std::abs(x - z) / delta;
                const double r = spec.r(x), nu = spec.nu(x);
                const double h1 = synth_value(s.a1, b, x), h2 = synth_value(s.a2, b, x);
                const double ut = synth_value(s.bdot, b, x);
                const double F1 = r * (synth_derivative(s.a1, b, x) - spec.j1(s.t, x)) - h1 * ut;
                const double F2 = r * (synth_derivative(s.a2, b, x) - spec.j2(s.t, x)) - h2 * ut;
                const double Fu = nu * nu * synth_derivative(s.b, b, x) - spec.p * (h1 * h1 + h2 * h2);
                const double sgn = static_cast<double>(side);
                out.h1 += sgn * w * h1;
                out.h2 += sgn * w * h2;
                out.u += sgn * w * synth_value(s.b, b, x);
                // [F]_avg - int h_t hat  (the hat integral carries weight delta * w)
                out.flux_h1 += sgn * w * F1 - delta * w * hat * synth_value(ds.a1, b, x);
                out.flux_h2 += sgn * w * F2 - delta * w * hat * synth_value(ds.a2, b, x);
                out.flux_u += sgn * w * Fu - delta * w * hat * (synth_value(ds.bdot, b, x) - spec.f(s.t, x));
            }
        }
    }
    return out;
}

}  // namespace detail

inline JumpReport jump_report(const Trajectory& traj, const ProblemSpec& spec, double t, double delta) {
    const auto jumps = spec.coefficient_jumps();
    if (!(delta > 0.0) || !(delta < 0.5 * smallest_piece_width(jumps)))
        throw ValidationError("jump offset delta must lie in (0, half the smallest piece width)");
    const SpectralState s = dense_eval(traj, t);
    const GalerkinBasis b = build_basis(traj.modes);
    JumpReport rep{t, delta, {}};
    if (jumps.empty()) return rep;
    const GalerkinSystem sys(spec, b, grid_for(spec, traj.modes));
    const SpectralState ds = SpectralState::unpack(sys(t, s.pack()), t);
    for (double z : jumps) {
        JumpEntry e;
        e.z = z;
        e.at_delta = detail::jump_at(s, spec, b, z, delta);
        const JumpValues half = detail::jump_at(s, spec, b, z, 0.5 * delta);
        auto rich = [](double full, double hf) { return 2.0 * hf - full; };
        e.extrapolated = {rich(e.at_delta.h1, half.h1),           rich(e.at_delta.h2, half.h2),
                          rich(e.at_delta.u, half.u),             rich(e.at_delta.flux_h1, half.flux_h1),
                          rich(e.at_delta.flux_h2, half.flux_h2), rich(e.at_delta.flux_u, half.flux_u)};
        e.weak = detail::weak_jump(s, ds, spec, b, z, delta);
        rep.points.push_back(e);
    }
    return rep;
}

// Solution norms on Pi_T. V2 of h: vrai max_t ||h|| + ||h_z||_{2,Pi_T};
// W11 of u: ||u|| + ||u_z|| + ||u_t|| in L2(Pi_T). Both are exact quadratic forms
// in the orthonormal coefficients.
struct SolutionNorms {
    double V2 = 0.0;
    double W11 = 0.0;
    double sup_h = 0.0;
    double h_z = 0.0;
    double u = 0.0;
    double u_z = 0.0;
    double u_t = 0.0;
};

namespace detail {

inline Vector padded(const Vector& v, Eigen::Index n) {
    Vector out = Vector::Zero(n);
    out.head(v.size()) = v;
    return out;
}

inline double weighted_sq(const Vector& c, const GalerkinBasis& b) {
    double s = 0.0;
    for (int k = 0; k < static_cast<int>(c.size()); ++k) s += b.derivative_norm_sq(k) * c[k] * c[k];
    return s;
}

// Difference state A - B on the larger basis; B may be absent.
inline SpectralState difference(const SpectralState& a, const SpectralState* b, Eigen::Index n) {
    SpectralState d{a.t, padded(a.a1, n), padded(a.a2, n), padded(a.b, n), padded(a.bdot, n)};
    if (b) {
        d.a1 -= padded(b->a1, n);
        d.a2 -= padded(b->a2, n);
        d.b -= padded(b->b, n);
        d.bdot -= padded(b->bdot, n);
    }
    return d;
}

inline std::vector<double> merged_times(const Trajectory& a, const Trajectory* b) {
    std::vector<double> t = a.times();
    if (b) {
        const auto tb = b->times();
        t.insert(t.end(), tb.begin(), tb.end());
        std::sort(t.begin(), t.end());
        std::vector<double> out;
        for (double x : t)
            if (out.empty() || x - out.back() > 1e-14 * std::max(1.0, a.T)) out.push_back(x);
        out.back() = std::min(a.T, b->T);
        t = std::move(out);
    }
    return t;
}

inline SolutionNorms norms_impl(const Trajectory& a, const Trajectory* b) {
    if (a.samples.empty() || (b && b->samples.empty())) return {};
    if (b && std::abs(a.T - b->T) > 1e-12 * std::max(1.0, a.T))
        throw ValidationError("trajectories cover different horizons");
    const Eigen::Index n = std::max(a.modes, b ? b->modes : 0);
    const GalerkinBasis basis = build_basis(static_cast<int>(n));
    auto state = [&](double t) {
        const SpectralState sa = dense_eval(a, t);
        if (!b) return difference(sa, nullptr, n);
        const SpectralState sb = dense_eval(*b, t);
        return difference(sa, &sb, n);
    };
    auto hnorm = [&](double t) {
        const SpectralState d = state(t);
        return std::sqrt(d.a1.squaredNorm() + d.a2.squaredNorm());
    };
    const auto times = merged_times(a, b);

    SolutionNorms out;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double v = hnorm(times[i]);
        if (v > out.sup_h) {
            out.sup_h = v;
            arg = i;
        }
    }
    // refine around the sampled argmax
    double lo = times[arg > 0 ? arg - 1 : 0], hi = times[std::min(arg + 1, times.size() - 1)];
    double center = times[arg];
    for (int round = 0; round < 3 && hi > lo; ++round) {
        const double l = 0.5 * (lo + center), r = 0.5 * (center + hi);
        const double vl = hnorm(l), vr = hnorm(r);
        if (vl > out.sup_h && vl >= vr) {
            out.sup_h = vl;
            hi = center;
            center = l;
        } else if (vr > out.sup_h) {
            out.sup_h = vr;
            lo = center;
            center = r;
        } else {
            lo = l;
            hi = r;
        }
    }

    double hz = 0.0, u = 0.0, uz = 0.0, ut = 0.0;
    const auto& g = gauss4_unit();
    for (std::size_t k = 0; k + 1 < times.size(); ++k) {
        const double t0 = times[k], t1 = times[k + 1];
        for (std::size_t q = 0; q < g.nodes.size(); ++q) {
            const SpectralState d = state(t0 + g.nodes[q] * (t1 - t0));
            const double w = g.weights[q] * (t1 - t0);
            hz += w * (weighted_sq(d.a1, basis) + weighted_sq(d.a2, basis));
            u += w * d.b.squaredNorm();
            uz += w * weighted_sq(d.b, basis);
            ut += w * d.bdot.squaredNorm();
        }
    }
    out.h_z = std::sqrt(hz);
    out.u = std::sqrt(u);
    out.u_z = std::sqrt(uz);
    out.u_t = std::sqrt(ut);
    out.V2 = out.sup_h + out.h_z;
    out.W11 = out.u + out.u_z + out.u_t;
    return out;
}

}  // namespace detail

inline SolutionNorms solution_norms(const Trajectory& traj) { return detail::norms_impl(traj, nullptr); }
inline double norm_V2(const Trajectory& traj) { return solution_norms(traj).V2; }
inline double norm_W11(const Trajectory& traj) { return solution_norms(traj).W11; }

// Norms of A - B with the smaller expansion zero-padded into the larger basis.
inline SolutionNorms difference_norms(const Trajectory& a, const Trajectory& b) { return detail::norms_impl(a, &b); }

// max over samples and grid nodes of |h|.
inline double max_abs_h(const Trajectory& traj, const QuadratureGrid& grid) {
    const GalerkinBasis b = build_basis(traj.modes);
    const QuadratureGrid g = grid.with_basis(b);
    double m = 0.0;
    for (const auto& s : traj.samples) {
        const auto h1 = synthesize(s.a1, b, g), h2 = synthesize(s.a2, b, g);
        for (std::size_t i = 0; i < g.size(); ++i)
            m = std::max(m, std::hypot(h1.values[i], h2.values[i]));
    }
    return m;
}

// Window used when none is given: a quarter of the narrowest coefficient piece.
inline double default_jump_delta(const ProblemSpec& spec) {
    return 0.25 * smallest_piece_width(spec.coefficient_jumps());
}

// Largest window-form flux jump of h over all breakpoints at time t.
inline double transmission_defect(const Trajectory& traj, const ProblemSpec& spec, double t, double delta = 0.0) {
    if (spec.coefficient_jumps().empty()) return 0.0;
    const JumpReport rep = jump_report(traj, spec, t, delta > 0.0 ? delta : default_jump_delta(spec));
    double m = 0.0;
    for (const auto& e : rep.points) m = std::max(m, e.weak.max_flux_h());
    return m;
}

// Per-breakpoint max over t_i = i T / samples (i = 1..samples) of the window-form flux jump of h.
inline std::vector<double> transmission_defect_profile(const Trajectory& traj, const ProblemSpec& spec, int samples = 160,
                                                       double delta = 0.0) {
    if (samples < 1) throw ValidationError("transmission_defect_profile: samples must be positive");
    if (spec.coefficient_jumps().empty()) return {};
    const double d = delta > 0.0 ? delta : default_jump_delta(spec);
    std::vector<double> out;
    for (int i = 1; i <= samples; ++i) {
        const JumpReport rep = jump_report(traj, spec, spec.T * i / samples, d);
        out.resize(rep.points.size(), 0.0);
        for (std::size_t k = 0; k < rep.points.size(); ++k) out[k] = std::max(out[k], rep.points[k].weak.max_flux_h());
    }
    return out;
}

inline json to_json(const JumpReport& r) {
    json pts = json::array();
    auto vals = [](const JumpValues& v) {
        return json{{"h1", v.h1}, {"h2", v.h2}, {"u", v.u}, {"flux_h1", v.flux_h1}, {"flux_h2", v.flux_h2},
                    {"flux_u", v.flux_u}};
    };
    for (const auto& e : r.points)
        pts.push_back(json{{"z", e.z},
                            {"at_delta", vals(e.at_delta)},
                            {"extrapolated", vals(e.extrapolated)},
                            {"weak", vals(e.weak)}});
    return json{{"t", r.t}, {"delta", r.delta}, {"points", pts}};
}

inline json to_json(const WeakResidual& w) { return json{{"h1", w.h1}, {"h2", w.h2}, {"u", w.u}}; }

inline json to_json(const SolutionNorms& n) {
    return json{{"V2", n.V2},   {"W11", n.W11}, {"sup_h", n.sup_h}, {"h_z", n.h_z},
                {"u", n.u},     {"u_z", n.u_z}, {"u_t", n.u_t}};
}

}  // namespace emel
