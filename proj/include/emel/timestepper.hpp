#pragma once

// Adaptive time integration of the Galerkin system with a Hermite dense output
// and an energy ledger accumulated by per-step Gauss quadrature.
//
// Schemes (both with an embedded order-2 error estimate and L-stable,
// stiffly accurate implicit tableau):
//   "ark324"    additive IMEX Runge-Kutta ARK3(2)4L[2]SA; the linear diffusion
//               and wave operators are implicit, transport, coupling and
//               forcing explicit.
//   "esdirk324" the implicit tableau applied to the full right-hand side;
//               stage equations solved by a fixed-point iteration on the
//               nonlinear part with the exact linear inverse.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "emel/galerkin.hpp"

namespace emel {

struct IntegratorConfig {
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    double dt_init = 1e-4;
    double dt_max = 1e-2;
    std::string scheme = "ark324";
    long max_steps = 2'000'000;

    void validate() const {
        if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw ValidationError("integrator tolerances must be positive");
        if (!(dt_init > 0.0) || !(dt_max > 0.0) || dt_init > dt_max)
            throw ValidationError("integrator step bounds need 0 < dt_init <= dt_max");
        if (max_steps < 1) throw ValidationError("max_steps must be >= 1");
        if (scheme != "ark324" && scheme != "esdirk324")
            throw ValidationError("unknown integrator scheme \"" + scheme + "\" (expected ark324 or esdirk324)");
    }

    json to_json() const {
        return json{{"rel_tol", rel_tol}, {"abs_tol", abs_tol}, {"dt_init", dt_init},
                    {"dt_max", dt_max},   {"scheme", scheme},   {"max_steps", max_steps}};
    }

    static IntegratorConfig from_json(const json& doc) {
        IntegratorConfig c;
        if (doc.is_null()) return c;
        try {
            c.rel_tol = doc.value("rel_tol", c.rel_tol);
            c.abs_tol = doc.value("abs_tol", c.abs_tol);
            c.dt_init = doc.value("dt_init", c.dt_init);
            c.dt_max = doc.value("dt_max", c.dt_max);
            c.scheme = doc.value("scheme", c.scheme);
            c.max_steps = doc.value("max_steps", c.max_steps);
        } catch (const json::exception& e) {
            throw ValidationError(std::string("integrator schema violation: ") + e.what());
        }
        c.validate();
        return c;
    }
};

// Kennedy & Carpenter ARK3(2)4L[2]SA coefficients.
struct Ark324Tableau {
    static constexpr int stages = 4;
    static constexpr double gamma = 1767732205903.0 / 4055673282236.0;
    static constexpr std::array<double, 4> c{0.0, 1767732205903.0 / 2027836641118.0, 3.0 / 5.0, 1.0};
    static constexpr std::array<std::array<double, 4>, 4> ae{{
        {0.0, 0.0, 0.0, 0.0},
        {1767732205903.0 / 2027836641118.0, 0.0, 0.0, 0.0},
        {5535828885825.0 / 10492691773637.0, 788022342437.0 / 10882634858940.0, 0.0, 0.0},
        {6485989280629.0 / 16251701735622.0, -4246266847089.0 / 9704473918619.0,
         10755448449292.0 / 10357097424841.0, 0.0},
    }};
    static constexpr std::array<std::array<double, 4>, 4> ai{{
        {0.0, 0.0, 0.0, 0.0},
        {1767732205903.0 / 4055673282236.0, 1767732205903.0 / 4055673282236.0, 0.0, 0.0},
        {2746238789719.0 / 10658868560708.0, -640167445237.0 / 6845629431997.0, gamma, 0.0},
        {1471266399579.0 / 7840856788654.0, -4482444167858.0 / 7529755066697.0,
         11266239266428.0 / 11593286722821.0, gamma},
    }};
    static constexpr std::array<double, 4> b{1471266399579.0 / 7840856788654.0, -4482444167858.0 / 7529755066697.0,
                                             11266239266428.0 / 11593286722821.0, gamma};
    static constexpr std::array<double, 4> bhat{2756255671327.0 / 12835298489170.0,
                                                -10771552573575.0 / 22201958757719.0,
                                                9247589265047.0 / 10645013368117.0,
                                                2193209047091.0 / 5459859503100.0};
};

struct StepStats {
    long accepted = 0;
    long rejected = 0;
    long rhs_evals = 0;
};

struct Trajectory {
    int modes = 0;
    double T = 0.0;
    std::vector<SpectralState> samples;
    std::vector<Vector> derivatives;  // packed time derivative at each sample
    std::vector<EnergyRecord> ledger;
    StepStats stats;

    std::vector<double> times() const {
        std::vector<double> t;
        t.reserve(samples.size());
        for (const auto& s : samples) t.push_back(s.t);
        return t;
    }
};

namespace detail {

inline Vector hermite(double t0, const Vector& y0, const Vector& f0, double t1, const Vector& y1, const Vector& f1,
                      double t) {
    const double h = t1 - t0;
    const double s = (t - t0) / h;
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * y0 + (h * (s3 - 2 * s2 + s)) * f0 + (-2 * s3 + 3 * s2) * y1 +
           (h * (s3 - s2)) * f1;
}

// Gauss-Legendre 4-point rule on [0,1].
inline const GaussRule& gauss4_unit() {
    static const GaussRule rule = [] {
        GaussRule g = gauss_legendre(4);
        for (auto& x : g.nodes) x = 0.5 * (x + 1.0);
        for (auto& w : g.weights) w *= 0.5;
        return g;
    }();
    return rule;
}

// Solves (I - c L) Y = rhs for the linear part of the Galerkin system.
class LinearSolver {
public:
    explicit LinearSolver(const GalerkinSystem& sys) : sys_(sys) {}

    Vector solve(double c, const Vector& rhs) {
        const Eigen::Index n = sys_.modes();
        if (!c_ || *c_ != c) {
            const Matrix I = Matrix::Identity(n, n);
            h_.compute(I + c * sys_.diffusion_matrix());
            u_.compute(I + (c * c) * sys_.stiffness_matrix());
            c_ = c;
        }
        Vector y(4 * n);
        y.segment(0, n) = h_.solve(rhs.segment(0, n));
        y.segment(n, n) = h_.solve(rhs.segment(n, n));
        const Vector rb = rhs.segment(2 * n, n);
        const Vector rbd = rhs.segment(3 * n, n) - c * (sys_.stiffness_matrix() * rb);
        y.segment(3 * n, n) = u_.solve(rbd);
        y.segment(2 * n, n) = rb + c * y.segment(3 * n, n);
        return y;
    }

private:
    const GalerkinSystem& sys_;
    std::optional<double> c_;
    Eigen::LLT<Matrix> h_, u_;
};

inline double error_norm(const Vector& err, const Vector& y0, const Vector& y1, double rtol, double atol) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
        const double w = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        const double e = err[i] / w;
        s += e * e;
    }
    return std::sqrt(s / static_cast<double>(err.size()));
}

}  // namespace detail

// Integrates on [0, spec.T]; every output time is hit exactly by a step.
inline Trajectory integrate(const GalerkinSystem& sys, const IntegratorConfig& config,
                            std::vector<double> output_times = {}) {
    config.validate();
    using Tab = Ark324Tableau;
    const double T = sys.spec().T;
    for (double t : output_times)
        if (!(t >= 0.0 && t <= T)) throw ValidationError("output time outside [0,T]");
    output_times.push_back(T);
    std::sort(output_times.begin(), output_times.end());
    std::vector<double> stops;
    for (double t : output_times)
        if (t > 0.0 && (stops.empty() || t - stops.back() > 1e-12 * T)) stops.push_back(t);
    stops.back() = T;

    const bool imex = config.scheme == "ark324";
    detail::LinearSolver solver(sys);
    Trajectory traj;
    traj.modes = sys.modes();
    traj.T = T;

    const SpectralState s0 = init_state(sys.spec(), sys.basis(), sys.grid());
    Vector y = s0.pack();
    double t = 0.0;
    Vector fe = sys.apply_nonlinear(t, y), fi = sys.apply_linear(y);
    traj.stats.rhs_evals++;

    auto record = [&](double time, const Vector& state, const Vector& deriv, EnergyRecord cum) {
        SpectralState s = SpectralState::unpack(state, time);
        EnergyRecord e = sys.energy(s);
        cum.t = time;
        cum.term_h = e.term_h;
        cum.term_ut = e.term_ut;
        cum.term_uz = e.term_uz;
        traj.samples.push_back(std::move(s));
        traj.derivatives.push_back(deriv);
        traj.ledger.push_back(cum);
    };
    record(0.0, y, fe + fi, EnergyRecord{});

    const double atol = config.abs_tol, rtol = config.rel_tol;
    double dt = std::min({config.dt_init, config.dt_max, T});
    std::size_t next = 0;
    const int S = Tab::stages;
    std::array<Vector, 4> FE, FI;

    while (next < stops.size()) {
        const double stop = stops[next];
        double h = std::min(dt, config.dt_max);
        bool clipped = false;
        if (t + h >= stop - 1e-12 * T) {
            h = stop - t;
            clipped = true;
        }
        if (traj.stats.accepted + traj.stats.rejected >= config.max_steps)
            throw SolverError("max_steps (" + std::to_string(config.max_steps) + ") exceeded", t);
        if (h < 1e-14 * std::max(1.0, T))
            throw SolverError("step size collapse (possible blow-up)", t);

        bool ok = true;
        Vector ynew, yhat;
        try {
            FE[0] = fe;
            FI[0] = fi;
            for (int i = 1; i < S && ok; ++i) {
                const double ti = t + Tab::c[static_cast<std::size_t>(i)] * h;
                Vector base = y;
                for (int j = 0; j < i; ++j) {
                    const auto ij = static_cast<std::size_t>(j);
                    const auto ii = static_cast<std::size_t>(i);
                    if (imex) base += h * (Tab::ae[ii][ij] * FE[ij] + Tab::ai[ii][ij] * FI[ij]);
                    else base += (h * Tab::ai[ii][ij]) * (FE[ij] + FI[ij]);
                }
                const double c = h * Tab::gamma;
                Vector Yi;
                if (imex) {
                    Yi = solver.solve(c, base);
                } else {
                    Yi = y;
                    bool converged = false;
                    double prev = 0.0;
                    for (int it = 0; it < 60; ++it) {
                        Vector Fe = sys.apply_nonlinear(ti, Yi);
                        traj.stats.rhs_evals++;
                        Vector Ynext = solver.solve(c, base + c * Fe);
                        const double d = detail::error_norm(Ynext - Yi, Yi, Ynext, rtol, atol);
                        Yi = std::move(Ynext);
                        if (d < 1e-3) {
                            converged = true;
                            break;
                        }
                        if (it > 2 && d > 0.9 * prev) break;
                        prev = d;
                    }
                    if (!converged) {
                        ok = false;
                        break;
                    }
                }
                FE[static_cast<std::size_t>(i)] = sys.apply_nonlinear(ti, Yi);
                FI[static_cast<std::size_t>(i)] = sys.apply_linear(Yi);
                traj.stats.rhs_evals++;
            }
            if (ok) {
                ynew = y;
                yhat = y;
                for (int j = 0; j < S; ++j) {
                    const auto jj = static_cast<std::size_t>(j);
                    const Vector F = FE[jj] + FI[jj];
                    ynew += (h * Tab::b[jj]) * F;
                    yhat += (h * Tab::bhat[jj]) * F;
                }
                ok = ynew.allFinite();
            }
        } catch (const SolverError&) {
            ok = false;
        }

        const double err = ok ? detail::error_norm(ynew - yhat, y, ynew, rtol, atol) : 1e10;
        if (ok && err <= 1.0) {
            const double tnew = clipped ? stop : t + h;
            Vector fe_new, fi_new;
            try {
                fe_new = sys.apply_nonlinear(tnew, ynew);
            } catch (const SolverError& e) {
                throw SolverError(std::string("blow-up: ") + e.what(), t);
            }
            fi_new = sys.apply_linear(ynew);
            traj.stats.rhs_evals++;
            const Vector f0 = fe + fi, f1 = fe_new + fi_new;

            EnergyRecord cum = traj.ledger.back();
            const auto& g = detail::gauss4_unit();
            for (std::size_t q = 0; q < g.nodes.size(); ++q) {
                const double tq = t + g.nodes[q] * (tnew - t);
                const Vector yq = detail::hermite(t, y, f0, tnew, ynew, f1, tq);
                const PowerTerms pw = sys.power(tq, yq);
                const double w = g.weights[q] * (tnew - t);
                cum.dissipation_cum += w * pw.dissipation;
                cum.work_j_cum += w * pw.work_j;
                cum.work_f_cum += w * pw.work_f;
                cum.jsq_cum += w * pw.jsq;
                cum.fsq_cum += w * pw.fsq;
            }
            record(tnew, ynew, f1, cum);

            traj.stats.accepted++;
            const double fac = std::clamp(0.9 * std::pow(std::max(err, 1e-10), -1.0 / 3.0), 0.2, 5.0);
            const double proposal = h * fac;
            dt = (clipped && fac >= 1.0) ? std::max(proposal, dt) : proposal;
            dt = std::min(dt, config.dt_max);
            t = tnew;
            y = std::move(ynew);
            fe = std::move(fe_new);
            fi = std::move(fi_new);
            if (clipped) ++next;
        } else {
            traj.stats.rejected++;
            const double fac = ok ? std::clamp(0.9 * std::pow(err, -1.0 / 3.0), 0.2, 0.9) : 0.25;
            dt = h * fac;
        }
    }
    return traj;
}

inline Trajectory integrate(const ProblemSpec& spec, const IntegratorConfig& config, const GalerkinBasis& basis,
                            const QuadratureGrid& grid, std::vector<double> output_times = {}) {
    GalerkinSystem sys(spec, basis, grid);
    return integrate(sys, config, std::move(output_times));
}

// State at time t from the cubic Hermite interpolant between samples.
inline SpectralState dense_eval(const Trajectory& traj, double t) {
    if (traj.samples.empty()) throw ValidationError("empty trajectory");
    const double t0 = traj.samples.front().t, t1 = traj.samples.back().t;
    if (!(t >= t0 && t <= t1)) throw ValidationError("dense_eval time " + std::to_string(t) + " outside [0,T]");
    if (t == t0) return traj.samples.front();
    if (t == t1) return traj.samples.back();
    auto it = std::lower_bound(traj.samples.begin(), traj.samples.end(), t,
                               [](const SpectralState& s, double v) { return s.t < v; });
    const auto k = static_cast<std::size_t>(it - traj.samples.begin());
    if (it->t == t) return *it;
    const auto& a = traj.samples[k - 1];
    const auto& b = traj.samples[k];
    return SpectralState::unpack(
        detail::hermite(a.t, a.pack(), traj.derivatives[k - 1], b.t, b.pack(), traj.derivatives[k], t), t);
}

// Composite 4-point Gauss rule over a time partition.
template <class F>
double integrate_over_partition(const std::vector<double>& partition, F&& integrand) {
    const auto& g = detail::gauss4_unit();
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < partition.size(); ++k) {
        const double a = partition[k], b = partition[k + 1];
        for (std::size_t q = 0; q < g.nodes.size(); ++q) s += g.weights[q] * (b - a) * integrand(a + g.nodes[q] * (b - a));
    }
    return s;
}

// int_0^T F(state(t)) dt over the trajectory's own steps.
template <class F>
double integrate_in_time(const Trajectory& traj, F&& integrand) {
    return integrate_over_partition(traj.times(), [&](double t) { return integrand(dense_eval(traj, t)); });
}

}  // namespace emel
