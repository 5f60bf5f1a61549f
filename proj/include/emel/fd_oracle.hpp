#pragma once

// Conservative finite-volume discretization on a uniform periodic grid, used as
// an independent cross-check of the spectral solver. Unknowns live at cell
// centres; breakpoints sit on faces and face coefficients are harmonic means of
// the adjacent cells. Diffusion of h uses a two-stage L-stable SDIRK (stiffly
// accurate, so flux sources at coefficient jumps do not ring), the remainder RK4,
// combined by Strang splitting.

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "emel/diagnostics.hpp"

namespace emel {

struct FdSolution {
    int cells = 0;
    double t = 0.0;
    std::vector<double> z;  // cell centres
    std::vector<double> h1, h2, u, ut;
};

namespace detail {

struct FdState {
    Vector h1, h2, u, v;
};

inline FdState axpy(const FdState& a, double s, const FdState& b) {
    return {a.h1 + s * b.h1, a.h2 + s * b.h2, a.u + s * b.u, a.v + s * b.v};
}

class FdOperator {
public:
    FdOperator(const ProblemSpec& spec, int m) : spec_(spec), m_(m), dz_(1.0 / m), rf_(m), nu2f_(m), zc_(m), zf_(m) {
        for (int i = 0; i < m; ++i) {
            zc_[i] = (i + 0.5) * dz_;
            zf_[i] = (i + 1) * dz_;  // face between cell i and cell i+1 (mod m)
        }
        for (int i = 0; i < m; ++i) {
            const int k = (i + 1) % m;
            const double ra = spec.r(zc_[i]), rb = spec.r(zc_[k]);
            const double na = spec.nu(zc_[i]), nb = spec.nu(zc_[k]);
            rf_[i] = 2.0 * ra * rb / (ra + rb);
            nu2f_[i] = 2.0 * na * na * nb * nb / (na * na + nb * nb);
        }
    }

    int cells() const { return m_; }
    double dz() const { return dz_; }
    const std::vector<double>& centres() const { return zc_; }

    // Periodic r-weighted Laplacian acting on cell values.
    Eigen::SparseMatrix<double> diffusion() const {
        std::vector<Eigen::Triplet<double>> t;
        const double s = 1.0 / (dz_ * dz_);
        for (int i = 0; i < m_; ++i) {
            const int right = i, left = (i + m_ - 1) % m_;
            const int ip = (i + 1) % m_, im = (i + m_ - 1) % m_;
            t.emplace_back(i, ip, s * rf_[right]);
            t.emplace_back(i, im, s * rf_[left]);
            t.emplace_back(i, i, -s * (rf_[right] + rf_[left]));
        }
        Eigen::SparseMatrix<double> L(m_, m_);
        L.setFromTriplets(t.begin(), t.end());
        return L;
    }

    // Everything except h diffusion.
    FdState explicit_rhs(double t, const FdState& y) const {
        FdState d{Vector::Zero(m_), Vector::Zero(m_), y.v, Vector::Zero(m_)};
        Vector F1(m_), F2(m_), G(m_);
        for (int i = 0; i < m_; ++i) {
            const int k = (i + 1) % m_;
            const double vf = 0.5 * (y.v[i] + y.v[k]);
            const double z = zf_[i] >= 1.0 ? zf_[i] - 1.0 : zf_[i];
            F1[i] = -rf_[i] * spec_.j1(t, z) - 0.5 * (y.h1[i] + y.h1[k]) * vf;
            F2[i] = -rf_[i] * spec_.j2(t, z) - 0.5 * (y.h2[i] + y.h2[k]) * vf;
            const double sa = y.h1[i] * y.h1[i] + y.h2[i] * y.h2[i];
            const double sb = y.h1[k] * y.h1[k] + y.h2[k] * y.h2[k];
            G[i] = nu2f_[i] * (y.u[k] - y.u[i]) / dz_ - spec_.p * 0.5 * (sa + sb);
        }
        for (int i = 0; i < m_; ++i) {
            const int l = (i + m_ - 1) % m_;
            d.h1[i] = (F1[i] - F1[l]) / dz_;
            d.h2[i] = (F2[i] - F2[l]) / dz_;
            d.v[i] = (G[i] - G[l]) / dz_ + spec_.f(t, zc_[i]);
        }
        return d;
    }

    double max_wave_speed() const {
        double c = 0.0;
        for (double z : zc_) c = std::max(c, std::abs(spec_.nu(z)));
        return c;
    }

private:
    const ProblemSpec& spec_;
    int m_;
    double dz_;
    std::vector<double> rf_, nu2f_, zc_, zf_;
};

}  // namespace detail

inline void check_fd_alignment(const ProblemSpec& spec, int m) {
    for (double zk : spec.coefficient_jumps()) {
        const double x = zk * m;
        if (std::abs(x - std::round(x)) > 1e-9)
            throw ValidationError("fd grid with " + std::to_string(m) + " cells does not place breakpoint " +
                                  std::to_string(zk) + " on a face");
    }
}

inline FdSolution fd_oracle(const ProblemSpec& spec, int m, double dt) {
    validate(spec);
    if (m < 4) throw ValidationError("fd grid needs at least 4 cells");
    if (!(dt > 0.0)) throw ValidationError("fd time step must be positive");
    check_fd_alignment(spec, m);
    const detail::FdOperator op(spec, m);
    const double cfl = dt * op.max_wave_speed() / op.dz();
    if (cfl > 1.0)
        throw ValidationError("fd time step violates the wave CFL limit: nu_max dt / dz = " + std::to_string(cfl));

    const auto& zc = op.centres();
    detail::FdState y{Vector(m), Vector(m), Vector(m), Vector(m)};
    for (int i = 0; i < m; ++i) {
        y.h1[i] = spec.h0_1(zc[i]);
        y.h2[i] = spec.h0_2(zc[i]);
        y.u[i] = spec.u0(zc[i]);
        y.v[i] = spec.u1(zc[i]);
    }

    const int steps = static_cast<int>(std::ceil(spec.T / dt - 1e-9));
    const double k = spec.T / steps;
    Eigen::SparseMatrix<double> I(m, m);
    I.setIdentity();
    const Eigen::SparseMatrix<double> L = op.diffusion();
    const double gamma = 1.0 - std::sqrt(0.5), half = 0.5 * k;
    const Eigen::SparseMatrix<double> A = I - (gamma * half) * L;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) throw SolverError("fd diffusion factorization failed", 0.0);
    auto sdirk = [&](const Vector& y0) -> Vector {
        const Vector y1 = lu.solve(y0);
        return lu.solve(y0 + ((1.0 - gamma) * half) * (L * y1));
    };
    auto diffuse = [&](detail::FdState& s) {
        s.h1 = sdirk(s.h1);
        s.h2 = sdirk(s.h2);
    };

    double t = 0.0;
    for (int n = 0; n < steps; ++n) {
        diffuse(y);
        const auto k1 = op.explicit_rhs(t, y);
        const auto k2 = op.explicit_rhs(t + 0.5 * k, detail::axpy(y, 0.5 * k, k1));
        const auto k3 = op.explicit_rhs(t + 0.5 * k, detail::axpy(y, 0.5 * k, k2));
        const auto k4 = op.explicit_rhs(t + k, detail::axpy(y, k, k3));
        y.h1 += (k / 6.0) * (k1.h1 + 2.0 * k2.h1 + 2.0 * k3.h1 + k4.h1);
        y.h2 += (k / 6.0) * (k1.h2 + 2.0 * k2.h2 + 2.0 * k3.h2 + k4.h2);
        y.u += (k / 6.0) * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u);
        y.v += (k / 6.0) * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v);
        diffuse(y);
        t = (n + 1) * k;
        if (!y.h1.allFinite() || !y.v.allFinite()) throw SolverError("fd oracle diverged", t);
    }

    FdSolution out{m, spec.T, zc, {}, {}, {}, {}};
    out.h1.assign(y.h1.data(), y.h1.data() + m);
    out.h2.assign(y.h2.data(), y.h2.data() + m);
    out.u.assign(y.u.data(), y.u.data() + m);
    out.ut.assign(y.v.data(), y.v.data() + m);
    return out;
}

struct OracleDiscrepancy {
    double h1 = 0.0, h2 = 0.0, u = 0.0, ut = 0.0;

    double max() const { return std::max({h1, h2, u, ut}); }
};

// Discrete L2 distance between a spectral state and the FD cell values.
inline OracleDiscrepancy oracle_discrepancy(const SpectralState& s, int modes, const FdSolution& fd) {
    const GalerkinBasis b = build_basis(modes);
    OracleDiscrepancy d;
    const double w = 1.0 / fd.cells;
    for (std::size_t i = 0; i < fd.z.size(); ++i) {
        const double z = fd.z[i];
        const auto sq = [](double x) { return x * x; };
        d.h1 += w * sq(detail::synth_value(s.a1, b, z) - fd.h1[i]);
        d.h2 += w * sq(detail::synth_value(s.a2, b, z) - fd.h2[i]);
        d.u += w * sq(detail::synth_value(s.b, b, z) - fd.u[i]);
        d.ut += w * sq(detail::synth_value(s.bdot, b, z) - fd.ut[i]);
    }
    d.h1 = std::sqrt(d.h1);
    d.h2 = std::sqrt(d.h2);
    d.u = std::sqrt(d.u);
    d.ut = std::sqrt(d.ut);
    return d;
}

}  // namespace emel
