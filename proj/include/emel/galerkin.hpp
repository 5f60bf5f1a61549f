#pragma once

// Problem instance, Galerkin state, the right-hand side of the truncated ODE
// system and the instantaneous energy terms.
//
//   (h_l, psi_k)_t  = (-r h_lz + h_l u_t + r j_l, psi_k')
//   (u, psi_k)_tt   = (-nu^2 u_z + p |h|^2, psi_k') + (f, psi_k)

#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "emel/basis.hpp"
#include "emel/coefficients.hpp"

namespace emel {

struct ProblemSpec {
    double p = 1.0;
    PiecewiseCoefficient r = PiecewiseCoefficient::constant(1.0);
    PiecewiseCoefficient nu = PiecewiseCoefficient::constant(1.0);
    ForcingField j1, j2, f;
    SpatialField h0_1 = SpatialField::zero();
    SpatialField h0_2 = SpatialField::zero();
    SpatialField u0 = SpatialField::zero();
    SpatialField u1 = SpatialField::zero();
    double T = 1.0;
    // Admits p = 0, which decouples the induction equation (heat-kernel checks).
    bool allow_zero_p = false;

    std::vector<double> breakpoints() const {
        return merge_breakpoints({r.breakpoints(), nu.breakpoints(), j1.breakpoints(), j2.breakpoints(),
                                  f.breakpoints(), h0_1.breakpoints, h0_2.breakpoints, u0.breakpoints,
                                  u1.breakpoints});
    }

    // Jump locations of r and nu on the torus, including z = 0 when either wraps discontinuously.
    std::vector<double> coefficient_jumps() const { return merge_breakpoints({r.jump_points(), nu.jump_points()}); }
};

inline void validate(const ProblemSpec& spec) {
    if (!std::isfinite(spec.p) || spec.p < 0.0 || (spec.p == 0.0 && !spec.allow_zero_p))
        throw ValidationError("p = " + std::to_string(spec.p) +
                              " violates the positivity hypothesis: the coupling constant p must be > 0");
    verify_bounds(spec.r, true, "r (magnetic viscosity)");
    verify_bounds(spec.nu, true, "nu (elastic wave speed)");
    if (!(spec.T > 0.0) || !std::isfinite(spec.T)) throw ValidationError("time horizon T must be positive");
}

inline ProblemSpec problem_from_json(const json& doc) {
    if (!doc.is_object()) throw ValidationError("problem document must be an object");
    ProblemSpec s;
    try {
        s.p = doc.at("p").get<double>();
        s.T = doc.at("T").get<double>();
        s.allow_zero_p = doc.value("allow_zero_p", false);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("problem schema violation: ") + e.what());
    }
    if (doc.contains("r")) s.r = parse_coefficient(doc.at("r"));
    if (doc.contains("nu")) s.nu = parse_coefficient(doc.at("nu"));
    if (doc.contains("j1")) s.j1 = ForcingField::from_json(doc.at("j1"));
    if (doc.contains("j2")) s.j2 = ForcingField::from_json(doc.at("j2"));
    if (doc.contains("f")) s.f = ForcingField::from_json(doc.at("f"));
    if (doc.contains("h0_1")) s.h0_1 = parse_spatial_field(doc.at("h0_1"));
    if (doc.contains("h0_2")) s.h0_2 = parse_spatial_field(doc.at("h0_2"));
    if (doc.contains("u0")) s.u0 = parse_spatial_field(doc.at("u0"));
    if (doc.contains("u1")) s.u1 = parse_spatial_field(doc.at("u1"));
    validate(s);
    return s;
}

struct SpectralState {
    double t = 0.0;
    Vector a1, a2, b, bdot;

    static SpectralState zero(int n, double t = 0.0) {
        return {t, Vector::Zero(n), Vector::Zero(n), Vector::Zero(n), Vector::Zero(n)};
    }

    int size() const { return static_cast<int>(a1.size()); }

    // Packed layout [a1, a2, b, bdot].
    Vector pack() const {
        const Eigen::Index n = a1.size();
        Vector y(4 * n);
        y << a1, a2, b, bdot;
        return y;
    }

    static SpectralState unpack(const Vector& y, double t) {
        const Eigen::Index n = y.size() / 4;
        return {t, y.segment(0, n), y.segment(n, n), y.segment(2 * n, n), y.segment(3 * n, n)};
    }

    bool finite() const { return a1.allFinite() && a2.allFinite() && b.allFinite() && bdot.allFinite(); }
};

inline SpectralState init_state(const ProblemSpec& spec, const GalerkinBasis& basis, const QuadratureGrid& grid) {
    return {0.0, project_function(spec.h0_1, basis, grid), project_function(spec.h0_2, basis, grid),
            project_function(spec.u0, basis, grid), project_function(spec.u1, basis, grid)};
}

// Instantaneous quadratic terms plus the cumulative time integrals of the
// balance law (filled in by the integrator's ledger).
struct EnergyRecord {
    double t = 0.0;
    double term_h = 0.0;   // 1/2 p ||h||^2
    double term_ut = 0.0;  // 1/2 ||u_t||^2
    double term_uz = 0.0;  // 1/2 ||nu u_z||^2
    double dissipation_cum = 0.0;  // int_0^t p ||sqrt(r) h_z||^2
    double work_j_cum = 0.0;       // int_0^t p (r j, h_z)
    double work_f_cum = 0.0;       // int_0^t (f, u_t)
    double jsq_cum = 0.0;          // int_0^t int p r |j|^2
    double fsq_cum = 0.0;          // int_0^t int f^2

    double total() const { return term_h + term_ut + term_uz; }
};

// Integrands of the cumulative ledger entries at one instant.
struct PowerTerms {
    double dissipation = 0.0;
    double work_j = 0.0;
    double work_f = 0.0;
    double jsq = 0.0;
    double fsq = 0.0;
};

// Nodal reconstruction of a state on the grid.
struct NodalFields {
    std::vector<double> h1, h1z, h2, h2z, u, uz, ut, utz;
};

// Assembled operators for one (problem, basis, grid) triple. Immutable after
// construction; the packed state is [a1, a2, b, bdot].
class GalerkinSystem {
public:
    GalerkinSystem(ProblemSpec spec, const GalerkinBasis& basis, const QuadratureGrid& grid)
        : spec_(std::move(spec)), basis_(basis), grid_(grid.with_basis(basis)), n_(basis.size()) {
        validate(spec_);
        const std::size_t m = grid_.size();
        const auto n = static_cast<std::size_t>(n_);
        r_.resize(m);
        nu2_.resize(m);
        for (std::size_t i = 0; i < m; ++i) {
            const double z = grid_.nodes()[i];
            r_[i] = spec_.r(z);
            nu2_[i] = spec_.nu(z) * spec_.nu(z);
        }
        R_ = Matrix::Zero(n_, n_);
        K_ = Matrix::Zero(n_, n_);
        G_ = Matrix::Zero(n_, n_);
        M_ = vtable().transpose() * weights().asDiagonal() * vtable();
        const auto& tab = grid_.table();
        for (std::size_t i = 0; i < m; ++i) {
            const double w = grid_.weights()[i];
            const double* d = &tab.derivatives[i * n];
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t k = 0; k < n; ++k) {
                    const double dd = w * d[j] * d[k];
                    R_(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) += r_[i] * dd;
                    K_(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) += nu2_[i] * dd;
                    G_(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) += dd;
                }
        }
        auto load = [&](const ForcingField& field, bool weight_r, bool against_derivative) {
            std::vector<CachedTerm> out;
            for (const auto& term : field.terms()) {
                CachedTerm c;
                c.time = term.time;
                c.nodal.resize(m);
                std::vector<double> weighted(m);
                for (std::size_t i = 0; i < m; ++i) {
                    c.nodal[i] = term.space(grid_.nodes()[i]);
                    weighted[i] = (weight_r ? r_[i] : 1.0) * c.nodal[i];
                }
                c.projection = against_derivative ? project_derivative(weighted) : project_values(weighted);
                out.push_back(std::move(c));
            }
            return out;
        };
        j_[0] = load(spec_.j1, true, true);
        j_[1] = load(spec_.j2, true, true);
        f_ = load(spec_.f, false, false);
        for (int l = 0; l < 2; ++l) jgram_[l] = gram(j_[l], true);
        fgram_ = gram(f_, false);
    }

    const ProblemSpec& spec() const { return spec_; }
    const GalerkinBasis& basis() const { return basis_; }
    const QuadratureGrid& grid() const { return grid_; }
    int modes() const { return n_; }
    // (r psi_j', psi_k'), (nu^2 psi_j', psi_k'), (psi_j', psi_k'), (psi_j, psi_k).
    const Matrix& diffusion_matrix() const { return R_; }
    const Matrix& stiffness_matrix() const { return K_; }
    const Matrix& derivative_gram() const { return G_; }
    const Matrix& mass_matrix() const { return M_; }
    const std::vector<double>& nodal_r() const { return r_; }
    const std::vector<double>& nodal_nu2() const { return nu2_; }

    // (v, psi_k') for nodal v.
    Vector project_derivative(std::span<const double> v) const {
        const Eigen::Map<const Vector> vv(v.data(), static_cast<Eigen::Index>(v.size()));
        return dtable().transpose() * (weights().cwiseProduct(vv));
    }

    std::vector<double> synthesize_values(const Vector& c) const {
        std::vector<double> v(grid_.size());
        Eigen::Map<Vector>(v.data(), static_cast<Eigen::Index>(v.size())).noalias() = vtable() * c;
        return v;
    }

    std::vector<double> synthesize_derivatives(const Vector& c) const {
        std::vector<double> v(grid_.size());
        Eigen::Map<Vector>(v.data(), static_cast<Eigen::Index>(v.size())).noalias() = dtable() * c;
        return v;
    }

    // (v, psi_k) for nodal v.
    Vector project_values(std::span<const double> v) const {
        const Eigen::Map<const Vector> vv(v.data(), static_cast<Eigen::Index>(v.size()));
        return vtable().transpose() * (weights().cwiseProduct(vv));
    }

    NodalFields nodal(const SpectralState& s) const {
        return {synthesize_values(s.a1), synthesize_derivatives(s.a1), synthesize_values(s.a2),
                synthesize_derivatives(s.a2), synthesize_values(s.b), synthesize_derivatives(s.b),
                synthesize_values(s.bdot), synthesize_derivatives(s.bdot)};
    }

    // Projected forcing (r j_l(t), psi_k') and (f(t), psi_k).
    Vector forcing_j(int l, double t) const { return combine(j_[l], t); }
    Vector forcing_f(double t) const { return combine(f_, t); }

    // Nodal forcing values at time t.
    std::vector<double> nodal_j(int l, double t) const { return combine_nodal(j_[l], t); }
    std::vector<double> nodal_f(double t) const { return combine_nodal(f_, t); }

    // Linear part L y: a_l' = -R a_l, b' = bdot, bdot' = -K b.
    Vector apply_linear(const Vector& y) const {
        const Eigen::Index n = n_;
        Vector out(4 * n);
        out.segment(0, n).noalias() = -R_ * y.segment(0, n);
        out.segment(n, n).noalias() = -R_ * y.segment(n, n);
        out.segment(2 * n, n) = y.segment(3 * n, n);
        out.segment(3 * n, n).noalias() = -K_ * y.segment(2 * n, n);
        return out;
    }

    // Transport, coupling and forcing: the non-stiff remainder.
    Vector apply_nonlinear(double t, const Vector& y) const {
        const Eigen::Index n = n_;
        const auto h1 = synthesize_values(y.segment(0, n));
        const auto h2 = synthesize_values(y.segment(n, n));
        const auto ut = synthesize_values(y.segment(3 * n, n));
        const std::size_t m = grid_.size();
        std::vector<double> q1(m), q2(m), hsq(m);
        for (std::size_t i = 0; i < m; ++i) {
            q1[i] = h1[i] * ut[i];
            q2[i] = h2[i] * ut[i];
            hsq[i] = spec_.p * (h1[i] * h1[i] + h2[i] * h2[i]);
        }
        Vector out = Vector::Zero(4 * n);
        out.segment(0, n) = project_derivative(q1);
        out.segment(n, n) = project_derivative(q2);
        out.segment(3 * n, n) = project_derivative(hsq);
        if (!j_[0].empty()) out.segment(0, n) += forcing_j(0, t);
        if (!j_[1].empty()) out.segment(n, n) += forcing_j(1, t);
        if (!f_.empty()) out.segment(3 * n, n) += forcing_f(t);
        if (!out.allFinite()) throw SolverError("non-finite right-hand side (blow-up)", t);
        return out;
    }

    Vector operator()(double t, const Vector& y) const { return apply_linear(y) + apply_nonlinear(t, y); }

    // Right-hand side assembled from nodal integrands with coefficient values,
    // without the precomputed matrices.
    SpectralState rhs_nodal(const SpectralState& s) const {
        const NodalFields fld = nodal(s);
        const std::size_t m = grid_.size();
        const auto j1 = nodal_j(0, s.t), j2 = nodal_j(1, s.t), f = nodal_f(s.t);
        std::vector<double> g1(m), g2(m), gu(m);
        for (std::size_t i = 0; i < m; ++i) {
            g1[i] = -r_[i] * fld.h1z[i] + fld.h1[i] * fld.ut[i] + r_[i] * j1[i];
            g2[i] = -r_[i] * fld.h2z[i] + fld.h2[i] * fld.ut[i] + r_[i] * j2[i];
            gu[i] = -nu2_[i] * fld.uz[i] + spec_.p * (fld.h1[i] * fld.h1[i] + fld.h2[i] * fld.h2[i]);
        }
        SpectralState d{s.t, project_derivative(g1), project_derivative(g2), s.bdot,
                        project_derivative(gu) + project_values(f)};
        if (!d.finite()) throw SolverError("non-finite right-hand side (blow-up)", s.t);
        return d;
    }

    PowerTerms power(double t, const Vector& y) const {
        const Eigen::Index n = n_;
        PowerTerms pw;
        const auto a1 = y.segment(0, n), a2 = y.segment(n, n), bd = y.segment(3 * n, n);
        pw.dissipation = spec_.p * (a1.dot(R_ * a1) + a2.dot(R_ * a2));
        if (!j_[0].empty()) pw.work_j += spec_.p * forcing_j(0, t).dot(a1);
        if (!j_[1].empty()) pw.work_j += spec_.p * forcing_j(1, t).dot(a2);
        if (!f_.empty()) pw.work_f = forcing_f(t).dot(bd);
        for (int l = 0; l < 2; ++l) pw.jsq += spec_.p * quadratic(j_[l], jgram_[l], t);
        pw.fsq = quadratic(f_, fgram_, t);
        return pw;
    }

    // 1/2 p ||h||^2, 1/2 ||u_t||^2, 1/2 ||nu u_z||^2 as quadratic forms in the
    // quadrature-assembled mass and stiffness matrices.
    EnergyRecord energy(const SpectralState& s) const {
        EnergyRecord e;
        e.t = s.t;
        e.term_h = 0.5 * spec_.p * (s.a1.dot(M_ * s.a1) + s.a2.dot(M_ * s.a2));
        e.term_ut = 0.5 * s.bdot.dot(M_ * s.bdot);
        e.term_uz = 0.5 * s.b.dot(K_ * s.b);
        return e;
    }

private:
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const RowMajor> vtable() const {
        return {grid_.table().values.data(), static_cast<Eigen::Index>(grid_.size()), n_};
    }
    Eigen::Map<const RowMajor> dtable() const {
        return {grid_.table().derivatives.data(), static_cast<Eigen::Index>(grid_.size()), n_};
    }
    Eigen::Map<const Vector> weights() const {
        return {grid_.weights().data(), static_cast<Eigen::Index>(grid_.size())};
    }

    struct CachedTerm {
        std::function<double(double)> time;
        std::vector<double> nodal;
        Vector projection;
    };

    Vector combine(const std::vector<CachedTerm>& terms, double t) const {
        Vector v = Vector::Zero(n_);
        for (const auto& c : terms) v += c.time(t) * c.projection;
        return v;
    }

    std::vector<double> combine_nodal(const std::vector<CachedTerm>& terms, double t) const {
        std::vector<double> v(grid_.size(), 0.0);
        for (const auto& c : terms) {
            const double s = c.time(t);
            for (std::size_t i = 0; i < v.size(); ++i) v[i] += s * c.nodal[i];
        }
        return v;
    }

    Matrix gram(const std::vector<CachedTerm>& terms, bool weight_r) const {
        const auto k = static_cast<Eigen::Index>(terms.size());
        Matrix g = Matrix::Zero(k, k);
        for (Eigen::Index a = 0; a < k; ++a)
            for (Eigen::Index b = 0; b < k; ++b) {
                double s = 0.0;
                const auto& na = terms[static_cast<std::size_t>(a)].nodal;
                const auto& nb = terms[static_cast<std::size_t>(b)].nodal;
                for (std::size_t i = 0; i < grid_.size(); ++i)
                    s += grid_.weights()[i] * (weight_r ? r_[i] : 1.0) * na[i] * nb[i];
                g(a, b) = s;
            }
        return g;
    }

    static double quadratic(const std::vector<CachedTerm>& terms, const Matrix& g, double t) {
        if (terms.empty()) return 0.0;
        Vector c(static_cast<Eigen::Index>(terms.size()));
        for (std::size_t a = 0; a < terms.size(); ++a) c[static_cast<Eigen::Index>(a)] = terms[a].time(t);
        return c.dot(g * c);
    }

    ProblemSpec spec_;
    GalerkinBasis basis_;
    QuadratureGrid grid_;
    int n_;
    std::vector<double> r_, nu2_;
    Matrix R_, K_, G_, M_;
    std::vector<CachedTerm> j_[2];
    std::vector<CachedTerm> f_;
    Matrix jgram_[2];
    Matrix fgram_;
};

// Standard grid for a problem: every breakpoint aligned, default resolution unless overridden.
inline QuadratureGrid grid_for(const ProblemSpec& spec, int n, int panels_per_piece = 0, int q = default_gauss_order) {
    return build_grid(spec.breakpoints(), panels_per_piece > 0 ? panels_per_piece : default_panels_per_piece(n), q);
}

inline SpectralState rhs(const SpectralState& state, const ProblemSpec& spec, const GalerkinBasis& basis,
                         const QuadratureGrid& grid) {
    if (state.size() != basis.size()) throw ValidationError("state length does not match basis");
    return GalerkinSystem(spec, basis, grid).rhs_nodal(state);
}

inline EnergyRecord energy(const SpectralState& state, const ProblemSpec& spec, const GalerkinBasis& basis,
                           const QuadratureGrid& grid) {
    return GalerkinSystem(spec, basis, grid).energy(state);
}

}  // namespace emel
