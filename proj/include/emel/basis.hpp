#pragma once

// Real trigonometric fundamental system on the torus and the breakpoint-aligned
// composite Gauss-Legendre rule used for every inner product.
//
// Mode order (0-based index i):
//   i = 0        psi = 1
//   i = 2j - 1   psi = sqrt(2) cos(2 pi j z)
//   i = 2j       psi = sqrt(2) sin(2 pi j z)

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "emel/error.hpp"

namespace emel {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct ModeDescriptor {
    enum class Kind { Constant, Cos, Sin };
    Kind kind;
    int frequency;  // j in cos/sin(2 pi j z)
};

class GalerkinBasis {
public:
    explicit GalerkinBasis(int n) : n_(n) {
        if (n < 1) throw ValidationError("basis needs at least one mode (N >= 1)");
        modes_.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            if (i == 0) modes_.push_back({ModeDescriptor::Kind::Constant, 0});
            else if (i % 2 == 1) modes_.push_back({ModeDescriptor::Kind::Cos, (i + 1) / 2});
            else modes_.push_back({ModeDescriptor::Kind::Sin, i / 2});
        }
    }

    int size() const { return n_; }
    const ModeDescriptor& mode(int i) const { return modes_[static_cast<std::size_t>(i)]; }

    double value(int i, double z) const {
        const auto& m = mode(i);
        const double w = 2.0 * std::numbers::pi * m.frequency;
        switch (m.kind) {
            case ModeDescriptor::Kind::Constant: return 1.0;
            case ModeDescriptor::Kind::Cos: return std::numbers::sqrt2 * std::cos(w * z);
            case ModeDescriptor::Kind::Sin: return std::numbers::sqrt2 * std::sin(w * z);
        }
        return 0.0;
    }

    double derivative(int i, double z) const {
        const auto& m = mode(i);
        const double w = 2.0 * std::numbers::pi * m.frequency;
        switch (m.kind) {
            case ModeDescriptor::Kind::Constant: return 0.0;
            case ModeDescriptor::Kind::Cos: return -std::numbers::sqrt2 * w * std::sin(w * z);
            case ModeDescriptor::Kind::Sin: return std::numbers::sqrt2 * w * std::cos(w * z);
        }
        return 0.0;
    }

    // ||psi_i'||^2 = (2 pi j)^2.
    double derivative_norm_sq(int i) const {
        const double w = 2.0 * std::numbers::pi * mode(i).frequency;
        return w * w;
    }

private:
    int n_;
    std::vector<ModeDescriptor> modes_;
};

inline GalerkinBasis build_basis(int n) { return GalerkinBasis(n); }

// Gauss-Legendre nodes and weights on [-1,1] (Newton iteration on P_q).
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline GaussRule gauss_legendre(int q) {
    if (q < 1) throw ValidationError("Gauss order must be positive");
    using real = long double;
    const auto n = static_cast<std::size_t>(q);
    GaussRule rule{std::vector<double>(n), std::vector<double>(n)};
    auto legendre = [q](real x, real& p, real& dp) {
        real p0 = 1.0L, p1 = x;
        for (int k = 2; k <= q; ++k) {
            real p2 = ((2.0L * k - 1.0L) * x * p1 - (k - 1.0L) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        if (q == 1) p0 = 1.0L;
        p = p1;
        dp = q * (x * p1 - p0) / (x * x - 1.0L);
    };
    for (int i = 0; i < (q + 1) / 2; ++i) {
        real x = std::cos(std::numbers::pi_v<real> * (i + 0.75L) / (q + 0.5L));
        real p = 0.0L, dp = 0.0L;
        for (int it = 0; it < 100; ++it) {
            legendre(x, p, dp);
            const real dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-19L) break;
        }
        legendre(x, p, dp);
        const real w = 2.0L / ((1.0L - x * x) * dp * dp);
        auto lo = static_cast<std::size_t>(i), hi = n - 1 - lo;
        rule.nodes[lo] = static_cast<double>(-x);
        rule.nodes[hi] = static_cast<double>(x);
        rule.weights[lo] = static_cast<double>(w);
        rule.weights[hi] = static_cast<double>(w);
    }
    if (q % 2 == 1) rule.nodes[n / 2] = 0.0;
    return rule;
}

// Sorted union of breakpoint lists with near-duplicates (1e-14) removed.
inline std::vector<double> merge_breakpoints(const std::vector<std::vector<double>>& lists) {
    std::vector<double> all;
    for (const auto& l : lists) all.insert(all.end(), l.begin(), l.end());
    std::sort(all.begin(), all.end());
    std::vector<double> out;
    for (double z : all)
        if (out.empty() || z - out.back() > 1e-14) out.push_back(z);
    return out;
}

// Basis values and derivatives at all nodes, row-major (node, mode).
struct BasisTable {
    int modes = 0;
    std::vector<double> values;
    std::vector<double> derivatives;
};

class QuadratureGrid {
public:
    QuadratureGrid(std::vector<double> breakpoints, int panels_per_piece, int q)
        : breaks_(std::move(breakpoints)), panels_per_piece_(panels_per_piece), order_(q) {
        for (std::size_t i = 0; i < breaks_.size(); ++i) {
            if (!(breaks_[i] > 0.0 && breaks_[i] < 1.0))
                throw ValidationError("grid breakpoint outside (0,1)");
            if (i > 0 && !(breaks_[i] > breaks_[i - 1]))
                throw ValidationError("grid breakpoints must be sorted and distinct");
        }
        if (panels_per_piece < 1) throw ValidationError("panels_per_piece must be >= 1");
        if (q < 2) throw ValidationError("Gauss order q must be >= 2");

        const GaussRule rule = gauss_legendre(q);
        std::vector<double> ends{0.0};
        ends.insert(ends.end(), breaks_.begin(), breaks_.end());
        ends.push_back(1.0);
        for (std::size_t k = 0; k + 1 < ends.size(); ++k) {
            const double a = ends[k], b = ends[k + 1];
            for (int s = 0; s < panels_per_piece; ++s) {
                const double lo = a + (b - a) * s / panels_per_piece;
                const double hi = (s + 1 == panels_per_piece) ? b : a + (b - a) * (s + 1) / panels_per_piece;
                panels_.push_back({lo, hi});
                const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
                for (int i = 0; i < q; ++i) {
                    nodes_.push_back(mid + half * rule.nodes[static_cast<std::size_t>(i)]);
                    weights_.push_back(half * rule.weights[static_cast<std::size_t>(i)]);
                }
            }
        }
    }

    struct Panel {
        double begin;
        double end;
    };

    std::size_t size() const { return nodes_.size(); }
    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& weights() const { return weights_; }
    const std::vector<Panel>& panels() const { return panels_; }
    const std::vector<double>& breakpoints() const { return breaks_; }
    int order() const { return order_; }
    int panels_per_piece() const { return panels_per_piece_; }

    // Sequential left-to-right sum of w_i f(z_i).
    template <class F>
    double integrate(F&& f) const {
        double s = 0.0;
        for (std::size_t i = 0; i < nodes_.size(); ++i) s += weights_[i] * f(nodes_[i]);
        return s;
    }

    double integrate_nodal(std::span<const double> values) const {
        if (values.size() != nodes_.size()) throw ValidationError("nodal vector length does not match grid");
        double s = 0.0;
        for (std::size_t i = 0; i < nodes_.size(); ++i) s += weights_[i] * values[i];
        return s;
    }

    QuadratureGrid with_basis(const GalerkinBasis& basis) const {
        QuadratureGrid g = *this;
        const auto n = static_cast<std::size_t>(basis.size());
        g.table_.modes = basis.size();
        g.table_.values.resize(nodes_.size() * n);
        g.table_.derivatives.resize(nodes_.size() * n);
        for (std::size_t i = 0; i < nodes_.size(); ++i)
            for (std::size_t k = 0; k < n; ++k) {
                g.table_.values[i * n + k] = basis.value(static_cast<int>(k), nodes_[i]);
                g.table_.derivatives[i * n + k] = basis.derivative(static_cast<int>(k), nodes_[i]);
            }
        return g;
    }

    const BasisTable& table() const { return table_; }
    bool has_table_for(const GalerkinBasis& basis) const { return table_.modes == basis.size(); }

private:
    std::vector<double> breaks_;
    int panels_per_piece_;
    int order_;
    std::vector<Panel> panels_;
    std::vector<double> nodes_;
    std::vector<double> weights_;
    BasisTable table_;
};

inline QuadratureGrid build_grid(std::vector<double> breakpoints, int panels_per_piece, int q) {
    return QuadratureGrid(std::move(breakpoints), panels_per_piece, q);
}

// Default resolution: max(8, 2N) panels per smooth piece, q = 12.
inline int default_panels_per_piece(int n) { return std::max(8, 2 * n); }
constexpr int default_gauss_order = 12;

struct Synthesis {
    std::vector<double> values;
    std::vector<double> derivatives;
};

namespace detail {

inline const BasisTable& ensure_table(const GalerkinBasis& basis, const QuadratureGrid& grid,
                                      std::optional<QuadratureGrid>& scratch) {
    if (grid.has_table_for(basis)) return grid.table();
    scratch = grid.with_basis(basis);
    return scratch->table();
}

}  // namespace detail

// Pointwise sum_k c_k psi_k and sum_k c_k psi_k' at every node.
inline Synthesis synthesize(const Vector& coeffs, const GalerkinBasis& basis, const QuadratureGrid& grid) {
    if (coeffs.size() != basis.size())
        throw ValidationError("coefficient vector length " + std::to_string(coeffs.size()) +
                              " does not match basis size " + std::to_string(basis.size()));
    std::optional<QuadratureGrid> scratch;
    const BasisTable& tab = detail::ensure_table(basis, grid, scratch);
    const auto n = static_cast<std::size_t>(basis.size());
    Synthesis out{std::vector<double>(grid.size()), std::vector<double>(grid.size())};
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double v = 0.0, d = 0.0;
        const double* vr = &tab.values[i * n];
        const double* dr = &tab.derivatives[i * n];
        for (std::size_t k = 0; k < n; ++k) {
            v += coeffs[static_cast<Eigen::Index>(k)] * vr[k];
            d += coeffs[static_cast<Eigen::Index>(k)] * dr[k];
        }
        out.values[i] = v;
        out.derivatives[i] = d;
    }
    return out;
}

// c_k = sum_i w_i v_i psi_k(z_i).
inline Vector project(std::span<const double> nodal_values, const GalerkinBasis& basis,
                      const QuadratureGrid& grid) {
    if (nodal_values.size() != grid.size()) throw ValidationError("nodal vector length does not match grid");
    std::optional<QuadratureGrid> scratch;
    const BasisTable& tab = detail::ensure_table(basis, grid, scratch);
    const auto n = static_cast<std::size_t>(basis.size());
    Vector c = Vector::Zero(basis.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double wv = grid.weights()[i] * nodal_values[i];
        const double* vr = &tab.values[i * n];
        for (std::size_t k = 0; k < n; ++k) c[static_cast<Eigen::Index>(k)] += wv * vr[k];
    }
    return c;
}

template <class F>
Vector project_function(F&& f, const GalerkinBasis& basis, const QuadratureGrid& grid) {
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) v[i] = f(grid.nodes()[i]);
    return project(v, basis, grid);
}

}  // namespace emel
