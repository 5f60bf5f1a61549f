#pragma once

// 1-periodic piecewise-polynomial coefficient fields, separable space-time
// forcing, and the plane-wave nondimensionalization.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "emel/error.hpp"

namespace emel {

using json = nlohmann::json;

// Reduction to the fundamental domain [0,1).
inline double wrap_unit(double z) {
    double f = z - std::floor(z);
    return f >= 1.0 ? 0.0 : f;
}

class Polynomial {
public:
    Polynomial() = default;
    explicit Polynomial(std::vector<double> coeffs) : c_(std::move(coeffs)) {}

    double operator()(double x) const {
        double v = 0.0;
        for (auto it = c_.rbegin(); it != c_.rend(); ++it) v = v * x + *it;
        return v;
    }

    Polynomial derivative() const {
        if (c_.size() <= 1) return Polynomial({0.0});
        std::vector<double> d(c_.size() - 1);
        for (std::size_t i = 1; i < c_.size(); ++i) d[i - 1] = static_cast<double>(i) * c_[i];
        return Polynomial(std::move(d));
    }

    std::size_t degree() const { return c_.empty() ? 0 : c_.size() - 1; }
    const std::vector<double>& coefficients() const { return c_; }

private:
    std::vector<double> c_;
};

// Piece k is a polynomial in the local coordinate (z - z_k) on [z_k, z_{k+1}),
// with z_0 = 0 and z_{m+1} = 1. Evaluation is right-continuous and 1-periodic.
class PiecewiseCoefficient {
public:
    PiecewiseCoefficient() : PiecewiseCoefficient({}, {{0.0}}) {}

    PiecewiseCoefficient(std::vector<double> breakpoints, std::vector<std::vector<double>> pieces)
        : breaks_(std::move(breakpoints)) {
        for (std::size_t i = 0; i < breaks_.size(); ++i) {
            double z = breaks_[i];
            if (!std::isfinite(z) || z <= 0.0 || z >= 1.0)
                throw ValidationError("coefficient breakpoint " + std::to_string(z) +
                                      " outside the open interval (0,1)");
            if (i > 0 && z <= breaks_[i - 1])
                throw ValidationError("coefficient breakpoints not increasing");
        }
        if (pieces.size() != breaks_.size() + 1)
            throw ValidationError("coefficient needs " + std::to_string(breaks_.size() + 1) +
                                  " pieces, got " + std::to_string(pieces.size()));
        for (auto& p : pieces) {
            if (p.empty()) throw ValidationError("coefficient piece has no polynomial coefficients");
            for (double c : p)
                if (!std::isfinite(c)) throw ValidationError("non-finite coefficient value");
            pieces_.emplace_back(std::move(p));
            dpieces_.push_back(pieces_.back().derivative());
        }
    }

    static PiecewiseCoefficient constant(double value) { return PiecewiseCoefficient({}, {{value}}); }

    std::size_t piece_count() const { return pieces_.size(); }
    const std::vector<double>& breakpoints() const { return breaks_; }
    const Polynomial& piece(std::size_t k) const { return pieces_[k]; }
    double piece_begin(std::size_t k) const { return k == 0 ? 0.0 : breaks_[k - 1]; }
    double piece_end(std::size_t k) const { return k == breaks_.size() ? 1.0 : breaks_[k]; }

    // Index of the piece containing wrap_unit(z).
    std::size_t locate(double z) const {
        double f = wrap_unit(z);
        return static_cast<std::size_t>(std::upper_bound(breaks_.begin(), breaks_.end(), f) -
                                        breaks_.begin());
    }

    double operator()(double z) const {
        double f = wrap_unit(z);
        std::size_t k = locate(f);
        return pieces_[k](f - piece_begin(k));
    }

    double derivative(double z) const {
        double f = wrap_unit(z);
        std::size_t k = locate(f);
        return dpieces_[k](f - piece_begin(k));
    }

    // Limit from the left at z (uses the previous piece when z sits on a breakpoint).
    double left_limit(double z) const {
        double f = wrap_unit(z);
        std::size_t k = locate(f);
        if (f == piece_begin(k)) {
            std::size_t prev = (k == 0) ? pieces_.size() - 1 : k - 1;
            return pieces_[prev](piece_end(prev) - piece_begin(prev));
        }
        return pieces_[k](f - piece_begin(k));
    }

    bool continuous_at_wrap() const {
        double a = (*this)(0.0), b = left_limit(0.0);
        return std::abs(a - b) <= 1e-14 * std::max({1.0, std::abs(a), std::abs(b)});
    }

    // Interior breakpoints plus z = 0 when the periodic extension jumps there.
    std::vector<double> jump_points() const {
        std::vector<double> pts;
        if (!continuous_at_wrap()) pts.push_back(0.0);
        pts.insert(pts.end(), breaks_.begin(), breaks_.end());
        return pts;
    }

    PiecewiseCoefficient shifted(double delta) const {
        std::vector<std::vector<double>> pieces;
        for (const auto& p : pieces_) {
            auto c = p.coefficients();
            c[0] += delta;
            pieces.push_back(std::move(c));
        }
        return PiecewiseCoefficient(breaks_, std::move(pieces));
    }

    json to_json() const {
        json pieces = json::array();
        for (const auto& p : pieces_) pieces.push_back(p.coefficients());
        return json{{"breakpoints", breaks_}, {"pieces", pieces}};
    }

private:
    std::vector<double> breaks_;
    std::vector<Polynomial> pieces_;
    std::vector<Polynomial> dpieces_;
};

inline PiecewiseCoefficient parse_coefficient(const json& doc) {
    if (!doc.is_object()) throw ValidationError("coefficient document must be an object");
    if (!doc.contains("pieces")) throw ValidationError("coefficient document lacks \"pieces\"");
    std::vector<double> breaks;
    try {
        if (doc.contains("breakpoints")) breaks = doc.at("breakpoints").get<std::vector<double>>();
        auto pieces = doc.at("pieces").get<std::vector<std::vector<double>>>();
        return PiecewiseCoefficient(std::move(breaks), std::move(pieces));
    } catch (const json::exception& e) {
        throw ValidationError(std::string("coefficient schema violation: ") + e.what());
    }
}

struct Bounds {
    double min;
    double max;
};

// Extremes over one period: dense sampling of every piece plus the critical
// points of its polynomial, located by bisection on sign changes of p'.
inline Bounds verify_bounds(const PiecewiseCoefficient& c, bool positivity_constrained = false,
                            const std::string& name = "coefficient") {
    Bounds b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    auto visit = [&](double v) {
        b.min = std::min(b.min, v);
        b.max = std::max(b.max, v);
    };
    constexpr int samples = 256;
    for (std::size_t k = 0; k < c.piece_count(); ++k) {
        const Polynomial& p = c.piece(k);
        const Polynomial dp = p.derivative();
        const double width = c.piece_end(k) - c.piece_begin(k);
        double x_prev = 0.0, d_prev = dp(0.0);
        visit(p(0.0));
        for (int i = 1; i <= samples; ++i) {
            double x = width * i / samples;
            visit(p(x));
            double d = dp(x);
            if (p.degree() >= 2 && d_prev * d < 0.0) {
                double lo = x_prev, hi = x;
                for (int it = 0; it < 80; ++it) {
                    double mid = 0.5 * (lo + hi);
                    if (dp(lo) * dp(mid) <= 0.0) hi = mid; else lo = mid;
                }
                visit(p(0.5 * (lo + hi)));
            }
            x_prev = x;
            d_prev = d;
        }
    }
    if (positivity_constrained && !(b.min > 0.0))
        throw ValidationError(name + " must be strictly positive; minimum over the period is " +
                              std::to_string(b.min));
    return b;
}

// Smooth or piecewise spatial field on the torus (initial data, forcing factors).
struct SpatialField {
    std::function<double(double)> value;
    std::function<double(double)> derivative;
    std::vector<double> breakpoints;
    json source;  // null when built programmatically

    double operator()(double z) const { return value(z); }

    static SpatialField zero() {
        return {[](double) { return 0.0; }, [](double) { return 0.0; }, {}, json{{"pieces", {{0.0}}}}};
    }

    static SpatialField from_coefficient(PiecewiseCoefficient c) {
        auto shared = std::make_shared<PiecewiseCoefficient>(std::move(c));
        return {[shared](double z) { return (*shared)(z); },
                [shared](double z) { return shared->derivative(z); }, shared->breakpoints(),
                shared->to_json()};
    }

    // mean + sum_k cos[k-1] cos(2 pi k z) + sin[k-1] sin(2 pi k z)
    static SpatialField fourier(double mean, std::vector<double> cos_amp, std::vector<double> sin_amp) {
        json src{{"fourier", {{"mean", mean}, {"cos", cos_amp}, {"sin", sin_amp}}}};
        auto value = [=](double z) {
            double v = mean;
            for (std::size_t k = 0; k < cos_amp.size(); ++k)
                v += cos_amp[k] * std::cos(2.0 * std::numbers::pi * double(k + 1) * z);
            for (std::size_t k = 0; k < sin_amp.size(); ++k)
                v += sin_amp[k] * std::sin(2.0 * std::numbers::pi * double(k + 1) * z);
            return v;
        };
        auto deriv = [=](double z) {
            double v = 0.0;
            for (std::size_t k = 0; k < cos_amp.size(); ++k) {
                double w = 2.0 * std::numbers::pi * double(k + 1);
                v -= w * cos_amp[k] * std::sin(w * z);
            }
            for (std::size_t k = 0; k < sin_amp.size(); ++k) {
                double w = 2.0 * std::numbers::pi * double(k + 1);
                v += w * sin_amp[k] * std::cos(w * z);
            }
            return v;
        };
        return {value, deriv, {}, src};
    }
};

inline SpatialField parse_spatial_field(const json& doc) {
    if (!doc.is_object()) throw ValidationError("spatial field must be an object");
    if (doc.contains("fourier")) {
        const json& f = doc.at("fourier");
        try {
            double mean = f.value("mean", 0.0);
            auto c = f.value("cos", std::vector<double>{});
            auto s = f.value("sin", std::vector<double>{});
            return SpatialField::fourier(mean, std::move(c), std::move(s));
        } catch (const json::exception& e) {
            throw ValidationError(std::string("fourier field schema violation: ") + e.what());
        }
    }
    return SpatialField::from_coefficient(parse_coefficient(doc));
}

// exp:  A exp(lambda t), params [A, lambda]
// poly: sum_i c_i t^i,   params [c0, c1, ...]
// trig: A cos(omega t + phi), params [A, omega, phi]
class TimeProfile {
public:
    enum class Kind { Exp, Poly, Trig };

    TimeProfile(Kind kind, std::vector<double> params) : kind_(kind), params_(std::move(params)) {
        std::size_t need = kind_ == Kind::Exp ? 2 : kind_ == Kind::Trig ? 3 : 1;
        if ((kind_ == Kind::Poly && params_.empty()) || (kind_ != Kind::Poly && params_.size() != need))
            throw ValidationError("time profile has wrong number of parameters");
        for (double p : params_)
            if (!std::isfinite(p)) throw ValidationError("non-finite time profile parameter");
    }

    double operator()(double t) const {
        switch (kind_) {
            case Kind::Exp: return params_[0] * std::exp(params_[1] * t);
            case Kind::Trig: return params_[0] * std::cos(params_[1] * t + params_[2]);
            case Kind::Poly: {
                double v = 0.0;
                for (auto it = params_.rbegin(); it != params_.rend(); ++it) v = v * t + *it;
                return v;
            }
        }
        return 0.0;
    }

    json to_json() const {
        const char* k = kind_ == Kind::Exp ? "exp" : kind_ == Kind::Trig ? "trig" : "poly";
        return json{{"kind", k}, {"params", params_}};
    }

    static TimeProfile from_json(const json& doc) {
        try {
            std::string k = doc.at("kind").get<std::string>();
            auto params = doc.at("params").get<std::vector<double>>();
            if (k == "exp") return TimeProfile(Kind::Exp, params);
            if (k == "poly") return TimeProfile(Kind::Poly, params);
            if (k == "trig") return TimeProfile(Kind::Trig, params);
            throw ValidationError("unknown time profile kind \"" + k + "\"");
        } catch (const json::exception& e) {
            throw ValidationError(std::string("time profile schema violation: ") + e.what());
        }
    }

private:
    Kind kind_;
    std::vector<double> params_;
};

struct ForcingTerm {
    std::function<double(double)> time;
    SpatialField space;
    json time_source;  // null when built programmatically
};

// Finite sum of separable terms time_i(t) * space_i(z).
class ForcingField {
public:
    ForcingField() = default;
    explicit ForcingField(std::vector<ForcingTerm> terms) : terms_(std::move(terms)) {}

    const std::vector<ForcingTerm>& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }

    double operator()(double t, double z) const {
        double v = 0.0;
        for (const auto& term : terms_) v += term.time(t) * term.space(z);
        return v;
    }

    std::vector<double> breakpoints() const {
        std::vector<double> out;
        for (const auto& term : terms_)
            out.insert(out.end(), term.space.breakpoints.begin(), term.space.breakpoints.end());
        return out;
    }

    ForcingField plus(const ForcingField& other) const {
        auto terms = terms_;
        terms.insert(terms.end(), other.terms_.begin(), other.terms_.end());
        return ForcingField(std::move(terms));
    }

    ForcingField scaled(double s) const {
        auto terms = terms_;
        for (auto& term : terms) {
            term.time = [f = term.time, s](double t) { return s * f(t); };
            term.time_source = json();
        }
        return ForcingField(std::move(terms));
    }

    bool serializable() const {
        return std::all_of(terms_.begin(), terms_.end(), [](const ForcingTerm& t) {
            return !t.time_source.is_null() && !t.space.source.is_null();
        });
    }

    json to_json() const {
        json arr = json::array();
        for (const auto& term : terms_) {
            if (term.time_source.is_null() || term.space.source.is_null())
                throw ValidationError("programmatic forcing term has no document form");
            arr.push_back(json{{"time", term.time_source}, {"space", term.space.source}});
        }
        return json{{"terms", arr}};
    }

    static ForcingField from_json(const json& doc) {
        if (doc.is_null()) return {};
        if (!doc.is_object() || !doc.contains("terms") || !doc.at("terms").is_array())
            throw ValidationError("forcing document must be {\"terms\":[...]}");
        std::vector<ForcingTerm> terms;
        for (const auto& t : doc.at("terms")) {
            if (!t.contains("time") || !t.contains("space"))
                throw ValidationError("forcing term needs \"time\" and \"space\"");
            auto profile = TimeProfile::from_json(t.at("time"));
            terms.push_back({[profile](double s) { return profile(s); }, parse_spatial_field(t.at("space")),
                             profile.to_json()});
        }
        return ForcingField(std::move(terms));
    }

private:
    std::vector<ForcingTerm> terms_;
};

struct PhysicalConstants {
    double mu_e;     // magnetic permeability
    double L;        // characteristic length
    double V0;       // characteristic velocity
    double sigma;    // conductivity
    double H0;       // characteristic magnetic field
    double rho;      // mass density
    double upsilon;  // longitudinal elastic wave speed
};

struct DimensionlessNumbers {
    double r;   // magnetic viscosity 1 / (mu_e L V0 sigma)
    double p;   // coupling mu_e H0^2 / (2 rho V0^2)
    double nu;  // elastic wave speed upsilon / V0
};

inline DimensionlessNumbers nondimensionalize(const PhysicalConstants& pc) {
    const std::pair<const char*, double> fields[] = {
        {"mu_e", pc.mu_e}, {"L", pc.L},     {"V0", pc.V0},          {"sigma", pc.sigma},
        {"H0", pc.H0},     {"rho", pc.rho}, {"upsilon", pc.upsilon}};
    for (const auto& [name, v] : fields)
        if (!(v > 0.0) || !std::isfinite(v))
            throw ValidationError(std::string("physical constant ") + name + " must be positive and finite");
    return {1.0 / (pc.mu_e * pc.L * pc.V0 * pc.sigma), pc.mu_e * pc.H0 * pc.H0 / (2.0 * pc.rho * pc.V0 * pc.V0),
            pc.upsilon / pc.V0};
}

}  // namespace emel
