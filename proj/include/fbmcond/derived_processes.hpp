#pragma once

// Derived processes Z = g(X) over an fOU state X: geometric fOU (exp),
// fractional CIR (quarter-square scaling) and the cubic polynomial map.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fbmcond/errors.hpp"
#include "fbmcond/fbm_model.hpp"
#include "fbmcond/fou_conditional.hpp"
#include "fbmcond/specfun.hpp"

namespace fbmcond {

enum class MapKind { identity, gfou, fcir, polynomial };

inline const char* to_string(MapKind k)
{
    switch (k) {
    case MapKind::identity: return "identity";
    case MapKind::gfou: return "gfou";
    case MapKind::fcir: return "fcir";
    case MapKind::polynomial: return "poly";
    }
    return "?";
}

/// An invertible map g on its monotone domain [domain_lo, +inf).
///
/// forward() and derivative() are defined on the whole real line (the
/// polynomial and the square are entire), so expectations of g(X) make
/// sense even where g is not one-to-one; inverse() only covers the image
/// of the monotone domain.
class ProcessMap {
public:
    MapKind kind() const { return kind_; }
    double delta() const { return delta_; }
    double sigma() const { return sigma_; }

    double domain_lo() const { return domain_lo_; }
    double image_lo() const { return image_lo_; }

    double forward(double x) const
    {
        switch (kind_) {
        case MapKind::identity: return x;
        case MapKind::gfou: return std::exp(x);
        case MapKind::fcir: return 0.25 * sigma_ * sigma_ * x * x;
        case MapKind::polynomial: return x * x * (delta_ * x / 6.0 + 0.5 * (1.0 - delta_));
        }
        return std::numeric_limits<double>::quiet_NaN();
    }

    double derivative(double x) const
    {
        switch (kind_) {
        case MapKind::identity: return 1.0;
        case MapKind::gfou: return std::exp(x);
        case MapKind::fcir: return 0.5 * sigma_ * sigma_ * x;
        case MapKind::polynomial: return x * (0.5 * delta_ * x + (1.0 - delta_));
        }
        return std::numeric_limits<double>::quiet_NaN();
    }

    bool in_image(double z) const { return std::isfinite(z) && z >= image_lo_; }

    double inverse(double z) const
    {
        if (!in_image(z)) detail::throw_domain("ProcessMap::inverse", "z = " + std::to_string(z) + " is outside the image");
        switch (kind_) {
        case MapKind::identity: return z;
        case MapKind::gfou:
            if (z == 0.0) detail::throw_domain("ProcessMap::inverse", "z = 0 is outside the image of exp");
            return std::log(z);
        case MapKind::fcir: return 2.0 * std::sqrt(z) / sigma_;
        case MapKind::polynomial: return poly_inverse(z);
        }
        return std::numeric_limits<double>::quiet_NaN();
    }

    /// Points where g' vanishes, in increasing order.
    std::vector<double> critical_points() const
    {
        switch (kind_) {
        case MapKind::fcir: return {0.0};
        case MapKind::polynomial:
            if (delta_ == 0.0) return {0.0};
            if (delta_ == 1.0) return {0.0};
            return {-2.0 * (1.0 - delta_) / delta_, 0.0};
        default: return {};
        }
    }

private:
    friend ProcessMap make_map(MapKind kind, double delta, double sigma);

    double poly_inverse(double z) const
    {
        if (z == 0.0) return 0.0;
        double hi = 1.0;
        while (forward(hi) < z) hi *= 2.0;
        double lo = 0.0;
        double x = hi;
        for (int iter = 0; iter < 200; ++iter) {
            const double f = forward(x) - z;
            if (f == 0.0) return x;
            if (f > 0.0) hi = x;
            else lo = x;
            const double d = derivative(x);
            double next = d > 0.0 ? x - f / d : 0.5 * (lo + hi);
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            if (std::abs(next - x) <= 1e-12 * std::max(1.0, std::abs(next))) return next;
            x = next;
        }
        throw convergence_error("ProcessMap::inverse: polynomial root search did not converge");
    }

    MapKind kind_ = MapKind::identity;
    double delta_ = 0.0;
    double sigma_ = 1.0;
    double domain_lo_ = -std::numeric_limits<double>::infinity();
    double image_lo_ = -std::numeric_limits<double>::infinity();
};

/// delta is read for the polynomial map, sigma for fcir.
inline ProcessMap make_map(MapKind kind, double delta = 0.8, double sigma = 1.0)
{
    ProcessMap m;
    m.kind_ = kind;
    switch (kind) {
    case MapKind::identity: break;
    case MapKind::gfou: m.image_lo_ = 0.0; break;
    case MapKind::fcir:
        if (!(sigma > 0.0) || !std::isfinite(sigma)) detail::throw_domain("make_map", "fcir requires sigma > 0");
        m.sigma_ = sigma;
        m.domain_lo_ = 0.0;
        m.image_lo_ = 0.0;
        break;
    case MapKind::polynomial:
        if (!(delta >= 0.0 && delta <= 1.0)) detail::throw_domain("make_map", "polynomial requires delta in [0, 1]");
        m.delta_ = delta;
        m.domain_lo_ = 0.0;
        m.image_lo_ = 0.0;
        break;
    default: detail::throw_domain("make_map", "unknown map kind");
    }
    return m;
}

/// Density of Z = g(X) at z for X ~ law.
inline double pdf_transform(const ProcessMap& map, const ConditionalNormal& law, double z)
{
    if (!(law.variance > 0.0)) detail::throw_domain("pdf_transform", "law must have positive variance");
    const double x = map.inverse(z);
    const double slope = map.derivative(x);
    if (!(slope > 0.0)) detail::throw_domain("pdf_transform", "g' vanishes at the pre-image of z = " + std::to_string(z));
    const double sd = law.stddev();
    return norm_pdf((x - law.mean) / sd) / (sd * slope);
}

/// Warning text when the law puts visible mass (within 4 standard
/// deviations) below the monotone domain, where g is not one-to-one.
inline std::optional<std::string> mask_warning(const ProcessMap& map, const ConditionalNormal& law)
{
    const double lo = law.mean - 4.0 * law.stddev();
    if (lo >= map.domain_lo()) return std::nullopt;
    const double lost = norm_cdf((map.domain_lo() - law.mean) / law.stddev());
    return std::string("masked: ") + to_string(map.kind()) + " map is one-to-one only for x >= " +
           std::to_string(map.domain_lo()) + "; density omits probability " + std::to_string(lost);
}

/// A derived process with its underlying fOU and starting state.
struct DerivedModel {
    ProcessMap map;
    FouParams fou;
    double x0;
};

/// Builds the underlying fOU for a derived process started at Z_0 = z0.
///
/// gfou: mu = X_0 = ln z0. fcir: dX = -(lambda/2) X dt + dB^H with
/// Z = sigma^2 X^2 / 4. polynomial: mu = X_0 = g^{-1}(z0). identity:
/// X_0 = z0 with the given mu.
inline DerivedModel make_derived_model(MapKind kind, double hurst, double lambda, double sigma, double z0,
                                       double delta = 0.8, double mu = 0.0)
{
    switch (kind) {
    case MapKind::identity: return {make_map(kind), FouParams(lambda, mu, sigma, hurst), z0};
    case MapKind::gfou: {
        if (!(z0 > 0.0)) detail::throw_domain("make_derived_model", "gfou requires z0 > 0");
        const double x0 = std::log(z0);
        return {make_map(kind), FouParams(lambda, x0, sigma, hurst), x0};
    }
    case MapKind::fcir: {
        const ProcessMap m = make_map(kind, delta, sigma);
        return {m, FouParams(0.5 * lambda, 0.0, 1.0, hurst), m.inverse(z0)};
    }
    case MapKind::polynomial: {
        const ProcessMap m = make_map(kind, delta, sigma);
        const double x0 = m.inverse(z0);
        return {m, FouParams(lambda, x0, sigma, hurst), x0};
    }
    }
    detail::throw_domain("make_derived_model", "unknown map kind");
}

}  // namespace fbmcond
