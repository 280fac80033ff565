#pragma once

// Real-argument special functions: gamma, erfc, the normal CDF and the
// Gauss hypergeometric series.

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>

#include "fbmcond/errors.hpp"

namespace fbmcond {

struct SeriesResult {
    double value = 0.0;
    std::size_t terms_used = 0;
    bool converged = false;
};

struct SeriesOptions {
    double tol = 1e-15;
    std::size_t max_terms = 10000;
};

namespace detail {

/// True when x lies within `band` of one of 0, -1, -2, ...
inline bool near_nonpositive_integer(double x, double band)
{
    if (x > band) return false;
    return std::abs(x - std::nearbyint(x)) < band;
}

}  // namespace detail

/// Gamma function. Throws on the poles and on overflow.
inline double gamma(double x)
{
    if (!std::isfinite(x)) detail::throw_domain("gamma", "non-finite argument");
    if (x <= 0.0 && x == std::nearbyint(x))
        detail::throw_domain("gamma", "pole at nonpositive integer " + std::to_string(x));
    const double g = std::tgamma(x);
    if (!std::isfinite(g)) throw overflow_error("gamma: |Gamma(" + std::to_string(x) + ")| overflows");
    return g;
}

/// log|Gamma(x)|; poles throw.
inline double log_gamma(double x)
{
    if (!std::isfinite(x)) detail::throw_domain("log_gamma", "non-finite argument");
    if (x <= 0.0 && x == std::nearbyint(x))
        detail::throw_domain("log_gamma", "pole at nonpositive integer");
    // lgamma writes the global signgam; only the magnitude is used here.
    return std::lgamma(x);
}

inline double erfc(double x)
{
    return std::erfc(x);
}

inline double norm_cdf(double x)
{
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

inline double norm_pdf(double x)
{
    constexpr double inv_sqrt_2pi = 0.3989422804014326779399461;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

/// Gauss hypergeometric function 2F1(a, b; c; z) by its power series, |z| < 1.
///
/// Terms are accumulated until |term| <= tol * |sum| at a point where the
/// term ratio has already dropped below one, so that a small term early in
/// a growing stretch of the series does not stop the sum. A terminating
/// series (a or b a nonpositive integer) converges exactly.
inline SeriesResult hyp2f1(double a, double b, double c, double z, SeriesOptions opt = {})
{
    if (!(std::abs(z) < 1.0)) detail::throw_domain("hyp2f1", "requires |z| < 1, got " + std::to_string(z));
    if (detail::near_nonpositive_integer(c, 1e-8))
        detail::throw_domain("hyp2f1", "c = " + std::to_string(c) + " is (near) a nonpositive integer");

    SeriesResult out;
    double term = 1.0;
    double sum = 1.0;
    out.terms_used = 1;
    if (z == 0.0) {
        out.value = 1.0;
        out.converged = true;
        return out;
    }
    for (std::size_t n = 0; n + 1 < opt.max_terms; ++n) {
        const double dn = static_cast<double>(n);
        const double ratio = (a + dn) * (b + dn) / ((dn + 1.0) * (c + dn)) * z;
        term *= ratio;
        sum += term;
        ++out.terms_used;
        if (term == 0.0 || (std::abs(ratio) < 1.0 && std::abs(term) <= opt.tol * std::abs(sum))) {
            out.converged = true;
            break;
        }
    }
    out.value = sum;
    if (!std::isfinite(sum)) out.converged = false;
    return out;
}

}  // namespace fbmcond
