#pragma once

// European options on a derived process Z_T = g(X_T) by the Fourier-cosine
// (COS) expansion of the Gaussian law of X_T, plus GfOU closed forms.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "fbmcond/derived_processes.hpp"
#include "fbmcond/detail/gauss_legendre.hpp"
#include "fbmcond/errors.hpp"
#include "fbmcond/fou_conditional.hpp"
#include "fbmcond/specfun.hpp"

namespace fbmcond {

enum class OptionSide { call = 1, put = -1 };

inline const char* to_string(OptionSide s)
{
    return s == OptionSide::call ? "call" : "put";
}

struct OptionSpec {
    double strike = 10.0;
    double rate = 0.0;
    double t = 0.0;
    double T = 1.0;
    OptionSide side = OptionSide::call;

    OptionSpec() = default;
    OptionSpec(double strike_, double rate_, double t_, double T_, OptionSide side_)
        : strike(strike_), rate(rate_), t(t_), T(T_), side(side_)
    {
        validate();
    }

    void validate() const
    {
        if (!(strike > 0.0) || !std::isfinite(strike)) detail::throw_domain("OptionSpec", "strike must be > 0");
        if (!std::isfinite(rate)) detail::throw_domain("OptionSpec", "rate must be finite");
        if (!std::isfinite(t) || !std::isfinite(T) || !(T > t)) detail::throw_domain("OptionSpec", "requires T > t");
    }

    double eta() const { return side == OptionSide::call ? 1.0 : -1.0; }
    double discount() const { return std::exp(-rate * (T - t)); }
};

struct CosConfig {
    std::size_t n_terms = 16;
    double width_multiplier = 10.0;

    void validate() const
    {
        if (n_terms < 1) detail::throw_domain("CosConfig", "n_terms must be >= 1");
        if (!(width_multiplier > 0.0) || !std::isfinite(width_multiplier))
            detail::throw_domain("CosConfig", "width_multiplier must be > 0");
    }
};

/// E[exp(i u X)] for X ~ N(mean, variance).
inline std::complex<double> char_fn(const ConditionalNormal& law, double u)
{
    const double modulus = std::exp(-0.5 * law.variance * u * u);
    const double phase = law.mean * u;
    return {modulus * std::cos(phase), modulus * std::sin(phase)};
}

/// Truncation interval [b, d] = mean -/+ width_multiplier * stddev.
struct CosInterval {
    double b;
    double d;
    double width() const { return d - b; }
};

inline CosInterval cos_interval(const ConditionalNormal& law, const CosConfig& cfg)
{
    cfg.validate();
    if (!(law.variance > 0.0) || !std::isfinite(law.variance) || !std::isfinite(law.mean))
        detail::throw_domain("cos_interval", "law must be finite with positive variance");
    const double half = cfg.width_multiplier * law.stddev();
    return {law.mean - half, law.mean + half};
}

namespace detail {

/// Re{phi(l pi / (d - b)) exp(-i l pi b / (d - b))} for l < L.
inline std::vector<double> cos_weights(const ConditionalNormal& law, const CosInterval& iv, std::size_t terms)
{
    std::vector<double> out(terms);
    for (std::size_t l = 0; l < terms; ++l) {
        const double u = static_cast<double>(l) * std::numbers::pi / iv.width();
        out[l] = (char_fn(law, u) * std::polar(1.0, -u * iv.b)).real();
    }
    out[0] *= 0.5;
    return out;
}

}  // namespace detail

/// COS approximation of the normal density of `law` at y in [b, d].
inline double cos_density(const ConditionalNormal& law, const CosConfig& cfg, double y)
{
    const CosInterval iv = cos_interval(law, cfg);
    if (!(y >= iv.b && y <= iv.d)) detail::throw_domain("cos_density", "y outside [b, d]");
    const auto w = detail::cos_weights(law, iv, cfg.n_terms);
    double sum = 0.0;
    for (std::size_t l = 0; l < w.size(); ++l)
        sum += w[l] * std::cos(static_cast<double>(l) * std::numbers::pi * (y - iv.b) / iv.width());
    return 2.0 / iv.width() * sum;
}

namespace detail {

/// Integrals of e^y cos(l pi (y - b)/D) and cos(l pi (y - b)/D) over [lo, hi].
inline void chi_psi(double b, double width, double lo, double hi, std::size_t terms, std::vector<double>& chi,
                    std::vector<double>& psi)
{
    chi.assign(terms, 0.0);
    psi.assign(terms, 0.0);
    if (!(hi > lo)) return;
    const double e_lo = std::exp(lo);
    const double e_hi = std::exp(hi);
    for (std::size_t l = 0; l < terms; ++l) {
        const double k = static_cast<double>(l) * std::numbers::pi / width;
        const double a_hi = k * (hi - b);
        const double a_lo = k * (lo - b);
        chi[l] = (std::cos(a_hi) * e_hi - std::cos(a_lo) * e_lo + k * (std::sin(a_hi) * e_hi - std::sin(a_lo) * e_lo)) /
                 (1.0 + k * k);
        psi[l] = l == 0 ? hi - lo : (std::sin(a_hi) - std::sin(a_lo)) / k;
    }
}

/// Root of g(y) = level on [lo, hi] where g is monotone and changes sign across it.
inline double monotone_root(const ProcessMap& map, double level, double lo, double hi)
{
    double f_lo = map.forward(lo) - level;
    double x = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
        const double f = map.forward(x) - level;
        if (f == 0.0) return x;
        if ((f < 0.0) == (f_lo < 0.0)) {
            lo = x;
            f_lo = f;
        } else {
            hi = x;
        }
        const double d = map.derivative(x);
        double next = d != 0.0 ? x - f / d : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 1e-14 * std::max(1.0, std::abs(next))) return next;
        x = next;
    }
    return x;
}

/// Breakpoints of [b, d] separating the pieces where the payoff is a
/// single smooth branch: critical points of g and solutions of g(y) = K.
inline std::vector<double> payoff_breakpoints(const ProcessMap& map, double strike, double b, double d)
{
    std::vector<double> pts{b};
    for (double c : map.critical_points())
        if (c > b && c < d) pts.push_back(c);
    pts.push_back(d);
    std::vector<double> out{b};
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double lo = pts[i];
        const double hi = pts[i + 1];
        const double f_lo = map.forward(lo) - strike;
        const double f_hi = map.forward(hi) - strike;
        if (f_lo != 0.0 && f_hi != 0.0 && (f_lo < 0.0) != (f_hi < 0.0)) out.push_back(monotone_root(map, strike, lo, hi));
        out.push_back(hi);
    }
    return out;
}

}  // namespace detail

/// Cosine coefficients V_l of the payoff max(eta (g(y) - K), 0) on [b, d].
///
/// gfou uses the exact primitives of e^y cos and cos; other maps use
/// composite Gauss-Legendre on each piece where the payoff is positive.
/// `refine` multiplies the quadrature panel count.
inline std::vector<double> payoff_coeffs(const OptionSpec& spec, const ProcessMap& map, const CosConfig& cfg,
                                         const ConditionalNormal& law, std::size_t refine = 1)
{
    spec.validate();
    const CosInterval iv = cos_interval(law, cfg);
    const std::size_t terms = cfg.n_terms;
    const double scale = 2.0 / iv.width();
    const double eta = spec.eta();
    const double K = spec.strike;
    std::vector<double> v(terms, 0.0);

    if (map.kind() == MapKind::gfou) {
        const double y_star = std::clamp(std::log(K), iv.b, iv.d);
        const double lo = spec.side == OptionSide::call ? y_star : iv.b;
        const double hi = spec.side == OptionSide::call ? iv.d : y_star;
        std::vector<double> chi;
        std::vector<double> psi;
        detail::chi_psi(iv.b, iv.width(), lo, hi, terms, chi, psi);
        for (std::size_t l = 0; l < terms; ++l) v[l] = scale * eta * (chi[l] - K * psi[l]);
        return v;
    }

    static const detail::GaussLegendreRule rule(16);
    const std::size_t panels = std::max<std::size_t>(8, terms / 2) * std::max<std::size_t>(1, refine);
    const auto pts = detail::payoff_breakpoints(map, K, iv.b, iv.d);
    for (std::size_t p = 0; p + 1 < pts.size(); ++p) {
        const double lo = pts[p];
        const double hi = pts[p + 1];
        if (!(hi > lo)) continue;
        if (eta * (map.forward(0.5 * (lo + hi)) - K) <= 0.0) continue;
        for (std::size_t l = 0; l < terms; ++l) {
            const double k = static_cast<double>(l) * std::numbers::pi / iv.width();
            v[l] += scale * detail::composite_gauss_legendre(
                                [&](double y) { return eta * (map.forward(y) - K) * std::cos(k * (y - iv.b)); }, lo, hi,
                                panels, rule);
        }
    }
    return v;
}

/// Discounted COS sum for precomputed payoff coefficients.
inline double cos_price_from_coeffs(const OptionSpec& spec, const ConditionalNormal& law, const CosConfig& cfg,
                                    const std::vector<double>& coeffs)
{
    const CosInterval iv = cos_interval(law, cfg);
    if (coeffs.size() != cfg.n_terms) detail::throw_domain("cos_price", "coefficient count differs from n_terms");
    const auto w = detail::cos_weights(law, iv, cfg.n_terms);
    double sum = 0.0;
    for (std::size_t l = 0; l < w.size(); ++l) sum += w[l] * coeffs[l];
    return spec.discount() * sum;
}

/// Price of the European option on Z_T = g(X_T) with X_T ~ law.
inline double cos_price(const OptionSpec& spec, const ProcessMap& map, const ConditionalNormal& law,
                        const CosConfig& cfg = {})
{
    return cos_price_from_coeffs(spec, law, cfg, payoff_coeffs(spec, map, cfg, law));
}

/// Closed-form GfOU call and put prices for ln Z_T ~ law.
inline double gfou_closed_form(const OptionSpec& spec, const ConditionalNormal& law)
{
    spec.validate();
    if (!(law.variance >= 0.0) || !std::isfinite(law.mean)) detail::throw_domain("gfou_closed_form", "invalid law");
    const double disc = spec.discount();
    const double K = spec.strike;
    if (law.variance == 0.0) return disc * std::max(spec.eta() * (std::exp(law.mean) - K), 0.0);
    const double sd = law.stddev();
    const double forward = std::exp(law.mean + 0.5 * law.variance);
    const double d_asset = (std::log(K) - law.variance - law.mean) / sd;
    const double d_strike = (std::log(K) - law.mean) / sd;
    if (spec.side == OptionSide::call)
        return disc * (forward * norm_cdf(-d_asset) - K * norm_cdf(-d_strike));
    return disc * (K * norm_cdf(d_strike) - forward * norm_cdf(d_asset));
}

}  // namespace fbmcond
