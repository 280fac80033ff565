#pragma once

// Conditional law of the fractional Ornstein-Uhlenbeck process X_t given
// the fBm history up to time s, for every Hurst index in (0, 1).
//
// The variance reduces to a single weighted integral
//
//   Var = Gamma(1-k) / (Gamma(2-2k) Gamma(k+1)) * (1+2k) (t^(1-2k) - s^(1-2k)) / sqrt(pi)
//         * Int_R exp(-w^2) h(k, z(w))^2 dw,
//
// with k = H - 1/2, evaluated by the truncated trapezoidal rule. The inner
// function h(k, z) = sum_n c_n R_n(k, z) expands c(r) = sigma exp(-lambda (t - r))
// in powers of r; the moments R_n come from hypergeometric closed forms
// that stay valid for negative k, followed by a two-term recursion.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "fbmcond/detail/gauss_legendre.hpp"
#include "fbmcond/errors.hpp"
#include "fbmcond/fbm_model.hpp"
#include "fbmcond/specfun.hpp"

namespace fbmcond {

/// Hyperparameters of the variance quadrature and the c(r) expansion.
struct QuadratureConfig {
    double step_m = 0.5;          ///< trapezoidal step in w
    double range_a = 5.0;         ///< cutoff |w| <= a, in units of the integrand's decay width
    std::size_t max_terms = 20;   ///< highest expansion index N (N + 1 terms)
    double series_tol = 1e-8;     ///< stop once |c_n R_n / h| drops below this
    std::size_t psi_nodes = 200;  ///< panels for the Psi_c inner integral

    void validate() const
    {
        if (!(step_m > 0.0)) detail::throw_domain("QuadratureConfig", "step_m must be > 0");
        if (!(range_a > 0.0)) detail::throw_domain("QuadratureConfig", "range_a must be > 0");
        if (max_terms < 1) detail::throw_domain("QuadratureConfig", "max_terms must be >= 1");
        if (!(series_tol > 0.0)) detail::throw_domain("QuadratureConfig", "series_tol must be > 0");
        if (psi_nodes < 8) detail::throw_domain("QuadratureConfig", "psi_nodes must be >= 8");
    }
};

/// N(mean, variance), the law of X_t given F_s.
struct ConditionalNormal {
    double mean = 0.0;
    double variance = 0.0;

    double stddev() const { return std::sqrt(variance); }
};

/// Ratio above which an exhausted expansion is a hard failure.
inline constexpr double kHardSeriesRatio = 1e-3;

namespace detail {

inline void check_kappa(double kappa, const char* where)
{
    if (!(std::abs(kappa) < 0.5)) throw_domain(where, "kappa must lie in (-1/2, 1/2)");
    if (kappa == 0.0) throw_domain(where, "kappa = 0 has no singular-moment representation");
}

// The R_n evaluators carry u = 1 - z/t alongside z so that nodes packed
// against z = t keep full relative precision in (t - z).

inline double r_n_hyp_impl(int n, double kappa, double z, double u, double)
{
    if (u == 0.0) {
        if (kappa > 0.0) return 0.0;
        throw_domain("r_n_hyp", "z = t is singular for kappa < 0");
    }
    const double dn = static_cast<double>(n);
    const SeriesResult f = hyp2f1(dn + 2.0 * kappa + 1.0, kappa, kappa + 1.0, u);
    if (!f.converged) throw convergence_error("r_n_hyp: 2F1 series did not converge at 1 - z/t = " + std::to_string(u));
    return std::pow(z, 2.0 * kappa + dn) * std::pow(u, kappa) * f.value;
}

inline double r_n_origin_impl(int n, double kappa, double z, double u, double t)
{
    const double dn = static_cast<double>(n);
    const double lead_exp = 2.0 * kappa + dn;
    double lead = 0.0;
    if (z == 0.0) {
        if (lead_exp < 0.0) throw_domain("r_n_origin", "z = 0 with 2 kappa + n < 0 is singular");
    } else {
        const double coef = std::tgamma(kappa + 1.0) * std::tgamma(dn + 1.0 + kappa) /
                            (2.0 * std::cos(std::numbers::pi * kappa) * std::tgamma(dn + 1.0 + 2.0 * kappa));
        lead = coef * std::pow(z, lead_exp);
    }
    const SeriesResult f = hyp2f1(-kappa - dn, 1.0, 1.0 - dn - 2.0 * kappa, z / t);
    if (!f.converged) throw convergence_error("r_n_origin: 2F1 series did not converge");
    const double tail = kappa / (dn + 2.0 * kappa) * std::pow(t * u, kappa) * std::pow(t, dn + kappa) * f.value;
    return lead + tail;
}

inline double r_n_recursion_impl(double r_prev, int n, double kappa, double z, double u, double t)
{
    const double dn = static_cast<double>(n);
    const double denom = 2.0 * kappa + dn;
    if (denom == 0.0) throw_domain("r_n_recursion", "2 kappa + n = 0");
    const double boundary = u == 0.0 ? 0.0 : kappa * std::pow(t, kappa + dn) * std::pow(t * u, kappa);
    return (boundary + z * (kappa + dn) * r_prev) / denom;
}

inline void check_z(double z, double t, const char* where)
{
    if (!(t > 0.0) || !std::isfinite(t)) throw_domain(where, "t must be finite and > 0");
    if (!(z >= 0.0 && z <= t)) throw_domain(where, "z must lie in [0, t]");
}

}  // namespace detail

/// A_k = k (1 - 4k^2) Gamma(1-k) / (Gamma(2-2k) Gamma(k)), the front factor
/// of the fractional Riemann-Liouville norm.
inline double a_kappa(double kappa)
{
    detail::check_kappa(kappa, "a_kappa");
    return kappa * (1.0 - 4.0 * kappa * kappa) * gamma(1.0 - kappa) / (gamma(2.0 - 2.0 * kappa) * gamma(kappa));
}

/// c_n = sigma exp(-lambda t) lambda^n / n!, the power-series coefficients of
/// c(r) = sigma exp(-lambda (t - r)).
inline double series_coeff(std::size_t n, const FouParams& params, double t)
{
    const double lambda = params.lambda();
    double c = params.sigma() * std::exp(-lambda * t);
    for (std::size_t k = 1; k <= n; ++k) c *= lambda / static_cast<double>(k);
    return c;
}

/// R_n(k, z) = z^(2k+n) (1 - z/t)^k 2F1(n+2k+1, k; k+1; 1 - z/t), 0 < z <= t.
inline double r_n_hyp(int n, double kappa, double z, double t)
{
    detail::check_kappa(kappa, "r_n_hyp");
    detail::check_z(z, t, "r_n_hyp");
    if (n < 0) detail::throw_domain("r_n_hyp", "n must be >= 0");
    if (z == 0.0) detail::throw_domain("r_n_hyp", "undefined at z = 0; use r_n_origin");
    return detail::r_n_hyp_impl(n, kappa, z, 1.0 - z / t, t);
}

/// R_n(k, z) in the form regular at z = 0, valid for 0 <= z < t/2.
inline double r_n_origin(int n, double kappa, double z, double t)
{
    detail::check_kappa(kappa, "r_n_origin");
    detail::check_z(z, t, "r_n_origin");
    if (n < 0) detail::throw_domain("r_n_origin", "n must be >= 0");
    if (!(z / t < 0.5)) detail::throw_domain("r_n_origin", "requires z/t < 1/2");
    return detail::r_n_origin_impl(n, kappa, z, 1.0 - z / t, t);
}

/// R_n from R_{n-1}: (k t^(k+n) (t-z)^k + z (k+n) R_{n-1}) / (2k + n).
inline double r_n_recursion(double r_prev, int n, double kappa, double z, double t)
{
    detail::check_kappa(kappa, "r_n_recursion");
    detail::check_z(z, t, "r_n_recursion");
    if (n < 1) detail::throw_domain("r_n_recursion", "n must be >= 1");
    return detail::r_n_recursion_impl(r_prev, n, kappa, z, 1.0 - z / t, t);
}

struct HSeriesResult {
    double value = 0.0;
    std::size_t terms_used = 0;
    /// Expansion hit max_terms with a last ratio in (series_tol, kHardSeriesRatio].
    bool warning = false;
    double last_ratio = 0.0;
};

namespace detail {

inline HSeriesResult h_eval_impl(const FouParams& params, double z, double u, double t,
                                 const QuadratureConfig& cfg, bool at_origin)
{
    const double kappa = params.kappa();
    HSeriesResult out;
    double c = series_coeff(0, params, t);
    double r = (at_origin && u > 0.5) ? r_n_origin_impl(0, kappa, z, u, t) : r_n_hyp_impl(0, kappa, z, u, t);
    double h = c * r;
    out.terms_used = 1;
    if (params.lambda() == 0.0 || h == 0.0) {
        out.value = h;
        return out;
    }
    bool converged = false;
    double ratio = 1.0;
    for (std::size_t n = 1; n <= cfg.max_terms; ++n) {
        c *= params.lambda() / static_cast<double>(n);
        r = r_n_recursion_impl(r, static_cast<int>(n), kappa, z, u, t);
        const double term = c * r;
        h += term;
        ++out.terms_used;
        ratio = std::abs(term / h);
        if (ratio < cfg.series_tol) {
            converged = true;
            break;
        }
    }
    out.value = h;
    out.last_ratio = ratio;
    if (!converged) {
        if (ratio > kHardSeriesRatio)
            throw convergence_error("h_eval: expansion exhausted " + std::to_string(cfg.max_terms) +
                                    " terms with last ratio " + std::to_string(ratio));
        out.warning = true;
    }
    return out;
}

}  // namespace detail

/// h(k, z) = sum_{n=0}^{N} c_n R_n(k, z), truncated at the relative tolerance.
/// With `at_origin` (s = 0) and z/t < 1/2, R_0 uses the form regular at z = 0.
inline HSeriesResult h_eval(const FouParams& params, double z, double t, const QuadratureConfig& cfg,
                            bool at_origin)
{
    detail::check_kappa(params.kappa(), "h_eval");
    detail::check_z(z, t, "h_eval");
    cfg.validate();
    if (z == 0.0 && !at_origin) detail::throw_domain("h_eval", "z = 0 requires the origin representation");
    return detail::h_eval_impl(params, z, 1.0 - z / t, t, cfg, at_origin);
}

struct VarianceResult {
    double variance = 0.0;
    std::size_t nodes = 0;           ///< trapezoidal nodes evaluated
    std::size_t max_terms_used = 0;  ///< longest expansion over all nodes
    bool series_warning = false;

    double stddev() const { return std::sqrt(variance); }
};

namespace detail {

/// Gaussian decay rate of the w-integrand tails. For k < 0 the function h
/// blows up at z = t like (t - z)^k, and for s = 0 also at z = 0 like z^(2k);
/// under the erfc substitution the integrand then decays like exp(-alpha w^2)
/// with alpha < 1 instead of exp(-w^2).
inline double tail_decay_rate(double kappa, double s)
{
    if (kappa >= 0.0) return 1.0;
    double alpha = 1.0 + 2.0 * kappa;
    if (s == 0.0) alpha = std::min(alpha, (1.0 + 2.0 * kappa) / (1.0 - 2.0 * kappa));
    return alpha;
}

}  // namespace detail

/// Var[X_t | F_s] with diagnostics.
inline VarianceResult conditional_variance_detail(const FouParams& params, const TimeWindow& window,
                                                  const QuadratureConfig& cfg = {})
{
    cfg.validate();
    const double s = window.s;
    const double t = window.t;
    const double kappa = params.kappa();
    const double sigma = params.sigma();
    const double lambda = params.lambda();
    VarianceResult out;

    if (kappa == 0.0) {
        if (lambda == 0.0) out.variance = sigma * sigma * (t - s);
        else out.variance = -sigma * sigma * std::expm1(-2.0 * lambda * (t - s)) / (2.0 * lambda);
        return out;
    }
    if (s == t) return out;

    const double p = 1.0 - 2.0 * kappa;
    if (p < 2e-3) detail::throw_domain("conditional_variance", "H too close to 1: exponent 1/(1 - 2 kappa) blows up");
    const double sp = std::pow(s, p);
    const double tp = std::pow(t, p);
    const double dx = tp - sp;
    const bool at_origin = s == 0.0;

    const double alpha = detail::tail_decay_rate(kappa, s);
    const double a_eff = cfg.range_a / std::sqrt(alpha);
    const auto half = static_cast<long>(std::floor(a_eff / cfg.step_m));

    double sum = 0.0;
    for (long i = -half; i <= half; ++i) {
        const double w = cfg.step_m * static_cast<double>(i);
        // y = erfc(-w)/2 and 1 - y, each from the side where it is small.
        const double y = w < 0.0 ? 0.5 * std::erfc(-w) : 1.0 - 0.5 * std::erfc(w);
        const double ymc = w < 0.0 ? 1.0 - y : 0.5 * std::erfc(w);
        double z;
        double u;
        if (y <= 0.5) {
            z = std::pow(sp + dx * y, 1.0 / p);
            u = 1.0 - z / t;
        } else {
            const double e = dx * ymc / tp;
            u = -std::expm1(std::log1p(-e) / p);
            z = t * (1.0 - u);
        }
        const HSeriesResult h = detail::h_eval_impl(params, z, u, t, cfg, at_origin);
        out.max_terms_used = std::max(out.max_terms_used, h.terms_used);
        out.series_warning = out.series_warning || h.warning;
        sum += std::exp(-w * w) * h.value * h.value;
        ++out.nodes;
    }
    const double integral = cfg.step_m * sum;
    const double front = gamma(1.0 - kappa) / (gamma(2.0 - 2.0 * kappa) * gamma(kappa + 1.0));
    out.variance = front * (1.0 + 2.0 * kappa) * dx / std::sqrt(std::numbers::pi) * integral;
    return out;
}

inline double conditional_variance(const FouParams& params, const TimeWindow& window, const QuadratureConfig& cfg = {})
{
    return conditional_variance_detail(params, window, cfg).variance;
}

/// Psi_c(s, t, v) for v in (0, s): the weight of the past increment dB_v in
/// E[X_t | F_s]. Quadrature nodes depend only on (params, window), so the
/// kernel is built once and evaluated at many v.
///
/// The inner integral over r in [s, t] is taken in w = (r - s)^(1+k), which
/// absorbs the (r - s)^k endpoint factor, with cubically graded panels
/// toward w = 0 to resolve 1/(r - v) when v sits just below s.
class PsiKernel {
public:
    PsiKernel(const FouParams& params, const TimeWindow& window, const QuadratureConfig& cfg = {})
        : s_(window.s), kappa_(params.kappa())
    {
        cfg.validate();
        if (kappa_ == 0.0 || window.s == 0.0 || window.s == window.t) return;
        const double s = window.s;
        const double t = window.t;
        const double q = 1.0 / (1.0 + kappa_);
        const double w_max = std::pow(t - s, 1.0 + kappa_);
        const detail::GaussLegendreRule rule(8);
        const std::size_t panels = cfg.psi_nodes;
        nodes_.reserve(panels * rule.nodes.size());
        weights_.reserve(panels * rule.nodes.size());
        for (std::size_t p = 0; p < panels; ++p) {
            const double f0 = static_cast<double>(p) / static_cast<double>(panels);
            const double f1 = static_cast<double>(p + 1) / static_cast<double>(panels);
            const double lo = w_max * f0 * f0 * f0;
            const double hi = w_max * f1 * f1 * f1;
            const double half = 0.5 * (hi - lo);
            const double mid = 0.5 * (hi + lo);
            for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
                const double w = mid + half * rule.nodes[k];
                const double r = s + std::pow(w, q);
                const double c = params.sigma() * std::exp(-params.lambda() * (t - r));
                nodes_.push_back(r);
                weights_.push_back(half * rule.weights[k] * std::pow(r, kappa_) * c / (1.0 + kappa_));
            }
        }
        prefactor_ = std::sin(std::numbers::pi * kappa_) / std::numbers::pi;
    }

    double operator()(double v) const
    {
        if (!(v > 0.0 && v < s_)) detail::throw_domain("psi_c", "v must lie strictly inside (0, s)");
        if (kappa_ == 0.0 || nodes_.empty()) return 0.0;
        double sum = 0.0;
        for (std::size_t j = 0; j < nodes_.size(); ++j) sum += weights_[j] / (nodes_[j] - v);
        return prefactor_ * std::pow(v, -kappa_) * std::pow(s_ - v, -kappa_) * sum;
    }

private:
    double s_;
    double kappa_;
    double prefactor_ = 0.0;
    std::vector<double> nodes_;
    std::vector<double> weights_;
};

inline double psi_c(double v, const TimeWindow& window, const FouParams& params, const QuadratureConfig& cfg = {})
{
    if (!(window.s < window.t)) detail::throw_domain("psi_c", "requires s < t");
    return PsiKernel(params, window, cfg)(v);
}

namespace detail {

/// Mean of Psi_c over the cell [a, b], i.e. the weight of B(b) - B(a) when B
/// is linear between observations. Near v = 0 and v = s, Psi_c is a mix of
/// powers (v^(-k), v^|k|, ...), singular for k > 0. Cells touching either end
/// are mapped by u = y^(1/(1-|k|)), which flattens the leading power, and
/// split into geometric panels in y for the rest.
inline double psi_cell_average(const PsiKernel& psi, double a, double b, double s, double kappa)
{
    static const GaussLegendreRule rule(16);
    constexpr int kLevels = 24;
    const double q = 1.0 / (1.0 - std::abs(kappa));
    // integral over u in [0, len] of Psi_c(from + dir u)
    auto graded = [&](double from, double dir, double len) {
        double sum = 0.0;
        double hi = 1.0;
        for (int level = 0; level <= kLevels; ++level) {
            const double lo = level == kLevels ? 0.0 : 0.5 * hi;
            const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
            for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
                const double y = mid + half * rule.nodes[k];
                const double yq = std::pow(y, q - 1.0);
                const double v = from + dir * len * yq * y;
                if (v == from) continue; // below resolution; the integrable tail is negligible
                sum += half * rule.weights[k] * psi(v) * len * q * yq;
            }
            hi = lo;
        }
        return sum;
    };
    const double width = b - a;
    const bool at_zero = a == 0.0;
    const bool at_s = std::abs(b - s) <= 1e-12 * std::max(1.0, s);
    double integral = 0.0;
    if (at_zero && at_s) {
        integral = graded(0.0, 1.0, 0.5 * width) + graded(s, -1.0, 0.5 * width);
    } else if (at_zero) {
        integral = graded(0.0, 1.0, width);
    } else if (at_s) {
        integral = graded(s, -1.0, width);
    } else {
        const double half = 0.5 * width, mid = 0.5 * (a + b);
        for (std::size_t k = 0; k < rule.nodes.size(); ++k) integral += half * rule.weights[k] * psi(mid + half * rule.nodes[k]);
    }
    return integral / width;
}

inline void check_path(const FbmGrid& path, const TimeWindow& window)
{
    const double tol = 1e-9 * std::max(1.0, window.s);
    if (std::abs(path.end_time() - window.s) > tol)
        throw_domain("conditional_mean", "path must end at s = " + std::to_string(window.s));
}

}  // namespace detail

/// X_s from X_0 and the realized fBm increments, with each increment
/// discounted from its left endpoint.
inline double reconstruct_state(const FouParams& params, const FbmGrid& path, double x0)
{
    const double s = path.end_time();
    const double lambda = params.lambda();
    const auto& times = path.times();
    const auto& values = path.values();
    double driven = 0.0;
    for (std::size_t i = 0; i + 1 < path.size(); ++i)
        driven += std::exp(-lambda * (s - times[i])) * (values[i + 1] - values[i]);
    return x0 * std::exp(-lambda * s) - params.mu() * std::expm1(-lambda * s) + params.sigma() * driven;
}

/// E[X_t | F_s] when the state X_s is known; the path supplies the fBm increments.
inline double conditional_mean_from_state(const FouParams& params, const TimeWindow& window, const FbmGrid& path,
                                          double x_s, const QuadratureConfig& cfg = {})
{
    detail::check_path(path, window);
    const double decay = std::exp(-params.lambda() * window.length());
    double mean = x_s * decay + params.mu() * (1.0 - decay);
    if (path.size() < 2 || params.kappa() == 0.0 || window.s == window.t) return mean;

    const PsiKernel psi(params, window, cfg);
    const auto& times = path.times();
    const auto& values = path.values();
    double memory = 0.0;
    for (std::size_t i = 0; i + 1 < path.size(); ++i)
        memory += detail::psi_cell_average(psi, times[i], times[i + 1], window.s, params.kappa()) *
                  (values[i + 1] - values[i]);
    return mean + memory;
}

/// E[X_t | F_s] with X_s rebuilt from X_0 along the path.
inline double conditional_mean(const FouParams& params, const TimeWindow& window, const FbmGrid& path, double x0,
                               const QuadratureConfig& cfg = {})
{
    detail::check_path(path, window);
    return conditional_mean_from_state(params, window, path, reconstruct_state(params, path, x0), cfg);
}

inline ConditionalNormal conditional_law(const FouParams& params, const TimeWindow& window, const FbmGrid& path,
                                         double x0, const QuadratureConfig& cfg = {})
{
    return {conditional_mean(params, window, path, x0, cfg), conditional_variance(params, window, cfg)};
}

}  // namespace fbmcond
