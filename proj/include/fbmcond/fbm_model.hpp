#pragma once

// Model parameters, time windows, realized paths, and the fBm covariance
// structure. Every other header assumes objects built here are valid.

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "fbmcond/errors.hpp"

namespace fbmcond {

inline void validate_hurst(double hurst, const char* where = "hurst")
{
    if (!(hurst > 0.0 && hurst < 1.0))
        detail::throw_domain(where, "Hurst index must lie in (0, 1), got " + std::to_string(hurst));
}

/// Parameters of dX = lambda (mu - X) dt + sigma dB^H.
/// Fractional Brownian motion itself is lambda = 0, sigma = 1.
class FouParams {
public:
    FouParams(double lambda, double mu, double sigma, double hurst)
        : lambda_(lambda), mu_(mu), sigma_(sigma), hurst_(hurst), kappa_(hurst - 0.5)
    {
        validate_hurst(hurst, "FouParams");
        if (!(lambda >= 0.0) || !std::isfinite(lambda))
            detail::throw_domain("FouParams", "lambda must be finite and >= 0");
        if (!(sigma > 0.0) || !std::isfinite(sigma))
            detail::throw_domain("FouParams", "sigma must be finite and > 0");
        if (!std::isfinite(mu)) detail::throw_domain("FouParams", "mu must be finite");
    }

    static FouParams fbm(double hurst) { return {0.0, 0.0, 1.0, hurst}; }

    double lambda() const { return lambda_; }
    double mu() const { return mu_; }
    double sigma() const { return sigma_; }
    double hurst() const { return hurst_; }
    /// H - 1/2, in (-1/2, 1/2).
    double kappa() const { return kappa_; }

    FouParams with_hurst(double hurst) const { return {lambda_, mu_, sigma_, hurst}; }

private:
    double lambda_;
    double mu_;
    double sigma_;
    double hurst_;
    double kappa_;
};

/// Conditioning time s, forecast time t and (optional) horizon T.
struct TimeWindow {
    double s = 0.0;
    double t = 0.0;
    double T = 0.0;

    TimeWindow() = default;
    TimeWindow(double s_, double t_) : TimeWindow(s_, t_, t_) {}
    TimeWindow(double s_, double t_, double T_) : s(s_), t(t_), T(T_)
    {
        if (!std::isfinite(s) || !std::isfinite(t) || !std::isfinite(T))
            detail::throw_domain("TimeWindow", "times must be finite");
        if (s < 0.0) detail::throw_domain("TimeWindow", "s must be >= 0");
        if (t < s) detail::throw_domain("TimeWindow", "t must be >= s");
        if (T < t) detail::throw_domain("TimeWindow", "T must be >= t");
    }

    double length() const { return t - s; }
};

/// A realized fBm path on [0, s]; times[0] = 0 and values[0] = 0.
class FbmGrid {
public:
    FbmGrid(std::vector<double> times, std::vector<double> values)
        : times_(std::move(times)), values_(std::move(values))
    {
        if (times_.empty()) detail::throw_domain("FbmGrid", "empty grid");
        if (times_.size() != values_.size()) detail::throw_domain("FbmGrid", "times/values length mismatch");
        if (times_.front() != 0.0) detail::throw_domain("FbmGrid", "grid must start at t = 0");
        if (values_.front() != 0.0) detail::throw_domain("FbmGrid", "B^H_0 must be 0");
        for (std::size_t i = 1; i < times_.size(); ++i) {
            if (!(times_[i] > times_[i - 1])) detail::throw_domain("FbmGrid", "times must be strictly increasing");
            if (!std::isfinite(values_[i])) detail::throw_domain("FbmGrid", "non-finite path value");
        }
    }

    /// The trivial path for s = 0.
    static FbmGrid origin() { return FbmGrid({0.0}, {0.0}); }

    const std::vector<double>& times() const { return times_; }
    const std::vector<double>& values() const { return values_; }
    std::size_t size() const { return times_.size(); }
    double end_time() const { return times_.back(); }

private:
    std::vector<double> times_;
    std::vector<double> values_;
};

/// Cov(B^H_t, B^H_s) = (t^2H + s^2H - |t - s|^2H) / 2.
inline double fbm_covariance(double t, double s, double hurst)
{
    validate_hurst(hurst, "fbm_covariance");
    if (!(t >= 0.0) || !(s >= 0.0)) detail::throw_domain("fbm_covariance", "times must be >= 0");
    const double h2 = 2.0 * hurst;
    return 0.5 * (std::pow(t, h2) + std::pow(s, h2) - std::pow(std::abs(t - s), h2));
}

/// Autocovariance of unit fBm increments at the given lag. The closed form
/// is evaluated for every lag >= 0, including fractional lags below one.
inline double increment_autocov(double lag, double hurst)
{
    validate_hurst(hurst, "increment_autocov");
    if (!(lag >= 0.0)) detail::throw_domain("increment_autocov", "lag must be >= 0");
    const double h2 = 2.0 * hurst;
    return 0.5 * (std::pow(lag + 1.0, h2) - 2.0 * std::pow(lag, h2) + std::pow(std::abs(lag - 1.0), h2));
}

}  // namespace fbmcond
