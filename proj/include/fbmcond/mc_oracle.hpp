#pragma once

// Seeded Monte Carlo generation of fBm and Euler fOU paths, and the
// empirical conditional statistics used to validate the quadrature results.
//
// Paths are produced in fixed-size chunks; every path (or path pair for the
// spectral scheme) draws from its own generator seeded from (master seed,
// index), so a bundle is bitwise identical for any number of workers.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "fbmcond/errors.hpp"
#include "fbmcond/fbm_model.hpp"

namespace fbmcond {

enum class FbmScheme { cholesky, spectral };

inline const char* to_string(FbmScheme s)
{
    return s == FbmScheme::cholesky ? "cholesky" : "spectral";
}

struct McConfig {
    double dt = 0.01;
    std::size_t n_paths = 10000;
    std::uint64_t seed = 0;
    FbmScheme scheme = FbmScheme::cholesky;
    std::size_t workers = 0;        ///< 0: hardware concurrency
    std::size_t record_stride = 1;  ///< keep every k-th grid point in the bundle

    static McConfig cheap() { return {}; }
    static McConfig expensive()
    {
        McConfig c;
        c.dt = 0.005;
        c.n_paths = 100000;
        return c;
    }

    void validate() const
    {
        if (!(dt > 0.0) || !std::isfinite(dt)) detail::throw_domain("McConfig", "dt must be > 0");
        if (n_paths < 1) detail::throw_domain("McConfig", "n_paths must be >= 1");
        if (record_stride < 1) detail::throw_domain("McConfig", "record_stride must be >= 1");
    }
};

enum class ProcessKind { fbm, fou };

inline const char* to_string(ProcessKind k)
{
    return k == ProcessKind::fbm ? "fbm" : "fou";
}

/// Simulated paths on a shared uniform grid, stored path-major.
struct PathBundle {
    std::vector<double> times;
    std::size_t n_paths = 0;
    std::vector<double> values;
    ProcessKind kind = ProcessKind::fbm;
    double hurst = 0.5;
    double dt = 0.0;  ///< spacing of `times` (simulation step times record stride)
    std::uint64_t seed = 0;
    FbmScheme scheme = FbmScheme::cholesky;
    std::vector<std::string> warnings;

    std::size_t n_times() const { return times.size(); }
    std::span<const double> path(std::size_t i) const { return {values.data() + i * n_times(), n_times()}; }
    double at(std::size_t path_index, std::size_t time_index) const
    {
        return values[path_index * n_times() + time_index];
    }

    /// Index of `time` on the recorded grid; throws when off-grid.
    std::size_t time_index(double time) const
    {
        const double k = std::round(time / dt);
        const auto idx = static_cast<std::size_t>(std::max(0.0, k));
        if (idx >= times.size() || std::abs(times[idx] - time) > 1e-9 * std::max(1.0, time))
            detail::throw_domain("PathBundle", "time " + std::to_string(time) + " is not on the recorded grid");
        return idx;
    }
};

/// Header line starting with '#', then "time,path0,path1,..." and one row per time.
inline void write_csv(std::ostream& os, const PathBundle& b)
{
    os << "# kind=" << to_string(b.kind) << " hurst=" << b.hurst << " dt=" << b.dt << " n_paths=" << b.n_paths
       << " seed=" << b.seed << " scheme=" << to_string(b.scheme) << '\n';
    os << "time";
    for (std::size_t p = 0; p < b.n_paths; ++p) os << ",path" << p;
    os << '\n';
    const auto old_precision = os.precision(17);
    for (std::size_t i = 0; i < b.n_times(); ++i) {
        os << b.times[i];
        for (std::size_t p = 0; p < b.n_paths; ++p) os << ',' << b.at(p, i);
        os << '\n';
    }
    os.precision(old_precision);
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state)
{
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Generator for substream `index` of `master`.
inline std::mt19937_64 substream(std::uint64_t master, std::uint64_t index)
{
    std::uint64_t state = master ^ (0xD1B54A32D192ED03ULL * (index + 1));
    std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(state)), static_cast<std::uint32_t>(splitmix64(state)),
                      static_cast<std::uint32_t>(splitmix64(state)), static_cast<std::uint32_t>(splitmix64(state))};
    return std::mt19937_64(seq);
}

inline constexpr std::size_t kChunkPaths = 256;
inline constexpr std::size_t kMaxCholeskySteps = 10000;

inline std::size_t steps_for(double horizon, double dt, const char* where)
{
    if (!(horizon > 0.0)) throw_domain(where, "horizon must be > 0");
    const double n = horizon / dt;
    const double rounded = std::round(n);
    if (std::abs(n - rounded) > 1e-6 * std::max(1.0, n))
        throw_domain(where, "horizon must be a multiple of dt");
    return static_cast<std::size_t>(rounded);
}

/// Runs fn(chunk_index) for every chunk on `workers` threads.
template <class Fn>
void parallel_chunks(std::size_t n_chunks, std::size_t workers, Fn&& fn)
{
    if (workers == 0) workers = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    workers = std::min(workers, n_chunks);
    if (workers <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) fn(c);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t c = next++; c < n_chunks; c = next++) {
                try {
                    fn(c);
                } catch (...) {
                    if (!failed.exchange(true)) failure = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

/// Lower Cholesky factor of the covariance of the first `steps` increments
/// of fBm on a grid of spacing dt.
inline Eigen::MatrixXd increment_cholesky(double hurst, double dt, std::size_t steps)
{
    if (steps > kMaxCholeskySteps)
        throw_domain("increment_cholesky", "grid of " + std::to_string(steps) + " steps exceeds the Cholesky memory guard");
    const double scale = std::pow(dt, 2.0 * hurst);
    std::vector<double> gamma(steps);
    for (std::size_t k = 0; k < steps; ++k) gamma[k] = scale * increment_autocov(static_cast<double>(k), hurst);
    Eigen::MatrixXd cov(steps, steps);
    for (std::size_t i = 0; i < steps; ++i)
        for (std::size_t j = 0; j < steps; ++j) cov(i, j) = gamma[i > j ? i - j : j - i];
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) throw_domain("increment_cholesky", "increment covariance is not positive definite");
    return llt.matrixL();
}

/// Square roots of the circulant-embedding eigenvalues, scaled by 1/sqrt(2n).
/// Returns an empty vector when the embedding is not nonnegative definite.
inline std::vector<double> circulant_sqrt_eigen(double hurst, double dt, std::size_t steps)
{
    const std::size_t m = 2 * steps;
    const double scale = std::pow(dt, 2.0 * hurst);
    std::vector<std::complex<double>> row(m);
    for (std::size_t k = 0; k <= steps; ++k) row[k] = scale * increment_autocov(static_cast<double>(k), hurst);
    for (std::size_t k = steps + 1; k < m; ++k) row[k] = row[m - k];
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> eig;
    fft.fwd(eig, row);
    double max_eig = 0.0;
    for (const auto& e : eig) max_eig = std::max(max_eig, e.real());
    std::vector<double> out(m);
    for (std::size_t k = 0; k < m; ++k) {
        const double v = eig[k].real();
        if (v < -1e-10 * max_eig) return {};
        out[k] = std::sqrt(std::max(v, 0.0) / static_cast<double>(m));
    }
    return out;
}

/// Produces fBm increments for all paths chunk by chunk and hands each
/// chunk to consume(first_path, increments) with increments (steps x count).
template <class Consume>
void fbm_increment_chunks(double hurst, std::size_t steps, const McConfig& cfg, std::vector<std::string>& warnings,
                          FbmScheme& used_scheme, Consume&& consume)
{
    validate_hurst(hurst, "gen_fbm_paths");
    const std::size_t n_chunks = (cfg.n_paths + kChunkPaths - 1) / kChunkPaths;
    used_scheme = cfg.scheme;

    std::vector<double> root_eig;
    if (cfg.scheme == FbmScheme::spectral) {
        root_eig = circulant_sqrt_eigen(hurst, cfg.dt, steps);
        if (root_eig.empty()) {
            warnings.emplace_back("circulant embedding not nonnegative definite; fell back to cholesky");
            used_scheme = FbmScheme::cholesky;
        }
    }

    if (used_scheme == FbmScheme::cholesky) {
        const Eigen::MatrixXd lower = increment_cholesky(hurst, cfg.dt, steps);
        parallel_chunks(n_chunks, cfg.workers, [&](std::size_t c) {
            const std::size_t first = c * kChunkPaths;
            const std::size_t count = std::min(kChunkPaths, cfg.n_paths - first);
            Eigen::MatrixXd noise(steps, count);
            for (std::size_t j = 0; j < count; ++j) {
                auto rng = substream(cfg.seed, first + j);
                std::normal_distribution<double> normal;
                for (std::size_t i = 0; i < steps; ++i) noise(i, j) = normal(rng);
            }
            const Eigen::MatrixXd inc = lower.triangularView<Eigen::Lower>() * noise;
            consume(first, inc);
        });
        return;
    }

    const std::size_t m = 2 * steps;
    parallel_chunks(n_chunks, cfg.workers, [&](std::size_t c) {
        const std::size_t first = c * kChunkPaths;  // kChunkPaths is even, so pairs never straddle chunks
        const std::size_t count = std::min(kChunkPaths, cfg.n_paths - first);
        Eigen::MatrixXd inc(steps, count);
        Eigen::FFT<double> fft;
        std::vector<std::complex<double>> spec(m);
        std::vector<std::complex<double>> out;
        for (std::size_t j = 0; j < count; j += 2) {
            auto rng = substream(cfg.seed, (first + j) / 2);
            std::normal_distribution<double> normal;
            for (std::size_t k = 0; k < m; ++k) {
                const double re = normal(rng);
                const double im = normal(rng);
                spec[k] = root_eig[k] * std::complex<double>(re, im);
            }
            fft.fwd(out, spec);
            for (std::size_t i = 0; i < steps; ++i) inc(i, j) = out[i].real();
            if (j + 1 < count)
                for (std::size_t i = 0; i < steps; ++i) inc(i, j + 1) = out[i].imag();
        }
        consume(first, inc);
    });
}

inline PathBundle make_bundle(ProcessKind kind, double hurst, std::size_t steps, const McConfig& cfg)
{
    PathBundle b;
    b.kind = kind;
    b.hurst = hurst;
    b.seed = cfg.seed;
    b.scheme = cfg.scheme;
    b.n_paths = cfg.n_paths;
    b.dt = cfg.dt * static_cast<double>(cfg.record_stride);
    for (std::size_t i = 0; i <= steps; i += cfg.record_stride) b.times.push_back(cfg.dt * static_cast<double>(i));
    b.values.assign(b.n_paths * b.times.size(), 0.0);
    return b;
}

}  // namespace detail

/// Exact-covariance fBm paths on [0, horizon] with B_0 = 0.
inline PathBundle gen_fbm_paths(double hurst, double horizon, const McConfig& cfg)
{
    cfg.validate();
    const std::size_t steps = detail::steps_for(horizon, cfg.dt, "gen_fbm_paths");
    PathBundle b = detail::make_bundle(ProcessKind::fbm, hurst, steps, cfg);
    const std::size_t nt = b.n_times();
    detail::fbm_increment_chunks(hurst, steps, cfg, b.warnings, b.scheme,
                                 [&](std::size_t first, const Eigen::MatrixXd& inc) {
                                     for (Eigen::Index j = 0; j < inc.cols(); ++j) {
                                         double* row = b.values.data() + (first + j) * nt;
                                         double level = 0.0;
                                         for (Eigen::Index i = 0; i < inc.rows(); ++i) {
                                             level += inc(i, j);
                                             const auto step = static_cast<std::size_t>(i) + 1;
                                             if (step % cfg.record_stride == 0) row[step / cfg.record_stride] = level;
                                         }
                                     }
                                 });
    return b;
}

namespace detail {

inline void euler_fou_path(const FouParams& params, double x_start, std::size_t first_step,
                           std::span<const double> increments, double dt, std::size_t stride, double* row)
{
    double x = x_start;
    for (std::size_t i = 0; i < increments.size(); ++i) {
        x += params.lambda() * (params.mu() - x) * dt + params.sigma() * increments[i];
        const std::size_t step = first_step + i + 1;
        if (step % stride == 0) row[step / stride] = x;
    }
}

}  // namespace detail

/// Euler paths of dX = lambda (mu - X) dt + sigma dB^H started at x0.
inline PathBundle gen_fou_paths(const FouParams& params, double horizon, const McConfig& cfg, double x0)
{
    cfg.validate();
    const std::size_t steps = detail::steps_for(horizon, cfg.dt, "gen_fou_paths");
    PathBundle b = detail::make_bundle(ProcessKind::fou, params.hurst(), steps, cfg);
    const std::size_t nt = b.n_times();
    detail::fbm_increment_chunks(params.hurst(), steps, cfg, b.warnings, b.scheme,
                                 [&](std::size_t first, const Eigen::MatrixXd& inc) {
                                     for (Eigen::Index j = 0; j < inc.cols(); ++j) {
                                         double* row = b.values.data() + (first + j) * nt;
                                         row[0] = x0;
                                         std::span<const double> col(inc.col(j).data(), static_cast<std::size_t>(inc.rows()));
                                         detail::euler_fou_path(params, x0, 0, col, cfg.dt, cfg.record_stride, row);
                                     }
                                 });
    return b;
}

/// Continuations of a fixed fBm history beyond time s.
///
/// With the increment covariance factored as L L^T, the first block of
/// increments depends only on the first block of standard normals. Holding
/// those normals fixed (recovered from the history by a triangular solve)
/// and redrawing the rest samples exactly from the law of the future
/// increments given the past ones.
class ConditionalResimulator {
public:
    ConditionalResimulator(double hurst, double dt, double s, double t)
        : hurst_(hurst), dt_(dt), s_(s), t_(t)
    {
        validate_hurst(hurst, "ConditionalResimulator");
        if (!(dt > 0.0)) detail::throw_domain("ConditionalResimulator", "dt must be > 0");
        if (!(s > 0.0 && t > s)) detail::throw_domain("ConditionalResimulator", "requires 0 < s < t");
        past_ = detail::steps_for(s, dt, "ConditionalResimulator");
        total_ = detail::steps_for(t, dt, "ConditionalResimulator");
        lower_ = detail::increment_cholesky(hurst, dt, total_);
    }

    double hurst() const { return hurst_; }
    double dt() const { return dt_; }
    std::size_t past_steps() const { return past_; }
    std::size_t total_steps() const { return total_; }

    /// An unconditional fBm path on [0, s] drawn from substream 0 of `seed`.
    FbmGrid draw_history(std::uint64_t seed) const
    {
        auto rng = detail::substream(seed ^ 0xA5A5A5A5A5A5A5A5ULL, 0);
        std::normal_distribution<double> normal;
        Eigen::VectorXd noise(static_cast<Eigen::Index>(past_));
        for (auto& v : noise) v = normal(rng);
        const auto p = static_cast<Eigen::Index>(past_);
        const Eigen::VectorXd inc = lower_.topLeftCorner(p, p).triangularView<Eigen::Lower>() * noise;
        std::vector<double> times(past_ + 1);
        std::vector<double> values(past_ + 1, 0.0);
        for (std::size_t i = 0; i <= past_; ++i) times[i] = dt_ * static_cast<double>(i);
        for (std::size_t i = 0; i < past_; ++i) values[i + 1] = values[i] + inc(static_cast<Eigen::Index>(i));
        return FbmGrid(std::move(times), std::move(values));
    }

    /// fBm continuations on [0, t] sharing `history` on [0, s].
    PathBundle continue_fbm(const FbmGrid& history, const McConfig& cfg) const
    {
        return run(history, cfg, ProcessKind::fbm, nullptr, 0.0);
    }

    /// Euler fOU continuations; the state at s is integrated from x0 along the history.
    PathBundle continue_fou(const FouParams& params, double x0, const FbmGrid& history, const McConfig& cfg) const
    {
        if (params.hurst() != hurst_) detail::throw_domain("continue_fou", "Hurst index differs from the factorization");
        return run(history, cfg, ProcessKind::fou, &params, x0);
    }

private:
    PathBundle run(const FbmGrid& history, const McConfig& cfg, ProcessKind kind, const FouParams* params,
                   double x0) const
    {
        cfg.validate();
        if (std::abs(cfg.dt - dt_) > 1e-12 * dt_) detail::throw_domain("ConditionalResimulator", "cfg.dt differs from the factorization");
        check_history(history);

        const auto p = static_cast<Eigen::Index>(past_);
        const auto f = static_cast<Eigen::Index>(total_ - past_);
        Eigen::VectorXd past_inc(p);
        for (Eigen::Index i = 0; i < p; ++i) past_inc(i) = history.values()[i + 1] - history.values()[i];
        const Eigen::VectorXd past_noise = lower_.topLeftCorner(p, p).triangularView<Eigen::Lower>().solve(past_inc);
        const Eigen::VectorXd future_mean = lower_.bottomLeftCorner(f, p) * past_noise;
        const Eigen::MatrixXd future_lower = lower_.bottomRightCorner(f, f);

        PathBundle b = detail::make_bundle(kind, hurst_, total_, cfg);
        const std::size_t nt = b.n_times();
        const std::size_t stride = cfg.record_stride;

        // Shared prefix: the history itself, or the fOU state driven by it.
        std::vector<double> prefix(past_ + 1);
        if (kind == ProcessKind::fbm) {
            prefix = history.values();
        } else {
            prefix[0] = x0;
            double x = x0;
            for (std::size_t i = 0; i < past_; ++i) {
                x += params->lambda() * (params->mu() - x) * dt_ + params->sigma() * past_inc(static_cast<Eigen::Index>(i));
                prefix[i + 1] = x;
            }
        }

        const std::size_t n_chunks = (cfg.n_paths + detail::kChunkPaths - 1) / detail::kChunkPaths;
        detail::parallel_chunks(n_chunks, cfg.workers, [&](std::size_t c) {
            const std::size_t first = c * detail::kChunkPaths;
            const std::size_t count = std::min(detail::kChunkPaths, cfg.n_paths - first);
            Eigen::MatrixXd noise(f, static_cast<Eigen::Index>(count));
            for (std::size_t j = 0; j < count; ++j) {
                auto rng = detail::substream(cfg.seed, first + j);
                std::normal_distribution<double> normal;
                for (Eigen::Index i = 0; i < f; ++i) noise(i, static_cast<Eigen::Index>(j)) = normal(rng);
            }
            Eigen::MatrixXd inc = future_lower.triangularView<Eigen::Lower>() * noise;
            inc.colwise() += future_mean;
            for (std::size_t j = 0; j < count; ++j) {
                double* row = b.values.data() + (first + j) * nt;
                for (std::size_t i = 0; i <= past_; i += stride) row[i / stride] = prefix[i];
                const auto col = inc.col(static_cast<Eigen::Index>(j));
                if (kind == ProcessKind::fbm) {
                    double level = prefix[past_];
                    for (Eigen::Index i = 0; i < f; ++i) {
                        level += col(i);
                        const std::size_t step = past_ + static_cast<std::size_t>(i) + 1;
                        if (step % stride == 0) row[step / stride] = level;
                    }
                } else {
                    std::span<const double> span(col.data(), static_cast<std::size_t>(f));
                    detail::euler_fou_path(*params, prefix[past_], past_, span, dt_, stride, row);
                }
            }
        });
        return b;
    }

    void check_history(const FbmGrid& history) const
    {
        if (history.size() != past_ + 1) detail::throw_domain("ConditionalResimulator", "history must have s/dt + 1 points");
        for (std::size_t i = 0; i <= past_; ++i)
            if (std::abs(history.times()[i] - dt_ * static_cast<double>(i)) > 1e-9 * std::max(1.0, s_))
                detail::throw_domain("ConditionalResimulator", "history is not on the dt grid");
    }

    double hurst_;
    double dt_;
    double s_;
    double t_;
    std::size_t past_ = 0;
    std::size_t total_ = 0;
    Eigen::MatrixXd lower_;
};

struct EmpiricalStats {
    double mean = 0.0;
    double variance = 0.0;
    double stddev = 0.0;
    double se_mean = 0.0;    ///< standard error of the mean
    double se_stddev = 0.0;  ///< standard error of the standard deviation (Gaussian approximation)
    std::size_t n = 0;
};

inline constexpr std::size_t kMinPathsForStats = 100;

namespace detail {

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double x)
    {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) comp_ += (sum_ - t) + x;
        else comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

}  // namespace detail

/// Ensemble statistics at time t. For s > 0 every path must share the same
/// history on [0, s] up to `path_tol` (a bundle of conditional continuations).
inline EmpiricalStats empirical_conditional_stats(const PathBundle& b, double s, double t, double path_tol = 1e-12)
{
    if (b.n_paths < kMinPathsForStats)
        detail::throw_domain("empirical_conditional_stats",
                             "need at least " + std::to_string(kMinPathsForStats) + " paths, got " + std::to_string(b.n_paths));
    if (!(s >= 0.0 && t >= s)) detail::throw_domain("empirical_conditional_stats", "requires 0 <= s <= t");
    const std::size_t is = b.time_index(s);
    const std::size_t it = b.time_index(t);
    if (s > 0.0) {
        for (std::size_t p = 1; p < b.n_paths; ++p)
            for (std::size_t i = 0; i <= is; ++i)
                if (std::abs(b.at(p, i) - b.at(0, i)) > path_tol)
                    detail::throw_domain("empirical_conditional_stats", "paths do not share the history on [0, s]");
    }
    detail::CompensatedSum sum;
    for (std::size_t p = 0; p < b.n_paths; ++p) sum.add(b.at(p, it));
    const double n = static_cast<double>(b.n_paths);
    EmpiricalStats out;
    out.n = b.n_paths;
    out.mean = sum.value() / n;
    detail::CompensatedSum sq;
    for (std::size_t p = 0; p < b.n_paths; ++p) {
        const double d = b.at(p, it) - out.mean;
        sq.add(d * d);
    }
    out.variance = sq.value() / (n - 1.0);
    out.stddev = std::sqrt(out.variance);
    out.se_mean = out.stddev / std::sqrt(n);
    out.se_stddev = out.stddev / std::sqrt(2.0 * (n - 1.0));
    return out;
}

}  // namespace fbmcond
