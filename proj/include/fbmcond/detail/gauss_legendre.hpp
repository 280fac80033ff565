#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

namespace fbmcond::detail {

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
struct GaussLegendreRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    explicit GaussLegendreRule(std::size_t n) : nodes(n), weights(n)
    {
        const double dn = static_cast<double>(n);
        for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
            // Chebyshev-like starting guess, then Newton on P_n.
            double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (dn + 0.5));
            double dp = 0.0;
            for (int iter = 0; iter < 100; ++iter) {
                double p0 = 1.0;
                double p1 = x;
                for (std::size_t k = 2; k <= n; ++k) {
                    const double dk = static_cast<double>(k);
                    const double p2 = ((2.0 * dk - 1.0) * x * p1 - (dk - 1.0) * p0) / dk;
                    p0 = p1;
                    p1 = p2;
                }
                if (n == 1) p0 = 1.0;
                dp = dn * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-16) break;
            }
            // Recompute the derivative at the converged node.
            double p0 = 1.0;
            double p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const double dk = static_cast<double>(k);
                const double p2 = ((2.0 * dk - 1.0) * x * p1 - (dk - 1.0) * p0) / dk;
                p0 = p1;
                p1 = p2;
            }
            dp = n == 1 ? 1.0 : dn * (x * p1 - p0) / (x * x - 1.0);
            const double w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if (n % 2 == 1) nodes[n / 2] = 0.0;
    }
};

/// Integral of f over [a, b] with `panels` equal panels of an n-point rule.
template <class F>
double composite_gauss_legendre(F&& f, double a, double b, std::size_t panels, const GaussLegendreRule& rule)
{
    const double h = (b - a) / static_cast<double>(panels);
    double sum = 0.0;
    for (std::size_t p = 0; p < panels; ++p) {
        const double lo = a + h * static_cast<double>(p);
        const double mid = lo + 0.5 * h;
        double panel = 0.0;
        for (std::size_t k = 0; k < rule.nodes.size(); ++k) panel += rule.weights[k] * f(mid + 0.5 * h * rule.nodes[k]);
        sum += 0.5 * h * panel;
    }
    return sum;
}

}  // namespace fbmcond::detail
