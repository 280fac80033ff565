// Conditional standard deviation of fBm and fOU across Hurst exponents.
#include <cmath>
#include <cstdio>

#include "fbmcond/fbmcond.hpp"

int main()
{
    const fbmcond::TimeWindow origin(0.0, 5.0), later(3.0, 8.0);
    std::printf("%5s %12s %12s %12s %12s\n", "H", "fbm s=0", "5^H", "fbm s=3", "fou s=3");
    for (double h = 0.1; h < 0.95; h += 0.1) {
        const auto bm = fbmcond::FouParams::fbm(h);
        const fbmcond::FouParams ou(0.5, 0.0, 0.3, h);
        std::printf("%5.2f %12.6f %12.6f %12.6f %12.6f\n", h,
                    std::sqrt(fbmcond::conditional_variance(bm, origin)), std::pow(5.0, h),
                    std::sqrt(fbmcond::conditional_variance(bm, later)),
                    std::sqrt(fbmcond::conditional_variance(ou, later)));
    }
}
