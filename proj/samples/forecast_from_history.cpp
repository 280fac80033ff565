// Draws an fBm history on [0, 3], then forecasts a geometric fOU at t = 6
// from it and prints the conditional density on a coarse grid.
#include <cmath>
#include <cstdio>

#include "fbmcond/fbmcond.hpp"

int main()
{
    const double hurst = 0.75, s = 3.0, t = 6.0;
    const auto model = fbmcond::make_derived_model(fbmcond::MapKind::gfou, hurst, 0.5, 0.3, 10.0);
    const fbmcond::ConditionalResimulator sim(hurst, 0.01, s, t);
    const fbmcond::FbmGrid history = sim.draw_history(7);

    const fbmcond::TimeWindow window(s, t);
    const auto law = fbmcond::conditional_law(model.fou, window, history, model.x0);
    std::printf("B_s = %.6f  X_s = %.6f\n", history.values().back(),
                fbmcond::reconstruct_state(model.fou, history, model.x0));
    std::printf("X_t | F_s ~ N(%.6f, %.6f)\n", law.mean, law.variance);

    const double lo = std::exp(law.mean - 3.0 * law.stddev()), hi = std::exp(law.mean + 3.0 * law.stddev());
    for (int i = 0; i <= 12; ++i) {
        const double z = lo + (hi - lo) * i / 12.0;
        std::printf("%10.4f %12.6e\n", z, fbmcond::pdf_transform(model.map, law, z));
    }
}
