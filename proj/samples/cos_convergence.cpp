// COS prices of a geometric fOU call against the lognormal closed form as
// the number of cosine terms grows.
#include <cmath>
#include <cstdio>

#include "fbmcond/fbmcond.hpp"

int main()
{
    const double maturity = 3.0;
    const fbmcond::OptionSpec spec(10.0, 0.1, 0.0, maturity, fbmcond::OptionSide::call);
    for (double hurst : {0.1, 0.5, 0.9}) {
        const auto model = fbmcond::make_derived_model(fbmcond::MapKind::gfou, hurst, 0.5, 0.3, 10.0);
        const auto law =
            fbmcond::conditional_law(model.fou, fbmcond::TimeWindow(0.0, maturity), fbmcond::FbmGrid::origin(),
                                     model.x0);
        const double exact = fbmcond::gfou_closed_form(spec, law);
        std::printf("H = %.1f  closed form %.12f\n", hurst, exact);
        for (std::size_t terms : {4, 8, 16, 32, 64}) {
            fbmcond::CosConfig cfg;
            cfg.n_terms = terms;
            const double cos = fbmcond::cos_price(spec, model.map, law, cfg);
            std::printf("  L = %2zu  %.12f  err %.2e\n", terms, cos, std::abs(cos - exact));
        }
    }
}
