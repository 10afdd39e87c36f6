#include "aggsteady/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include "aggsteady/error.hpp"

namespace aggsteady {

namespace {

template <std::size_t N>
UnitRule make_rule() {
    using G = boost::math::quadrature::gauss<double, N>;
    const auto& a = G::abscissa();
    const auto& wt = G::weights();
    UnitRule r;
    // boost stores the nonnegative half; abscissa()[0] == 0 for odd N only
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0.0) {
            r.x.push_back(0.5);
            r.w.push_back(0.5 * wt[i]);
            continue;
        }
        r.x.push_back(0.5 * (1.0 - a[i]));
        r.w.push_back(0.5 * wt[i]);
        r.x.push_back(0.5 * (1.0 + a[i]));
        r.w.push_back(0.5 * wt[i]);
    }
    return r;
}

}  // namespace

const UnitRule& gauss_unit(std::size_t order) {
    static const UnitRule r4 = make_rule<4>(), r8 = make_rule<8>(), r10 = make_rule<10>(), r16 = make_rule<16>(),
                          r20 = make_rule<20>(), r24 = make_rule<24>(), r30 = make_rule<30>();
    switch (order) {
        case 4: return r4;
        case 8: return r8;
        case 10: return r10;
        case 16: return r16;
        case 20: return r20;
        case 24: return r24;
        case 30: return r30;
        default: throw InvalidInput("unsupported Gauss order");
    }
}

}  // namespace aggsteady
