#pragma once

#include <cstddef>
#include <vector>

namespace aggsteady {

// Gauss-Legendre rule mapped to [0, 1]. Supported orders: 4, 8, 10, 16, 20, 24, 30.
struct UnitRule {
    std::vector<double> x;
    std::vector<double> w;
};
const UnitRule& gauss_unit(std::size_t order);

}  // namespace aggsteady
