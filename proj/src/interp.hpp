#ifndef NONLOCAL_DP_SRC_INTERP_HPP
#define NONLOCAL_DP_SRC_INTERP_HPP

#include "nonlocal_dp/types.hpp"

#include <algorithm>
#include <cmath>

namespace nldp::detail {

struct AxisWeight {
    int base;     // clamped to [0, M-2]
    double frac;  // outside [0, 1] extrapolates from the two outermost cells
};

inline AxisWeight axis_weight(const SpaceGrid& grid, int axis, double p) {
    const double s = (p - grid.lower[axis]) / grid.dx(axis);
    int base = static_cast<int>(std::floor(s));
    if (base < 0) base = 0;
    if (base > grid.M[axis] - 2) base = grid.M[axis] - 2;
    return {base, s - base};
}

/// Multilinear value of cell samples at x. With clamp_to_box the coordinates
/// are clamped first; otherwise off-box points extrapolate linearly.
inline double interp_table(const SpaceGrid& grid, const Vec& table, const Vec& x,
                           bool clamp_to_box) {
    const int n = grid.n;
    int base[8];
    double frac[8];
    for (int a = 0; a < n; ++a) {
        double p = x[a];
        if (clamp_to_box) p = std::min(std::max(p, grid.lower[a]), grid.upper[a]);
        const auto w = axis_weight(grid, a, p);
        base[a] = w.base;
        frac[a] = w.frac;
    }
    double value = 0.0;
    const int corners = 1 << n;
    for (int corner = 0; corner < corners; ++corner) {
        double weight = 1.0;
        long cell = 0;
        for (int a = n - 1; a >= 0; --a) {
            const int hi = (corner >> a) & 1;
            weight *= hi ? frac[a] : 1.0 - frac[a];
            cell = cell * grid.M[a] + base[a] + hi;
        }
        value += weight * table[cell];
    }
    return value;
}

}  // namespace nldp::detail

#endif
