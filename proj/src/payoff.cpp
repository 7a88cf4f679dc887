#include "nonlocal_dp/payoff.hpp"

#include "interp.hpp"

#include <cmath>

namespace nldp {

namespace {

double softplus(double s, double width) {
    // width * log(1 + exp(s/width)), stable for large |s|/width
    const double z = s / width;
    if (z > 30.0) return s + width * std::log1p(std::exp(-z));
    return width * std::log1p(std::exp(z));
}

}  // namespace

double Payoff::eval(const Vec& x, const SpaceGrid& grid) const {
    switch (family) {
        case PayoffFamily::Quadratic:
            return scale * (x - center).squaredNorm();
        case PayoffFamily::Absolute:
            return scale * (x - center).cwiseAbs().sum();
        case PayoffFamily::Call: {
            const double s = x[0] - strike;
            if (width > 0.0) return scale * softplus(s, width);
            return scale * std::max(s, 0.0);
        }
        case PayoffFamily::IndicatorSmoothed: {
            const double z = (x[0] - strike) / width;
            return scale / (1.0 + std::exp(-z));
        }
        case PayoffFamily::Table:
            return detail::interp_table(grid, table, x, /*clamp_to_box=*/false);
    }
    return 0.0;
}

Vec Payoff::sample(const SpaceGrid& grid) const {
    if (family == PayoffFamily::Table) return table;
    const long cells = grid.n_cells();
    Vec values(cells);
    for (long c = 0; c < cells; ++c) values[c] = eval(grid.point(c), grid);
    return values;
}

Curvature Payoff::curvature() const {
    switch (family) {
        case PayoffFamily::Quadratic:
        case PayoffFamily::Absolute:
        case PayoffFamily::Call:
            if (scale >= 0.0) return Curvature::Convex;
            return Curvature::Concave;
        case PayoffFamily::IndicatorSmoothed:
        case PayoffFamily::Table:
            return Curvature::None;
    }
    return Curvature::None;
}

void Payoff::validate(const SpaceGrid& grid) const {
    switch (family) {
        case PayoffFamily::Quadratic:
        case PayoffFamily::Absolute:
            if (center.size() != grid.n) throw Error("payoff: center must have one entry per axis");
            break;
        case PayoffFamily::Call:
            if (width < 0.0) throw Error("payoff: call width must be >= 0");
            break;
        case PayoffFamily::IndicatorSmoothed:
            if (!(width > 0.0)) throw Error("payoff: indicator_smoothed needs width > 0");
            break;
        case PayoffFamily::Table:
            if (table.size() != grid.n_cells())
                throw Error("payoff: table must have one value per cell");
            break;
    }
    if (!std::isfinite(scale)) throw Error("payoff: scale must be finite");
}

bool Payoff::operator==(const Payoff& o) const {
    if (family != o.family || scale != o.scale || strike != o.strike || width != o.width)
        return false;
    if (center.size() != o.center.size() || (center.size() && (center.array() != o.center.array()).any()))
        return false;
    if (table.size() != o.table.size() || (table.size() && (table.array() != o.table.array()).any()))
        return false;
    return true;
}

}  // namespace nldp
