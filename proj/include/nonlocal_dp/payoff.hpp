#ifndef NONLOCAL_DP_PAYOFF_HPP
#define NONLOCAL_DP_PAYOFF_HPP

#include "nonlocal_dp/types.hpp"

namespace nldp {

enum class PayoffFamily { Quadratic, Absolute, Call, IndicatorSmoothed, Table };

enum class Curvature { Convex, Concave, None };

/// Terminal payoff h(x), evaluable anywhere in R^n.
///
/// Families:
///   quadratic           h = scale * |x - center|^2
///   absolute            h = scale * sum_i |x_i - center_i|
///   call                h = scale * max(x_0 - strike, 0); width > 0 replaces the
///                       kink by the softplus width*log(1+exp((x_0-strike)/width))
///   indicator_smoothed  h = scale * logistic((x_0 - strike)/width), width > 0
///   table               samples at the grid cells, multilinear in between,
///                       linear extrapolation beyond the box
struct Payoff {
    PayoffFamily family = PayoffFamily::Quadratic;
    double scale = 1.0;
    Vec center;
    double strike = 0.0;
    double width = 0.0;
    Vec table;

    double eval(const Vec& x, const SpaceGrid& grid) const;

    /// Samples at every grid cell; table payoffs return their samples verbatim.
    Vec sample(const SpaceGrid& grid) const;

    Curvature curvature() const;

    void validate(const SpaceGrid& grid) const;
    bool operator==(const Payoff& o) const;
};

}  // namespace nldp

#endif
