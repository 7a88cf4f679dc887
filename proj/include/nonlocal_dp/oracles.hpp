#ifndef NONLOCAL_DP_ORACLES_HPP
#define NONLOCAL_DP_ORACLES_HPP

#include "nonlocal_dp/model.hpp"
#include "nonlocal_dp/pde.hpp"

#include <functional>
#include <span>
#include <vector>

namespace nldp {

/// Gauss-Hermite nodes and weights for E[f(Z)], Z standard normal:
/// E[f(Z)] = sum_i weights[i] * f(nodes[i]).
struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
GaussHermiteRule gauss_hermite(int order);

/// E[h(x + b tau + chol(a tau) Z)], order doubled from 64 until two successive
/// orders agree to 1e-10 (capped at 512). Supports n <= 2. In one dimension
/// the rule is composite Gauss-Legendre with panels split at the payoff's
/// kinks, so piecewise-smooth payoffs integrate to near machine precision;
/// two dimensions use the tensor Gauss-Hermite rule.
double gaussian_semigroup(const Payoff& h, const SpaceGrid& grid, const Mat& a, const Vec& b,
                          double tau, const Vec& x);

/// Same expectation for an arbitrary payoff function; `kinks` lists state-axis
/// locations (first coordinate) where h loses smoothness.
double gaussian_semigroup(const std::function<double(const Vec&)>& h, const Mat& a, const Vec& b,
                          double tau, const Vec& x, std::span<const double> kinks = {});

/// Extremal-variance value for a curvature-flagged payoff: convex payoffs
/// price at a_max, concave at a_min. Throws Error on an unflagged payoff.
double g_heat_reference(const Payoff& h, const SpaceGrid& grid, double a_min, double a_max,
                        double tau, const Vec& x);

/// Start-level value table of a tiny instance (<= 4 steps, <= 7 cells,
/// <= 3 candidates) by explicit enumeration of every per-step candidate
/// assignment, with an independent stencil. Throws Error beyond the caps.
Vec brute_force_dp(const Model& model, const SchemeConfig& scheme);

}  // namespace nldp

#endif
