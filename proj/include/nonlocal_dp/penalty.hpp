#ifndef NONLOCAL_DP_PENALTY_HPP
#define NONLOCAL_DP_PENALTY_HPP

#include "nonlocal_dp/types.hpp"

namespace nldp {

enum class PenaltyFamily { Zero, Constant, QuadraticDrift, Table };

/// Running cost g(t, x, theta), charged per unit time.
///
/// Families:
///   zero             g = 0
///   constant         g = c
///   quadratic_drift  g = 0.5 * eta * |b|^2 of the candidate
///   table            values(row, col): row = candidate index (single row
///                    broadcasts), col = state cell (single column broadcasts);
///                    state lookup is multilinear with x clamped to the box
struct Penalty {
    PenaltyFamily family = PenaltyFamily::Zero;
    double c = 0.0;
    double eta = 1.0;
    Mat table;

    double eval(double t, const Vec& x, const ParamPoint& theta, int candidate,
                const SpaceGrid& grid) const;

    /// Exact sup of g over the table / parameters; used by the finiteness check.
    double upper_bound_hint() const;

    void validate(const SpaceGrid& grid, int max_candidates) const;
    bool operator==(const Penalty& o) const;
};

}  // namespace nldp

#endif
