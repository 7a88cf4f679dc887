#include "nonlocal_dp/penalty.hpp"

#include "interp.hpp"

#include <cmath>

namespace nldp {

double Penalty::eval(double /*t*/, const Vec& x, const ParamPoint& theta, int candidate,
                     const SpaceGrid& grid) const {
    switch (family) {
        case PenaltyFamily::Zero:
            return 0.0;
        case PenaltyFamily::Constant:
            return c;
        case PenaltyFamily::QuadraticDrift:
            return 0.5 * eta * theta.b.squaredNorm();
        case PenaltyFamily::Table: {
            const int row = table.rows() == 1 ? 0 : candidate;
            if (table.cols() == 1) return table(row, 0);
            const Vec slice = table.row(row).transpose();
            return detail::interp_table(grid, slice, x, /*clamp_to_box=*/true);
        }
    }
    return 0.0;
}

double Penalty::upper_bound_hint() const {
    switch (family) {
        case PenaltyFamily::Zero:
            return 0.0;
        case PenaltyFamily::Constant:
            return c;
        case PenaltyFamily::QuadraticDrift:
            return std::numeric_limits<double>::quiet_NaN();  // depends on the candidates
        case PenaltyFamily::Table:
            return table.maxCoeff();
    }
    return 0.0;
}

void Penalty::validate(const SpaceGrid& grid, int max_candidates) const {
    switch (family) {
        case PenaltyFamily::Zero:
            break;
        case PenaltyFamily::Constant:
            if (!std::isfinite(c)) throw Error("penalty: c must be finite");
            break;
        case PenaltyFamily::QuadraticDrift:
            if (!std::isfinite(eta) || eta < 0.0) throw Error("penalty: eta must be >= 0");
            break;
        case PenaltyFamily::Table: {
            if (table.size() == 0) throw Error("penalty: table is empty");
            if (table.rows() != 1 && table.rows() != max_candidates)
                throw Error("penalty: table needs 1 or max-candidate rows");
            if (table.cols() != 1 && table.cols() != grid.n_cells())
                throw Error("penalty: table needs 1 or n_cells columns");
            if (!table.allFinite()) throw Error("penalty: table has a non-finite value");
            break;
        }
    }
}

bool Penalty::operator==(const Penalty& o) const {
    if (family != o.family || c != o.c || eta != o.eta) return false;
    if (table.rows() != o.table.rows() || table.cols() != o.table.cols()) return false;
    if (table.size() && (table.array() != o.table.array()).any()) return false;
    return true;
}

}  // namespace nldp
