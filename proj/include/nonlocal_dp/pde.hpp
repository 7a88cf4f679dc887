#ifndef NONLOCAL_DP_PDE_HPP
#define NONLOCAL_DP_PDE_HPP

#include "nonlocal_dp/model.hpp"

#include <optional>
#include <vector>

namespace nldp {

enum class BoundaryRule { Extrapolate, ClampToPayoff };

/// Explicit-scheme configuration.
struct SchemeConfig {
    BoundaryRule boundary = BoundaryRule::Extrapolate;
    double cfl_factor = 1.0;      // in (0, 1]
    int interpolation_order = 1;  // jump shifts: linear only
    double band_safety = 4.0;     // diffusion multiplier in the influence band
    double sanity_slack = 1e-6;   // tolerance on the value-floor sanity bound
    int threads = 0;              // 0 = automatic

    void validate() const;
};

struct CflReport {
    double sum = 0.0;     // worst-case coefficient sum over all candidates
    double max_dt = 0.0;  // largest admissible step
    bool ok = false;
    std::string detail;
};

/// Stability check for the explicit update, worst case over every candidate.
CflReport check_cfl(const Model& model, const SchemeConfig& scheme);

struct LevelDiagnostics {
    double max_abs = 0.0;
    double band_width = 0.0;  // boundary-influence width in state units
    int band_cells = 0;       // cells per side excluded by the band
};

struct SolveResult {
    std::vector<ValueField> levels;  // N+1 fields; level N holds the terminal samples
    Control policy;                  // argmax selections stitched over all levels
    std::vector<LevelDiagnostics> diagnostics;

    const ValueField& at_start() const { return levels.front(); }
};

/// One backward step: for every cell the max over the candidate set of the
/// explicit one-step evaluation minus g*dt. Throws CflError if the step is
/// unstable and Error if a non-finite value appears (naming the cell).
ValueField dp_step(const ValueField& v_next, int step, const Model& model,
                   const SchemeConfig& scheme);

/// Full backward sweep from the terminal payoff.
SolveResult solve(const Model& model, const SchemeConfig& scheme);

/// Linear backward sweep following the given policy (no max).
SolveResult evaluate_control_dp(const Control& gamma, const Model& model,
                                const SchemeConfig& scheme);

/// Solves [mid, N] with the model payoff, re-solves [0, mid] from that field
/// as terminal data, and returns max |composed - single sweep| at level 0.
double check_time_consistency(const Model& model, const SchemeConfig& scheme, int mid_node);

struct ConvergenceRow {
    int level = 0;
    double dx = 0.0;
    double dt = 0.0;
    double sup_error = 0.0;
    double observed_order = 0.0;  // NaN on the first comparable row
};

enum class ConvergenceReference { ClosedForm, Finest };

/// Refines space by 2 and time by 4 per level; errors are measured at the
/// start level on the interior of the common coarse grid.
std::vector<ConvergenceRow> convergence_study(const Model& model, const SchemeConfig& scheme,
                                              int levels, ConvergenceReference reference);

/// Cells per side influenced by the boundary after `elapsed` time units.
int boundary_band_cells(const Model& model, const SchemeConfig& scheme, double elapsed,
                        int axis);

}  // namespace nldp

#endif
