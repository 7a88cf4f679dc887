#ifndef NONLOCAL_DP_MC_HPP
#define NONLOCAL_DP_MC_HPP

#include "nonlocal_dp/generators.hpp"
#include "nonlocal_dp/model.hpp"

#include <cstdint>

namespace nldp {

struct McConfig {
    long n_paths = 1;
    std::uint64_t seed = 0;
    int substeps = 1;        // Euler substeps per grid step
    double confidence = 3.0; // multiplier on the standard error
    int threads = 0;         // 0 = automatic

    void validate() const;
};

struct McEstimate {
    double mean = 0.0;
    double se = 0.0;
    long n_paths = 0;
};

/// Simulates one trajectory under the control from (r, y). r must sit on a
/// grid node. Deterministic given (seed, path_index) regardless of batching.
PathSample sample_path(const Control& gamma, double r, const Vec& y, const Model& model,
                       const McConfig& mc, long path_index);

/// Mean and standard error of h(X_T) over n_paths trajectories.
McEstimate mc_expectation(const Control& gamma, const Payoff& h, double r, const Vec& y,
                          const Model& model, const McConfig& mc);

/// Mean and standard error of the accumulated penalty.
McEstimate mc_penalty(const Control& gamma, double r, const Vec& y, const Model& model,
                      const McConfig& mc);

/// h(X_T) minus the accumulated penalty on common paths.
McEstimate mc_lower_bound(const Control& gamma, const Payoff& h, double r, const Vec& y,
                          const Model& model, const McConfig& mc);

/// Fraction of recorded states falling outside the space box.
double excursion_fraction(const Control& gamma, double r, const Vec& y, const Model& model,
                          const McConfig& mc);

/// Sample mean of exp(v.(X_t - X_r) - int v.b - 0.5 int v.a v) under the
/// single diffusion candidate theta. Throws Error if theta carries jumps.
McEstimate exp_martingale_stat(const ParamPoint& theta, const Vec& theta_vec, double r,
                               double t, const Vec& y, const Model& model, const McConfig& mc);

/// Sample mean of f(X_t) - f(X_r) - int (L+K)f(X_u) du under theta, the
/// integral taken by the left-endpoint rule on substeps.
McEstimate generator_martingale_stat(const ParamPoint& theta, const WindowedTestFunction& f,
                                     double r, double t, const Vec& y, const Model& model,
                                     const McConfig& mc);

/// Richardson slope of the generator-martingale mean under substep halving;
/// multiplied by the substep length it bounds the Euler bias.
double generator_martingale_bias_slope(const ParamPoint& theta, const WindowedTestFunction& f,
                                       double r, double t, const Vec& y, const Model& model,
                                       const McConfig& mc);

/// gamma before node s, delta from s on; the subdivision is the merged
/// refinement.
Control paste_composition(const Control& gamma, const Control& delta, int s_node,
                          const Model& model);

/// gamma before node s; afterwards gamma's selector on cells in the region and
/// delta's elsewhere.
Control paste_bifurcation(const Control& gamma, const Control& delta, int s_node,
                          const std::vector<bool>& region, const Model& model);

struct CocycleResult {
    McEstimate residual;
    double max_abs = 0.0;  // largest per-path |residual|
};

/// Per-path residual of the penalty split int_s^u - int_s^t - int_t^u at the
/// given grid nodes s < t < u.
CocycleResult cocycle_check(const Control& gamma, int s_node, int t_node, int u_node,
                            const Vec& y, const Model& model, const McConfig& mc);

}  // namespace nldp

#endif
