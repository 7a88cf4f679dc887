#ifndef NONLOCAL_DP_TYPES_HPP
#define NONLOCAL_DP_TYPES_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nldp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Model-file syntax or schema failure; carries the offending line.
struct ParseError : Error {
    int line;
    ParseError(int line_, const std::string& msg)
        : Error("line " + std::to_string(line_) + ": " + msg), line(line_) {}
};

/// Explicit-scheme stability refusal; carries the largest admissible step.
struct CflError : Error {
    double max_dt;
    CflError(const std::string& msg, double max_dt_) : Error(msg), max_dt(max_dt_) {}
};

/// Request outside the model's domain (e.g. start point off the box).
struct DomainError : Error {
    using Error::Error;
};

/// Uniform time grid on [r, T] with N steps.
struct TimeGrid {
    double r = 0.0;
    double T = 1.0;
    int N = 1;

    double dt() const { return (T - r) / N; }
    double node(int k) const { return r + k * dt(); }

    /// Throws Error on the first violated invariant.
    void validate() const;

    bool operator==(const TimeGrid&) const = default;
};

/// Tensor-product box grid. Axis 0 is the fastest-varying index in the
/// flat cell numbering.
struct SpaceGrid {
    int n = 1;
    Vec lower;
    Vec upper;
    std::vector<int> M;  // nodes per axis, each >= 3

    double dx(int axis) const { return (upper[axis] - lower[axis]) / (M[axis] - 1); }
    long n_cells() const;
    double coord(int axis, int i) const { return lower[axis] + i * dx(axis); }

    Vec point(long cell) const;
    std::vector<int> unflatten(long cell) const;
    long flatten(std::span<const int> idx) const;

    /// Nearest grid cell; coordinates outside the box clamp to the edge.
    long cell_of(const Vec& x) const;

    bool inside(const Vec& x) const;

    void validate() const;
    bool operator==(const SpaceGrid& o) const;
};

/// One jump mode: displacement y (nonzero) arriving at rate lambda per unit time.
struct JumpAtom {
    Vec y;
    double lambda = 0.0;

    bool operator==(const JumpAtom& o) const;
};

/// Admissibility bounds shared by every candidate of a model.
struct Bounds {
    double a_bound = 10.0;
    double b_bound = 10.0;
    double c_bound = 10.0;   // cap on the jump activity moment
    double eps_spd = 1e-10;  // smallest admissible eigenvalue of a

    bool operator==(const Bounds&) const = default;
};

/// One generator triple: diffusion matrix a, drift b, finite jump list.
struct ParamPoint {
    Mat a;
    Vec b;
    std::vector<JumpAtom> jumps;

    int dim() const { return static_cast<int>(b.size()); }

    /// Drift seen by the grid scheme and the path simulator:
    /// b - sum_k lambda_k y_k / (1 + |y_k|^2).
    Vec effective_drift() const;

    double jump_rate_total() const;

    bool operator==(const ParamPoint& o) const;
};

/// Sum_k lambda_k (|y_k|^2 if |y_k| <= 1 else |y_k|).
double levy_moment(std::span<const JumpAtom> jumps);

/// Outcome of candidate validation. Never throws; empty means admissible.
struct ValidationReport {
    std::vector<std::string> violations;

    bool ok() const { return violations.empty(); }
    std::string str() const;
};

ValidationReport validate_param(const ParamPoint& theta, const Bounds& bounds);

enum class GammaMode { Constant, TimeDependent, StateDependent };

/// Finite candidate sets indexed by time step and/or state cell.
struct GammaMap {
    GammaMode mode = GammaMode::Constant;
    std::vector<std::vector<ParamPoint>> sets;
    std::vector<int> set_for_step;  // TimeDependent: one entry per time step
    std::vector<int> set_for_cell;  // StateDependent: one entry per cell

    const std::vector<ParamPoint>& at(int step, long cell) const;
    int max_candidates() const;

    /// Throws Error listing every violated invariant across all sets.
    void validate(const TimeGrid& time, const SpaceGrid& space, const Bounds& bounds) const;

    bool operator==(const GammaMap& o) const;
};

/// Piecewise-constant feedback policy: interval subdivision over time-step
/// indices plus one selector per interval. A selector of size 1 applies to
/// every cell; otherwise it has one entry per cell.
struct Control {
    std::vector<int> nodes;                   // 0 = nodes[0] < ... < nodes[m] = N
    std::vector<std::vector<int>> selectors;  // one per interval

    int interval_of(int step) const;
    int selected(int step, long cell) const;

    void validate(const TimeGrid& time, const SpaceGrid& space, const GammaMap& gamma) const;

    bool operator==(const Control&) const = default;
};

/// Value surface at one time level plus the argmax candidate per cell.
/// policy is empty at the terminal level.
struct ValueField {
    double t = 0.0;
    Vec values;
    std::vector<int> policy;
};

/// One simulated trajectory. States are recorded at grid nodes; the penalty
/// accumulates by the left-endpoint rule over substeps, bucketed per grid
/// step so the integral splits exactly at any node.
struct PathSample {
    std::vector<double> times;
    std::vector<Vec> states;
    std::vector<int> applied_candidate;  // per grid step
    struct JumpEvent {
        int step;
        int substep;
        int atom;
        int count;
    };
    std::vector<JumpEvent> jump_log;
    std::vector<double> penalty_increments;  // per grid step
    double accumulated_penalty = 0.0;
    std::uint64_t stream_seed = 0;

    /// Exact partial sum of penalty increments over grid steps [from, to).
    double penalty_between(int from, int to) const;
};

}  // namespace nldp

#endif
