#include "nonlocal_dp/pde.hpp"

#include "nonlocal_dp/oracles.hpp"
#include "nonlocal_dp/threading.hpp"
#include "interp.hpp"

#include <array>
#include <cmath>
#include <sstream>

namespace nldp {

namespace {

/// Exact sup of the running cost over every candidate of the model (all the
/// builtin families are state-independent except the table, whose sup is its
/// largest entry).
double penalty_sup(const Model& model) {
    double sup = -std::numeric_limits<double>::infinity();
    const Vec origin = model.space.point(0);
    for (const auto& set : model.gamma.sets)
        for (std::size_t k = 0; k < set.size(); ++k)
            sup = std::max(sup, model.penalty.eval(model.time.r, origin, set[k],
                                                   static_cast<int>(k), model.space));
    if (model.penalty.family == PenaltyFamily::Table)
        sup = std::max(sup, model.penalty.table.maxCoeff());
    return sup;
}

/// Field access at integer offsets, extending past the box edge by linear
/// extrapolation from the two outermost cells or by the payoff extension.
struct ExtendedField {
    const SpaceGrid& grid;
    const Vec& values;
    BoundaryRule rule;
    const Payoff& payoff;

    double at(std::array<int, 2> idx) const {
        const int n = grid.n;
        for (int a = 0; a < n; ++a) {
            if (idx[a] >= 0 && idx[a] <= grid.M[a] - 1) continue;
            if (rule == BoundaryRule::ClampToPayoff) {
                Vec p(n);
                for (int b = 0; b < n; ++b) p[b] = grid.coord(b, idx[b]);
                return payoff.eval(p, grid);
            }
            if (idx[a] < 0) {
                const int d = -idx[a];
                auto lo = idx;
                lo[a] = 0;
                auto hi = idx;
                hi[a] = 1;
                return (1.0 + d) * at(lo) - d * at(hi);
            }
            const int d = idx[a] - (grid.M[a] - 1);
            auto lo = idx;
            lo[a] = grid.M[a] - 1;
            auto hi = idx;
            hi[a] = grid.M[a] - 2;
            return (1.0 + d) * at(lo) - d * at(hi);
        }
        int flat[2] = {idx[0], idx[1]};
        return values[grid.flatten(std::span<const int>(flat, n))];
    }

    /// Value at an arbitrary point (multilinear; beyond the box it follows the
    /// boundary rule).
    double at_point(const Vec& p) const {
        if (rule == BoundaryRule::ClampToPayoff && !grid.inside(p)) return payoff.eval(p, grid);
        return detail::interp_table(grid, values, p, /*clamp_to_box=*/false);
    }
};

struct StepContext {
    const Model& model;
    const SchemeConfig& scheme;
    ExtendedField field;
    double t;
    double dt;
    int step;
    // effective drift per (set, candidate)
    std::vector<std::vector<Vec>> b_eff;
};

StepContext make_context(const Model& model, const SchemeConfig& scheme, const Vec& next,
                         int step) {
    StepContext ctx{model, scheme,
                    ExtendedField{model.space, next, scheme.boundary, model.payoff},
                    model.time.node(step), model.time.dt(), step, {}};
    ctx.b_eff.resize(model.gamma.sets.size());
    for (std::size_t s = 0; s < model.gamma.sets.size(); ++s)
        for (const auto& theta : model.gamma.sets[s])
            ctx.b_eff[s].push_back(theta.effective_drift());
    return ctx;
}

int set_index(const GammaMap& gamma, int step, long cell) {
    switch (gamma.mode) {
        case GammaMode::Constant: return 0;
        case GammaMode::TimeDependent: return gamma.set_for_step[step];
        case GammaMode::StateDependent: return gamma.set_for_cell[cell];
    }
    return 0;
}

/// One-step explicit evaluation of the field under a single candidate at one
/// cell: w + dt * (local + nonlocal applied to w), minus dt * g.
double candidate_value(const StepContext& ctx, long cell, const std::array<int, 2>& idx,
                       const Vec& x, const ParamPoint& theta, const Vec& b_eff, int cand) {
    const SpaceGrid& grid = ctx.model.space;
    const int n = grid.n;
    const double center = ctx.field.values[cell];

    double wp[2], wm[2];
    double acc = 0.0;
    for (int a = 0; a < n; ++a) {
        auto up = idx;
        ++up[a];
        auto dn = idx;
        --dn[a];
        wp[a] = ctx.field.at(up);
        wm[a] = ctx.field.at(dn);
        const double h = grid.dx(a);
        acc += 0.5 * theta.a(a, a) * (wp[a] - 2.0 * center + wm[a]) / (h * h);
    }
    if (n == 2) {
        const double a01 = theta.a(0, 1);
        if (a01 != 0.0) {
            const double h01 = 2.0 * grid.dx(0) * grid.dx(1);
            if (a01 > 0.0) {
                const double wpp = ctx.field.at({idx[0] + 1, idx[1] + 1});
                const double wmm = ctx.field.at({idx[0] - 1, idx[1] - 1});
                acc += a01 * (2.0 * center + wpp + wmm - wp[0] - wm[0] - wp[1] - wm[1]) / h01;
            } else {
                const double wpm = ctx.field.at({idx[0] + 1, idx[1] - 1});
                const double wmp = ctx.field.at({idx[0] - 1, idx[1] + 1});
                acc -= a01 * (2.0 * center + wpm + wmp - wp[0] - wm[0] - wp[1] - wm[1]) / h01;
            }
        }
    }
    for (int a = 0; a < n; ++a) {
        const double h = grid.dx(a);
        if (b_eff[a] >= 0.0)
            acc += b_eff[a] * (wp[a] - center) / h;
        else
            acc += b_eff[a] * (center - wm[a]) / h;
    }
    for (const auto& atom : theta.jumps)
        acc += atom.lambda * (ctx.field.at_point(x + atom.y) - center);

    const double g = ctx.model.penalty.eval(ctx.t, x, theta, cand, grid);
    return center + ctx.dt * acc - ctx.dt * g;
}

struct CandidateBest {
    double value;
    int argmax;
};

CandidateBest best_candidate(const StepContext& ctx, long cell) {
    const SpaceGrid& grid = ctx.model.space;
    const auto uidx = grid.unflatten(cell);
    std::array<int, 2> idx{uidx[0], grid.n == 2 ? uidx[1] : 0};
    const Vec x = grid.point(cell);
    const int set = set_index(ctx.model.gamma, ctx.step, cell);
    const auto& candidates = ctx.model.gamma.sets[set];
    CandidateBest best{0.0, 0};
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        const double v = candidate_value(ctx, cell, idx, x, candidates[k],
                                         ctx.b_eff[set][k], static_cast<int>(k));
        if (k == 0 || v > best.value) best = {v, static_cast<int>(k)};
    }
    return best;
}

double selected_candidate_value(const StepContext& ctx, long cell, int selected) {
    const SpaceGrid& grid = ctx.model.space;
    const auto uidx = grid.unflatten(cell);
    std::array<int, 2> idx{uidx[0], grid.n == 2 ? uidx[1] : 0};
    const Vec x = grid.point(cell);
    const int set = set_index(ctx.model.gamma, ctx.step, cell);
    const auto& candidates = ctx.model.gamma.sets[set];
    return candidate_value(ctx, cell, idx, x, candidates[selected], ctx.b_eff[set][selected],
                           selected);
}

void require_supported(const Model& model) {
    if (model.space.n > 2) throw Error("grid solves support n = 1 or 2 only");
}

void check_finite(const Vec& values, const SpaceGrid& grid) {
    for (long c = 0; c < values.size(); ++c)
        if (!std::isfinite(values[c])) {
            std::ostringstream msg;
            msg << "non-finite value at cell " << c << " (x = [";
            const Vec x = grid.point(c);
            for (long i = 0; i < x.size(); ++i) {
                if (i) msg << ", ";
                msg << x[i];
            }
            msg << "])";
            throw Error(msg.str());
        }
}

double band_width_state(const Model& model, const SchemeConfig& scheme, double elapsed,
                        int axis) {
    double drift = 0.0, diffusion = 0.0, jump_rate_reach = 0.0;
    for (const auto& set : model.gamma.sets)
        for (const auto& theta : set) {
            drift = std::max(drift, std::abs(theta.effective_drift()[axis]));
            diffusion = std::max(diffusion, theta.a(axis, axis));
            double jr = 0.0;
            for (const auto& atom : theta.jumps) jr += atom.lambda * std::abs(atom.y[axis]);
            jump_rate_reach = std::max(jump_rate_reach, jr);
        }
    return (drift + jump_rate_reach) * elapsed + scheme.band_safety * std::sqrt(diffusion * elapsed);
}

}  // namespace

void SchemeConfig::validate() const {
    if (!(cfl_factor > 0.0) || cfl_factor > 1.0) throw Error("scheme: CFL factor must be in (0, 1]");
    if (interpolation_order != 1) throw Error("scheme: only linear jump interpolation is supported");
    if (!(band_safety >= 0.0)) throw Error("scheme: band safety must be >= 0");
}

CflReport check_cfl(const Model& model, const SchemeConfig& scheme) {
    scheme.validate();
    if (model.gamma.sets.empty()) throw Error("gamma: no candidate sets");
    if (model.gamma.mode == GammaMode::TimeDependent &&
        static_cast<int>(model.gamma.set_for_step.size()) != model.time.N)
        throw Error("gamma: set_for_step must have one entry per time step");
    if (model.gamma.mode == GammaMode::StateDependent &&
        static_cast<long>(model.gamma.set_for_cell.size()) != model.space.n_cells())
        throw Error("gamma: set_for_cell must have one entry per cell");
    model.penalty.validate(model.space, model.gamma.max_candidates());
    const SpaceGrid& grid = model.space;
    double sum = 0.0;
    std::ostringstream detail;
    for (int a = 0; a < grid.n; ++a) {
        double max_diag = 0.0, max_drift = 0.0;
        for (const auto& set : model.gamma.sets)
            for (const auto& theta : set) {
                max_diag = std::max(max_diag, theta.a(a, a));
                max_drift = std::max(max_drift, std::abs(theta.effective_drift()[a]));
            }
        sum += max_diag / (grid.dx(a) * grid.dx(a)) + max_drift / grid.dx(a);
    }
    double max_rate = 0.0;
    for (const auto& set : model.gamma.sets)
        for (const auto& theta : set) max_rate = std::max(max_rate, theta.jump_rate_total());
    sum += max_rate;

    CflReport report;
    report.sum = sum;
    report.max_dt = sum > 0.0 ? scheme.cfl_factor / sum : std::numeric_limits<double>::infinity();
    report.ok = model.time.dt() <= report.max_dt * (1.0 + 1e-12);
    if (!report.ok) {
        detail << "dt = " << model.time.dt() << " violates the stability bound; "
               << "maximal admissible dt = " << report.max_dt;
    }

    if (grid.n == 2) {
        for (const auto& set : model.gamma.sets)
            for (const auto& theta : set) {
                const double a01 = std::abs(theta.a(0, 1));
                if (a01 == 0.0) continue;
                const double cross = a01 / (grid.dx(0) * grid.dx(1));
                if (theta.a(0, 0) / (grid.dx(0) * grid.dx(0)) < cross ||
                    theta.a(1, 1) / (grid.dx(1) * grid.dx(1)) < cross) {
                    report.ok = false;
                    if (!detail.str().empty()) detail << "; ";
                    detail << "cross-diffusion term " << theta.a(0, 1)
                           << " breaks monotonicity on this grid (need a_ii/dx_i^2 >= "
                              "|a_01|/(dx_0 dx_1))";
                }
            }
    }
    report.detail = detail.str();
    return report;
}

int boundary_band_cells(const Model& model, const SchemeConfig& scheme, double elapsed,
                        int axis) {
    const double width = band_width_state(model, scheme, elapsed, axis);
    return static_cast<int>(std::ceil(width / model.space.dx(axis)));
}

ValueField dp_step(const ValueField& v_next, int step, const Model& model,
                   const SchemeConfig& scheme) {
    require_supported(model);
    const auto cfl = check_cfl(model, scheme);
    if (!cfl.ok) throw CflError(cfl.detail, cfl.max_dt);

    const long cells = model.space.n_cells();
    if (v_next.values.size() != cells) throw Error("dp_step: field size does not match the grid");

    const StepContext ctx = make_context(model, scheme, v_next.values, step);
    ValueField out;
    out.t = model.time.node(step);
    out.values = Vec(cells);
    out.policy.assign(cells, 0);
    parallel_for(
        cells,
        [&](long c) {
            const auto best = best_candidate(ctx, c);
            out.values[c] = best.value;
            out.policy[c] = best.argmax;
        },
        scheme.threads);
    check_finite(out.values, model.space);
    return out;
}

SolveResult solve(const Model& model, const SchemeConfig& scheme) {
    require_supported(model);
    const auto cfl = check_cfl(model, scheme);
    if (!cfl.ok) throw CflError(cfl.detail, cfl.max_dt);

    const int N = model.time.N;
    SolveResult result;
    result.levels.resize(N + 1);
    result.diagnostics.resize(N + 1);
    result.levels[N].t = model.time.T;
    result.levels[N].values = model.terminal_samples();
    check_finite(result.levels[N].values, model.space);

    const double sup_g = penalty_sup(model);
    // Value floor, asserted outside the boundary-influence band only: there
    // the update combines in-box data convexly, so values cannot fall below
    // the terminal minimum minus the accumulated worst cost (plus the band's
    // residual tail mass against the data range). Band cells are governed by
    // the boundary extension and are only required to stay finite.
    const double floor_base = result.levels[N].values.minCoeff();
    const double range = result.levels[N].values.maxCoeff() - floor_base;
    const double slack =
        scheme.sanity_slack * (1.0 + std::abs(floor_base)) + 0.01 * (1.0 + range);

    for (int k = N - 1; k >= 0; --k) {
        result.levels[k] = dp_step(result.levels[k + 1], k, model, scheme);
        const double elapsed = model.time.T - model.time.node(k);
        const double floor_k = floor_base - elapsed * std::max(0.0, sup_g) - slack;
        std::vector<int> band(model.space.n);
        for (int a = 0; a < model.space.n; ++a)
            band[a] = boundary_band_cells(model, scheme, elapsed, a);
        for (long c = 0; c < result.levels[k].values.size(); ++c) {
            const auto idx = model.space.unflatten(c);
            bool interior = true;
            for (int a = 0; a < model.space.n; ++a)
                if (idx[a] < band[a] || idx[a] > model.space.M[a] - 1 - band[a]) interior = false;
            if (interior && result.levels[k].values[c] < floor_k) {
                std::ostringstream msg;
                msg << "value " << result.levels[k].values[c] << " at level " << k << ", cell "
                    << c << " falls below the sanity bound " << floor_k;
                throw Error(msg.str());
            }
        }
    }
    for (int k = 0; k <= N; ++k) {
        LevelDiagnostics d;
        d.max_abs = result.levels[k].values.cwiseAbs().maxCoeff();
        const double elapsed = model.time.T - model.time.node(k);
        d.band_width = band_width_state(model, scheme, elapsed, 0);
        d.band_cells = boundary_band_cells(model, scheme, elapsed, 0);
        result.diagnostics[k] = d;
    }

    result.policy.nodes.resize(N + 1);
    result.policy.selectors.resize(N);
    for (int k = 0; k <= N; ++k) result.policy.nodes[k] = k;
    for (int k = 0; k < N; ++k) result.policy.selectors[k] = result.levels[k].policy;
    return result;
}

SolveResult evaluate_control_dp(const Control& gamma, const Model& model,
                                const SchemeConfig& scheme) {
    require_supported(model);
    gamma.validate(model.time, model.space, model.gamma);
    const auto cfl = check_cfl(model, scheme);
    if (!cfl.ok) throw CflError(cfl.detail, cfl.max_dt);

    const int N = model.time.N;
    const long cells = model.space.n_cells();
    SolveResult result;
    result.levels.resize(N + 1);
    result.diagnostics.resize(N + 1);
    result.levels[N].t = model.time.T;
    result.levels[N].values = model.terminal_samples();

    for (int k = N - 1; k >= 0; --k) {
        const StepContext ctx = make_context(model, scheme, result.levels[k + 1].values, k);
        ValueField& out = result.levels[k];
        out.t = model.time.node(k);
        out.values = Vec(cells);
        out.policy.assign(cells, 0);
        parallel_for(
            cells,
            [&](long c) {
                const int sel = gamma.selected(k, c);
                out.values[c] = selected_candidate_value(ctx, c, sel);
                out.policy[c] = sel;
            },
            scheme.threads);
        check_finite(out.values, model.space);
    }
    for (int k = 0; k <= N; ++k) {
        result.diagnostics[k].max_abs = result.levels[k].values.cwiseAbs().maxCoeff();
        const double elapsed = model.time.T - model.time.node(k);
        result.diagnostics[k].band_width = band_width_state(model, scheme, elapsed, 0);
        result.diagnostics[k].band_cells = boundary_band_cells(model, scheme, elapsed, 0);
    }
    result.policy = gamma;
    return result;
}

double check_time_consistency(const Model& model, const SchemeConfig& scheme, int mid_node) {
    if (mid_node <= 0 || mid_node >= model.time.N)
        throw Error("split node must be an interior grid node");

    const SolveResult full = solve(model, scheme);

    // Restart-and-resolve on the parent grid so both sweeps share its exact dt.
    ValueField tail_field;
    tail_field.t = model.time.T;
    tail_field.values = model.terminal_samples();
    for (int k = model.time.N - 1; k >= mid_node; --k)
        tail_field = dp_step(tail_field, k, model, scheme);

    ValueField head_field = tail_field;
    for (int k = mid_node - 1; k >= 0; --k) head_field = dp_step(head_field, k, model, scheme);

    return (head_field.values - full.levels.front().values).cwiseAbs().maxCoeff();
}

namespace {

/// Closed-form start-level reference where one exists: a single diffusion
/// candidate prices by the Gaussian semigroup (constant penalties shift), and
/// a driftless jump-free pair of diffusions with a flagged payoff prices at
/// the extremal variance.
double closed_form_reference(const Model& model, double tau, const Vec& x) {
    const auto& sets = model.gamma.sets;
    const bool single = model.gamma.mode == GammaMode::Constant && sets[0].size() == 1;
    if (single && sets[0][0].jumps.empty()) {
        double shift = 0.0;
        if (model.penalty.family == PenaltyFamily::Constant) shift = model.penalty.c * tau;
        else if (model.penalty.family != PenaltyFamily::Zero)
            throw Error("closed form needs a zero or constant penalty");
        return gaussian_semigroup(model.payoff, model.space, sets[0][0].a, sets[0][0].b, tau, x) -
               shift;
    }
    if (model.gamma.mode == GammaMode::Constant && sets[0].size() == 2 &&
        model.penalty.family == PenaltyFamily::Zero && model.space.n == 1) {
        const auto& t0 = sets[0][0];
        const auto& t1 = sets[0][1];
        if (t0.jumps.empty() && t1.jumps.empty() && t0.b.norm() == 0.0 && t1.b.norm() == 0.0) {
            const double lo = std::min(t0.a(0, 0), t1.a(0, 0));
            const double hi = std::max(t0.a(0, 0), t1.a(0, 0));
            return g_heat_reference(model.payoff, model.space, lo, hi, tau, x);
        }
    }
    throw Error("no closed-form reference for this model; use the finest level instead");
}

Model refined_model(const Model& base, int level) {
    Model m = base;
    const int factor = 1 << level;
    for (int a = 0; a < m.space.n; ++a) m.space.M[a] = (base.space.M[a] - 1) * factor + 1;
    m.time.N = base.time.N * factor * factor;
    if (base.payoff.family == PayoffFamily::Table) {
        m.payoff.table = Vec(m.space.n_cells());
        for (long c = 0; c < m.space.n_cells(); ++c)
            m.payoff.table[c] = base.payoff.eval(m.space.point(c), base.space);
    }
    if (base.penalty.family == PenaltyFamily::Table && base.penalty.table.cols() > 1) {
        Mat table(base.penalty.table.rows(), m.space.n_cells());
        for (long r = 0; r < table.rows(); ++r) {
            const Vec slice = base.penalty.table.row(r).transpose();
            for (long c = 0; c < m.space.n_cells(); ++c)
                table(r, c) = detail::interp_table(base.space, slice, m.space.point(c), true);
        }
        m.penalty.table = table;
    }
    return m;
}

}  // namespace

std::vector<ConvergenceRow> convergence_study(const Model& model, const SchemeConfig& scheme,
                                              int levels, ConvergenceReference reference) {
    if (levels < 3) throw Error("convergence study needs at least 3 levels");
    if (model.gamma.mode == GammaMode::StateDependent)
        throw Error("convergence study does not support state-dependent candidate sets");

    std::vector<Vec> starts(levels);
    std::vector<Model> refined(levels);
    for (int l = 0; l < levels; ++l) {
        refined[l] = refined_model(model, l);
        starts[l] = solve(refined[l], scheme).levels.front().values;
    }

    // Interior cells of the base grid, excluding the boundary-influence band.
    const double tau = model.time.T - model.time.r;
    std::vector<long> base_cells;
    {
        const SpaceGrid& g = model.space;
        std::vector<int> band(g.n);
        for (int a = 0; a < g.n; ++a) band[a] = boundary_band_cells(model, scheme, tau, a);
        for (long c = 0; c < g.n_cells(); ++c) {
            const auto idx = g.unflatten(c);
            bool interior = true;
            for (int a = 0; a < g.n; ++a)
                if (idx[a] < band[a] || idx[a] > g.M[a] - 1 - band[a]) interior = false;
            if (interior) base_cells.push_back(c);
        }
        if (base_cells.empty())
            throw Error("boundary-influence band covers the whole grid; widen the box");
    }

    auto fine_cell = [&](long base_cell, int level) {
        const auto idx = model.space.unflatten(base_cell);
        std::vector<int> scaled(idx.size());
        for (std::size_t a = 0; a < idx.size(); ++a) scaled[a] = idx[a] * (1 << level);
        return refined[level].space.flatten(scaled);
    };

    const int comparable = reference == ConvergenceReference::Finest ? levels - 1 : levels;
    std::vector<ConvergenceRow> rows;
    for (int l = 0; l < comparable; ++l) {
        ConvergenceRow row;
        row.level = l;
        row.dx = refined[l].space.dx(0);
        row.dt = refined[l].time.dt();
        double err = 0.0;
        for (long c : base_cells) {
            double ref;
            if (reference == ConvergenceReference::ClosedForm)
                ref = closed_form_reference(model, tau, model.space.point(c));
            else
                ref = starts[levels - 1][fine_cell(c, levels - 1)];
            err = std::max(err, std::abs(starts[l][fine_cell(c, l)] - ref));
        }
        row.sup_error = err;
        row.observed_order =
            rows.empty() ? std::numeric_limits<double>::quiet_NaN()
                         : std::log2(rows.back().sup_error / err);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace nldp
