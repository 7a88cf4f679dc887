#include "nonlocal_dp/mc.hpp"

#include "nonlocal_dp/threading.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <random>

namespace nldp {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t path_stream_seed(std::uint64_t base, long path_index) {
    return base ^ splitmix64(static_cast<std::uint64_t>(path_index));
}

struct PreparedCandidate {
    const ParamPoint* theta = nullptr;
    Vec b_eff;
    Mat chol;
};

PreparedCandidate prepare(const ParamPoint& theta) {
    PreparedCandidate p;
    p.theta = &theta;
    p.b_eff = theta.effective_drift();
    Eigen::LLT<Mat> llt(theta.a);
    if (llt.info() != Eigen::Success)
        throw Error("Cholesky factorization failed; candidate should be pre-validated");
    p.chol = llt.matrixL();
    return p;
}

std::vector<std::vector<PreparedCandidate>> prepare_sets(const GammaMap& gamma) {
    std::vector<std::vector<PreparedCandidate>> out(gamma.sets.size());
    for (std::size_t s = 0; s < gamma.sets.size(); ++s)
        for (const auto& theta : gamma.sets[s]) out[s].push_back(prepare(theta));
    return out;
}

int gamma_set_index(const GammaMap& gamma, int step, long cell) {
    switch (gamma.mode) {
        case GammaMode::Constant: return 0;
        case GammaMode::TimeDependent: return gamma.set_for_step[step];
        case GammaMode::StateDependent: return gamma.set_for_cell[cell];
    }
    return 0;
}

int node_of_time(const TimeGrid& time, double t, const char* what) {
    const double k = (t - time.r) / time.dt();
    const int node = static_cast<int>(std::lround(k));
    if (node < 0 || node > time.N || std::abs(time.node(node) - t) > 1e-9 * std::max(1.0, std::abs(t)))
        throw DomainError(std::string(what) + " must lie on a grid node");
    return node;
}

/// Euler path core. Draw order per substep: n normals, then one Poisson count
/// per jump atom, so a given (seed, path index) always yields the same
/// trajectory. The recorder sees the state at every grid node and the
/// left-endpoint penalty increment of every grid step.
template <typename SelectTheta, typename Recorder>
void run_path(const Model& model, int start_node, int end_node, const Vec& y, int substeps,
              std::uint64_t stream_seed, SelectTheta&& select, Recorder&& rec) {
    std::mt19937_64 rng(stream_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int n = model.space.n;
    const double dt = model.time.dt();
    const double delta = dt / substeps;
    const double sqrt_delta = std::sqrt(delta);

    Vec x = y;
    Vec z(n), move(n);
    rec.node(start_node, x);
    for (int step = start_node; step < end_node; ++step) {
        const long cell = model.space.cell_of(x);
        const auto& prep = select(step, cell);
        const int cand = prep.second;
        const PreparedCandidate& pc = *prep.first;
        double increment = 0.0;
        for (int sub = 0; sub < substeps; ++sub) {
            const double t_sub = model.time.node(step) + sub * delta;
            increment +=
                delta * model.penalty.eval(t_sub, x, *pc.theta, cand, model.space);
            for (int i = 0; i < n; ++i) z[i] = normal(rng);
            move = pc.b_eff * delta + sqrt_delta * (pc.chol * z);
            for (std::size_t a = 0; a < pc.theta->jumps.size(); ++a) {
                const auto& atom = pc.theta->jumps[a];
                if (atom.lambda <= 0.0) continue;  // mean 0 is invalid for the distribution
                std::poisson_distribution<int> poisson(atom.lambda * delta);
                const int count = poisson(rng);
                if (count > 0) {
                    move += count * atom.y;
                    rec.jump(step, sub, static_cast<int>(a), count);
                }
            }
            x += move;
        }
        rec.penalty_step(step, cand, increment);
        rec.node(step + 1, x);
    }
}

struct LightRecorder {
    Vec terminal;
    double penalty = 0.0;
    long outside = 0;
    long nodes_seen = 0;
    const SpaceGrid* grid = nullptr;

    void node(int, const Vec& x) {
        terminal = x;
        ++nodes_seen;
        if (grid && !grid->inside(x)) ++outside;
    }
    void jump(int, int, int, int) {}
    void penalty_step(int, int, double inc) { penalty += inc; }
};

struct FullRecorder {
    PathSample* out = nullptr;
    const Model* model = nullptr;

    void node(int k, const Vec& x) {
        out->times.push_back(model->time.node(k));
        out->states.push_back(x);
    }
    void jump(int step, int sub, int atom, int count) {
        out->jump_log.push_back({step, sub, atom, count});
    }
    void penalty_step(int step, int cand, double inc) {
        (void)step;
        out->applied_candidate.push_back(cand);
        out->penalty_increments.push_back(inc);
        out->accumulated_penalty += inc;
    }
};

McEstimate reduce_estimate(const std::vector<double>& values) {
    McEstimate e;
    e.n_paths = static_cast<long>(values.size());
    if (values.empty()) return e;
    if (std::all_of(values.begin(), values.end(),
                    [&](double v) { return v == values.front(); })) {
        e.mean = values.front();
        return e;
    }
    e.mean = pairwise_sum(values) / static_cast<double>(e.n_paths);
    if (e.n_paths > 1) {
        std::vector<double> sq(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double d = values[i] - e.mean;
            sq[i] = d * d;
        }
        const double var = pairwise_sum(sq) / static_cast<double>(e.n_paths - 1);
        e.se = std::sqrt(var / static_cast<double>(e.n_paths));
    }
    return e;
}

using PreparedSets = std::vector<std::vector<PreparedCandidate>>;

auto control_selector(const Control& gamma, const GammaMap& map, const PreparedSets& sets) {
    return [&gamma, &map, &sets](int step, long cell) {
        const int set = gamma_set_index(map, step, cell);
        const int k = gamma.selected(step, cell);
        return std::pair<const PreparedCandidate*, int>(&sets[set][k], k);
    };
}

/// Runs one value per path under the control and reduces deterministically.
template <typename PerPath>
McEstimate estimate_over_paths(const Control& gamma, double r, const Vec& y, const Model& model,
                               const McConfig& mc, PerPath&& per_path) {
    mc.validate();
    gamma.validate(model.time, model.space, model.gamma);
    const int start = node_of_time(model.time, r, "r");
    const PreparedSets sets = prepare_sets(model.gamma);
    std::vector<double> values(mc.n_paths);
    parallel_for(
        mc.n_paths,
        [&](long p) {
            LightRecorder rec;
            run_path(model, start, model.time.N, y, mc.substeps, path_stream_seed(mc.seed, p),
                     control_selector(gamma, model.gamma, sets), rec);
            values[p] = per_path(rec);
        },
        mc.threads);
    return reduce_estimate(values);
}

}  // namespace

void McConfig::validate() const {
    if (n_paths < 1) throw Error("mc: n_paths must be >= 1");
    if (substeps < 1) throw Error("mc: substeps must be >= 1");
    if (!(confidence > 0.0)) throw Error("mc: confidence multiplier must be positive");
}

PathSample sample_path(const Control& gamma, double r, const Vec& y, const Model& model,
                       const McConfig& mc, long path_index) {
    mc.validate();
    gamma.validate(model.time, model.space, model.gamma);
    const int start = node_of_time(model.time, r, "r");
    const PreparedSets sets = prepare_sets(model.gamma);
    PathSample sample;
    sample.stream_seed = path_stream_seed(mc.seed, path_index);
    FullRecorder rec{&sample, &model};
    run_path(model, start, model.time.N, y, mc.substeps, sample.stream_seed,
             control_selector(gamma, model.gamma, sets), rec);
    if (!std::isfinite(sample.accumulated_penalty))
        throw Error("sample_path: accumulated penalty is not finite");
    return sample;
}

McEstimate mc_expectation(const Control& gamma, const Payoff& h, double r, const Vec& y,
                          const Model& model, const McConfig& mc) {
    return estimate_over_paths(gamma, r, y, model, mc, [&](const LightRecorder& rec) {
        return h.eval(rec.terminal, model.space);
    });
}

McEstimate mc_penalty(const Control& gamma, double r, const Vec& y, const Model& model,
                      const McConfig& mc) {
    return estimate_over_paths(gamma, r, y, model, mc,
                               [](const LightRecorder& rec) { return rec.penalty; });
}

McEstimate mc_lower_bound(const Control& gamma, const Payoff& h, double r, const Vec& y,
                          const Model& model, const McConfig& mc) {
    return estimate_over_paths(gamma, r, y, model, mc, [&](const LightRecorder& rec) {
        return h.eval(rec.terminal, model.space) - rec.penalty;
    });
}

double excursion_fraction(const Control& gamma, double r, const Vec& y, const Model& model,
                          const McConfig& mc) {
    mc.validate();
    gamma.validate(model.time, model.space, model.gamma);
    const int start = node_of_time(model.time, r, "r");
    const PreparedSets sets = prepare_sets(model.gamma);
    std::vector<double> fractions(mc.n_paths);
    parallel_for(
        mc.n_paths,
        [&](long p) {
            LightRecorder rec;
            rec.grid = &model.space;
            run_path(model, start, model.time.N, y, mc.substeps, path_stream_seed(mc.seed, p),
                     control_selector(gamma, model.gamma, sets), rec);
            fractions[p] = rec.nodes_seen ? static_cast<double>(rec.outside) / rec.nodes_seen : 0.0;
        },
        mc.threads);
    return reduce_estimate(fractions).mean;
}

McEstimate exp_martingale_stat(const ParamPoint& theta, const Vec& theta_vec, double r, double t,
                               const Vec& y, const Model& model, const McConfig& mc) {
    mc.validate();
    if (!theta.jumps.empty())
        throw Error("exp_martingale_stat: diffusion-only candidates (no jump atoms)");
    const int start = node_of_time(model.time, r, "r");
    const int end = node_of_time(model.time, t, "t");
    if (end <= start) throw Error("exp_martingale_stat: need r < t");
    const PreparedCandidate pc = prepare(theta);
    const double quad = 0.5 * theta_vec.dot(theta.a * theta_vec);

    std::vector<double> values(mc.n_paths);
    parallel_for(
        mc.n_paths,
        [&](long p) {
            LightRecorder rec;
            run_path(model, start, end, y, mc.substeps, path_stream_seed(mc.seed, p),
                     [&](int, long) { return std::pair<const PreparedCandidate*, int>(&pc, 0); },
                     rec);
            // constant coefficients: the compensator integrals are exact
            const double tau = (end - start) * model.time.dt();
            values[p] = std::exp(theta_vec.dot(rec.terminal - y) - tau * theta_vec.dot(theta.b) -
                                 tau * quad);
        },
        mc.threads);
    return reduce_estimate(values);
}

McEstimate generator_martingale_stat(const ParamPoint& theta, const WindowedTestFunction& f,
                                     double r, double t, const Vec& y, const Model& model,
                                     const McConfig& mc) {
    mc.validate();
    const int start = node_of_time(model.time, r, "r");
    const int end = node_of_time(model.time, t, "t");
    if (end <= start) throw Error("generator_martingale_stat: need r < t");
    const PreparedCandidate pc = prepare(theta);

    std::vector<double> values(mc.n_paths);
    parallel_for(
        mc.n_paths,
        [&](long p) {
            std::mt19937_64 rng(path_stream_seed(mc.seed, p));
            std::normal_distribution<double> normal(0.0, 1.0);
            const int n = model.space.n;
            const double delta = model.time.dt() / mc.substeps;
            const double sqrt_delta = std::sqrt(delta);
            Vec x = y, z(n), move(n);
            double integral = 0.0;
            for (int step = start; step < end; ++step) {
                for (int sub = 0; sub < mc.substeps; ++sub) {
                    const DerivativeBundle bundle = f.bundle_at(x);
                    integral += delta * (generator_apply(theta, bundle) +
                                         nonlocal_apply(theta.jumps, bundle, x));
                    for (int i = 0; i < n; ++i) z[i] = normal(rng);
                    move = pc.b_eff * delta + sqrt_delta * (pc.chol * z);
                    for (const auto& atom : theta.jumps) {
                        if (atom.lambda <= 0.0) continue;
                        std::poisson_distribution<int> poisson(atom.lambda * delta);
                        const int count = poisson(rng);
                        if (count > 0) move += count * atom.y;
                    }
                    x += move;
                }
            }
            values[p] = f.value(x) - f.value(y) - integral;
        },
        mc.threads);
    return reduce_estimate(values);
}

double generator_martingale_bias_slope(const ParamPoint& theta, const WindowedTestFunction& f,
                                       double r, double t, const Vec& y, const Model& model,
                                       const McConfig& mc) {
    if (mc.substeps < 2) throw Error("bias slope needs substeps >= 2");
    McConfig coarse = mc;
    coarse.substeps = mc.substeps / 2;
    const McEstimate fine = generator_martingale_stat(theta, f, r, t, y, model, mc);
    const McEstimate half = generator_martingale_stat(theta, f, r, t, y, model, coarse);
    const double delta = model.time.dt() / mc.substeps;
    return std::abs(half.mean - fine.mean) / delta;
}

Control paste_composition(const Control& gamma, const Control& delta, int s_node,
                          const Model& model) {
    gamma.validate(model.time, model.space, model.gamma);
    delta.validate(model.time, model.space, model.gamma);
    if (s_node < 0 || s_node > model.time.N) throw Error("paste: s must be a grid node");

    Control out;
    for (int node : gamma.nodes)
        if (node < s_node) out.nodes.push_back(node);
    out.nodes.push_back(s_node);
    for (int node : delta.nodes)
        if (node > s_node) out.nodes.push_back(node);

    for (std::size_t i = 0; i + 1 < out.nodes.size(); ++i) {
        const int start = out.nodes[i];
        if (start < s_node)
            out.selectors.push_back(gamma.selectors[gamma.interval_of(start)]);
        else
            out.selectors.push_back(delta.selectors[delta.interval_of(start)]);
    }
    out.validate(model.time, model.space, model.gamma);
    return out;
}

Control paste_bifurcation(const Control& gamma, const Control& delta, int s_node,
                          const std::vector<bool>& region, const Model& model) {
    gamma.validate(model.time, model.space, model.gamma);
    delta.validate(model.time, model.space, model.gamma);
    if (s_node < 0 || s_node > model.time.N) throw Error("paste: s must be a grid node");
    const long cells = model.space.n_cells();
    if (static_cast<long>(region.size()) != cells)
        throw Error("paste_bifurcation: region needs one flag per cell");

    Control out;
    for (int node : gamma.nodes)
        if (node < s_node) out.nodes.push_back(node);
    out.nodes.push_back(s_node);
    {
        std::vector<int> merged;
        for (int node : gamma.nodes)
            if (node > s_node) merged.push_back(node);
        for (int node : delta.nodes)
            if (node > s_node) merged.push_back(node);
        std::sort(merged.begin(), merged.end());
        merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
        out.nodes.insert(out.nodes.end(), merged.begin(), merged.end());
    }

    for (std::size_t i = 0; i + 1 < out.nodes.size(); ++i) {
        const int start = out.nodes[i];
        if (start < s_node) {
            out.selectors.push_back(gamma.selectors[gamma.interval_of(start)]);
            continue;
        }
        std::vector<int> sel(cells);
        for (long c = 0; c < cells; ++c)
            sel[c] = region[c] ? gamma.selected(start, c) : delta.selected(start, c);
        out.selectors.push_back(std::move(sel));
    }
    out.validate(model.time, model.space, model.gamma);
    return out;
}

CocycleResult cocycle_check(const Control& gamma, int s_node, int t_node, int u_node,
                            const Vec& y, const Model& model, const McConfig& mc) {
    mc.validate();
    gamma.validate(model.time, model.space, model.gamma);
    if (!(0 <= s_node && s_node < t_node && t_node < u_node && u_node <= model.time.N))
        throw Error("cocycle_check: need grid nodes s < t < u");
    const PreparedSets sets = prepare_sets(model.gamma);

    std::vector<double> residuals(mc.n_paths);
    parallel_for(
        mc.n_paths,
        [&](long p) {
            PathSample sample;
            sample.stream_seed = path_stream_seed(mc.seed, p);
            FullRecorder rec{&sample, &model};
            run_path(model, s_node, u_node, y, mc.substeps, sample.stream_seed,
                     control_selector(gamma, model.gamma, sets), rec);
            const int span = u_node - s_node;
            const int mid = t_node - s_node;
            const double whole = sample.penalty_between(0, span);
            const double head = sample.penalty_between(0, mid);
            const double tail = sample.penalty_between(mid, span);
            residuals[p] = whole - head - tail;
        },
        mc.threads);

    CocycleResult result;
    result.residual = reduce_estimate(residuals);
    for (double v : residuals) result.max_abs = std::max(result.max_abs, std::abs(v));
    return result;
}

}  // namespace nldp
