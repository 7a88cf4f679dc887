#ifndef NONLOCAL_DP_TESTS_HELPERS_HPP
#define NONLOCAL_DP_TESTS_HELPERS_HPP

#include "nonlocal_dp/mc.hpp"
#include "nonlocal_dp/model.hpp"
#include "nonlocal_dp/pde.hpp"

#include <random>

namespace nldp::test {

/// Step count making dt admissible for the per-term worst case across every
/// candidate (the same aggregation the engine's stability check uses).
inline int stable_steps(const Model& model, double T) {
    const double dx = model.space.dx(0);
    double max_a = 0.0, max_b = 0.0, max_rate = 0.0;
    for (const auto& set : model.gamma.sets)
        for (const auto& theta : set) {
            max_a = std::max(max_a, theta.a(0, 0));
            max_b = std::max(max_b, std::abs(theta.effective_drift()[0]));
            max_rate = std::max(max_rate, theta.jump_rate_total());
        }
    const double sum = max_a / (dx * dx) + max_b / dx + max_rate;
    return static_cast<int>(std::ceil(T * sum)) + 1;
}

inline ParamPoint diffusion1d(double a, double b) {
    ParamPoint theta;
    theta.a = Mat::Constant(1, 1, a);
    theta.b = Vec::Constant(1, b);
    return theta;
}

inline SpaceGrid grid1d(double lo, double hi, int m) {
    SpaceGrid g;
    g.n = 1;
    g.lower = Vec::Constant(1, lo);
    g.upper = Vec::Constant(1, hi);
    g.M = {m};
    return g;
}

/// Single diffusion candidate, quadratic payoff by default. N picked at the
/// stability limit unless given.
inline Model heat_model(double a = 1.0, double b = 0.0, double T = 0.5, int m = 121,
                        double box = 6.0, int n_steps = 0) {
    Model model;
    model.space = grid1d(-box, box, m);
    model.gamma.mode = GammaMode::Constant;
    model.gamma.sets = {{diffusion1d(a, b)}};
    model.payoff.family = PayoffFamily::Quadratic;
    model.payoff.center = Vec::Zero(1);
    model.time.r = 0.0;
    model.time.T = T;
    model.time.N = n_steps == 0 ? stable_steps(model, T) : n_steps;
    return model;
}

/// Two driftless diffusion candidates with variances a_min (index 0) and
/// a_max (index 1).
inline Model gheat_model(double a_min = 0.25, double a_max = 1.0, double T = 0.5, int m = 121,
                         double box = 6.0) {
    Model model = heat_model(a_max, 0.0, T, m, box);
    model.gamma.sets = {{diffusion1d(a_min, 0.0), diffusion1d(a_max, 0.0)}};
    return model;
}

/// Single candidate with one jump atom.
inline Model levy_model(double a = 0.25, double jump_y = 1.0, double lambda = 2.0,
                        double T = 0.5, int m = 121, double box = 6.0) {
    Model model = heat_model(a, 0.0, T, m, box, 1);
    JumpAtom atom;
    atom.y = Vec::Constant(1, jump_y);
    atom.lambda = lambda;
    model.gamma.sets[0][0].jumps.push_back(atom);
    model.time.N = stable_steps(model, T);
    return model;
}

inline Control constant_control(const Model& model, int candidate) {
    Control c;
    c.nodes = {0, model.time.N};
    c.selectors = {{candidate}};
    return c;
}

/// Random node subdivision plus per-interval per-cell selections.
inline Control random_control(const Model& model, std::mt19937_64& rng) {
    Control c;
    c.nodes.push_back(0);
    for (int k = 1; k < model.time.N; ++k)
        if (std::uniform_real_distribution<double>(0, 1)(rng) < 0.3) c.nodes.push_back(k);
    c.nodes.push_back(model.time.N);
    const long cells = model.space.n_cells();
    for (std::size_t i = 0; i + 1 < c.nodes.size(); ++i) {
        std::vector<int> sel(cells);
        for (long cell = 0; cell < cells; ++cell) {
            const auto& set = model.gamma.at(c.nodes[i], cell);
            sel[cell] = std::uniform_int_distribution<int>(0, static_cast<int>(set.size()) - 1)(rng);
        }
        c.selectors.push_back(std::move(sel));
    }
    return c;
}

/// Tiny one-dimensional instance within the brute-force caps, stability
/// respected by construction. Cycles through all three candidate-set modes.
inline Model tiny_random_model(std::mt19937_64& rng, bool allow_jumps = true) {
    auto uniform = [&](double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(rng);
    };
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

    Model model;
    const int m = pick(3, 7);
    const double half = uniform(1.0, 3.0);
    model.space = grid1d(-half, half, m);
    model.time.N = pick(1, 4);

    auto random_candidate = [&]() {
        ParamPoint theta = diffusion1d(uniform(0.1, 2.0), uniform(-2.0, 2.0));
        if (allow_jumps && pick(0, 2) == 0) {
            JumpAtom atom;
            atom.y = Vec::Constant(1, uniform(-1.0, 1.0));
            if (std::abs(atom.y[0]) < 0.05) atom.y[0] = 0.05;
            atom.lambda = uniform(0.0, 3.0);
            theta.jumps.push_back(atom);
        }
        return theta;
    };
    const int n_candidates = pick(1, 3);
    const int n_sets = pick(0, 3) == 0 ? 2 : 1;
    model.gamma.sets.resize(n_sets);
    for (int s = 0; s < n_sets; ++s)
        for (int k = 0; k < n_candidates; ++k) model.gamma.sets[s].push_back(random_candidate());
    if (n_sets == 1) {
        model.gamma.mode = GammaMode::Constant;
    } else if (pick(0, 1) == 0) {
        model.gamma.mode = GammaMode::TimeDependent;
        model.gamma.set_for_step.resize(model.time.N);
        for (int& s : model.gamma.set_for_step) s = pick(0, n_sets - 1);
    } else {
        model.gamma.mode = GammaMode::StateDependent;
        model.gamma.set_for_cell.resize(m);
        for (int& s : model.gamma.set_for_cell) s = pick(0, n_sets - 1);
    }

    switch (pick(0, 3)) {
        case 0: model.penalty.family = PenaltyFamily::Zero; break;
        case 1:
            model.penalty.family = PenaltyFamily::Constant;
            model.penalty.c = uniform(-1.0, 1.0);
            break;
        case 2:
            model.penalty.family = PenaltyFamily::QuadraticDrift;
            model.penalty.eta = uniform(0.0, 1.0);
            break;
        default: {
            model.penalty.family = PenaltyFamily::Table;
            model.penalty.table = Mat(n_candidates, m);
            for (int i = 0; i < n_candidates; ++i)
                for (int j = 0; j < m; ++j) model.penalty.table(i, j) = uniform(-1.0, 1.0);
        }
    }

    switch (pick(0, 2)) {
        case 0:
            model.payoff.family = PayoffFamily::Quadratic;
            model.payoff.center = Vec::Constant(1, uniform(-1.0, 1.0));
            model.payoff.scale = uniform(-1.0, 1.0);
            break;
        case 1:
            model.payoff.family = PayoffFamily::Absolute;
            model.payoff.center = Vec::Constant(1, uniform(-1.0, 1.0));
            model.payoff.scale = uniform(-1.0, 1.0);
            break;
        default:
            model.payoff.family = PayoffFamily::Call;
            model.payoff.strike = uniform(-1.0, 1.0);
            model.payoff.width = pick(0, 1) ? uniform(0.05, 0.5) : 0.0;
    }

    model.time.r = 0.0;
    const double dx = model.space.dx(0);
    double max_a = 0.0, max_b = 0.0, max_rate = 0.0;
    for (const auto& set : model.gamma.sets)
        for (const auto& theta : set) {
            max_a = std::max(max_a, theta.a(0, 0));
            max_b = std::max(max_b, std::abs(theta.effective_drift()[0]));
            max_rate = std::max(max_rate, theta.jump_rate_total());
        }
    const double dt = 0.9 / (max_a / (dx * dx) + max_b / dx + max_rate);
    model.time.T = model.time.N * dt;
    return model;
}

}  // namespace nldp::test

#endif
