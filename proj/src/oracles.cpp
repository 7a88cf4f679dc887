#include "nonlocal_dp/oracles.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace nldp {

GaussHermiteRule gauss_hermite(int order) {
    static std::map<int, GaussHermiteRule> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    const auto it = cache.find(order);
    if (it != cache.end()) return it->second;

    // Golub-Welsch on the Hermite Jacobi matrix, rescaled so that
    // E[f(Z)] = sum_i weights[i] * f(nodes[i]) for Z standard normal.
    Mat jacobi = Mat::Zero(order, order);
    for (int k = 1; k < order; ++k) {
        const double off = std::sqrt(k / 2.0);
        jacobi(k, k - 1) = off;
        jacobi(k - 1, k) = off;
    }
    Eigen::SelfAdjointEigenSolver<Mat> eig(jacobi);
    GaussHermiteRule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    for (int i = 0; i < order; ++i) {
        rule.nodes[i] = std::sqrt(2.0) * eig.eigenvalues()[i];
        const double v0 = eig.eigenvectors()(0, i);
        rule.weights[i] = v0 * v0;  // first-component squares sum to 1
    }
    cache[order] = rule;
    return rule;
}

namespace {

struct GaussLegendreRule {
    std::vector<double> nodes;    // on [-1, 1]
    std::vector<double> weights;  // summing to 2
};

const GaussLegendreRule& gauss_legendre(int order) {
    static std::map<int, GaussLegendreRule> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(order);
    if (it != cache.end()) return it->second;

    Mat jacobi = Mat::Zero(order, order);
    for (int k = 1; k < order; ++k) {
        const double off = k / std::sqrt(4.0 * k * k - 1.0);
        jacobi(k, k - 1) = off;
        jacobi(k - 1, k) = off;
    }
    Eigen::SelfAdjointEigenSolver<Mat> eig(jacobi);
    GaussLegendreRule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    for (int i = 0; i < order; ++i) {
        rule.nodes[i] = eig.eigenvalues()[i];
        const double v0 = eig.eigenvectors()(0, i);
        rule.weights[i] = 2.0 * v0 * v0;
    }
    return cache.emplace(order, std::move(rule)).first->second;
}

constexpr double kGaussTail = 8.5;  // z truncation; the tail mass is ~1e-17

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }

/// Composite Gauss-Legendre pass over z panels split at the payoff kinks.
double legendre_pass(const std::function<double(const Vec&)>& h, double mean, double sdev,
                     const std::vector<double>& panel_edges, int order) {
    const auto& rule = gauss_legendre(order);
    double total = 0.0;
    Vec p(1);
    for (std::size_t k = 0; k + 1 < panel_edges.size(); ++k) {
        const double lo = panel_edges[k], hi = panel_edges[k + 1];
        const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
        double panel = 0.0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            const double z = mid + half * rule.nodes[i];
            p[0] = mean + sdev * z;
            panel += rule.weights[i] * h(p) * normal_pdf(z);
        }
        total += half * panel;
    }
    return total;
}

double hermite_pass(const std::function<double(const Vec&)>& h, const Mat& chol, const Vec& mean,
                    int order) {
    const auto rule = gauss_hermite(order);
    double total = 0.0;
    Vec z(2), p(2);
    for (int i = 0; i < order; ++i) {
        for (int j = 0; j < order; ++j) {
            z[0] = rule.nodes[i];
            z[1] = rule.nodes[j];
            p = mean + chol * z;
            total += rule.weights[i] * rule.weights[j] * h(p);
        }
    }
    return total;
}

std::vector<double> payoff_kinks(const Payoff& h, const SpaceGrid& grid) {
    std::vector<double> kinks;
    switch (h.family) {
        case PayoffFamily::Absolute:
            kinks.push_back(h.center[0]);
            break;
        case PayoffFamily::Call:
            if (h.width == 0.0) kinks.push_back(h.strike);
            break;
        case PayoffFamily::Table:
            for (int i = 0; i < grid.M[0]; ++i) kinks.push_back(grid.coord(0, i));
            break;
        default:
            break;
    }
    return kinks;
}

}  // namespace

double gaussian_semigroup(const std::function<double(const Vec&)>& h, const Mat& a, const Vec& b,
                          double tau, const Vec& x, std::span<const double> kinks) {
    if (tau < 0.0) throw Error("gaussian_semigroup: tau must be >= 0");
    const int n = static_cast<int>(x.size());
    if (n > 2) throw Error("gaussian_semigroup: supports n <= 2");
    if (tau == 0.0) return h(x);

    const Vec mean = x + b * tau;
    Eigen::LLT<Mat> llt(a * tau);
    if (llt.info() != Eigen::Success) throw Error("gaussian_semigroup: covariance not SPD");
    const Mat chol = llt.matrixL();

    std::vector<double> panel_edges;
    if (n == 1) {
        panel_edges.push_back(-kGaussTail);
        const double sdev = chol(0, 0);
        std::vector<double> interior;
        for (double k : kinks) {
            const double z = (k - mean[0]) / sdev;
            if (z > -kGaussTail && z < kGaussTail) interior.push_back(z);
        }
        std::sort(interior.begin(), interior.end());
        for (double z : interior) panel_edges.push_back(z);
        panel_edges.push_back(kGaussTail);
        // keep panels at most two z-units wide
        std::vector<double> refined{panel_edges.front()};
        for (std::size_t k = 1; k < panel_edges.size(); ++k) {
            const double lo = refined.back(), hi = panel_edges[k];
            const int pieces = std::max(1, static_cast<int>(std::ceil((hi - lo) / 2.0)));
            for (int piece = 1; piece <= pieces; ++piece)
                refined.push_back(lo + (hi - lo) * piece / pieces);
        }
        panel_edges = std::move(refined);
    }

    auto pass = [&](int order) {
        return n == 1 ? legendre_pass(h, mean[0], chol(0, 0), panel_edges, order)
                      : hermite_pass(h, chol, mean, order);
    };

    double previous = pass(64);
    for (int order = 128; order <= 512; order *= 2) {
        const double current = pass(order);
        if (!std::isfinite(current)) throw Error("gaussian_semigroup: quadrature not finite");
        if (std::abs(current - previous) <= 1e-10 * (1.0 + std::abs(current))) return current;
        previous = current;
    }
    if (!std::isfinite(previous)) throw Error("gaussian_semigroup: quadrature not finite");
    return previous;
}

double gaussian_semigroup(const Payoff& h, const SpaceGrid& grid, const Mat& a, const Vec& b,
                          double tau, const Vec& x) {
    const auto kinks = payoff_kinks(h, grid);
    return gaussian_semigroup([&](const Vec& p) { return h.eval(p, grid); }, a, b, tau, x,
                              kinks);
}

double g_heat_reference(const Payoff& h, const SpaceGrid& grid, double a_min, double a_max,
                        double tau, const Vec& x) {
    const int n = static_cast<int>(x.size());
    double variance;
    switch (h.curvature()) {
        case Curvature::Convex: variance = a_max; break;
        case Curvature::Concave: variance = a_min; break;
        default: throw Error("g_heat_reference: payoff carries no curvature flag");
    }
    return gaussian_semigroup(h, grid, variance * Mat::Identity(n, n), Vec::Zero(n), tau, x);
}

namespace {

// Deliberately separate arithmetic from the engine's stencil: plain loops on
// std::vector, one dimension.
struct TinyStencil {
    const Model& model;
    const SchemeConfig& scheme;
    double lo, hi, h, dt;
    int M;

    double ghost(const std::vector<double>& v, int i) const {
        if (i >= 0 && i < M) return v[i];
        if (scheme.boundary == BoundaryRule::ClampToPayoff) {
            Vec p(1);
            p[0] = lo + i * h;
            return model.payoff.eval(p, model.space);
        }
        if (i < 0) return (1.0 - i) * v[0] + i * v[1];
        const int d = i - (M - 1);
        return (1.0 + d) * v[M - 1] - d * v[M - 2];
    }

    double shifted(const std::vector<double>& v, double target) const {
        if (scheme.boundary == BoundaryRule::ClampToPayoff && (target < lo || target > hi)) {
            Vec p(1);
            p[0] = target;
            return model.payoff.eval(p, model.space);
        }
        const double s = (target - lo) / h;
        int base = static_cast<int>(std::floor(s));
        if (base < 0) base = 0;
        if (base > M - 2) base = M - 2;
        const double frac = s - base;
        return (1.0 - frac) * v[base] + frac * v[base + 1];
    }

    double update(const std::vector<double>& v, int i, double t, const ParamPoint& theta,
                  int cand) const {
        const double x = lo + i * h;
        const double wc = v[i];
        const double wp = ghost(v, i + 1);
        const double wm = ghost(v, i - 1);
        double acc = 0.5 * theta.a(0, 0) * (wp - 2.0 * wc + wm) / (h * h);
        double be = theta.b[0];
        for (const auto& atom : theta.jumps)
            be -= atom.lambda * atom.y[0] / (1.0 + atom.y[0] * atom.y[0]);
        acc += be >= 0.0 ? be * (wp - wc) / h : be * (wc - wm) / h;
        for (const auto& atom : theta.jumps)
            acc += atom.lambda * (shifted(v, x + atom.y[0]) - wc);
        Vec xv(1);
        xv[0] = x;
        const double g = model.penalty.eval(t, xv, theta, cand, model.space);
        return wc + dt * acc - dt * g;
    }
};

}  // namespace

Vec brute_force_dp(const Model& model, const SchemeConfig& scheme) {
    if (model.space.n != 1) throw Error("brute_force_dp: one-dimensional instances only");
    if (model.time.N > 4) throw Error("brute_force_dp: at most 4 time steps");
    const int cells = static_cast<int>(model.space.n_cells());
    if (cells > 7) throw Error("brute_force_dp: at most 7 cells");
    if (model.gamma.max_candidates() > 3) throw Error("brute_force_dp: at most 3 candidates");

    TinyStencil stencil{model,
                        scheme,
                        model.space.lower[0],
                        model.space.upper[0],
                        model.space.dx(0),
                        model.time.dt(),
                        model.space.M[0]};

    const Vec terminal = model.terminal_samples();
    std::vector<double> v(terminal.data(), terminal.data() + terminal.size());

    for (int step = model.time.N - 1; step >= 0; --step) {
        const double t = model.time.node(step);

        std::vector<std::vector<double>> table(cells);  // per-cell candidate values
        std::vector<int> radix(cells);
        for (int c = 0; c < cells; ++c) {
            int set = 0;
            if (model.gamma.mode == GammaMode::TimeDependent) set = model.gamma.set_for_step[step];
            if (model.gamma.mode == GammaMode::StateDependent) set = model.gamma.set_for_cell[c];
            const auto& candidates = model.gamma.sets[set];
            radix[c] = static_cast<int>(candidates.size());
            for (std::size_t k = 0; k < candidates.size(); ++k)
                table[c].push_back(stencil.update(v, c, t, candidates[k], static_cast<int>(k)));
        }

        // Enumerate every per-cell candidate assignment and take the pointwise
        // max over the resulting fields.
        long assignments = 1;
        for (int c = 0; c < cells; ++c) assignments *= radix[c];
        std::vector<double> best(cells, -std::numeric_limits<double>::infinity());
        std::vector<int> pick(cells, 0);
        for (long a = 0; a < assignments; ++a) {
            long rest = a;
            for (int c = 0; c < cells; ++c) {
                pick[c] = static_cast<int>(rest % radix[c]);
                rest /= radix[c];
            }
            for (int c = 0; c < cells; ++c) best[c] = std::max(best[c], table[c][pick[c]]);
        }

        // The enumerated sup must coincide with the cellwise max.
        for (int c = 0; c < cells; ++c) {
            double cellwise = table[c][0];
            for (int k = 1; k < radix[c]; ++k) cellwise = std::max(cellwise, table[c][k]);
            if (best[c] != cellwise)
                throw Error("brute_force_dp: enumerated sup disagrees with the cellwise max");
        }
        v = best;
    }

    Vec out(cells);
    for (int c = 0; c < cells; ++c) out[c] = v[c];
    return out;
}

}  // namespace nldp
