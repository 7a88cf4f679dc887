#include "nonlocal_dp/types.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace nldp {

namespace {

bool mat_eq(const Mat& a, const Mat& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

bool vec_eq(const Vec& a, const Vec& b) {
    return a.size() == b.size() && (a.array() == b.array()).all();
}

}  // namespace

void TimeGrid::validate() const {
    if (!(r >= 0.0)) throw Error("time grid: r must be >= 0");
    if (!(r < T)) throw Error("time grid: need r < T");
    if (N < 1) throw Error("time grid: N must be >= 1");
    if (!(dt() > 0.0) || !std::isfinite(dt())) throw Error("time grid: dt must be positive");
}

long SpaceGrid::n_cells() const {
    long total = 1;
    for (int m : M) total *= m;
    return total;
}

Vec SpaceGrid::point(long cell) const {
    Vec x(n);
    const auto idx = unflatten(cell);
    for (int a = 0; a < n; ++a) x[a] = coord(a, idx[a]);
    return x;
}

std::vector<int> SpaceGrid::unflatten(long cell) const {
    std::vector<int> idx(n);
    for (int a = 0; a < n; ++a) {
        idx[a] = static_cast<int>(cell % M[a]);
        cell /= M[a];
    }
    return idx;
}

long SpaceGrid::flatten(std::span<const int> idx) const {
    long cell = 0;
    for (int a = n - 1; a >= 0; --a) cell = cell * M[a] + idx[a];
    return cell;
}

long SpaceGrid::cell_of(const Vec& x) const {
    long cell = 0;
    for (int a = n - 1; a >= 0; --a) {
        const double s = (x[a] - lower[a]) / dx(a);
        int i = static_cast<int>(std::lround(s));
        if (i < 0) i = 0;
        if (i > M[a] - 1) i = M[a] - 1;
        cell = cell * M[a] + i;
    }
    return cell;
}

bool SpaceGrid::inside(const Vec& x) const {
    for (int a = 0; a < n; ++a)
        if (x[a] < lower[a] || x[a] > upper[a]) return false;
    return true;
}

void SpaceGrid::validate() const {
    if (n < 1) throw Error("space grid: n must be >= 1");
    if (lower.size() != n || upper.size() != n || static_cast<int>(M.size()) != n)
        throw Error("space grid: bounds and M must have one entry per axis");
    for (int a = 0; a < n; ++a) {
        if (!std::isfinite(lower[a]) || !std::isfinite(upper[a]))
            throw Error("space grid: bounds must be finite");
        if (!(lower[a] < upper[a])) throw Error("space grid: need lower < upper on every axis");
        if (M[a] < 3) throw Error("space grid: M must be >= 3 on every axis");
        if (!(dx(a) > 0.0)) throw Error("space grid: dx must be positive");
    }
}

bool SpaceGrid::operator==(const SpaceGrid& o) const {
    return n == o.n && vec_eq(lower, o.lower) && vec_eq(upper, o.upper) && M == o.M;
}

bool JumpAtom::operator==(const JumpAtom& o) const {
    return lambda == o.lambda && vec_eq(y, o.y);
}

Vec ParamPoint::effective_drift() const {
    Vec be = b;
    for (const auto& atom : jumps) {
        const double n2 = atom.y.squaredNorm();
        be -= atom.lambda / (1.0 + n2) * atom.y;
    }
    return be;
}

double ParamPoint::jump_rate_total() const {
    double s = 0.0;
    for (const auto& atom : jumps) s += atom.lambda;
    return s;
}

bool ParamPoint::operator==(const ParamPoint& o) const {
    return mat_eq(a, o.a) && vec_eq(b, o.b) && jumps == o.jumps;
}

double levy_moment(std::span<const JumpAtom> jumps) {
    double s = 0.0;
    for (const auto& atom : jumps) {
        const double norm = atom.y.norm();
        s += atom.lambda * (norm <= 1.0 ? norm * norm : norm);
    }
    return s;
}

std::string ValidationReport::str() const {
    std::ostringstream out;
    for (std::size_t i = 0; i < violations.size(); ++i) {
        if (i) out << "; ";
        out << violations[i];
    }
    return out.str();
}

ValidationReport validate_param(const ParamPoint& theta, const Bounds& bounds) {
    ValidationReport report;
    const int n = theta.dim();
    if (theta.a.rows() != n || theta.a.cols() != n) {
        report.violations.push_back("a must be " + std::to_string(n) + "x" + std::to_string(n));
        return report;
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (!std::isfinite(theta.a(i, j))) report.violations.push_back("a has a non-finite entry");
    for (int i = 0; i < n; ++i)
        if (!std::isfinite(theta.b[i])) report.violations.push_back("b has a non-finite entry");
    if (!report.ok()) return report;

    const double asym = (theta.a - theta.a.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * (1.0 + theta.a.cwiseAbs().maxCoeff()))
        report.violations.push_back("a not symmetric");

    Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (theta.a + theta.a.transpose()));
    const double lambda_min = eig.eigenvalues().minCoeff();
    const double lambda_max = eig.eigenvalues().cwiseAbs().maxCoeff();
    if (!(lambda_min >= bounds.eps_spd)) {
        std::ostringstream msg;
        msg << "a not strictly positive definite (min eigenvalue " << lambda_min << " < "
            << bounds.eps_spd << ")";
        report.violations.push_back(msg.str());
    }
    if (lambda_max > bounds.a_bound) {
        std::ostringstream msg;
        msg << "|a| " << lambda_max << " > " << bounds.a_bound;
        report.violations.push_back(msg.str());
    }
    if (theta.b.norm() > bounds.b_bound) {
        std::ostringstream msg;
        msg << "|b| " << theta.b.norm() << " > " << bounds.b_bound;
        report.violations.push_back(msg.str());
    }
    for (const auto& atom : theta.jumps) {
        if (atom.y.size() != n) report.violations.push_back("jump displacement has wrong dimension");
        else if (!(atom.y.norm() > 0.0)) report.violations.push_back("jump displacement must be nonzero");
        if (!(atom.lambda >= 0.0) || !std::isfinite(atom.lambda))
            report.violations.push_back("jump intensity must be >= 0");
    }
    const double moment = levy_moment(theta.jumps);
    if (moment > bounds.c_bound) {
        std::ostringstream msg;
        msg << "levy moment " << moment << " > " << bounds.c_bound;
        report.violations.push_back(msg.str());
    }
    return report;
}

const std::vector<ParamPoint>& GammaMap::at(int step, long cell) const {
    switch (mode) {
        case GammaMode::Constant:
            return sets.at(0);
        case GammaMode::TimeDependent:
            return sets.at(set_for_step.at(step));
        case GammaMode::StateDependent:
            return sets.at(set_for_cell.at(cell));
    }
    return sets.at(0);
}

int GammaMap::max_candidates() const {
    std::size_t m = 0;
    for (const auto& set : sets) m = std::max(m, set.size());
    return static_cast<int>(m);
}

void GammaMap::validate(const TimeGrid& time, const SpaceGrid& space, const Bounds& bounds) const {
    std::vector<std::string> problems;
    if (sets.empty()) problems.push_back("gamma: no candidate sets");
    for (std::size_t s = 0; s < sets.size(); ++s) {
        if (sets[s].empty())
            problems.push_back("gamma: set " + std::to_string(s) + " is empty");
        for (std::size_t k = 0; k < sets[s].size(); ++k) {
            if (sets[s][k].dim() != space.n) {
                problems.push_back("gamma: set " + std::to_string(s) + " candidate " +
                                   std::to_string(k) + " has wrong dimension");
                continue;
            }
            const auto report = validate_param(sets[s][k], bounds);
            if (!report.ok())
                problems.push_back("gamma: set " + std::to_string(s) + " candidate " +
                                   std::to_string(k) + ": " + report.str());
        }
    }
    auto check_index_map = [&](const std::vector<int>& map, long expected, const char* what) {
        if (static_cast<long>(map.size()) != expected)
            problems.push_back(std::string("gamma: ") + what + " must have " +
                               std::to_string(expected) + " entries");
        for (int s : map)
            if (s < 0 || s >= static_cast<int>(sets.size()))
                problems.push_back(std::string("gamma: ") + what + " references set " +
                                   std::to_string(s) + " out of range");
    };
    switch (mode) {
        case GammaMode::Constant:
            if (sets.size() != 1) problems.push_back("gamma: constant mode needs exactly one set");
            break;
        case GammaMode::TimeDependent:
            check_index_map(set_for_step, time.N, "set_for_step");
            break;
        case GammaMode::StateDependent:
            check_index_map(set_for_cell, space.n_cells(), "set_for_cell");
            break;
    }
    if (!problems.empty()) {
        std::string all;
        for (std::size_t i = 0; i < problems.size(); ++i) {
            if (i) all += "; ";
            all += problems[i];
        }
        throw Error(all);
    }
}

bool GammaMap::operator==(const GammaMap& o) const {
    return mode == o.mode && sets == o.sets && set_for_step == o.set_for_step &&
           set_for_cell == o.set_for_cell;
}

int Control::interval_of(int step) const {
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
        if (step >= nodes[i] && step < nodes[i + 1]) return static_cast<int>(i);
    throw Error("control: step " + std::to_string(step) + " outside the subdivision");
}

int Control::selected(int step, long cell) const {
    const auto& sel = selectors[interval_of(step)];
    return sel.size() == 1 ? sel[0] : sel[cell];
}

void Control::validate(const TimeGrid& time, const SpaceGrid& space, const GammaMap& gamma) const {
    if (nodes.size() < 2) throw Error("control: subdivision needs at least two nodes");
    if (nodes.front() != 0 || nodes.back() != time.N)
        throw Error("control: subdivision must run from 0 to N");
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
        if (!(nodes[i] < nodes[i + 1])) throw Error("control: subdivision must strictly increase");
    if (selectors.size() + 1 != nodes.size())
        throw Error("control: need one selector per interval");
    const long cells = space.n_cells();
    for (std::size_t i = 0; i < selectors.size(); ++i) {
        const auto& sel = selectors[i];
        if (sel.size() != 1 && static_cast<long>(sel.size()) != cells)
            throw Error("control: selector " + std::to_string(i) +
                        " must have 1 or n_cells entries");
        for (int step = nodes[i]; step < nodes[i + 1]; ++step) {
            for (long c = 0; c < cells; ++c) {
                const int k = sel.size() == 1 ? sel[0] : sel[c];
                const auto& set = gamma.at(step, c);
                if (k < 0 || k >= static_cast<int>(set.size()))
                    throw Error("control: selector " + std::to_string(i) + " picks candidate " +
                                std::to_string(k) + " out of range at step " +
                                std::to_string(step) + ", cell " + std::to_string(c));
                if (sel.size() == 1 && gamma.mode != GammaMode::StateDependent) break;
            }
            if (gamma.mode != GammaMode::TimeDependent) break;
        }
    }
}

double PathSample::penalty_between(int from, int to) const {
    double s = 0.0;
    for (int k = from; k < to; ++k) s += penalty_increments[k];
    return s;
}

}  // namespace nldp
