#include "nonlocal_dp/generators.hpp"

#include <cmath>
#include <sstream>

namespace nldp {

DerivativeBundle DerivativeBundle::make(double value, Vec grad, Mat hess,
                                        std::function<double(const Vec&)> probe) {
    DerivativeBundle b;
    b.value = value;
    b.grad = std::move(grad);
    b.hess = 0.5 * (hess + hess.transpose());
    b.probe = std::move(probe);
    return b;
}

double generator_apply(const ParamPoint& theta, const DerivativeBundle& bundle) {
    if (theta.dim() != bundle.grad.size() || theta.a.rows() != bundle.hess.rows())
        throw Error("generator_apply: dimension mismatch");
    const double second = 0.5 * (theta.a.array() * bundle.hess.array()).sum();
    return second + theta.b.dot(bundle.grad);
}

double tilde_k(const DerivativeBundle& bundle, const Vec& x, const Vec& y) {
    const double shifted = bundle.probe(x + y);
    return shifted - bundle.value - y.dot(bundle.grad) / (1.0 + y.squaredNorm());
}

double nonlocal_apply(std::span<const JumpAtom> jumps, const DerivativeBundle& bundle,
                      const Vec& x) {
    double total = 0.0;
    for (const auto& atom : jumps) {
        const double term = tilde_k(bundle, x, atom.y);
        if (!std::isfinite(term)) {
            std::ostringstream msg;
            msg << "nonlocal_apply: probe failed at shift [";
            for (long i = 0; i < atom.y.size(); ++i) {
                if (i) msg << ", ";
                msg << atom.y[i];
            }
            msg << "]";
            throw Error(msg.str());
        }
        total += atom.lambda * term;
    }
    return total;
}

HamiltonianResult hamiltonian(double t, const Vec& x, const DerivativeBundle& bundle,
                              std::span<const ParamPoint> candidates, const Penalty& g,
                              const SpaceGrid& grid) {
    if (candidates.empty()) throw Error("hamiltonian: empty candidate set");
    HamiltonianResult best;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        const auto& theta = candidates[k];
        const double value = generator_apply(theta, bundle) + nonlocal_apply(theta.jumps, bundle, x) -
                             g.eval(t, x, theta, static_cast<int>(k), grid);
        if (k == 0 || value > best.value) {
            best.value = value;
            best.argmax = static_cast<int>(k);
        }
    }
    return best;
}

namespace {

// C^2 window w(s) = (1 - s^2)^3 on |s| < 1, with w, w', w'' all vanishing at
// the support edge.
double window(double s) {
    if (std::abs(s) >= 1.0) return 0.0;
    const double u = 1.0 - s * s;
    return u * u * u;
}

double window_d1(double s) {
    if (std::abs(s) >= 1.0) return 0.0;
    const double u = 1.0 - s * s;
    return -6.0 * s * u * u;
}

double window_d2(double s) {
    if (std::abs(s) >= 1.0) return 0.0;
    const double u = 1.0 - s * s;
    return -6.0 * u * u + 24.0 * s * s * u;
}

}  // namespace

WindowedTestFunction::WindowedTestFunction(int degree, int axis, Vec center, double radius)
    : degree_(degree), axis_(axis), center_(std::move(center)), radius_(radius) {
    if (degree_ < 0 || degree_ > 2) throw Error("test function degree must be 0, 1 or 2");
    if (axis_ < 0 || axis_ >= center_.size()) throw Error("test function axis out of range");
    if (!(radius_ > 0.0)) throw Error("test function radius must be positive");
}

double WindowedTestFunction::value(const Vec& x) const {
    double w = 1.0;
    for (long i = 0; i < x.size(); ++i) w *= window((x[i] - center_[i]) / radius_);
    const double m = x[axis_] - center_[axis_];
    if (degree_ == 0) return w;
    if (degree_ == 1) return m * w;
    return m * m * w;
}

Vec WindowedTestFunction::gradient(const Vec& x) const {
    const long n = x.size();
    Vec w(n), w1(n);
    double W = 1.0;
    for (long i = 0; i < n; ++i) {
        const double s = (x[i] - center_[i]) / radius_;
        w[i] = window(s);
        w1[i] = window_d1(s) / radius_;
        W *= w[i];
    }
    const double m = x[axis_] - center_[axis_];
    const double mono = degree_ == 0 ? 1.0 : (degree_ == 1 ? m : m * m);
    const double mono_d = degree_ == 0 ? 0.0 : (degree_ == 1 ? 1.0 : 2.0 * m);
    Vec grad(n);
    for (long i = 0; i < n; ++i) {
        // d/dx_i of prod_j w_j: replace w_i by w_i'
        double dW = w1[i];
        for (long j = 0; j < n; ++j)
            if (j != i) dW *= w[j];
        grad[i] = mono * dW;
        if (i == axis_) grad[i] += mono_d * W;
    }
    return grad;
}

Mat WindowedTestFunction::hessian(const Vec& x) const {
    const long n = x.size();
    Vec w(n), w1(n), w2(n);
    for (long i = 0; i < n; ++i) {
        const double s = (x[i] - center_[i]) / radius_;
        w[i] = window(s);
        w1[i] = window_d1(s) / radius_;
        w2[i] = window_d2(s) / (radius_ * radius_);
    }
    const double m = x[axis_] - center_[axis_];
    const double mono = degree_ == 0 ? 1.0 : (degree_ == 1 ? m : m * m);
    const double mono_d = degree_ == 0 ? 0.0 : (degree_ == 1 ? 1.0 : 2.0 * m);
    const double mono_dd = degree_ == 2 ? 2.0 : 0.0;

    auto window_product = [&](long skip1, long skip2) {
        double p = 1.0;
        for (long j = 0; j < n; ++j)
            if (j != skip1 && j != skip2) p *= w[j];
        return p;
    };

    Mat hess(n, n);
    for (long i = 0; i < n; ++i) {
        for (long j = 0; j <= i; ++j) {
            double v;
            if (i == j) {
                double term = mono * w2[i] * window_product(i, i);
                if (i == axis_) {
                    term += 2.0 * mono_d * w1[i] * window_product(i, i);
                    term += mono_dd * w[i] * window_product(i, i);
                }
                v = term;
            } else {
                double term = mono * w1[i] * w1[j] * window_product(i, j);
                if (i == axis_) term += mono_d * w[i] * w1[j] * window_product(i, j);
                if (j == axis_) term += mono_d * w1[i] * w[j] * window_product(i, j);
                v = term;
            }
            hess(i, j) = v;
            hess(j, i) = v;
        }
    }
    return hess;
}

DerivativeBundle WindowedTestFunction::bundle_at(const Vec& x) const {
    return DerivativeBundle::make(value(x), gradient(x), hessian(x),
                                  [*this](const Vec& p) { return value(p); });
}

}  // namespace nldp
