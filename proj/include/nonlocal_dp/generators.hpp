#ifndef NONLOCAL_DP_GENERATORS_HPP
#define NONLOCAL_DP_GENERATORS_HPP

#include "nonlocal_dp/penalty.hpp"
#include "nonlocal_dp/types.hpp"

#include <functional>
#include <span>

namespace nldp {

/// Pointwise derivative data of a test function, plus a probe returning its
/// value at arbitrary shifted points for the nonlocal operator.
struct DerivativeBundle {
    double value = 0.0;
    Vec grad;
    Mat hess;  // stored symmetrized
    std::function<double(const Vec&)> probe;

    static DerivativeBundle make(double value, Vec grad, Mat hess,
                                 std::function<double(const Vec&)> probe);
};

/// Local generator: 0.5 * tr(a H) + b . grad. Jump atoms of theta are ignored.
double generator_apply(const ParamPoint& theta, const DerivativeBundle& bundle);

/// Compensated difference phi(x+y) - phi(x) - y.grad(x) / (1 + |y|^2).
double tilde_k(const DerivativeBundle& bundle, const Vec& x, const Vec& y);

/// Sum_k lambda_k * tilde_k(bundle, x, y_k). Throws Error naming the shift if
/// the probe returns a non-finite value.
double nonlocal_apply(std::span<const JumpAtom> jumps, const DerivativeBundle& bundle,
                      const Vec& x);

struct HamiltonianResult {
    double value = 0.0;
    int argmax = 0;  // lowest index attaining the max
};

/// sup over the candidate set of local + nonlocal - g. Throws Error on an
/// empty set.
HamiltonianResult hamiltonian(double t, const Vec& x, const DerivativeBundle& bundle,
                              std::span<const ParamPoint> candidates, const Penalty& g,
                              const SpaceGrid& grid);

/// Smooth compactly supported test function: a monomial in one coordinate
/// times a C^2 window prod_i (1 - s_i^2)^3, s_i = (x_i - center_i)/radius.
/// degree 0 is the bare window; degree 1 and 2 multiply by (x_axis - c_axis)
/// and its square. All derivative data is analytic.
class WindowedTestFunction {
public:
    WindowedTestFunction(int degree, int axis, Vec center, double radius);

    double value(const Vec& x) const;
    Vec gradient(const Vec& x) const;
    Mat hessian(const Vec& x) const;
    DerivativeBundle bundle_at(const Vec& x) const;

    int degree() const { return degree_; }
    double radius() const { return radius_; }

private:
    int degree_;
    int axis_;
    Vec center_;
    double radius_;
};

}  // namespace nldp

#endif
