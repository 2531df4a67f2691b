#pragma once

#include <cmath>
#include <functional>

#include "rtg/autodiff.hpp"

namespace rtgtest {

inline double rel_err(double got, double want, double floor_ = 1e-8) {
    return std::fabs(got - want) / (std::fabs(want) + floor_);
}

/// Central finite difference of a scalar function with respect to one
/// storage slot, restoring the slot afterwards.
inline double central_diff(const std::function<double()>& f, double* x, double h = 1e-6) {
    const double x0 = *x;
    *x = x0 + h;
    const double fp = f();
    *x = x0 - h;
    const double fm = f();
    *x = x0;
    return (fp - fm) / (2.0 * h);
}

/// Autodiff gradient of `build` (fresh tape per call) with respect to
/// every entry of `input`, compared against central differences.
/// Returns the worst relative error.
inline double max_grad_rel_err(rtg::Array& input,
                               const std::function<rtg::Var(rtg::Tape&, rtg::Var)>& build,
                               double h = 1e-6) {
    using namespace rtg;
    Tape tape;
    Var leaf = tape.leaf(input, true);
    Var out = build(tape, leaf);
    tape.backward(out);
    Array grad = leaf.adjoint();

    auto eval = [&]() {
        Tape t2;
        Var l2 = t2.leaf(input, false);
        return build(t2, l2).value().scalar_value();
    };

    double worst = 0.0;
    for (long i = 0; i < input.size(); ++i) {
        const double fd = central_diff(eval, &input[i], h);
        worst = std::max(worst, rel_err(grad[i], fd));
    }
    return worst;
}

}  // namespace rtgtest
