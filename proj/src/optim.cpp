#include "rtg/optim.hpp"

#include <cmath>
#include <iostream>

namespace rtg {

void Adam::step(ParamStore& params) {
    ++t_;
    const double bc1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
    for (Param& p : params.all()) {
        if (!p.grad.all_finite()) {
            saw_nonfinite_ = true;
            std::cerr << "warning: non-finite gradient for '" << p.name << "', step skipped\n";
            for (long i = 0; i < p.grad.size(); ++i) p.grad[i] = 0.0;
            continue;
        }
        for (long i = 0; i < p.value.size(); ++i) {
            const double g = p.grad[i];
            p.adam_m[i] = opt_.beta1 * p.adam_m[i] + (1.0 - opt_.beta1) * g;
            p.adam_v[i] = opt_.beta2 * p.adam_v[i] + (1.0 - opt_.beta2) * g * g;
            const double mhat = p.adam_m[i] / bc1;
            const double vhat = p.adam_v[i] / bc2;
            p.value[i] -= opt_.lr * mhat / (std::sqrt(vhat) + opt_.eps);
            p.grad[i] = 0.0;
        }
    }
}

}  // namespace rtg
