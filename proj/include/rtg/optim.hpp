#pragma once

#include "rtg/autodiff.hpp"

namespace rtg {

/// Adam with the usual bias correction. Parameters holding a
/// non-finite gradient are skipped for the step (and the flag below is
/// raised) rather than poisoning the trajectory.
class Adam {
public:
    struct Options {
        double lr = 1e-3;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double eps = 1e-8;
    };

    Adam() = default;
    explicit Adam(Options opt) : opt_(opt) {}

    /// Updates every parameter in place from its accumulated gradient,
    /// then zeroes the gradients.
    void step(ParamStore& params);

    long step_count() const { return t_; }
    void set_step_count(long t) { t_ = t; }
    bool saw_nonfinite_gradient() const { return saw_nonfinite_; }
    void clear_warning() { saw_nonfinite_ = false; }
    const Options& options() const { return opt_; }
    void set_lr(double lr) { opt_.lr = lr; }

private:
    Options opt_{};
    long t_ = 0;
    bool saw_nonfinite_ = false;
};

}  // namespace rtg
