#pragma once

#include "rtg/manifold.hpp"

namespace rtg {

/// Trigonometric time features with learnable frequencies, plus the
/// lift onto the curvature-kappa manifold. The flat encoding of a time
/// point is unit-norm by construction; the lifted encoding sits on the
/// manifold and induces a kernel that depends on times only through
/// their difference.
class TimeEncoder {
public:
    /// `omegas` holds the frequency ladder (one entry per cos/sin
    /// pair); `time_scale` divides every incoming time so the ladder
    /// sees well-conditioned arguments. The scale is frozen at
    /// construction (typically the dataset's mean inter-event gap).
    TimeEncoder(Param* omegas, double time_scale);

    long half_dim() const { return half_dim_; }
    long out_dim() const { return 2 * half_dim_; }
    double time_scale() const { return time_scale_; }

    /// phi0(t): unit vector [cos(w1 t), sin(w1 t), ...] / sqrt(half_dim).
    Var encode_euclidean(Tape& tape, double t) const;

    /// phi_kappa(t) on the curvature-kappa manifold; the flat branch
    /// returns phi0 directly.
    geo::Point encode_riemannian(Tape& tape, double t, const Var& kappa) const;

    /// Induced kernel <phi_kappa(ti), phi_kappa(tj)>_kappa.
    Var kernel(Tape& tape, double ti, double tj, const Var& kappa) const;

    /// Geometric frequency ladder spanning [1/t_span, 1e4/t_span].
    static Array initial_frequencies(long half_dim, double t_span);

private:
    Param* omegas_;
    long half_dim_;
    double time_scale_;
};

}  // namespace rtg
