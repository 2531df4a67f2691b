#include "rtg/timeenc.hpp"

#include <cmath>

namespace rtg {

TimeEncoder::TimeEncoder(Param* omegas, double time_scale)
    : omegas_(omegas), half_dim_(omegas->value.size()), time_scale_(time_scale) {
    if (time_scale_ <= 0.0) throw DomainError("time encoder: scale must be positive");
}

Var TimeEncoder::encode_euclidean(Tape& tape, double t) const {
    if (!std::isfinite(t)) throw DomainError("time encoder: non-finite time point");
    Var w = tape.param(*omegas_);
    Var phase = w * (t / time_scale_);
    const double amp = std::sqrt(1.0 / static_cast<double>(half_dim_));
    return interleave2(vcos(phase), vsin(phase)) * amp;
}

geo::Point TimeEncoder::encode_riemannian(Tape& tape, double t, const Var& kappa) const {
    Var phi = encode_euclidean(tape, t);
    if (geo::is_flat(geo::kappa_value(kappa))) return geo::make_point(phi, kappa);
    // ||phi0|| == 1, so the lift has the closed form
    // [cos_k(sqrt|k|)/sqrt|k|, sin_k(sqrt|k|)/sqrt|k| * phi0].
    const double sign = geo::kappa_sign(kappa);
    Var sa = vsqrt(vabs(kappa));
    Var first = geo::cos_k(sa, sign) / sa;
    Var sp = phi * (geo::sin_k(sa, sign) / sa);
    return geo::renormalize(geo::make_point(concat(first, sp), kappa));
}

Var TimeEncoder::kernel(Tape& tape, double ti, double tj, const Var& kappa) const {
    geo::Point a = encode_riemannian(tape, ti, kappa);
    geo::Point b = encode_riemannian(tape, tj, kappa);
    if (a.flat()) return dot(a.coords, b.coords);
    return geo::inner(a.coords, b.coords, geo::kappa_sign(kappa));
}

Array TimeEncoder::initial_frequencies(long half_dim, double t_span) {
    if (half_dim < 1) throw DomainError("time encoder: need at least one frequency");
    const double span = t_span > 0 ? t_span : 1.0;
    const double w_min = 1.0 / span;
    const double w_max = 1e4 / span;
    Array w({half_dim});
    if (half_dim == 1) {
        w[0] = w_min;
        return w;
    }
    const double ratio = std::pow(w_max / w_min, 1.0 / static_cast<double>(half_dim - 1));
    double cur = w_min;
    for (long i = 0; i < half_dim; ++i) {
        w[i] = cur;
        cur *= ratio;
    }
    return w;
}

}  // namespace rtg
