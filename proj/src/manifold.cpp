#include "rtg/manifold.hpp"

#include <cmath>

namespace rtg::geo {

namespace {

constexpr double kZeroNormSq = 1e-28;   // below this a tangent counts as zero
constexpr double kAcosSnap = 1e-13;     // snap arccos_k arguments onto the branch point
constexpr double kAcosClampPos = 1e-12; // clamp range guard for kappa > 0

Var sqrt_abs_kappa(const Var& kappa) { return vsqrt(vabs(kappa)); }

// theta / sin_k(theta), with the 0/0 limit resolved to 1 when theta is
// the snapped constant zero.
Var ratio_theta_over_sink(const Var& theta, double sign) {
    if (theta.value().scalar_value() == 0.0) return theta.tape()->constant(1.0);
    return theta / sin_k(theta, sign);
}

}  // namespace

bool is_flat(double kappa) { return std::fabs(kappa) < kKappaEps; }

double kappa_value(const Var& kappa) { return kappa.value().scalar_value(); }

double kappa_sign(const Var& kappa) { return kappa_value(kappa) < 0.0 ? -1.0 : 1.0; }

bool Point::flat() const { return is_flat(kappa_value(kappa)); }

Var inner(const Var& x, const Var& y, double sign) {
    if (x.size() != y.size())
        throw ShapeError("inner: dimension mismatch " + x.value().shape_str() + " vs " +
                         y.value().shape_str());
    Var d = dot(x, y);
    if (sign >= 0.0) return d;
    Var t = slice(x, 0, 1) * slice(y, 0, 1);
    return d - 2.0 * t;
}

double inner_raw(const double* x, const double* y, long n, double sign) {
    double s = 0.0;
    for (long i = 0; i < n; ++i) s += x[i] * y[i];
    if (sign < 0.0) s -= 2.0 * x[0] * y[0];
    return s;
}

Var cos_k(const Var& x, double sign) {
    if (sign == 0.0) throw DomainError("cos_k: flat curvature must take the Euclidean branch");
    return sign < 0.0 ? vcosh(x) : vcos(x);
}

Var sin_k(const Var& x, double sign) {
    if (sign == 0.0) throw DomainError("sin_k: flat curvature must take the Euclidean branch");
    return sign < 0.0 ? vsinh(x) : vsin(x);
}

Var acos_k(const Var& x, double sign) {
    if (sign == 0.0) throw DomainError("acos_k: flat curvature must take the Euclidean branch");
    const double v = x.value().scalar_value();
    if (sign < 0.0) {
        // acosh: domain [1, inf); snap the region around 1 to exactly 0
        // (the derivative blows up at the branch point anyway).
        if (v <= 1.0 + kAcosSnap) return x.tape()->constant(0.0);
        return vacosh(x);
    }
    if (v >= 1.0 - kAcosSnap) return x.tape()->constant(0.0);
    if (v <= -1.0 + kAcosClampPos)
        return x.tape()->constant(std::acos(-1.0 + kAcosClampPos));
    return vacos(x);
}

Point origin(const Var& kappa, long d) {
    Tape* t = kappa.tape();
    if (is_flat(kappa_value(kappa))) return Point{t->constant(Array({d})), kappa};
    Var first = 1.0 / sqrt_abs_kappa(kappa);
    return Point{concat(first, t->constant(Array({d}))), kappa};
}

Point make_point(Var coords, Var kappa) {
    if (coords.value().ndim() != 1)
        throw ShapeError("point coordinates must be a vector, got " + coords.value().shape_str());
    return Point{coords, kappa};
}

double constraint_residual(const Point& x) {
    const double k = kappa_value(x.kappa);
    if (is_flat(k)) return 0.0;
    const double ip =
        inner_raw(x.coords.value().data(), x.coords.value().data(), x.coords.size(),
                  k < 0 ? -1.0 : 1.0);
    return std::fabs(ip - 1.0 / k);
}

Point renormalize(const Point& x) {
    if (x.flat()) return x;
    const double sign = kappa_sign(x.kappa);
    Var ip = inner(x.coords, x.coords, sign);
    Var scale = 1.0 / vsqrt(vabs(x.kappa) * vabs(ip));
    return Point{x.coords * scale, x.kappa};
}

Var spatial(const Var& ambient) { return slice(ambient, 1, ambient.size() - 1); }

Var lift_spatial(const Var& u) { return concat(u.tape()->constant(Array({1})), u); }

Point exp0(const Var& u, const Var& kappa) {
    if (is_flat(kappa_value(kappa))) return Point{u, kappa};
    const double sign = kappa_sign(kappa);
    Var nsq = dot(u, u);
    if (nsq.value().scalar_value() < kZeroNormSq) return origin(kappa, u.size());
    Var sa = sqrt_abs_kappa(kappa);
    Var theta = sa * vsqrt(nsq);
    double clamp = 1.0;
    if (sign > 0.0) {
        const double tv = theta.value().scalar_value();
        const double lim = M_PI - 1e-6;
        if (tv > lim) clamp = lim / tv;
    }
    Var theta_c = clamp == 1.0 ? theta : theta * clamp;
    Var first = cos_k(theta_c, sign) / sa;
    Var sp = u * (sin_k(theta_c, sign) / theta);
    return renormalize(Point{concat(first, sp), kappa});
}

Var log0(const Point& x) {
    if (x.flat()) return x.coords;
    const double sign = kappa_sign(x.kappa);
    Var sa = sqrt_abs_kappa(x.kappa);
    Var u = sa * slice(x.coords, 0, 1);  // kappa <x, O>_kappa
    Var theta = acos_k(u, sign);
    return spatial(x.coords) * ratio_theta_over_sink(theta, sign);
}

namespace {

void check_tangent(const Point& x, const Var& v, double sign) {
    const double ip = inner_raw(x.coords.value().data(), v.value().data(), v.size(), sign);
    double vn = 0.0;
    for (long i = 0; i < v.size(); ++i) vn += v.value()[i] * v.value()[i];
    const double tol = kTangentTol * (1.0 + std::sqrt(std::fabs(vn)));
    if (std::fabs(ip) > tol)
        throw DomainError("exp_map: vector is not tangent at the base point (<x,v> = " +
                          std::to_string(ip) + ")");
}

}  // namespace

Point exp_map(const Point& x, const Var& v) {
    if (x.coords.size() != v.size())
        throw ShapeError("exp_map: dimension mismatch " + x.coords.value().shape_str() + " vs " +
                         v.value().shape_str());
    if (x.flat()) return Point{x.coords + v, x.kappa};
    const double sign = kappa_sign(x.kappa);
    check_tangent(x, v, sign);
    Var nsq = inner(v, v, sign);
    if (nsq.value().scalar_value() < kZeroNormSq) return x;
    Var sa = sqrt_abs_kappa(x.kappa);
    Var theta = sa * vsqrt(nsq);
    double clamp = 1.0;
    if (sign > 0.0) {
        const double tv = theta.value().scalar_value();
        const double lim = M_PI - 1e-6;
        if (tv > lim) clamp = lim / tv;
    }
    Var theta_c = clamp == 1.0 ? theta : theta * clamp;
    Var out = x.coords * cos_k(theta_c, sign) + v * (sin_k(theta_c, sign) / theta);
    return renormalize(Point{out, x.kappa});
}

Var log_map(const Point& x, const Point& y) {
    if (x.coords.size() != y.coords.size())
        throw ShapeError("log_map: dimension mismatch " + x.coords.value().shape_str() + " vs " +
                         y.coords.value().shape_str());
    if (x.flat()) return y.coords - x.coords;
    const double sign = kappa_sign(x.kappa);
    Var u = x.kappa * inner(x.coords, y.coords, sign);
    if (sign > 0.0 && u.value().scalar_value() <= -1.0 + kAcosClampPos)
        throw DomainError("log_map: logarithm undefined for an antipodal pair");
    Var theta = acos_k(u, sign);
    if (theta.value().scalar_value() == 0.0)
        return x.coords.tape()->constant(Array({x.coords.size()}));
    Var w = y.coords - u * x.coords;
    return w * ratio_theta_over_sink(theta, sign);
}

Var distance(const Point& x, const Point& y) {
    if (x.coords.size() != y.coords.size())
        throw ShapeError("distance: dimension mismatch " + x.coords.value().shape_str() + " vs " +
                         y.coords.value().shape_str());
    if (x.flat()) {
        Var diff = x.coords - y.coords;
        Var dsq = dot(diff, diff);
        if (dsq.value().scalar_value() < kZeroNormSq) return x.coords.tape()->constant(0.0);
        return vsqrt(dsq);
    }
    const double sign = kappa_sign(x.kappa);
    Var u = x.kappa * inner(x.coords, y.coords, sign);
    Var theta = acos_k(u, sign);
    return theta / sqrt_abs_kappa(x.kappa);
}

double distance_raw(const Array& x, const Array& y, double kappa) {
    if (is_flat(kappa)) {
        double s = 0.0;
        for (long i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
        return std::sqrt(s);
    }
    const double sign = kappa < 0 ? -1.0 : 1.0;
    const double u = kappa * inner_raw(x.data(), y.data(), x.size(), sign);
    double theta = 0.0;
    if (sign < 0.0) {
        theta = u <= 1.0 + kAcosSnap ? 0.0 : std::acosh(u);
    } else if (u >= 1.0 - kAcosSnap) {
        theta = 0.0;
    } else {
        theta = std::acos(std::max(u, -1.0 + kAcosClampPos));
    }
    return theta / std::sqrt(std::fabs(kappa));
}

Point scalar_mul(const Var& r, const Point& x) { return exp0(r * log0(x), x.kappa); }

Point matrix_mul(const Var& w, const Point& x) { return exp0(matvec(w, log0(x)), x.kappa); }

Point apply_fn(const std::function<Var(const Var&)>& f, const Point& x) {
    return exp0(f(log0(x)), x.kappa);
}

Var stereo(const Point& x) {
    if (x.flat()) throw DomainError("stereo: undefined for flat curvature");
    Var denom = 1.0 + sqrt_abs_kappa(x.kappa) * slice(x.coords, 0, 1);
    if (std::fabs(denom.value().scalar_value()) <= 1e-12)
        throw DomainError("stereo: point is at the antipode of the projection pole");
    return spatial(x.coords) / denom;
}

Point stereo_inv(const Var& gp, const Var& kappa) {
    if (is_flat(kappa_value(kappa))) throw DomainError("stereo_inv: undefined for flat curvature");
    Var nsq = dot(gp, gp);
    Var denom = 1.0 + kappa * nsq;
    if (std::fabs(denom.value().scalar_value()) <= 1e-12)
        throw DomainError("stereo_inv: conformal factor is singular");
    Var lam = 2.0 / denom;
    Var first = (lam - 1.0) / sqrt_abs_kappa(kappa);
    return renormalize(Point{concat(first, lam * gp), kappa});
}

Var mobius_add(const Var& x, const Var& y, const Var& kappa) {
    Var xy = dot(x, y);
    Var nx = dot(x, x);
    Var ny = dot(y, y);
    Var a = 1.0 - 2.0 * (kappa * xy) - kappa * ny;
    Var b = 1.0 + kappa * nx;
    Var den = 1.0 - 2.0 * (kappa * xy) + (kappa * kappa) * (nx * ny);
    if (std::fabs(den.value().scalar_value()) <= 1e-12)
        throw DomainError("mobius_add: denominator vanished");
    return (a * x + b * y) / den;
}

Point gyro_add(const Point& x, const Point& y) {
    if (x.flat()) return Point{x.coords + y.coords, x.kappa};
    Var sum = mobius_add(stereo(x), stereo(y), x.kappa);
    return stereo_inv(sum, x.kappa);
}

Point riemannian_proj(const Point& x, const Var& kappa_to) {
    return exp0(log0(x), kappa_to);
}

}  // namespace rtg::geo
