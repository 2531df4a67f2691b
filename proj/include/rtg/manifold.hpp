#pragma once

#include <functional>

#include "rtg/autodiff.hpp"

namespace rtg::geo {

// Curvature handling: |kappa| below kKappaEps selects the Euclidean
// closed forms (the curved formulas divide by sqrt(|kappa|)), and the
// gradient with respect to kappa is zero inside that window.
constexpr double kKappaEps = 1e-6;
constexpr double kKappaMax = 10.0;
constexpr double kTangentTol = 1e-8;

/// A point of the curvature-kappa space. Curved points live in the
/// ambient model (hyperboloid for kappa<0, hypersphere for kappa>0)
/// with d+1 coordinates; flat points are plain d-vectors.
struct Point {
    Var coords;
    Var kappa;

    bool flat() const;
    long ambient_dim() const { return coords.size(); }
    /// Spatial dimension d of the underlying manifold.
    long dim() const { return flat() ? coords.size() : coords.size() - 1; }
};

/// Tangent vector in ambient coordinates, attached to its base point.
struct TangentAt {
    Var coords;
    Point base;
};

bool is_flat(double kappa);
double kappa_value(const Var& kappa);
double kappa_sign(const Var& kappa);

/// <x,y> under the metric selected by the curvature sign: Minkowski
/// diag(-1,1,...,1) for kappa<0, standard inner product otherwise.
Var inner(const Var& x, const Var& y, double sign);
double inner_raw(const double* x, const double* y, long n, double sign);

/// Curvature-sign trigonometry: cosh/sinh/acosh for kappa<0 and
/// cos/sin/acos for kappa>0. Rejects the flat case: callers must take
/// the Euclidean branch before reaching these.
Var cos_k(const Var& x, double sign);
Var sin_k(const Var& x, double sign);
Var acos_k(const Var& x, double sign);  // argument clamped into the valid domain

Point origin(const Var& kappa, long d);
Point make_point(Var coords, Var kappa);

/// |<x,x>_kappa - 1/kappa| (0 for flat points).
double constraint_residual(const Point& x);
/// Rescale onto the constraint set; identity for flat points.
Point renormalize(const Point& x);

/// Drop / restore the time coordinate of an ambient vector.
Var spatial(const Var& ambient);
Var lift_spatial(const Var& u);

/// Exponential map at the origin of a spatial tangent vector (the
/// tangent space at the origin is {0} x R^d). Flat: identity.
Point exp0(const Var& u_spatial, const Var& kappa);
/// Logarithm at the origin, returned in spatial coordinates.
Var log0(const Point& x);

/// General-base exponential map; v is an ambient tangent at x (its
/// tangency is checked within kTangentTol). For kappa>0 the tangent
/// norm is clamped below the injectivity radius pi/sqrt(kappa).
Point exp_map(const Point& x, const Var& v);
/// General-base logarithm; returns the zero vector when x == y within
/// tolerance and throws DomainError on an antipodal pair (kappa>0).
Var log_map(const Point& x, const Point& y);

Var distance(const Point& x, const Point& y);
double distance_raw(const Array& x, const Array& y, double kappa);

Point scalar_mul(const Var& r, const Point& x);
Point matrix_mul(const Var& w, const Point& x);
Point apply_fn(const std::function<Var(const Var&)>& f, const Point& x);

/// Stereographic projection into the gyrovector (ball/plane) model and
/// back. Curved points only.
Var stereo(const Point& x);
Point stereo_inv(const Var& gyro_coords, const Var& kappa);

/// Mobius addition in gyrovector coordinates at curvature kappa.
Var mobius_add(const Var& x, const Var& y, const Var& kappa);

/// Addition of manifold points, bridged through the stereographic
/// model; plain vector addition for the flat case.
Point gyro_add(const Point& x, const Point& y);

/// Move a point from its own curvature to kappa_to through the common
/// tangent space at the origin.
Point riemannian_proj(const Point& x, const Var& kappa_to);

}  // namespace rtg::geo
