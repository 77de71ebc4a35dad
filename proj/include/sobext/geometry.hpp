#pragma once

#include "sobext/errors.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace sobext {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

constexpr double kPi = 3.14159265358979323846;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Warping function f of a metric dr^2 + f(r)^2 dtheta^2.
//
// Pole-type profiles (f(0) = 0, f'(0) = 1, f odd) close up smoothly at r = 0 and are
// used in Cartesian geodesic-normal coordinates. Band-type profiles (f > 0 on the
// whole chart) use (r, theta) directly with theta unbounded.
class WarpProfile {
public:
    enum class Kind { sn, odd_poly, poly_cosh_mix };

    // f = sn_kappa(r): sin, r, or sinh depending on the sign of kappa.
    static WarpProfile sn(double kappa);
    // f(r) = r + c[0] r^3 + c[1] r^5 + ...
    static WarpProfile odd_poly(std::vector<double> coeffs);
    // f(r) = c[0] cosh r + c[1] sinh r + sum_{k>=2} c[k] r^k
    static WarpProfile poly_cosh_mix(std::vector<double> coeffs);

    Kind kind() const { return kind_; }
    const std::vector<double>& coeffs() const { return coeffs_; }
    double kappa() const { return kappa_; }
    bool pole_type() const { return kind_ != Kind::poly_cosh_mix; }

    double f(double r) const;
    double df(double r) const;
    double d2f(double r) const;

    // Pole-type only, stable as r -> 0.
    double m(double r) const;          // (f/r - 1) / r^2
    double dm_over_r(double r) const;  // m'(r) / r
    double d2f_over_f(double r) const; // f''/f

    // Largest radius of the normal chart (first positive zero of f for pole type).
    double chart_radius() const;

private:
    Kind kind_ = Kind::sn;
    double kappa_ = 0.0;
    std::vector<double> coeffs_;
};

class ModelSurface {
public:
    enum class Kind { constant_curvature, warped_product };

    static ModelSurface constant_curvature(double kappa, int dimension = 2);
    static ModelSurface warped(WarpProfile profile, int dimension = 2);

    Kind kind() const { return kind_; }
    int dimension() const { return dimension_; }
    double kappa() const { return profile_.kappa(); }
    const WarpProfile& profile() const { return profile_; }

    // True when points are Cartesian geodesic-normal coordinates about the pole;
    // false for band-type warped surfaces where points are (r, theta).
    bool normal_chart() const { return profile_.pole_type(); }
    bool in_chart(const Vec2& p) const;

    Mat2 metric_at(const Vec2& p) const;
    // Components (g_rr, g_thetatheta) of the metric in polar / warped form.
    std::array<double, 2> polar_metric(double r) const;
    // dg[k](i, j) = d g_ij / d x^k
    std::array<Mat2, 2> metric_derivative(const Vec2& p) const;
    // gamma[i](j, k) = Christoffel symbol Gamma^i_{jk}
    std::array<Mat2, 2> christoffel(const Vec2& p) const;
    double gauss_curvature(const Vec2& p) const;

    // Radial coordinate of a point (distance to the pole in the normal chart).
    double radius_of(const Vec2& p) const;
    Vec2 from_polar(double r, double theta) const;

    // Closed forms for constant curvature.
    double distance(const Vec2& p, const Vec2& q) const;
    // Point reached at arclength t along the geodesic with unit initial velocity v.
    Vec2 exp_closed_form(const Vec2& p, const Vec2& v, double t) const;

private:
    void require_in_chart(const Vec2& p) const;

    Kind kind_ = Kind::constant_curvature;
    int dimension_ = 2;
    WarpProfile profile_;
};

struct GeodesicState {
    Vec2 position = Vec2::Zero();
    Vec2 velocity = Vec2::Zero();
    double arclength = 0.0;
};

using Trajectory = std::vector<GeodesicState>;

struct JacobiValue {
    double value = 0.0;
    double derivative = 0.0;
};

struct GeodesicOptions {
    double tol = 1e-10;
    // Rescale velocity to unit speed after every accepted step. Off by default so
    // integrator drift stays visible.
    bool renormalize = false;
};

// Raised when the trajectory leaves the chart; carries everything integrated so far.
class TruncationError : public DomainError {
public:
    TruncationError(const std::string& what, Trajectory partial)
        : DomainError(what), partial_(std::move(partial)) {}
    const Trajectory& partial() const { return partial_; }

private:
    Trajectory partial_;
};

double speed_squared(const ModelSurface& surface, const Vec2& p, const Vec2& v);

// Rescales a chart vector to unit g-length.
Vec2 unit_vector(const ModelSurface& surface, const Vec2& p, const Vec2& v);

Trajectory integrate_geodesic(const ModelSurface& surface, const GeodesicState& start,
                              double length, const GeodesicOptions& opts = {});

// Scalar normal Jacobi equation J'' + K(gamma(s)) J = 0 along the geodesic that
// starts at trajectory.front(), transported to trajectory.back().arclength.
JacobiValue jacobi_transport(const ModelSurface& surface, const Trajectory& trajectory,
                             const JacobiValue& initial, const GeodesicOptions& opts = {});

} // namespace sobext
