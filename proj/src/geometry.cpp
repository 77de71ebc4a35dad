#include "sobext/geometry.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace sobext {

namespace {

// S(x) = (sin x - x) / x^3 and S'(x) / x, with the hyperbolic variant when hyp is set.
double s_fun(double x, bool hyp) {
    const double sg = hyp ? 1.0 : -1.0;
    if (x < 0.5) {
        const double x2 = x * x;
        // -1/6 + x^2/120 - x^4/5040 + x^6/362880 - x^8/39916800 (signs flip for sinh)
        return sg / 6.0 + x2 / 120.0 + sg * x2 * x2 / 5040.0 + x2 * x2 * x2 / 362880.0 +
               sg * x2 * x2 * x2 * x2 / 39916800.0;
    }
    const double s = hyp ? std::sinh(x) : std::sin(x);
    return (s - x) / (x * x * x);
}

double ds_over_x(double x, bool hyp) {
    const double sg = hyp ? 1.0 : -1.0;
    if (x < 0.5) {
        const double x2 = x * x;
        return 2.0 / 120.0 + sg * 4.0 * x2 / 5040.0 + 6.0 * x2 * x2 / 362880.0 +
               sg * 8.0 * x2 * x2 * x2 / 39916800.0;
    }
    const double s = hyp ? std::sinh(x) : std::sin(x);
    const double c = hyp ? std::cosh(x) : std::cos(x);
    const double ds = (c - 1.0) / (x * x * x) - 3.0 * (s - x) / (x * x * x * x);
    return ds / x;
}

// Embedding of constant-curvature normal coordinates into R^3 (sphere of radius 1 or
// the unit hyperboloid), after scaling distances by a = sqrt|kappa|.
Eigen::Vector3d embed(double kappa, const Vec2& p) {
    const double a = std::sqrt(std::abs(kappa));
    const double r = p.norm();
    if (r == 0.0) return {0.0, 0.0, 1.0};
    const Vec2 dir = p / r;
    if (kappa > 0) return {std::sin(a * r) * dir.x(), std::sin(a * r) * dir.y(), std::cos(a * r)};
    return {std::sinh(a * r) * dir.x(), std::sinh(a * r) * dir.y(), std::cosh(a * r)};
}

Eigen::Vector3d embed_tangent(double kappa, const Vec2& p, const Vec2& v) {
    const double a = std::sqrt(std::abs(kappa));
    const double r = p.norm();
    if (r == 0.0) return {a * v.x(), a * v.y(), 0.0};
    const Vec2 dir = p / r;
    const double radial = dir.dot(v);
    const Vec2 perp = v - radial * dir;
    if (kappa > 0) {
        const Vec2 xy = a * std::cos(a * r) * radial * dir + std::sin(a * r) / r * perp;
        return {xy.x(), xy.y(), -a * std::sin(a * r) * radial};
    }
    const Vec2 xy = a * std::cosh(a * r) * radial * dir + std::sinh(a * r) / r * perp;
    return {xy.x(), xy.y(), a * std::sinh(a * r) * radial};
}

Vec2 unembed(double kappa, const Eigen::Vector3d& e) {
    const double a = std::sqrt(std::abs(kappa));
    const double rho = std::hypot(e.x(), e.y());
    if (rho == 0.0) return Vec2::Zero();
    double r = 0.0;
    if (kappa > 0)
        r = std::atan2(rho, e.z()) / a;
    else
        r = std::asinh(rho) / a;
    return Vec2(e.x(), e.y()) * (r / rho);
}

} // namespace

// ---------------------------------------------------------------------------
// WarpProfile

WarpProfile WarpProfile::sn(double kappa) {
    WarpProfile p;
    p.kind_ = Kind::sn;
    p.kappa_ = kappa;
    return p;
}

WarpProfile WarpProfile::odd_poly(std::vector<double> coeffs) {
    WarpProfile p;
    p.kind_ = Kind::odd_poly;
    p.coeffs_ = std::move(coeffs);
    return p;
}

WarpProfile WarpProfile::poly_cosh_mix(std::vector<double> coeffs) {
    if (coeffs.size() < 2) throw InvalidSurfaceError("poly_cosh_mix needs at least two coefficients");
    WarpProfile p;
    p.kind_ = Kind::poly_cosh_mix;
    p.coeffs_ = std::move(coeffs);
    return p;
}

double WarpProfile::f(double r) const {
    switch (kind_) {
    case Kind::sn: {
        if (kappa_ == 0.0) return r;
        const double a = std::sqrt(std::abs(kappa_));
        return kappa_ > 0 ? std::sin(a * r) / a : std::sinh(a * r) / a;
    }
    case Kind::odd_poly: {
        double v = r, pw = r;
        for (double c : coeffs_) {
            pw *= r * r;
            v += c * pw;
        }
        return v;
    }
    case Kind::poly_cosh_mix: {
        double v = coeffs_[0] * std::cosh(r) + coeffs_[1] * std::sinh(r);
        for (std::size_t k = 2; k < coeffs_.size(); ++k) v += coeffs_[k] * std::pow(r, double(k));
        return v;
    }
    }
    return 0.0;
}

double WarpProfile::df(double r) const {
    switch (kind_) {
    case Kind::sn: {
        if (kappa_ == 0.0) return 1.0;
        const double a = std::sqrt(std::abs(kappa_));
        return kappa_ > 0 ? std::cos(a * r) : std::cosh(a * r);
    }
    case Kind::odd_poly: {
        double v = 1.0, pw = 1.0;
        for (std::size_t k = 0; k < coeffs_.size(); ++k) {
            pw *= r * r;
            v += double(2 * k + 3) * coeffs_[k] * pw;
        }
        return v;
    }
    case Kind::poly_cosh_mix: {
        double v = coeffs_[0] * std::sinh(r) + coeffs_[1] * std::cosh(r);
        for (std::size_t k = 2; k < coeffs_.size(); ++k)
            v += double(k) * coeffs_[k] * std::pow(r, double(k - 1));
        return v;
    }
    }
    return 0.0;
}

double WarpProfile::d2f(double r) const {
    switch (kind_) {
    case Kind::sn:
        return -kappa_ * f(r);
    case Kind::odd_poly: {
        double v = 0.0, pw = r;
        for (std::size_t k = 0; k < coeffs_.size(); ++k) {
            const double p = double(2 * k + 3);
            v += p * (p - 1.0) * coeffs_[k] * pw;
            pw *= r * r;
        }
        return v;
    }
    case Kind::poly_cosh_mix: {
        double v = coeffs_[0] * std::cosh(r) + coeffs_[1] * std::sinh(r);
        for (std::size_t k = 2; k < coeffs_.size(); ++k)
            v += double(k * (k - 1)) * coeffs_[k] * std::pow(r, double(k) - 2.0);
        return v;
    }
    }
    return 0.0;
}

double WarpProfile::m(double r) const {
    switch (kind_) {
    case Kind::sn: {
        if (kappa_ == 0.0) return 0.0;
        const double x = std::sqrt(std::abs(kappa_)) * r;
        return std::abs(kappa_) * s_fun(x, kappa_ < 0);
    }
    case Kind::odd_poly: {
        double v = 0.0, pw = 1.0;
        for (double c : coeffs_) {
            v += c * pw;
            pw *= r * r;
        }
        return v;
    }
    case Kind::poly_cosh_mix:
        break;
    }
    throw InvalidSurfaceError("m(r) is only defined for pole-type profiles");
}

double WarpProfile::dm_over_r(double r) const {
    switch (kind_) {
    case Kind::sn: {
        if (kappa_ == 0.0) return 0.0;
        const double x = std::sqrt(std::abs(kappa_)) * r;
        return kappa_ * kappa_ * ds_over_x(x, kappa_ < 0);
    }
    case Kind::odd_poly: {
        double v = 0.0, pw = 1.0;
        for (std::size_t k = 1; k < coeffs_.size(); ++k) {
            v += double(2 * k) * coeffs_[k] * pw;
            pw *= r * r;
        }
        return v;
    }
    case Kind::poly_cosh_mix:
        break;
    }
    throw InvalidSurfaceError("m'(r)/r is only defined for pole-type profiles");
}

double WarpProfile::d2f_over_f(double r) const {
    switch (kind_) {
    case Kind::sn:
        return -kappa_;
    case Kind::odd_poly: {
        // f = r P(r^2), f''/r = sum c_k p (p-1) r^{2k}, p = 2k+3
        double num = 0.0, den = 1.0, pw = 1.0;
        for (std::size_t k = 0; k < coeffs_.size(); ++k) {
            const double p = double(2 * k + 3);
            num += p * (p - 1.0) * coeffs_[k] * pw;
            den += coeffs_[k] * pw * r * r;
            pw *= r * r;
        }
        return num / den;
    }
    case Kind::poly_cosh_mix:
        return d2f(r) / f(r);
    }
    return 0.0;
}

double WarpProfile::chart_radius() const {
    if (kind_ == Kind::sn) return kappa_ > 0 ? kPi / std::sqrt(kappa_) : kInf;
    if (kind_ == Kind::poly_cosh_mix) return kInf;
    // first sign change of f on a scan, refined by bisection
    const double step = 1e-3;
    double prev = step;
    for (double r = 2 * step; r < 1e3; r += step) {
        if (f(r) <= 0.0) {
            double lo = prev, hi = r;
            for (int i = 0; i < 200; ++i) {
                const double mid = 0.5 * (lo + hi);
                (f(mid) > 0 ? lo : hi) = mid;
            }
            return lo;
        }
        prev = r;
    }
    return kInf;
}

// ---------------------------------------------------------------------------
// ModelSurface

ModelSurface ModelSurface::constant_curvature(double kappa, int dimension) {
    if (dimension < 2 || dimension > 3) throw InvalidSurfaceError("dimension must be 2 or 3");
    if (!std::isfinite(kappa)) throw InvalidSurfaceError("kappa must be finite");
    ModelSurface s;
    s.kind_ = Kind::constant_curvature;
    s.dimension_ = dimension;
    s.profile_ = WarpProfile::sn(kappa);
    return s;
}

ModelSurface ModelSurface::warped(WarpProfile profile, int dimension) {
    if (dimension != 2) throw InvalidSurfaceError("warped products are two-dimensional");
    ModelSurface s;
    s.kind_ = Kind::warped_product;
    s.dimension_ = dimension;
    s.profile_ = std::move(profile);
    return s;
}

bool ModelSurface::in_chart(const Vec2& p) const {
    if (!p.allFinite()) return false;
    if (normal_chart()) return p.norm() < profile_.chart_radius();
    return profile_.f(p.x()) > 0.0;
}

void ModelSurface::require_in_chart(const Vec2& p) const {
    if (in_chart(p)) return;
    if (!normal_chart() && p.allFinite())
        throw InvalidSurfaceError("warping function is not positive at r = " + std::to_string(p.x()));
    throw DomainError("point outside chart domain");
}

double ModelSurface::radius_of(const Vec2& p) const { return normal_chart() ? p.norm() : p.x(); }

Vec2 ModelSurface::from_polar(double r, double theta) const {
    if (normal_chart()) return {r * std::cos(theta), r * std::sin(theta)};
    return {r, theta};
}

std::array<double, 2> ModelSurface::polar_metric(double r) const {
    if (normal_chart() && !(r >= 0.0 && r < profile_.chart_radius())) throw DomainError("radius outside chart");
    const double f = profile_.f(r);
    if (!normal_chart() && f <= 0.0) throw InvalidSurfaceError("warping function is not positive");
    return {1.0, f * f};
}

Mat2 ModelSurface::metric_at(const Vec2& p) const {
    require_in_chart(p);
    if (!normal_chart()) {
        const double f = profile_.f(p.x());
        Mat2 g;
        g << 1.0, 0.0, 0.0, f * f;
        return g;
    }
    const double r = p.norm();
    const double m = profile_.m(r);
    const double phi = 1.0 + m * r * r;
    const double a = phi * phi;
    const double b = -m * (phi + 1.0);
    return a * Mat2::Identity() + b * p * p.transpose();
}

std::array<Mat2, 2> ModelSurface::metric_derivative(const Vec2& p) const {
    require_in_chart(p);
    std::array<Mat2, 2> dg{Mat2::Zero(), Mat2::Zero()};
    if (!normal_chart()) {
        const double r = p.x();
        dg[0](1, 1) = 2.0 * profile_.f(r) * profile_.df(r);
        return dg;
    }
    const double r = p.norm();
    const double m = profile_.m(r);
    const double mp_r = profile_.dm_over_r(r);
    const double phi = 1.0 + m * r * r;
    const double phip_r = 2.0 * m + r * r * mp_r;
    const double b = -m * (phi + 1.0);
    const double bp_r = -mp_r * (phi + 1.0) - m * phip_r;
    const double da = 2.0 * phi * phip_r; // dA/dx_k = da * x_k
    for (int k = 0; k < 2; ++k) {
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) {
                double v = bp_r * p[k] * p[i] * p[j];
                if (i == j) v += da * p[k];
                if (i == k) v += b * p[j];
                if (j == k) v += b * p[i];
                dg[k](i, j) = v;
            }
        }
    }
    return dg;
}

std::array<Mat2, 2> ModelSurface::christoffel(const Vec2& p) const {
    const Mat2 ginv = metric_at(p).inverse();
    const auto dg = metric_derivative(p);
    std::array<Mat2, 2> gamma{Mat2::Zero(), Mat2::Zero()};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) {
                double v = 0.0;
                for (int l = 0; l < 2; ++l) v += ginv(i, l) * (dg[j](l, k) + dg[k](l, j) - dg[l](j, k));
                gamma[i](j, k) = 0.5 * v;
            }
    return gamma;
}

double ModelSurface::gauss_curvature(const Vec2& p) const {
    require_in_chart(p);
    if (kind_ == Kind::constant_curvature) return profile_.kappa();
    const double r = radius_of(p);
    if (!normal_chart() && profile_.f(r) <= 0.0) throw InvalidSurfaceError("warping function is not positive");
    return -profile_.d2f_over_f(r);
}

double ModelSurface::distance(const Vec2& p, const Vec2& q) const {
    if (kind_ != Kind::constant_curvature)
        throw DomainError("closed-form distance is only available for constant curvature");
    require_in_chart(p);
    require_in_chart(q);
    const double kappa = profile_.kappa();
    if (kappa == 0.0) return (p - q).norm();
    const double a = std::sqrt(std::abs(kappa));
    const Eigen::Vector3d d = embed(kappa, p) - embed(kappa, q);
    if (kappa > 0) return 2.0 * std::asin(std::min(1.0, 0.5 * d.norm())) / a;
    const double lorentz = std::max(0.0, d.x() * d.x() + d.y() * d.y() - d.z() * d.z());
    return 2.0 * std::asinh(0.5 * std::sqrt(lorentz)) / a;
}

Vec2 ModelSurface::exp_closed_form(const Vec2& p, const Vec2& v, double t) const {
    if (kind_ != Kind::constant_curvature)
        throw DomainError("closed-form geodesics are only available for constant curvature");
    require_in_chart(p);
    const Vec2 u = unit_vector(*this, p, v);
    const double kappa = profile_.kappa();
    if (kappa == 0.0) return p + t * u;
    const double a = std::sqrt(std::abs(kappa));
    const Eigen::Vector3d e = embed(kappa, p);
    const Eigen::Vector3d w = embed_tangent(kappa, p, u) / a;
    const Eigen::Vector3d out = kappa > 0 ? Eigen::Vector3d(e * std::cos(a * t) + w * std::sin(a * t))
                                          : Eigen::Vector3d(e * std::cosh(a * t) + w * std::sinh(a * t));
    return unembed(kappa, out);
}

// ---------------------------------------------------------------------------
// Geodesics and Jacobi fields

double speed_squared(const ModelSurface& surface, const Vec2& p, const Vec2& v) {
    return v.dot(surface.metric_at(p) * v);
}

Vec2 unit_vector(const ModelSurface& surface, const Vec2& p, const Vec2& v) {
    const double n2 = speed_squared(surface, p, v);
    if (!(n2 > 0.0)) throw DomainError("zero tangent vector");
    return v / std::sqrt(n2);
}

namespace {

using State = std::array<double, 6>; // x, y, vx, vy, J, J'

struct GeodesicRhs {
    const ModelSurface& surface;
    bool with_jacobi;

    void operator()(const State& y, State& dy, double /*t*/) const {
        const Vec2 p(y[0], y[1]);
        const Vec2 v(y[2], y[3]);
        const auto gamma = surface.christoffel(p);
        dy[0] = v.x();
        dy[1] = v.y();
        dy[2] = -v.dot(gamma[0] * v);
        dy[3] = -v.dot(gamma[1] * v);
        if (with_jacobi) {
            dy[4] = y[5];
            dy[5] = -surface.gauss_curvature(p) * y[4];
        } else {
            dy[4] = dy[5] = 0.0;
        }
    }
};

struct Integration {
    Trajectory states;
    State final_state{};
};

Integration run(const ModelSurface& surface, const GeodesicState& start, double length, const JacobiValue* jacobi,
                const GeodesicOptions& opts) {
    namespace odeint = boost::numeric::odeint;
    if (!(opts.tol > 0.0)) throw ParameterError("tol must be positive");
    if (!(length >= 0.0) || !std::isfinite(length)) throw ParameterError("length must be finite and non-negative");
    if (!surface.in_chart(start.position)) throw DomainError("start point outside chart domain");

    GeodesicRhs rhs{surface, jacobi != nullptr};
    State y{start.position.x(), start.position.y(), start.velocity.x(), start.velocity.y(),
            jacobi ? jacobi->value : 0.0, jacobi ? jacobi->derivative : 0.0};

    // Local error target sits two orders below the requested tolerance so the
    // accumulated error stays within it.
    const double local = opts.tol * 1e-2;
    auto stepper = odeint::make_controlled(local, local, odeint::runge_kutta_fehlberg78<State>());

    Integration out;
    out.states.push_back(start);
    double t = 0.0;
    double dt = std::min(0.1, std::max(length, 1e-12));
    int rejected = 0;
    while (t < length) {
        if (t + dt > length) dt = length - t;
        double t_try = t;
        State y_try = y;
        odeint::controlled_step_result res = odeint::fail;
        try {
            res = stepper.try_step(rhs, y_try, t_try, dt);
        } catch (const DomainError&) {
            // a stage evaluation left the chart; shrink and retry
            dt *= 0.25;
            res = odeint::fail;
        }
        if (res == odeint::fail) {
            if (++rejected > 200 || dt < 1e-14) {
                // a stalled step right at the chart edge means the geodesic is leaving it
                const Vec2 here(y[0], y[1]), ahead(y[2], y[3]);
                for (double probe = 1e-8; probe <= 1e-1; probe *= 10.0)
                    if (!surface.in_chart(here + probe * ahead))
                        throw TruncationError("geodesic left the chart", out.states);
                throw IntegrationError("geodesic step size underflow");
            }
            continue;
        }
        rejected = 0;
        const Vec2 p(y_try[0], y_try[1]);
        if (!surface.in_chart(p)) throw TruncationError("geodesic left the chart", out.states);
        y = y_try;
        t = t_try;
        if (opts.renormalize) {
            const Vec2 u = unit_vector(surface, p, Vec2(y[2], y[3]));
            y[2] = u.x();
            y[3] = u.y();
        }
        out.states.push_back({p, Vec2(y[2], y[3]), t});
        if (length - t < 1e-15 * std::max(1.0, length)) break;
    }
    out.states.back().arclength = length;
    out.final_state = y;
    return out;
}

} // namespace

Trajectory integrate_geodesic(const ModelSurface& surface, const GeodesicState& start, double length,
                              const GeodesicOptions& opts) {
    return run(surface, start, length, nullptr, opts).states;
}

JacobiValue jacobi_transport(const ModelSurface& surface, const Trajectory& trajectory, const JacobiValue& initial,
                             const GeodesicOptions& opts) {
    if (trajectory.empty()) throw ParameterError("empty trajectory");
    const GeodesicState& start = trajectory.front();
    const double length = trajectory.back().arclength - start.arclength;
    GeodesicState s0 = start;
    s0.arclength = 0.0;
    const auto res = run(surface, s0, length, &initial, opts);
    return {res.final_state[4], res.final_state[5]};
}

} // namespace sobext
