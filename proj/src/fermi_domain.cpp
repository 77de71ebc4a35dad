#include "sobext/fermi_domain.hpp"

#include "sobext/comparison.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace sobext {

namespace {

constexpr double kTwoPi = 2.0 * kPi;
constexpr double kTieTolerance = 1e-6;

bool is_flat(const ModelSurface& surface) {
    return surface.kind() == ModelSurface::Kind::constant_curvature && surface.kappa() == 0.0;
}

double wrap_angle(double t) {
    double w = std::fmod(t, kTwoPi);
    if (w < 0) w += kTwoPi;
    return w >= kTwoPi ? 0.0 : w;
}

Vec2 radial(double t) { return {std::cos(t), std::sin(t)}; }
Vec2 perp(double t) { return {-std::sin(t), std::cos(t)}; }

} // namespace

double angle_gap(double a, double b) {
    const double d = wrap_angle(a - b);
    return std::min(d, kTwoPi - d);
}

double FourierSeries::value(double t) const {
    double v = 0.0;
    for (std::size_t k = 0; k < cos_coeffs.size(); ++k) v += cos_coeffs[k] * std::cos(k * t);
    for (std::size_t k = 0; k < sin_coeffs.size(); ++k) v += sin_coeffs[k] * std::sin(k * t);
    return v;
}

double FourierSeries::d1(double t) const {
    double v = 0.0;
    for (std::size_t k = 1; k < cos_coeffs.size(); ++k) v -= k * cos_coeffs[k] * std::sin(k * t);
    for (std::size_t k = 1; k < sin_coeffs.size(); ++k) v += k * sin_coeffs[k] * std::cos(k * t);
    return v;
}

double FourierSeries::d2(double t) const {
    double v = 0.0;
    for (std::size_t k = 1; k < cos_coeffs.size(); ++k) v -= double(k * k) * cos_coeffs[k] * std::cos(k * t);
    for (std::size_t k = 1; k < sin_coeffs.size(); ++k) v -= double(k * k) * sin_coeffs[k] * std::sin(k * t);
    return v;
}

DomainSpec DomainSpec::disk(ModelSurface surface, Vec2 center, double radius) {
    if (!(radius > 0.0) || !std::isfinite(radius)) throw InvalidDomainError("disk radius must be positive");
    if (!center.allFinite()) throw InvalidDomainError("disk centre must be finite");
    if (!surface.normal_chart()) throw InvalidDomainError("disks need a surface with a pole");
    if (!is_flat(surface) && center.norm() != 0.0)
        throw InvalidDomainError("disks on curved surfaces must be centred at the pole");
    if (!(radius < surface.profile().chart_radius()))
        throw InvalidDomainError("disk radius exceeds the normal chart");
    DomainSpec d;
    d.surface_ = std::move(surface);
    d.boundary_ = Boundary::geodesic_disk;
    d.center_ = center;
    d.radius_ = radius;
    return d;
}

DomainSpec DomainSpec::fourier(ModelSurface surface, FourierSeries rho, int dense_samples) {
    if (!is_flat(surface)) throw InvalidDomainError("radial profiles are only supported in the flat plane");
    if (rho.cos_coeffs.empty()) throw InvalidDomainError("radial profile needs a constant term");
    for (double c : rho.cos_coeffs)
        if (!std::isfinite(c)) throw InvalidDomainError("radial profile coefficients must be finite");
    for (double c : rho.sin_coeffs)
        if (!std::isfinite(c)) throw InvalidDomainError("radial profile coefficients must be finite");
    if (dense_samples < 64) throw ParameterError("radial profile needs at least 64 dense samples");
    DomainSpec d;
    d.surface_ = std::move(surface);
    d.boundary_ = Boundary::radial_profile;
    d.rho_ = std::move(rho);
    d.dense_theta_.resize(dense_samples);
    d.dense_points_.resize(dense_samples);
    double rho_max = 0.0;
    for (int i = 0; i < dense_samples; ++i) {
        const double t = kTwoPi * i / dense_samples;
        const double v = d.rho_.value(t);
        if (!(v > 0.0)) throw InvalidDomainError("radial profile is not positive at theta = " + std::to_string(t));
        d.dense_theta_[i] = t;
        d.dense_points_[i] = v * radial(t);
        rho_max = std::max(rho_max, v);
    }
    d.radius_ = rho_max;
    return d;
}

BoundarySample DomainSpec::boundary_sample(double theta) const {
    BoundarySample b;
    b.theta = theta;
    if (boundary_ == Boundary::geodesic_disk) {
        const auto& prof = surface_.profile();
        b.point = center_ + surface_.from_polar(radius_, theta);
        b.normal = radial(theta);
        b.second_fundamental_form = prof.df(radius_) / prof.f(radius_);
        b.speed = prof.f(radius_);
        return b;
    }
    const double r = rho_.value(theta), dr = rho_.d1(theta), ddr = rho_.d2(theta);
    if (!(r > 0.0)) throw InvalidDomainError("radial profile is not positive at theta = " + std::to_string(theta));
    const double q = r * r + dr * dr;
    b.speed = std::sqrt(q);
    b.point = r * radial(theta);
    b.normal = (r * radial(theta) - dr * perp(theta)) / b.speed;
    b.second_fundamental_form = (r * r + 2 * dr * dr - r * ddr) / (q * b.speed);
    return b;
}

Vec2 DomainSpec::normal_point(double theta, double s) const {
    if (boundary_ == Boundary::geodesic_disk) return center_ + surface_.from_polar(radius_ + s, theta);
    const auto b = boundary_sample(theta);
    return b.point + s * b.normal;
}

double DomainSpec::normal_jacobian(double theta, double s) const {
    if (boundary_ == Boundary::geodesic_disk) {
        const auto& prof = surface_.profile();
        return prof.f(radius_ + s) / prof.f(radius_);
    }
    return 1.0 + boundary_sample(theta).second_fundamental_form * s;
}

double DomainSpec::max_depth_outward() const {
    if (boundary_ == Boundary::geodesic_disk) return surface_.profile().chart_radius() - radius_;
    return kInf;
}

double DomainSpec::max_depth_inward() const { return boundary_ == Boundary::geodesic_disk ? radius_ : kInf; }

std::vector<FootPoint> DomainSpec::feet(const Vec2& p) const {
    if (!p.allFinite()) throw DomainError("point must be finite");
    if (boundary_ == Boundary::geodesic_disk) {
        const Vec2 q = p - center_;
        if (!surface_.in_chart(q)) throw DomainError("point outside chart domain");
        const double rho = q.norm();
        if (rho < 1e-14 * std::max(1.0, radius_)) // every boundary point is a foot
            return {{0.0, radius_, -radius_}, {kPi, radius_, -radius_}};
        return {{wrap_angle(std::atan2(q.y(), q.x())), std::abs(rho - radius_), rho - radius_}};
    }

    const int m = static_cast<int>(dense_points_.size());
    std::vector<double> d2(m);
    for (int i = 0; i < m; ++i) d2[i] = (p - dense_points_[i]).squaredNorm();
    std::vector<int> minima;
    for (int i = 0; i < m; ++i) {
        const double prev = d2[(i + m - 1) % m], next = d2[(i + 1) % m];
        if (d2[i] <= prev && d2[i] < next) minima.push_back(i);
    }
    if (minima.empty()) minima.push_back(int(std::min_element(d2.begin(), d2.end()) - d2.begin()));
    std::sort(minima.begin(), minima.end(), [&](int a, int b) { return d2[a] < d2[b]; });
    if (minima.size() > 8) minima.resize(8);

    const double h = kTwoPi / m;
    auto objective = [&](double t) { return 0.5 * (p - rho_.value(t) * radial(t)).squaredNorm(); };
    std::vector<FootPoint> out;
    for (int idx : minima) {
        double t = dense_theta_[idx];
        double ft = objective(t);
        for (int it = 0; it < 60; ++it) {
            const double r = rho_.value(t), dr = rho_.d1(t), ddr = rho_.d2(t);
            const Vec2 b = r * radial(t);
            const Vec2 b1 = dr * radial(t) + r * perp(t);
            const Vec2 b2 = (ddr - r) * radial(t) + 2 * dr * perp(t);
            const Vec2 w = p - b;
            const double g = -w.dot(b1);
            const double hess = b1.squaredNorm() - w.dot(b2);
            double step = hess > 0 ? -g / hess : (g > 0 ? -h : h);
            step = std::clamp(step, -h, h);
            double trial = objective(t + step);
            int halvings = 0;
            while (trial > ft && halvings < 40) {
                step *= 0.5;
                trial = objective(t + step);
                ++halvings;
            }
            if (trial <= ft) {
                t += step;
                ft = trial;
            }
            if (std::abs(step) < 1e-15 || halvings >= 40) break;
        }
        const auto b = boundary_sample(t);
        const double dist = (p - b.point).norm();
        const double signed_dist = (p - b.point).dot(b.normal) >= 0 ? dist : -dist;
        FootPoint foot{wrap_angle(t), dist, signed_dist};
        const bool duplicate = std::any_of(out.begin(), out.end(), [&](const FootPoint& f) {
            return angle_gap(f.theta, foot.theta) < 1e-7;
        });
        if (!duplicate) out.push_back(foot);
    }
    std::sort(out.begin(), out.end(), [](const FootPoint& a, const FootPoint& b) { return a.distance < b.distance; });
    return out;
}

double DomainSpec::signed_distance(const Vec2& p) const { return feet(p).front().signed_distance; }

bool DomainSpec::contains(const Vec2& p) const {
    if (boundary_ == Boundary::geodesic_disk) return surface_.radius_of(p - center_) <= radius_;
    return p.norm() <= rho_.value(std::atan2(p.y(), p.x()));
}

double DomainSpec::area() const {
    if (boundary_ == Boundary::radial_profile) {
        double sum = kPi * rho_.cos_coeffs[0] * rho_.cos_coeffs[0] * 2.0;
        for (std::size_t k = 1; k < rho_.cos_coeffs.size(); ++k) sum += kPi * rho_.cos_coeffs[k] * rho_.cos_coeffs[k];
        for (std::size_t k = 1; k < rho_.sin_coeffs.size(); ++k) sum += kPi * rho_.sin_coeffs[k] * rho_.sin_coeffs[k];
        return 0.5 * sum;
    }
    if (is_flat(surface_)) return kPi * radius_ * radius_;
    const auto& prof = surface_.profile();
    return kTwoPi * boost::math::quadrature::gauss<double, 30>::integrate([&](double r) { return prof.f(r); }, 0.0,
                                                                          radius_);
}

double DomainSpec::perimeter() const {
    if (boundary_ == Boundary::geodesic_disk) return kTwoPi * surface_.profile().f(radius_);
    double sum = 0.0;
    for (double t : dense_theta_) sum += std::hypot(rho_.value(t), rho_.d1(t));
    return sum * kTwoPi / dense_theta_.size();
}

double DomainSpec::diameter() const {
    if (boundary_ == Boundary::geodesic_disk) {
        if (surface_.kind() == ModelSurface::Kind::constant_curvature)
            return surface_.distance(surface_.from_polar(radius_, 0.0), surface_.from_polar(radius_, kPi));
        return 2.0 * radius_;
    }
    double best = 0.0;
    for (std::size_t i = 0; i < dense_points_.size(); ++i)
        for (std::size_t j = i + 1; j < dense_points_.size(); ++j)
            best = std::max(best, (dense_points_[i] - dense_points_[j]).squaredNorm());
    return std::sqrt(best);
}

BoundarySample boundary_point(const DomainSpec& domain, double theta) { return domain.boundary_sample(theta); }

namespace {

struct InjectivityResult {
    bool ok = true;
    double defect = 0.0;
    std::string failure;
};

// psi(s, theta) must have theta as its unique nearest foot at distance |s|.
InjectivityResult check_injectivity(const DomainSpec& domain, double r, const std::vector<double>& thetas,
                                    int levels = 32) {
    InjectivityResult res;
    if (r > domain.max_depth_inward() || r > domain.max_depth_outward()) {
        res.ok = false;
        res.defect = kInf;
        res.failure = "tube leaves the chart or crosses the centre";
        return res;
    }
    const double tol = 1e-8 * std::max(1.0, r);
    for (int j = 0; j < levels; ++j) {
        const double s = r * (-1.0 + (2.0 * j + 1.0) / levels);
        for (double t : thetas) {
            const Vec2 q = domain.normal_point(t, s);
            std::vector<FootPoint> feet;
            try {
                feet = domain.feet(q);
            } catch (const DomainError&) {
                res.ok = false;
                res.defect = kInf;
                res.failure = "tube point outside the chart";
                return res;
            }
            const auto& f0 = feet.front();
            double defect = std::abs(f0.distance - std::abs(s));
            if (angle_gap(f0.theta, t) > 1e-6) defect = std::max(defect, std::abs(s) - f0.distance);
            for (std::size_t k = 1; k < feet.size(); ++k)
                if (feet[k].distance < std::abs(s) + tol && angle_gap(feet[k].theta, t) > 1e-6)
                    defect = std::max(defect, tol * 2);
            res.defect = std::max(res.defect, defect);
            if (defect > tol && res.ok) {
                res.ok = false;
                res.failure = "normal geodesics meet at depth " + std::to_string(s);
            }
        }
    }
    return res;
}

std::vector<double> theta_grid(int samples) {
    std::vector<double> t(samples);
    for (int i = 0; i < samples; ++i) t[i] = kTwoPi * i / samples;
    return t;
}

} // namespace

FermiChart::FermiChart(DomainSpec domain, double r, int samples) : domain_(std::move(domain)), r_(r) {
    if (!(r > 0.0) || !std::isfinite(r)) throw ParameterError("tube radius must be positive");
    if (samples < 16) throw ParameterError("Fermi chart needs at least 16 boundary samples");
    const auto thetas = theta_grid(samples);
    samples_.reserve(samples);
    for (double t : thetas) samples_.push_back(domain_.boundary_sample(t));
    if (r > domain_.max_depth_inward() || r > domain_.max_depth_outward())
        throw DegenerateTubeError("tube of radius " + std::to_string(r) + " leaves the chart");
    const double edge = r * (1.0 - 1e-12);
    for (const auto& b : samples_)
        if (!(domain_.normal_jacobian(b.theta, edge) > 0.0) || !(domain_.normal_jacobian(b.theta, -edge) > 0.0))
            throw DegenerateTubeError("normal Jacobi field vanishes inside the tube at theta = " +
                                      std::to_string(b.theta));
    const auto inj = check_injectivity(domain_, r, thetas);
    if (!inj.ok) throw RegularityError("Fermi map is not injective: " + inj.failure);
}

Vec2 fermi_map(const FermiChart& chart, double s, double theta) {
    if (!(std::abs(s) < chart.r())) throw OutOfTubeError("|s| = " + std::to_string(std::abs(s)) + " is not below r");
    return chart.domain().normal_point(theta, s);
}

FermiCoords fermi_invert(const FermiChart& chart, const Vec2& point, double tol) {
    const auto feet = chart.domain().feet(point);
    const auto& f0 = feet.front();
    if (!(f0.distance < chart.r())) throw OutOfTubeError("point is outside the tube");
    for (std::size_t k = 1; k < feet.size(); ++k)
        if (feet[k].distance - f0.distance < kTieTolerance && angle_gap(feet[k].theta, f0.theta) > kTieTolerance)
            throw AmbiguityError("point has two nearest boundary points");
    const FermiCoords c{f0.signed_distance, f0.theta};
    const double residual = (chart.domain().normal_point(c.theta, c.s) - point).norm();
    if (residual > std::max(tol, 1e-12 * std::max(1.0, point.norm())))
        throw EvaluationError("foot point search did not converge, residual " + std::to_string(residual));
    return c;
}

double volume_element_ratio(const FermiChart& chart, double theta, double s) {
    if (!(std::abs(s) < chart.r())) throw OutOfTubeError("|s| = " + std::to_string(std::abs(s)) + " is not below r");
    const double v = chart.domain().normal_jacobian(theta, s);
    if (!(v > 0.0)) throw FocalPointError("normal Jacobi field vanishes at s = " + std::to_string(s));
    return v;
}

RegularityReport check_regularity(const DomainSpec& domain, double r, int samples) {
    if (!(r > 0.0) || !std::isfinite(r)) throw ParameterError("r must be positive");
    if (samples < 16) throw ParameterError("regularity check needs at least 16 boundary samples");
    RegularityReport rep;
    rep.r = r;
    const auto thetas = theta_grid(samples);

    rep.H_min = kInf;
    rep.H_max = -kInf;
    for (double t : thetas) {
        const double ii = domain.boundary_sample(t).second_fundamental_form;
        rep.H_min = std::min(rep.H_min, ii);
        rep.H_max = std::max(rep.H_max, ii);
    }
    rep.H = std::max({0.0, rep.H_max, -rep.H_min});

    // sectional curvature over the part of the tube that lies in the chart
    const double out_depth = std::min(r, domain.max_depth_outward());
    const double in_depth = std::min(r, domain.max_depth_inward());
    rep.k_lower = kInf;
    rep.K_upper = -kInf;
    const int levels = 17;
    for (int j = 0; j < levels; ++j) {
        const double u = double(j) / (levels - 1);
        const double s = -in_depth * (1.0 - 1e-9) + u * (in_depth + out_depth) * (1.0 - 1e-9);
        for (double t : thetas) {
            const Vec2 q = domain.normal_point(t, s);
            if (!domain.surface().in_chart(q)) continue;
            const double sec = domain.surface().gauss_curvature(q);
            rep.k_lower = std::min(rep.k_lower, sec);
            rep.K_upper = std::max(rep.K_upper, sec);
        }
    }
    rep.K = std::max(std::abs(rep.k_lower), std::abs(rep.K_upper));
    rep.r0 = std::min(focal_radius(rep.K_upper, rep.H_max), focal_radius(rep.K_upper, -rep.H_min));

    auto ball_margin = [&](double depth_sign, double max_depth, bool& ok) {
        ok = true;
        double margin = kInf;
        if (r > max_depth) {
            ok = false;
            return -kInf;
        }
        for (double t : thetas) {
            const Vec2 centre = domain.normal_point(t, depth_sign * r);
            std::vector<FootPoint> feet;
            try {
                feet = domain.feet(centre);
            } catch (const DomainError&) {
                ok = false;
                return -kInf;
            }
            const auto& f0 = feet.front();
            const bool right_side = depth_sign * f0.signed_distance >= 0.0;
            margin = std::min(margin, right_side ? (f0.distance - r) / r : -1.0);
            // closed ball touches the boundary only at psi(0, t)
            for (std::size_t k = 0; k < feet.size(); ++k)
                if (feet[k].distance <= r * (1.0 + 1e-9) && angle_gap(feet[k].theta, t) > 1e-6) ok = false;
            if (!right_side || f0.distance < r * (1.0 - 1e-9)) ok = false;
        }
        return margin;
    };
    rep.interior_margin = ball_margin(-1.0, domain.max_depth_inward(), rep.interior_ball_ok);
    rep.exterior_margin = ball_margin(1.0, domain.max_depth_outward(), rep.exterior_ball_ok);
    if (!rep.interior_ball_ok) rep.failures.push_back("interior rolling ball");
    if (!rep.exterior_ball_ok) rep.failures.push_back("exterior rolling ball");

    const auto inj = check_injectivity(domain, r, thetas);
    rep.injectivity_ok = inj.ok;
    rep.injectivity_defect = inj.defect;
    if (!inj.ok) rep.failures.push_back("injectivity: " + inj.failure);
    if (!(r <= rep.r0)) rep.failures.push_back("tube radius exceeds focal radius");

    rep.admissible = rep.failures.empty();
    return rep;
}

} // namespace sobext
