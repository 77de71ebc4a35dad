#include "sobext/comparison.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace sobext {

namespace {
constexpr double kInfinity = std::numeric_limits<double>::infinity();
constexpr double kHalfPi = 1.57079632679489661923;
} // namespace

double mu(double k, double h, double s) {
    if (k > 0) {
        const double a = std::sqrt(k);
        return std::cos(a * s) + h / a * std::sin(a * s);
    }
    if (k < 0) {
        const double a = std::sqrt(-k);
        return std::cosh(a * s) + h / a * std::sinh(a * s);
    }
    return 1.0 + h * s;
}

double mu_prime(double k, double h, double s) {
    if (k > 0) {
        const double a = std::sqrt(k);
        return -a * std::sin(a * s) + h * std::cos(a * s);
    }
    if (k < 0) {
        const double a = std::sqrt(-k);
        return a * std::sinh(a * s) + h * std::cosh(a * s);
    }
    return h;
}

double mu_second(double k, double h, double s) { return -k * mu(k, h, s); }

double first_zero(double k, double h) {
    if (k > 0) {
        // cos(a s) + (h/a) sin(a s) = 0  <=>  cot(a s) = -h/a
        const double a = std::sqrt(k);
        return (kHalfPi + std::atan(h / a)) / a;
    }
    if (k < 0) {
        // coth(a s) = -h/a has a positive root iff -h/a > 1
        const double a = std::sqrt(-k);
        if (-h > a) return std::atanh(a / -h) / a;
        return kInfinity;
    }
    return h < 0 ? -1.0 / h : kInfinity;
}

double focal_radius(double K, double H) { return first_zero(K, -H); }

double admissible_rolling_radius(double K, double H) {
    if (!(K >= 0.0) || !(H >= 0.0)) throw ParameterError("admissible_rolling_radius needs K, H >= 0");
    double r = 1.0;
    if (K > 0) {
        const double a = std::sqrt(K);
        r = std::min(r, std::atan((1.0 + H) / (2.0 * a)) / a);
        if (H > 0) r = std::min(r, std::atan(a / (2.0 * H)) / a);
    } else if (H > 0) {
        r = std::min(r, 0.5 / H);
    }
    return r;
}

void CurvatureData::validate() const {
    if (!(k_lower <= K_upper)) throw ParameterError("k_lower must not exceed K_upper");
    if (!(H_min <= H_max)) throw ParameterError("H_min must not exceed H_max");
    if (n < 2) throw ParameterError("n must be at least 2");
}

VolumeRatioBounds volume_ratio_bounds(const CurvatureData& data, double s) {
    data.validate();
    if (!(s >= 0.0)) throw ParameterError("s must be non-negative");
    const double lower = mu(data.K_upper, data.H_min, s);
    const double upper = mu(data.k_lower, data.H_max, s);
    if (s >= first_zero(data.K_upper, data.H_min) || s >= first_zero(data.k_lower, data.H_max) || lower <= 0.0 ||
        upper <= 0.0)
        throw ComparisonBreakdownError("s = " + std::to_string(s) + " is beyond the focal radius");
    const double e = data.n - 1;
    return {std::pow(lower, e), std::pow(upper, e)};
}

ComparisonProfile ComparisonProfile::from_curvature(const CurvatureData& data, double r) {
    data.validate();
    ComparisonProfile p;
    p.mu_d = {data.k_lower, data.H_max};
    p.mu_D = {data.K_upper, data.H_max};
    p.n = data.n;
    p.r = r;
    // exterior growth must stay finite, interior shrinkage positive, and no focal points
    // on either side of the boundary
    p.r0 = std::min({first_zero(data.k_lower, data.H_max), focal_radius(data.K_upper, data.H_max),
                     focal_radius(data.K_upper, -data.H_min)});
    if (!(r > 0.0)) throw ParameterError("tube radius must be positive");
    return p;
}

ComparisonProfile ComparisonProfile::exact(Fn d, Fn D, int n, double r, double r0) {
    if (!d || !D) throw ParameterError("exact profile needs both d and D");
    ComparisonProfile p;
    p.exact_d_ = std::move(d);
    p.exact_D_ = std::move(D);
    p.n = n;
    p.r = r;
    p.r0 = r0;
    return p;
}

ComparisonProfile ComparisonProfile::ball(double R0, int n, double r) {
    if (!(R0 > 0.0)) throw ParameterError("ball radius must be positive");
    const double e = n - 1;
    auto p = exact([R0, e](double s) { return std::pow(R0 / (R0 + s), e); },
                   [R0, e](double s) { return std::pow(R0 / (R0 - s), e); }, n, r, R0);
    p.mu_d = {0.0, 1.0 / R0};
    p.mu_D = {0.0, 1.0 / R0};
    return p;
}

double ComparisonProfile::d(double s) const {
    if (exact_d_) return exact_d_(s);
    const double m = mu(mu_d.k, mu_d.h, s);
    if (m <= 0.0) return 0.0;
    return std::pow(m, -(n - 1.0));
}

double ComparisonProfile::D(double s) const {
    if (exact_D_) return exact_D_(s);
    const double m = mu(mu_D.k, mu_D.h, -s);
    if (m <= 0.0) return kInfinity;
    return std::pow(m, -(n - 1.0));
}

double maximize_on_interval(const std::function<double(double)>& fn, double a, double b, int grid) {
    if (b <= a) return fn(a);
    double best_x = a, best = fn(a);
    const double step = (b - a) / grid;
    for (int i = 1; i <= grid; ++i) {
        const double x = i == grid ? b : a + i * step;
        const double v = fn(x);
        if (v > best) {
            best = v;
            best_x = x;
        }
    }
    double lo = std::max(a, best_x - step), hi = std::min(b, best_x + step);
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = fn(x1), f2 = fn(x2);
    while (hi - lo > 1e-9 * std::max(1.0, std::abs(b - a))) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = fn(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = fn(x1);
        }
    }
    return std::max({best, f1, f2});
}

double distortion_factor(const ComparisonProfile& profile, double r) {
    if (!(r > 0.0)) throw ParameterError("r must be positive");
    if (r > profile.r0) throw DegenerateTubeError("tube radius exceeds the profile's focal radius");
    // D(t)/d(s) separates, so the joint maximum is the product of two 1D maxima.
    double min_d = kInfinity;
    for (int i = 0; i <= 1024; ++i) min_d = std::min(min_d, profile.d(r * i / 1024.0));
    if (!(min_d > 0.0)) throw DegenerateTubeError("d vanishes on [0, r]");
    const double inv_d = maximize_on_interval([&](double s) { return 1.0 / profile.d(s); }, 0.0, r);
    const double big_d = maximize_on_interval([&](double t) { return profile.D(t); }, 0.0, r);
    if (!std::isfinite(inv_d) || !std::isfinite(big_d)) throw DegenerateTubeError("distortion is unbounded on [0, r]");
    return big_d * inv_d;
}

double extension_norm_bound(double distortion, double G, double r) {
    if (!(distortion >= 1.0) || !(G >= 0.0) || !(r > 0.0))
        throw ParameterError("extension_norm_bound needs distortion >= 1, G >= 0, r > 0");
    return 1.0 + distortion * std::max(164.0, 82.0 + 164.0 * G * G / (r * r));
}

double mean_curvature_bound(double k, double h, double s, int n) {
    const double z = first_zero(k, h);
    const double m = mu(k, h, s);
    if (s >= z * (1.0 - 1e-12) || m <= 0.0)
        throw ComparisonBreakdownError("comparison function vanishes at s = " + std::to_string(s));
    return (n - 1.0) * mu_prime(k, h, s) / m;
}

} // namespace sobext
