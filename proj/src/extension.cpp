#include "sobext/extension.hpp"

#include "sobext/comparison.hpp"
#include "sobext/parallel.hpp"
#include "sobext/quadrature.hpp"

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

namespace sobext {

double gradient_consistency(const ScalarField& field, const std::vector<Vec2>& probes, double h) {
    double worst = 0.0;
    for (const auto& p : probes) {
        const Vec2 g = field.gradient(p);
        Vec2 fd;
        for (int k = 0; k < 2; ++k) {
            Vec2 e = Vec2::Zero();
            e[k] = h;
            fd[k] = (field.value(p + e) - field.value(p - e)) / (2 * h);
        }
        worst = std::max(worst, (g - fd).norm() / std::max(1.0, g.norm()));
    }
    return worst;
}

CutoffFamily::CutoffFamily(double G) : G_(G) {
    if (!(G >= slope()) || !std::isfinite(G))
        throw ParameterError("cutoff gradient constant G must be at least " + std::to_string(slope()));
}

double CutoffFamily::eta(double t) const {
    if (t <= 0.5) return 1.0;
    if (t >= 1.0) return 0.0;
    const double x = 2.0 * (t - 0.5);
    return 1.0 - x * x * (3.0 - 2.0 * x);
}

double CutoffFamily::deta(double t) const {
    if (t <= 0.5 || t >= 1.0) return 0.0;
    const double x = 2.0 * (t - 0.5);
    return -12.0 * x * (1.0 - x);
}

double cutoff_value(const CutoffFamily& family, const ModelSurface& surface, const Vec2& center, double r,
                    const Vec2& point) {
    if (!(r > 0.0)) throw ParameterError("cutoff radius must be positive");
    return family.eta(surface.distance(center, point) / r);
}

double extend_1d(const std::function<double(double)>& trace, const std::function<double(double)>& cutoff,
                 double s) {
    if (s <= 0.0) return trace(s);
    return (-3.0 * trace(-s) + 4.0 * trace(-0.5 * s)) * cutoff(s);
}

ExtendedField::ExtendedField(const FermiChart& chart, ScalarField source, CutoffFamily cutoff)
    : chart_(chart), source_(std::move(source)), cutoff_(cutoff) {
    if (!source_.value) throw ParameterError("extended field needs a source evaluator");
}

double ExtendedField::in_fermi(double s, double theta) const {
    const double r = chart_.r();
    if (!(s > -r)) throw OutOfTubeError("Fermi depth below -r");
    const auto& domain = chart_.domain();
    if (s <= 0.0) return source_.value(domain.normal_point(theta, s));
    if (s >= r) return 0.0;
    auto trace = [&](double t) { return source_.value(domain.normal_point(theta, t)); };
    auto cut = [&](double t) { return cutoff_.eta(t / r); };
    return extend_1d(trace, cut, s);
}

double ExtendedField::operator()(const Vec2& point) const {
    const auto& domain = chart_.domain();
    const auto feet = domain.feet(point);
    const double snap = 1e-13 * std::max(1.0, domain.radius());
    if (feet.front().signed_distance <= snap) return source_.value(point);
    if (feet.front().distance >= chart_.r()) return 0.0;
    const auto c = fermi_invert(chart_, point, 1e-9);
    return in_fermi(c.s, c.theta);
}

double extend(const ExtendedField& field, const Vec2& point) { return field(point); }

namespace {

double metric_gradient_sq(const ModelSurface& surface, const Vec2& p, const Vec2& du) {
    return du.dot(surface.metric_at(p).ldlt().solve(du));
}

} // namespace

H1Norm h1_norm_domain(const DomainSpec& domain, const ScalarField& field, const QuadratureSpec& quad) {
    if (quad.nodes < 16) throw ParameterError("quadrature needs at least 16 nodes per axis");
    if (!field.gradient) throw ParameterError("domain H1 norm needs the field gradient");
    const auto radial = gauss_legendre(quad.nodes, 0.0, 1.0);
    const auto angular = periodic_trapezoid(4 * quad.nodes);
    const auto& surface = domain.surface();
    const bool disk = domain.boundary() == DomainSpec::Boundary::geodesic_disk;
    std::vector<H1Norm> rows(angular.nodes.size());
    parallel_for(angular.nodes.size(), [&](std::size_t j) {
        const double t = angular.nodes[j];
        const double extent = disk ? domain.radius() : domain.profile().value(t);
        H1Norm acc;
        for (std::size_t i = 0; i < radial.nodes.size(); ++i) {
            const double rho = radial.nodes[i] * extent;
            Vec2 p;
            double area;
            if (disk) {
                p = domain.center() + surface.from_polar(rho, t);
                area = surface.profile().f(rho) * extent;
            } else {
                p = rho * Vec2(std::cos(t), std::sin(t));
                area = rho * extent;
            }
            const double w = radial.weights[i] * angular.weights[j] * area;
            const double v = field.value(p);
            const double g2 = metric_gradient_sq(surface, p, field.gradient(p));
            if (!std::isfinite(v) || !std::isfinite(g2)) throw EvaluationError("field is not finite at a quadrature node");
            acc.l2_sq += w * v * v;
            acc.grad_l2_sq += w * g2;
        }
        rows[j] = acc;
    });
    H1Norm total;
    for (const auto& r : rows) {
        total.l2_sq += r.l2_sq;
        total.grad_l2_sq += r.grad_l2_sq;
    }
    return total;
}

H1Norm h1_norm_tube(const FermiChart& chart, const std::function<double(double, double)>& f, double s_lo,
                    double s_hi, const std::vector<double>& breaks, const QuadratureSpec& quad) {
    if (quad.nodes < 16) throw ParameterError("quadrature needs at least 16 nodes per axis");
    if (!(s_lo < s_hi)) throw ParameterError("tube quadrature needs s_lo < s_hi");
    std::vector<double> edges{s_lo};
    for (double b : breaks)
        if (b > s_lo && b < s_hi) edges.push_back(b);
    edges.push_back(s_hi);
    std::sort(edges.begin(), edges.end());
    const auto depth = gauss_legendre_panels(quad.nodes, edges);
    const auto angular = periodic_trapezoid(4 * quad.nodes);
    const auto& domain = chart.domain();
    const double step = 1e-5 * domain.diameter();
    std::vector<H1Norm> rows(angular.nodes.size());
    parallel_for(angular.nodes.size(), [&](std::size_t j) {
        const double t = angular.nodes[j];
        const double speed = domain.boundary_sample(t).speed;
        const double ht = step / speed;
        H1Norm acc;
        for (std::size_t i = 0; i < depth.nodes.size(); ++i) {
            const double s = depth.nodes[i];
            const double x = domain.normal_jacobian(t, s);
            const double w = depth.weights[i] * angular.weights[j] * speed * x;
            const double v = f(s, t);
            double fs;
            if (s - step < s_lo)
                fs = (-3.0 * v + 4.0 * f(s + step, t) - f(s + 2 * step, t)) / (2 * step);
            else if (s + step > s_hi)
                fs = (3.0 * v - 4.0 * f(s - step, t) + f(s - 2 * step, t)) / (2 * step);
            else
                fs = (f(s + step, t) - f(s - step, t)) / (2 * step);
            const double ft = (f(s, t + ht) - f(s, t - ht)) / (2 * ht);
            const double g2 = fs * fs + ft * ft / (speed * x * speed * x);
            if (!std::isfinite(v) || !std::isfinite(g2)) throw EvaluationError("field is not finite at a quadrature node");
            acc.l2_sq += w * v * v;
            acc.grad_l2_sq += w * g2;
        }
        rows[j] = acc;
    });
    H1Norm total;
    for (const auto& r : rows) {
        total.l2_sq += r.l2_sq;
        total.grad_l2_sq += r.grad_l2_sq;
    }
    return total;
}

H1Norm h1_norm(const ExtendedField& field, Region region, const QuadratureSpec& quad) {
    H1Norm out;
    if (region == Region::omega || region == Region::all) out = h1_norm_domain(field.chart().domain(), field.source(), quad);
    if (region == Region::tube_exterior || region == Region::all) {
        const double r = field.chart().r();
        const auto tube = h1_norm_tube(
            field.chart(), [&](double s, double t) { return field.in_fermi(s, t); }, 0.0, r, {0.5 * r}, quad);
        out.l2_sq += tube.l2_sq;
        out.grad_l2_sq += tube.grad_l2_sq;
    }
    return out;
}

InequalityCheck verify_1d_inequality(const Trace1D& trace, double r, double G, const QuadratureSpec& quad) {
    if (!(r > 0.0)) throw ParameterError("r must be positive");
    if (!trace.value || !trace.derivative) throw ParameterError("trace needs value and derivative");
    const CutoffFamily cutoff(G);
    const auto outside = gauss_legendre_panels(quad.nodes, {0.0, 0.5 * r, r});
    const auto inside = gauss_legendre_panels(quad.nodes, {-r, -0.5 * r, 0.0});
    InequalityCheck out;
    for (std::size_t i = 0; i < outside.nodes.size(); ++i) {
        const double s = outside.nodes[i];
        const double reflected = -3.0 * trace.value(-s) + 4.0 * trace.value(-0.5 * s);
        const double dreflected = 3.0 * trace.derivative(-s) - 2.0 * trace.derivative(-0.5 * s);
        const double phi = cutoff.eta(s / r), dphi = cutoff.deta(s / r) / r;
        const double e = reflected * phi, de = dreflected * phi + reflected * dphi;
        out.lhs += outside.weights[i] * (e * e + de * de);
    }
    double u2 = 0.0, du2 = 0.0;
    for (std::size_t i = 0; i < inside.nodes.size(); ++i) {
        const double u = trace.value(inside.nodes[i]), du = trace.derivative(inside.nodes[i]);
        u2 += inside.weights[i] * u * u;
        du2 += inside.weights[i] * du * du;
    }
    out.rhs = 164.0 * du2 + (82.0 + 164.0 * G * G / (r * r)) * u2;
    out.ratio = out.rhs > 0.0 ? out.lhs / out.rhs : 0.0;
    return out;
}

namespace {

double distortion_from(const RegularityReport& rep, int n) {
    const CurvatureData data{rep.k_lower, rep.K_upper, rep.H_min, rep.H_max, n};
    return distortion_factor(ComparisonProfile::from_curvature(data, rep.r), rep.r);
}

} // namespace

double chart_distortion(const FermiChart& chart) {
    const auto rep = check_regularity(chart.domain(), chart.r());
    return distortion_from(rep, chart.domain().surface().dimension());
}

OperatorNormEstimate operator_norm_estimate(const FermiChart& chart, const CutoffFamily& cutoff,
                                            const std::vector<ScalarField>& samples, const QuadratureSpec& quad) {
    const auto rep = check_regularity(chart.domain(), chart.r());
    if (!rep.admissible) {
        std::string why;
        for (const auto& f : rep.failures) why += (why.empty() ? "" : ", ") + f;
        throw RegularityError("chart is not admissible: " + why);
    }
    OperatorNormEstimate est;
    est.distortion = distortion_from(rep, chart.domain().surface().dimension());
    est.bound = extension_norm_bound(est.distortion, cutoff.G(), chart.r());
    for (const auto& u : samples) {
        const ExtendedField eu(chart, u, cutoff);
        const auto inner = h1_norm(eu, Region::omega, quad);
        const auto outer = h1_norm(eu, Region::tube_exterior, quad);
        const double denom = inner.total();
        const double ratio = denom > 0.0 ? (denom + outer.total()) / denom : 0.0;
        est.ratios.push_back(ratio);
        est.max_ratio = std::max(est.max_ratio, ratio);
    }
    est.within_bound = est.max_ratio <= est.bound;
    return est;
}

C1Mismatch c1_mismatch(const ExtendedField& field, int probes, double h) {
    const auto& domain = field.chart().domain();
    C1Mismatch out;
    const double k = 1e-4;
    for (int i = 0; i < probes; ++i) {
        const double t = 2.0 * kPi * i / probes;
        auto f = [&](double s, double th) { return field(domain.normal_point(th, s)); };
        const double f0 = f(0.0, t);
        const double d_in = (3.0 * f0 - 4.0 * f(-h, t) + f(-2 * h, t)) / (2 * h);
        const double d_out = (-3.0 * f0 + 4.0 * f(h, t) - f(2 * h, t)) / (2 * h);
        out.normal = std::max(out.normal, std::abs(d_in - d_out));
        const double speed = domain.boundary_sample(t).speed;
        auto tangential = [&](double s) {
            return (f(s, t + k) - f(s, t - k)) / (2 * k * speed * domain.normal_jacobian(t, s));
        };
        const double t_in = 2.0 * tangential(-h) - tangential(-2 * h);
        const double t_out = 2.0 * tangential(h) - tangential(2 * h);
        out.tangential = std::max(out.tangential, std::abs(t_in - t_out));
    }
    return out;
}

namespace {

using Rng = boost::random::mt19937;

double uniform(Rng& rng, double a, double b) { return boost::random::uniform_real_distribution<double>(a, b)(rng); }

struct Term {
    int kind = 0; // 0 polynomial, 1 plane wave, 2 gaussian bump
    std::vector<double> c;
    Vec2 origin = Vec2::Zero();
    Vec2 k = Vec2::Zero();
    double phase = 0.0, amplitude = 1.0, width = 1.0;

    double value(const Vec2& p) const {
        const Vec2 q = p - origin;
        const double x = q.x(), y = q.y();
        switch (kind) {
        case 0:
            return c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y + c[6] * x * x * x +
                   c[7] * y * y * y;
        case 1:
            return amplitude * std::sin(k.dot(q) + phase);
        default:
            return amplitude * std::exp(-q.squaredNorm() / (2 * width * width));
        }
    }

    Vec2 gradient(const Vec2& p) const {
        const Vec2 q = p - origin;
        const double x = q.x(), y = q.y();
        switch (kind) {
        case 0:
            return {c[1] + 2 * c[3] * x + c[4] * y + 3 * c[6] * x * x, c[2] + c[4] * x + 2 * c[5] * y + 3 * c[7] * y * y};
        case 1:
            return amplitude * std::cos(k.dot(q) + phase) * k;
        default:
            return -value(p) / (width * width) * q;
        }
    }
};

Vec2 domain_center(const DomainSpec& d) {
    return d.boundary() == DomainSpec::Boundary::geodesic_disk ? d.center() : Vec2::Zero();
}

Term random_term(const DomainSpec& domain, int kind, Rng& rng) {
    const double scale = 0.5 * domain.diameter();
    Term t;
    t.kind = kind;
    t.origin = domain_center(domain);
    if (kind == 0) {
        t.c.resize(8);
        for (int i = 0; i < 8; ++i) {
            const int degree = i == 0 ? 0 : i < 3 ? 1 : i < 6 ? 2 : 3;
            t.c[i] = uniform(rng, -1.0, 1.0) / std::pow(scale, degree);
        }
    } else if (kind == 1) {
        const double freq = uniform(rng, 0.5, 6.0) / scale, dir = uniform(rng, 0.0, 2 * kPi);
        t.k = freq * Vec2(std::cos(dir), std::sin(dir));
        t.phase = uniform(rng, 0.0, 2 * kPi);
        t.amplitude = uniform(rng, 0.3, 1.0);
    } else {
        const double theta = uniform(rng, 0.0, 2 * kPi);
        const double depth = uniform(rng, 0.0, 0.3) * scale;
        t.origin = domain.normal_point(theta, -std::min(depth, 0.9 * domain.max_depth_inward()));
        t.width = uniform(rng, 0.1, 0.5) * scale;
        t.amplitude = uniform(rng, 0.3, 1.0);
    }
    return t;
}

} // namespace

std::vector<ScalarField> random_fields(const DomainSpec& domain, int count, std::uint64_t seed) {
    if (count < 0) throw ParameterError("sample count must be non-negative");
    Rng rng(static_cast<std::uint32_t>(seed ^ (seed >> 32)));
    std::vector<ScalarField> fields;
    for (int i = 0; i < count; ++i) {
        const int kind = i % 4;
        auto terms = std::make_shared<std::vector<Term>>();
        if (kind < 3) {
            terms->push_back(random_term(domain, kind, rng));
        } else {
            for (int k = 0; k < 3; ++k) terms->push_back(random_term(domain, k, rng));
        }
        ScalarField f;
        f.value = [terms](const Vec2& p) {
            double v = 0.0;
            for (const auto& t : *terms) v += t.value(p);
            return v;
        };
        f.gradient = [terms](const Vec2& p) {
            Vec2 g = Vec2::Zero();
            for (const auto& t : *terms) g += t.gradient(p);
            return g;
        };
        fields.push_back(std::move(f));
    }
    return fields;
}

Trace1D random_trace(double r, std::uint64_t seed) {
    Rng rng(static_cast<std::uint32_t>(seed ^ (seed >> 32)));
    const int modes = boost::random::uniform_int_distribution<int>(0, 8)(rng);
    auto a = std::make_shared<std::vector<double>>(), b = std::make_shared<std::vector<double>>();
    for (int k = 0; k <= modes; ++k) {
        a->push_back(uniform(rng, -1.0, 1.0) / (1.0 + k));
        b->push_back(uniform(rng, -1.0, 1.0) / (1.0 + k));
    }
    const double w = kPi / r;
    Trace1D tr;
    tr.value = [a, b, w](double t) {
        double v = 0.0;
        for (std::size_t k = 0; k < a->size(); ++k) v += (*a)[k] * std::cos(k * w * t) + (*b)[k] * std::sin(k * w * t);
        return v;
    };
    tr.derivative = [a, b, w](double t) {
        double v = 0.0;
        for (std::size_t k = 0; k < a->size(); ++k)
            v += k * w * (-(*a)[k] * std::sin(k * w * t) + (*b)[k] * std::cos(k * w * t));
        return v;
    };
    return tr;
}

} // namespace sobext
