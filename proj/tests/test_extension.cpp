#include "sobext/comparison.hpp"
#include "sobext/extension.hpp"
#include "sobext/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>

using namespace sobext;

namespace {

const ModelSurface kPlane = ModelSurface::constant_curvature(0.0);
const ModelSurface kSphere = ModelSurface::constant_curvature(1.0);

DomainSpec unit_disk() { return DomainSpec::disk(kPlane, Vec2::Zero(), 1.0); }
DomainSpec cap() { return DomainSpec::disk(kSphere, Vec2::Zero(), kPi / 4); }
DomainSpec blob() { return DomainSpec::fourier(kPlane, {{1.0, 0.0, 0.2}, {}}); }

ScalarField constant(double c) {
    return {[c](const Vec2&) { return c; }, [](const Vec2&) { return Vec2(0, 0); }};
}
ScalarField coordinate_x() {
    return {[](const Vec2& p) { return p.x(); }, [](const Vec2&) { return Vec2(1, 0); }};
}
ScalarField wave() {
    return {[](const Vec2& p) { return std::sin(2 * p.x() + 0.3) * std::cos(p.y()) + p.x() * p.y(); },
            [](const Vec2& p) {
                return Vec2(2 * std::cos(2 * p.x() + 0.3) * std::cos(p.y()) + p.y(),
                            -std::sin(2 * p.x() + 0.3) * std::sin(p.y()) + p.x());
            }};
}

} // namespace

TEST(Cutoff, Examples) {
    const CutoffFamily c;
    const double r = 0.4;
    auto at = [&](double d) { return cutoff_value(c, kPlane, Vec2::Zero(), r, Vec2(d, 0.0)); };
    EXPECT_EQ(at(0.2 * r), 1.0);
    EXPECT_EQ(at(1.1 * r), 0.0);
    EXPECT_NEAR(at(0.75 * r), 0.5, 1e-15);
    EXPECT_EQ(c.G(), 3.0);
    EXPECT_EQ(CutoffFamily::ball_preset().G(), 8.0);
    EXPECT_THROW(CutoffFamily(2.0), ParameterError);
}

TEST(Cutoff, GradientBoundedByGOverR) {
    for (double G : {3.0, 8.0}) {
        const CutoffFamily c(G);
        const double r = 0.3, h = 1e-7;
        double worst = 0.0;
        for (double d = 0.0; d < 1.2 * r; d += r / 997) {
            const double g = std::abs(cutoff_value(c, kPlane, Vec2::Zero(), r, Vec2(d + h, 0.0)) -
                                      cutoff_value(c, kPlane, Vec2::Zero(), r, Vec2(d - h, 0.0))) /
                             (2 * h);
            worst = std::max(worst, g);
            const double v = cutoff_value(c, kPlane, Vec2::Zero(), r, Vec2(d, 0.0));
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
        EXPECT_LE(worst, G / r + 1e-6);
        EXPECT_NEAR(worst, CutoffFamily::slope() / r, 1e-3);
    }
}

TEST(Extend1D, Examples) {
    auto one = [](double) { return 1.0; };
    EXPECT_DOUBLE_EQ(extend_1d(one, one, 0.3), 1.0);
    EXPECT_NEAR(extend_1d([](double t) { return t; }, one, 0.4), 0.4, 1e-15);
    EXPECT_NEAR(extend_1d([](double t) { return t * t; }, one, 0.4), -0.32, 1e-15);
    EXPECT_DOUBLE_EQ(extend_1d([](double t) { return t * t; }, one, -0.4), 0.16);
}

TEST(Extend, Examples) {
    const FermiChart chart(unit_disk(), 0.5);
    const ExtendedField one(chart, constant(1.0));
    EXPECT_DOUBLE_EQ(one(Vec2(0.0, 1.1)), 1.0);
    const ExtendedField x1(chart, coordinate_x());
    for (double s : {0.05, 0.15, 0.25})
        EXPECT_NEAR(extend(x1, Vec2(1.0 + s, 0.0)), 1.0 + s, 1e-14);
    EXPECT_EQ(extend(x1, Vec2(1.6, 0.0)), 0.0);
    EXPECT_EQ(extend(x1, Vec2(0.0, -3.0)), 0.0);
}

TEST(Extend, RestrictionIdentityIsExact) {
    for (const auto& domain : {unit_disk(), blob(), cap()}) {
        const FermiChart chart(domain, 0.25);
        const auto fields = random_fields(domain, 8, 7);
        for (const auto& u : fields) {
            const ExtendedField eu(chart, u);
            for (double t = 0.05; t < 2 * kPi; t += 0.31) {
                for (double s : {0.0, -0.01, -0.1, -0.24}) {
                    const Vec2 p = domain.normal_point(t, s);
                    EXPECT_EQ(extend(eu, p), u(p));
                }
            }
        }
    }
}

TEST(Extend, SupportAndLinearity) {
    const auto domain = blob();
    const FermiChart chart(domain, 0.25);
    const auto fields = random_fields(domain, 2, 11);
    const double a = 0.7, b = -1.3;
    ScalarField combo{[&](const Vec2& p) { return a * fields[0](p) + b * fields[1](p); },
                      [&](const Vec2& p) { return Vec2(a * fields[0].gradient(p) + b * fields[1].gradient(p)); }};
    const ExtendedField eu(chart, fields[0]), ev(chart, fields[1]), ec(chart, combo);
    for (double t = 0.0; t < 2 * kPi; t += 0.23) {
        for (double s : {0.01, 0.1, 0.2, 0.249}) {
            const Vec2 p = domain.normal_point(t, s);
            EXPECT_NEAR(ec(p), a * eu(p) + b * ev(p), 1e-12);
        }
        for (double s : {0.25, 0.3, 1.0}) EXPECT_EQ(eu(domain.normal_point(t, s)), 0.0);
    }
}

TEST(Extend, C1MatchingAcrossBoundary) {
    for (const auto& domain : {unit_disk(), blob(), cap()}) {
        const FermiChart chart(domain, 0.25);
        for (const auto& u : random_fields(domain, 4, 3)) {
            const auto m = c1_mismatch(ExtendedField(chart, u), 64, 1e-4);
            EXPECT_LT(m.normal, 1e-5);
            EXPECT_LT(m.tangential, 1e-5);
        }
    }
}

TEST(Extend, FrameDecompositionMatchesChartGradient) {
    for (const auto& domain : {blob(), cap()}) {
        const FermiChart chart(domain, 0.25);
        const ExtendedField eu(chart, wave());
        const auto& surface = domain.surface();
        for (int i = 0; i < 20; ++i) {
            const double t = 0.3 + 0.29 * i, s = 0.02 + 0.0112 * i;
            const Vec2 p = domain.normal_point(t, s);
            const double h = 1e-5;
            Vec2 du;
            for (int k = 0; k < 2; ++k) {
                Vec2 e = Vec2::Zero();
                e[k] = h;
                du[k] = (eu(p + e) - eu(p - e)) / (2 * h);
            }
            const double chart_sq = du.dot(surface.metric_at(p).inverse() * du);
            const double speed = domain.boundary_sample(t).speed, x = domain.normal_jacobian(t, s);
            const double fs = (eu.in_fermi(s + h, t) - eu.in_fermi(s - h, t)) / (2 * h);
            const double ft = (eu.in_fermi(s, t + h) - eu.in_fermi(s, t - h)) / (2 * h) / (speed * x);
            EXPECT_NEAR(chart_sq, fs * fs + ft * ft, 1e-4 * std::max(1.0, chart_sq));
        }
    }
}

TEST(H1Norm, DiskExamples) {
    const auto d = unit_disk();
    const auto one = h1_norm_domain(d, constant(1.0));
    EXPECT_NEAR(one.l2_sq, kPi, 1e-12);
    EXPECT_EQ(one.grad_l2_sq, 0.0);
    const auto x = h1_norm_domain(d, coordinate_x());
    EXPECT_NEAR(x.l2_sq, kPi / 4, 1e-12);
    EXPECT_NEAR(x.grad_l2_sq, kPi, 1e-12);
    // u = x^2 y^2: int u^2 = 3 pi / 640, int |grad u|^2 = pi / 8
    const ScalarField q{[](const Vec2& p) { return p.x() * p.x() * p.y() * p.y(); },
                        [](const Vec2& p) {
                            return Vec2(2 * p.x() * p.y() * p.y(), 2 * p.x() * p.x() * p.y());
                        }};
    const auto n = h1_norm_domain(d, q, {16});
    EXPECT_NEAR(n.l2_sq, 3 * kPi / 640, 1e-6 * 3 * kPi / 640);
    EXPECT_NEAR(n.grad_l2_sq, kPi / 8, 1e-6 * kPi / 8);
    EXPECT_THROW(h1_norm_domain(d, q, {8}), ParameterError);
}

TEST(H1Norm, AreasOfDomainsAndTubes) {
    EXPECT_NEAR(h1_norm_domain(cap(), constant(1.0)).l2_sq, cap().area(), 1e-12);
    EXPECT_NEAR(h1_norm_domain(blob(), constant(1.0)).l2_sq, blob().area(), 1e-12);
    auto unit = [](double, double) { return 1.0; };
    const FermiChart disk_chart(unit_disk(), 0.5);
    EXPECT_NEAR(h1_norm_tube(disk_chart, unit, 0.0, 0.5, {}).l2_sq, kPi * (1.5 * 1.5 - 1), 1e-12);
    const FermiChart cap_chart(cap(), 0.3);
    EXPECT_NEAR(h1_norm_tube(cap_chart, unit, 0.0, 0.3, {}).l2_sq,
                2 * kPi * (std::cos(kPi / 4) - std::cos(kPi / 4 + 0.3)), 1e-12);
    // flat tube area is perimeter * r + r^2 / 2 * total curvature (2 pi)
    const FermiChart blob_chart(blob(), 0.25);
    EXPECT_NEAR(h1_norm_tube(blob_chart, unit, 0.0, 0.25, {}).l2_sq, blob().perimeter() * 0.25 + kPi * 0.0625, 1e-9);
}

TEST(H1Norm, ExtendedConstantOnTubeExterior) {
    const FermiChart chart(unit_disk(), 0.5);
    const ExtendedField one(chart, constant(1.0));
    const auto tube = h1_norm(one, Region::tube_exterior);
    EXPECT_LE(tube.l2_sq, kPi * (1.5 * 1.5 - 1));
    // closed form: int_0^r eta(s/r)^2 2 pi (1 + s) ds and int (eta'/r)^2 2 pi (1 + s) ds
    const auto g = gauss_legendre_panels(200, {0.0, 0.25, 0.5});
    const CutoffFamily c;
    double l2 = 0.0, grad = 0.0;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        const double s = g.nodes[i], e = c.eta(s / 0.5), de = c.deta(s / 0.5) / 0.5;
        l2 += g.weights[i] * e * e * 2 * kPi * (1 + s);
        grad += g.weights[i] * de * de * 2 * kPi * (1 + s);
    }
    EXPECT_NEAR(tube.l2_sq, l2, 1e-10);
    EXPECT_NEAR(tube.grad_l2_sq, grad, 1e-5 * grad);
    const auto all = h1_norm(one, Region::all);
    EXPECT_NEAR(all.l2_sq, kPi + l2, 1e-9);
}

TEST(Verify1D, Examples) {
    const Trace1D zero{[](double) { return 0.0; }, [](double) { return 0.0; }};
    const auto z = verify_1d_inequality(zero, 1.0, 3.0);
    EXPECT_EQ(z.lhs, 0.0);
    EXPECT_EQ(z.rhs, 0.0);
    EXPECT_EQ(z.ratio, 0.0);
    const Trace1D one{[](double) { return 1.0; }, [](double) { return 0.0; }};
    const auto o = verify_1d_inequality(one, 1.0, 3.0);
    EXPECT_NEAR(o.rhs, 1558.0, 1e-10);
    // lhs by a dense trapezoid rule on the extension itself with a finite-difference derivative
    const CutoffFamily c;
    auto e = [&](double s) { return extend_1d(one.value, [&](double t) { return c.eta(t); }, s); };
    double lhs = 0.0;
    const int n = 200000;
    for (int i = 0; i <= n; ++i) {
        const double s = double(i) / n, w = (i == 0 || i == n) ? 0.5 / n : 1.0 / n;
        const double h = 1e-6;
        const double sl = std::max(s - h, 1e-12), sr = std::min(s + h, 1.0);
        const double de = (e(sr) - e(sl)) / (sr - sl);
        lhs += w * (e(s) * e(s) + de * de);
    }
    EXPECT_NEAR(o.lhs, lhs, 1e-6 * lhs);
    EXPECT_LT(o.ratio, 1.0);
}

TEST(Verify1D, RandomTracesSatisfyInequality) {
    int checked = 0;
    for (double r : {0.25, 0.5, 1.0}) {
        for (int k = 0; k < 100; ++k) {
            const auto tr = random_trace(r, 1000 + k);
            for (double G : {3.0, 8.0}) {
                EXPECT_LT(verify_1d_inequality(tr, r, G).ratio, 1.0);
                ++checked;
            }
        }
    }
    EXPECT_EQ(checked, 600);
}

TEST(RandomFields, GradientsAreConsistent) {
    for (const auto& domain : {unit_disk(), blob(), cap()}) {
        std::vector<Vec2> probes;
        for (double t = 0; t < 2 * kPi; t += 0.5)
            for (double s : {-0.05, -0.3}) probes.push_back(domain.normal_point(t, s));
        for (const auto& u : random_fields(domain, 12, 5)) EXPECT_LT(gradient_consistency(u, probes), 1e-5);
    }
}

TEST(OperatorNorm, Examples) {
    const FermiChart chart(unit_disk(), 0.5);
    const CutoffFamily c;
    const auto est = operator_norm_estimate(chart, c, {constant(1.0), coordinate_x(), constant(0.0)});
    EXPECT_NEAR(est.distortion, 3.0, 1e-9);
    EXPECT_NEAR(est.bound, 1 + 3 * std::max(164.0, 82.0 + 164.0 * 9 / 0.25), 1e-9);
    const ExtendedField one(chart, constant(1.0));
    EXPECT_NEAR(est.ratios[0], (kPi + h1_norm(one, Region::tube_exterior).total()) / kPi, 1e-12);
    EXPECT_EQ(est.ratios[2], 0.0);
    EXPECT_TRUE(est.within_bound);
    EXPECT_LE(est.ratios[1], est.bound);
    EXPECT_THROW(operator_norm_estimate(FermiChart(unit_disk(), 1.0), c, {constant(1.0)}), RegularityError);
}

TEST(OperatorNorm, DeterministicAcrossThreadCounts) {
    const FermiChart chart(blob(), 0.25);
    const auto fields = random_fields(blob(), 3, 42);
    const auto many = operator_norm_estimate(chart, CutoffFamily(), fields, {32});
    setenv("FE_THREADS", "1", 1);
    const auto one = operator_norm_estimate(chart, CutoffFamily(), fields, {32});
    unsetenv("FE_THREADS");
    ASSERT_EQ(many.ratios.size(), one.ratios.size());
    for (std::size_t i = 0; i < one.ratios.size(); ++i) EXPECT_EQ(many.ratios[i], one.ratios[i]);
}
