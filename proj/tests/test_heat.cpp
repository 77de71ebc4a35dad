#include "sobext/heat.hpp"

#include <boost/math/special_functions/bessel.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>

using namespace sobext;

namespace {

DomainSpec flat_disk(double radius = 1.0) {
    return DomainSpec::disk(ModelSurface::constant_curvature(0.0), Vec2::Zero(), radius);
}

DomainSpec blob() { return DomainSpec::fourier(ModelSurface::constant_curvature(0.0), {{1.0, 0.0, 0.2}, {}}); }

DomainSpec cap() { return DomainSpec::disk(ModelSurface::constant_curvature(1.0), Vec2::Zero(), kPi / 4); }

DomainSpec hyperbolic_disk() { return DomainSpec::disk(ModelSurface::constant_curvature(-1.0), Vec2::Zero(), 0.7); }

// Curvature -(6 c1 + 20 c2 r^2) / (1 + c1 r^2 + c2 r^4): negative at the pole, positive past r ~ 0.39.
DomainSpec warped_disk() {
    return DomainSpec::disk(ModelSurface::warped(WarpProfile::odd_poly({0.1, -0.2})), Vec2::Zero(), 0.8);
}

// First positive zero of J1' by bisection.
double bessel_prime_root() {
    auto d = [](double x) { return 0.5 * (boost::math::cyl_bessel_j(0, x) - boost::math::cyl_bessel_j(2, x)); };
    double lo = 1.5, hi = 2.2;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (d(lo) * d(mid) <= 0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

// Discrete cosine eigenbasis of the lumped P1 Neumann interval with N cells.
struct IntervalBasis {
    int N;
    double L;
    double lambda(int k) const {
        const double h = L / N;
        const double s = std::sin(k * kPi / (2.0 * N));
        return 4.0 / (h * h) * s * s;
    }
    double phi(int k, int i) const {
        return (k == 0 ? 1.0 / std::sqrt(L) : std::sqrt(2.0 / L)) * std::cos(k * kPi * i / N);
    }
    // (e^{-t Delta} f)(i) through the cosine basis with lumped masses.
    double evolve(const Eigen::VectorXd& f, double t, int i) const {
        const double h = L / N;
        double sum = 0.0;
        for (int k = 0; k <= N; ++k) {
            double c = 0.0;
            for (int j = 0; j <= N; ++j) c += (j == 0 || j == N ? 0.5 * h : h) * f(j) * phi(k, j);
            // The k = N mode has squared norm 2 under the lumped masses.
            const double norm = k == N ? 2.0 : 1.0;
            sum += std::exp(-lambda(k) * t) * c * phi(k, i) / norm;
        }
        return sum;
    }
};

const DiscreteDomain& disk_coarse_domain() {
    static const DiscreteDomain d = DiscreteDomain::disk_like(flat_disk(), 16, 32);
    return d;
}

const NeumannSystem& disk_coarse() {
    static const NeumannSystem sys = assemble(disk_coarse_domain());
    return sys;
}

const DiscreteDomain& disk_fine_domain() {
    static const DiscreteDomain d = DiscreteDomain::disk_like(flat_disk(), 32, 64);
    return d;
}

const NeumannSystem& disk_fine() {
    static const NeumannSystem sys = assemble(disk_fine_domain());
    return sys;
}

double relative_change(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

} // namespace

TEST(DiscreteDomain, WeightsSumToVolume) {
    const auto interval = DiscreteDomain::interval(kPi, 1000);
    EXPECT_NEAR(interval.weights().sum(), kPi, 1e-12);
    for (const auto& dom : {flat_disk(), blob(), cap(), hyperbolic_disk(), warped_disk()}) {
        const auto d = DiscreteDomain::disk_like(dom, 16, 32);
        EXPECT_NEAR(d.weights().sum() / dom.area(), 1.0, 1e-8);
        EXPECT_GT(d.weights().minCoeff(), 0.0);
    }
    EXPECT_THROW(DiscreteDomain::disk_like(flat_disk(), 8, 32), ParameterError);
    EXPECT_THROW(DiscreteDomain::interval(1.0, 4), ParameterError);
}

TEST(DiscreteDomain, DistancesSatisfyTriangleInequality) {
    for (const auto& dom : {flat_disk(), cap(), warped_disk()}) {
        const auto d = DiscreteDomain::disk_like(dom, 16, 32);
        const auto samples = d.sample_nodes(12);
        for (int a : samples) {
            const auto da = d.distances_from(a);
            for (int b : samples) {
                const auto db = d.distances_from(b);
                EXPECT_NEAR(da[b], db[a], 1e-9);
                for (int c : samples) EXPECT_LE(da[c], da[b] + db[c] + 1e-12);
            }
        }
    }
}

TEST(DiscreteDomain, GridDistancesApproximateRadialGeodesics) {
    // Distances from the pole are exact along the radial edges.
    const auto d = DiscreteDomain::disk_like(warped_disk(), 16, 32);
    const auto dist = d.distances_from(0);
    for (int i = 1; i <= 16; ++i) EXPECT_NEAR(dist[d.index(i, 5)], 0.8 * i / 16.0, 1e-12);
}

TEST(DiscreteDomain, BallVolumes) {
    const auto& d = disk_coarse_domain();
    for (int node : d.sample_nodes(9))
        for (double s : {0.05, 0.3, 0.9, 2.5}) {
            const double exact = d.ball_volume(node, s);
            EXPECT_NEAR(d.ball_volume_rays(d.nodes()[node], s, 512, 64), exact, 2e-3 * exact);
        }
    EXPECT_NEAR(lens_area(0.0, 0.5, 1.0), kPi * 0.25, 1e-15);
    EXPECT_NEAR(lens_area(1.0, 1.0, 1.0), 2.0 * kPi / 3.0 - std::sqrt(3.0) / 2.0, 1e-14);
    EXPECT_EQ(lens_area(3.0, 1.0, 1.0), 0.0);

    // Geodesic balls about the pole: 2 pi (1 - cos s) on the sphere, 2 pi (cosh s - 1) on the hyperbolic plane.
    const auto c = DiscreteDomain::disk_like(cap(), 16, 32);
    EXPECT_NEAR(c.ball_volume(0, 0.5), 2 * kPi * (1 - std::cos(0.5)), 1e-12);
    EXPECT_NEAR(c.ball_volume(0, 2.0), cap().area(), 1e-12);
    const auto h = DiscreteDomain::disk_like(hyperbolic_disk(), 16, 32);
    EXPECT_NEAR(h.ball_volume(0, 0.3), 2 * kPi * (std::cosh(0.3) - 1), 1e-12);

    const auto interval = DiscreteDomain::interval(1.0, 100);
    EXPECT_NEAR(interval.ball_volume(50, 0.1), 0.2, 1e-14);
    EXPECT_NEAR(interval.ball_volume(0, 0.1), 0.1, 1e-14);
    EXPECT_NEAR(interval.ball_volume(10, 5.0), 1.0, 1e-14);
}

TEST(Assemble, IntervalSpectrumMatchesCosineBasis) {
    const auto d = DiscreteDomain::interval(kPi, 1000);
    const auto sys = assemble(d);
    const IntervalBasis basis{1000, kPi};
    EXPECT_LT(std::abs(sys.eigenvalues(0)), 1e-10);
    for (int k = 1; k <= 6; ++k) EXPECT_NEAR(sys.eigenvalues(k) / basis.lambda(k), 1.0, 1e-9);
    EXPECT_NEAR(sys.eigenvalues(1), 1.0, 1e-3);
    for (int i = 0; i <= 1000; i += 37) {
        EXPECT_NEAR(sys.eigenvectors(i, 0), 1.0 / std::sqrt(kPi), 1e-8);
        EXPECT_NEAR(std::abs(sys.eigenvectors(i, 1)), std::abs(basis.phi(1, i)), 1e-8);
    }
}

TEST(Assemble, NeumannStructure) {
    for (const auto& dom : {flat_disk(), blob(), cap()}) {
        const auto d = DiscreteDomain::disk_like(dom, 16, 32);
        const auto sys = assemble(d);
        const Eigen::VectorXd ones = Eigen::VectorXd::Ones(d.size());
        const double scale = sys.stiffness.coeffs().cwiseAbs().maxCoeff();
        EXPECT_LT((sys.stiffness * ones).cwiseAbs().maxCoeff(), 1e-12 * scale);
        const Eigen::SparseMatrix<double> asym = sys.stiffness - Eigen::SparseMatrix<double>(sys.stiffness.transpose());
        EXPECT_LT(asym.coeffs().cwiseAbs().maxCoeff(), 1e-12 * scale);
        EXPECT_LT(std::abs(sys.eigenvalues(0)), 1e-10);
        EXPECT_GE(sys.eigenvalues.minCoeff(), -1e-10);
        const double c = 1.0 / std::sqrt(d.weights().sum());
        EXPECT_LT((sys.eigenvectors.col(0).array() - c).abs().maxCoeff(), 1e-8);
        const Eigen::MatrixXd gram = sys.eigenvectors.transpose() * sys.mass.asDiagonal() * sys.eigenvectors;
        EXPECT_LT((gram - Eigen::MatrixXd::Identity(d.size(), d.size())).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(Assemble, SecondOrderConsistencyAwayFromBoundary) {
    // W^{-1} K u approximates -Delta u; u = x^3 y + sin x has Delta u = 6 x y - sin x.
    auto u_of = [](const Vec2& p) { return p.x() * p.x() * p.x() * p.y() + std::sin(p.x()); };
    auto lap_of = [](const Vec2& p) { return 6.0 * p.x() * p.y() - std::sin(p.x()); };
    std::vector<double> errors;
    for (int n : {16, 32, 64}) {
        const auto d = DiscreteDomain::disk_like(flat_disk(), n, 2 * n);
        const auto sys = assemble(d, 2);
        Eigen::VectorXd u(d.size());
        for (int i = 0; i < d.size(); ++i) u(i) = u_of(d.nodes()[i]);
        const Eigen::VectorXd lap = (sys.stiffness * u).cwiseQuotient(sys.mass);
        double err = 0.0;
        for (int node : d.interior_nodes())
            if (d.parameter(node).x() > 0.2 && d.parameter(node).x() < 0.8)
                err = std::max(err, std::abs(lap(node) + lap_of(d.nodes()[node])));
        errors.push_back(err);
    }
    EXPECT_LT(errors[1], 0.3 * errors[0]);
    EXPECT_LT(errors[2], 0.3 * errors[1]);
}

TEST(Assemble, DiskFirstEigenvalueMatchesBesselRoot) {
    const double p11 = bessel_prime_root();
    EXPECT_NEAR(p11, 1.8411837813406593, 1e-12);
    const double lambda = p11 * p11;
    EXPECT_NEAR(disk_coarse().eigenvalues(1) / lambda, 1.0, 0.02);
    EXPECT_NEAR(disk_coarse().eigenvalues(2) / lambda, 1.0, 0.02);
    const auto fine = assemble(DiscreteDomain::disk_like(flat_disk(), 256, 256), 3);
    EXPECT_NEAR(fine.eigenvalues(1) / lambda, 1.0, 0.01);
    EXPECT_NEAR(fine.eigenvalues(2) / lambda, 1.0, 0.01);
}

TEST(Assemble, SparseAndDenseSpectraAgree) {
    const auto sparse = assemble(disk_coarse_domain(), 6);
    for (int k = 0; k < 6; ++k) EXPECT_NEAR(sparse.eigenvalues(k), disk_coarse().eigenvalues(k), 1e-9);
    EXPECT_FALSE(sparse.complete());
    EXPECT_GT(truncation_bound(sparse, 0.01), 0.0);
    EXPECT_EQ(truncation_bound(disk_coarse(), 0.01), 0.0);
}

TEST(HeatKernel, IntervalMidpointExample) {
    const auto sys = assemble(DiscreteDomain::interval(kPi, 1000));
    double series = 1.0 / kPi;
    for (int k = 1; k < 50; ++k) series += 2.0 / kPi * std::exp(-double(k * k)) * std::pow(std::cos(k * kPi / 2), 2);
    EXPECT_NEAR(series, 0.3300, 5e-5);
    EXPECT_NEAR(heat_kernel(sys, 1.0, 500, 500), series, 1e-6);
}

TEST(HeatKernel, StochasticSymmetricSemigroup) {
    const auto& sys = disk_coarse();
    const auto& w = sys.mass;
    for (double t : {0.01, 0.1, 1.0}) {
        const Eigen::MatrixXd h = heat_kernel_matrix(sys, t);
        EXPECT_LT(((h * w).array() - 1.0).abs().maxCoeff(), 1e-9);
        EXPECT_LT((h - h.transpose()).cwiseAbs().maxCoeff(), 1e-12);
        const Eigen::MatrixXd composed = heat_kernel_matrix(sys, 0.5 * t) * w.asDiagonal() * heat_kernel_matrix(sys, 0.5 * t);
        EXPECT_LT((composed - h).cwiseAbs().maxCoeff(), 1e-9 * h.cwiseAbs().maxCoeff());
        EXPECT_NEAR(heat_kernel(sys, t, 3, 40), h(3, 40), 1e-12);
    }
    const Eigen::MatrixXd late = heat_kernel_matrix(sys, 200.0);
    EXPECT_LT((late.array() - 1.0 / w.sum()).abs().maxCoeff(), 1e-10);
}

TEST(HeatKernel, PositiveAboveMeshScale) {
    for (const auto& dom : {flat_disk(), blob()}) {
        const auto d = DiscreteDomain::disk_like(dom, 16, 32);
        const auto sys = assemble(d);
        const double t = 4.0 * d.mesh_width() * d.mesh_width();
        for (double s : {t, 2 * t, 10 * t}) EXPECT_GE(heat_kernel_matrix(sys, s).minCoeff(), -1e-10);
    }
    const auto d = DiscreteDomain::interval(1.0, 200);
    const auto sys = assemble(d);
    EXPECT_GE(heat_kernel_matrix(sys, 4.0 * d.mesh_width() * d.mesh_width()).minCoeff(), -1e-10);
}

TEST(HeatKernel, ConservesMass) {
    const auto& sys = disk_coarse();
    const auto f = smooth_random_fields(disk_coarse_domain(), 3, 9);
    for (const auto& u : f)
        for (double t : {0.001, 0.1, 3.0}) EXPECT_NEAR(sys.mass.dot(heat_apply(sys, t, u)), sys.mass.dot(u), 1e-10);
}

TEST(HeatKernel, RequiredModes) {
    const auto sys = assemble(DiscreteDomain::interval(1.0, 100));
    const int m = required_modes(sys, 0.01);
    EXPECT_LT(std::exp(-sys.eigenvalues(m - 1) * 0.01), 1e-12);
    EXPECT_GE(std::exp(-sys.eigenvalues(m - 2) * 0.01), 1e-12);
}

TEST(DiagonalBound, IntervalRegimes) {
    const auto d = DiscreteDomain::interval(1.0, 1000);
    const auto sys = assemble(d);
    // t = 1: the product is 1 + 2 sum_k e^{-k^2 pi^2} cos^2(k pi x), largest at the ends.
    const auto one = diagonal_bound_check(d, sys, {1.0}, d.sample_nodes(11));
    double series = 1.0;
    for (int k = 1; k < 10; ++k) series += 2.0 * std::exp(-k * k * kPi * kPi);
    EXPECT_NEAR(one.C_obs, series, 1e-7);
    const auto late = diagonal_bound_check(d, sys, {4.0, 8.0, 16.0}, d.sample_nodes(11));
    EXPECT_NEAR(late.C_obs, 1.0, 1e-10);
    // Gaussian regime: h_t(x, x) |B(x, sqrt t)| -> 2 / sqrt(4 pi).
    const auto early = diagonal_bound_check(d, sys, {1e-3}, {500});
    EXPECT_NEAR(early.C_obs, 2.0 / std::sqrt(4.0 * kPi), 1e-3);
    EXPECT_EQ(early.node_argmax, 500);
}

TEST(DiagonalBound, DiskStableUnderRefinement) {
    const auto grid = log_grid(1e-3, 4.0, 12);
    const auto coarse = diagonal_bound_check(disk_coarse_domain(), disk_coarse(), grid, disk_coarse_domain().sample_nodes(13));
    const auto fine = diagonal_bound_check(disk_fine_domain(), disk_fine(), grid, disk_fine_domain().sample_nodes(13));
    EXPECT_TRUE(coarse.finite);
    EXPECT_TRUE(fine.finite);
    EXPECT_LT(relative_change(coarse.C_obs, fine.C_obs), 0.10);
}

TEST(Doubling, IntervalInteriorIsExact) {
    const auto d = DiscreteDomain::interval(1.0, 200);
    const auto res = doubling_constant(d, 0.2, {100, 90, 110});
    EXPECT_NEAR(res.C_D, 1.0, 1e-12);
    EXPECT_TRUE(res.comparability_ok);
}

TEST(Doubling, DiskWithBoundary) {
    const auto& d = disk_coarse_domain();
    const auto res = doubling_constant(d, d.diameter(), d.sample_nodes(20));
    EXPECT_LE(res.C_D, 4.0);
    EXPECT_GE(res.C_D, 1.0);
    EXPECT_TRUE(res.comparability_ok);
}

TEST(GagliardoNirenberg, AdmissibleRange) {
    const auto d = DiscreteDomain::interval(1.0, 64);
    const auto sys = assemble(d);
    EXPECT_NO_THROW(gn_check(d, sys, kInf, {0.1}));
    EXPECT_THROW(gn_check(disk_coarse_domain(), disk_coarse(), kInf, {0.1}), ParameterError);
    EXPECT_THROW(gn_check(d, sys, 2.0, {0.1}), ParameterError);
    EXPECT_NO_THROW(gn_check(disk_coarse_domain(), disk_coarse(), 6.0, {0.1}));
}

TEST(GagliardoNirenberg, ConstantOnInterval) {
    // f = 1, q = 4: lhs = (int v_r)^{1/4} with int_0^1 v_r = 2r - r^2, rhs = 1.
    const auto d = DiscreteDomain::interval(1.0, 400);
    const auto sys = assemble(d);
    for (double r : {0.05, 0.2, 0.5}) {
        const auto res = gn_check(d, sys, 4.0, {r});
        EXPECT_GE(res.constants[0], std::pow(2 * r - r * r, 0.25) * (1 - 1e-6));
        EXPECT_TRUE(std::isfinite(res.constants[0]));
    }
}

TEST(GagliardoNirenberg, StableUnderRefinement) {
    const std::vector<double> radii = {0.1, 0.3, 1.0};
    const auto coarse = gn_check(disk_coarse_domain(), disk_coarse(), 4.0, radii);
    const auto fine = gn_check(disk_fine_domain(), disk_fine(), 4.0, radii);
    EXPECT_LT(relative_change(coarse.C_GN, fine.C_GN), 0.2);
}

TEST(Vev, StochasticNormIsOne) {
    const auto& sys = disk_coarse();
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(sys.size());
    for (double t : {0.2, 1.0}) EXPECT_NEAR(vev_norm(sys, ones, NormPair::inf_inf, 0.0, t), 1.0, 1e-10);
    EXPECT_THROW(vev_norm(sys, Eigen::VectorXd::Ones(3), NormPair::one_two, 0.0, 1.0), ParameterError);
}

TEST(Vev, DunfordPettisAndDuality) {
    for (const auto& dom : {flat_disk(), blob()}) {
        const auto d = DiscreteDomain::disk_like(dom, 16, 32);
        const auto sys = assemble(d);
        const auto sweep = vev_sweep(d, sys, log_grid(0.01, 1.0, 6));
        EXPECT_LT(sweep.dunford_pettis_error, 1e-10);
        EXPECT_LT(sweep.duality_error, 1e-10);
        EXPECT_TRUE(sweep.halving_ok);
        EXPECT_TRUE(sweep.flags_agree);
        for (const auto& c : sweep.conditions) EXPECT_TRUE(c.finite) << to_string(c.pair);
    }
    const auto d = DiscreteDomain::interval(1.0, 100);
    const auto sweep = vev_sweep(d, assemble(d), log_grid(0.001, 1.0, 8));
    EXPECT_LT(sweep.dunford_pettis_error, 1e-10);
    EXPECT_TRUE(sweep.flags_agree);
}

TEST(Vev, DiagonalBoundMatchesOneInfNorm) {
    // With v = Vol(B(., sqrt t)) the (1, inf) norm of v^{1/2} e^{-t Delta} v^{1/2} is the largest
    // h_t(x, x) v(x) over all nodes.
    const auto& d = disk_coarse_domain();
    const auto& sys = disk_coarse();
    std::vector<int> all(d.size());
    for (int i = 0; i < d.size(); ++i) all[i] = i;
    for (double t : {0.05, 0.5}) {
        Eigen::VectorXd v(d.size());
        for (int i = 0; i < d.size(); ++i) v(i) = d.ball_volume(i, std::sqrt(t));
        const auto diag = diagonal_bound_check(d, sys, {t}, all);
        EXPECT_NEAR(vev_norm(sys, v, NormPair::one_inf, 0.5, t), diag.C_obs, 1e-12 * diag.C_obs);
    }
}

TEST(Curvature, ConstantFields) {
    const auto flat = DiscreteDomain::disk_like(flat_disk(), 16, 32);
    const auto hyp = DiscreteDomain::disk_like(hyperbolic_disk(), 16, 32);
    const auto fh = curvature_field(hyp);
    EXPECT_LT((fh.rho.array() + 1.0).abs().maxCoeff(), 1e-12);
    EXPECT_LT((fh.rho_minus.array() - 1.0).abs().maxCoeff(), 1e-12);
    for (double p : {1.5, 3.0})
        for (double R : {0.1, 0.5}) {
            EXPECT_EQ(integral_ricci(flat, curvature_field(flat), p, R, flat.sample_nodes(9)), 0.0);
            EXPECT_NEAR(integral_ricci(hyp, fh, p, R, hyp.sample_nodes(9)), 1.0, 1e-12);
        }
    EXPECT_THROW(integral_ricci(hyp, fh, 1.0, 0.5, {0}), ParameterError);
}

TEST(Curvature, WarpedBruteForce) {
    const auto d = DiscreteDomain::disk_like(warped_disk(), 16, 32);
    const auto field = curvature_field(d);
    EXPECT_NEAR(field.rho(0), -0.6, 1e-12);
    EXPECT_GT(field.rho.maxCoeff(), 0.0);
    EXPECT_GT(field.rho_minus.maxCoeff(), 0.0);
    EXPECT_GE(field.rho_minus.minCoeff(), 0.0);
    const auto samples = d.sample_nodes(10);
    const double p = 2.0, R = 0.3;
    double oracle = 0.0;
    for (int x : samples) {
        const auto dist = d.distances_from(x);
        double num = 0.0, den = 0.0;
        for (int j = 0; j < d.size(); ++j) {
            if (!(dist[j] < R)) continue;
            num += d.weights()(j) * field.rho_minus(j) * field.rho_minus(j);
            den += d.weights()(j);
        }
        oracle = std::max(oracle, std::sqrt(num / den));
    }
    const double value = integral_ricci(d, field, p, R, samples);
    EXPECT_NEAR(value, oracle, 1e-12);

    const auto fine = DiscreteDomain::disk_like(warped_disk(), 32, 64);
    const double refined = integral_ricci(fine, curvature_field(fine), p, R, fine.sample_nodes(10));
    EXPECT_LT(relative_change(value, refined), 0.2);
}

TEST(Kato, ConstantAndZero) {
    const auto& sys = disk_coarse();
    const Eigen::VectorXd c = Eigen::VectorXd::Constant(sys.size(), 0.7);
    EXPECT_NEAR(kato_quantity(sys, c, 0.5), 0.35, 1e-10);
    EXPECT_EQ(kato_quantity(sys, Eigen::VectorXd::Zero(sys.size()), 0.5), 0.0);
    EXPECT_THROW(kato_quantity(sys, c, 0.0), ParameterError);
}

TEST(Kato, IntervalBumpMatchesTrapezoid) {
    const int N = 100;
    const auto d = DiscreteDomain::interval(1.0, N);
    const auto sys = assemble(d);
    Eigen::VectorXd bump = Eigen::VectorXd::Zero(N + 1);
    for (int i = 40; i <= 60; ++i) bump(i) = 1.0;
    const double T = 0.05;
    const IntervalBasis basis{N, 1.0};
    // The maximum sits at the centre node by symmetry.
    const int steps = 4000;
    double oracle = 0.0;
    for (int k = 0; k <= steps; ++k) {
        const double t = T * k / steps;
        const double v = basis.evolve(bump, t, N / 2);
        oracle += (k == 0 || k == steps ? 0.5 : 1.0) * v;
    }
    oracle *= T / steps;
    EXPECT_NEAR(kato_quantity(sys, bump, T), oracle, 1e-6);
}

TEST(Eigenvalue, ScaledDiagnostics) {
    for (double L : {0.5, 1.0, 3.0}) {
        const auto d = DiscreteDomain::interval(L, 1000);
        const auto diag = eigenvalue_diagnostic(assemble(d), d);
        EXPECT_NEAR(diag.scaled, kPi * kPi, 1e-4);
        EXPECT_GE(diag.scaled, 9.0);
    }
    const double target = 4.0 * std::pow(bessel_prime_root(), 2);
    EXPECT_NEAR(target, 13.56, 0.01);
    std::vector<double> scaled;
    for (double R : {0.5, 1.0, 2.0}) {
        const auto d = DiscreteDomain::disk_like(flat_disk(R), 64, 64);
        scaled.push_back(eigenvalue_diagnostic(assemble(d, 3), d).scaled);
        EXPECT_NEAR(scaled.back() / target, 1.0, 0.01);
    }
    EXPECT_LT(relative_change(scaled.front(), scaled.back()), 1e-9);
}

TEST(LiYau, StationaryAndEigenmode) {
    const auto d = DiscreteDomain::interval(1.0, 200);
    const auto sys = assemble(d);
    const auto grid = log_grid(1e-3, 1.0, 10);
    const auto flat = li_yau_check(d, sys, Eigen::VectorXd::Ones(d.size()), grid, 1.0);
    for (double v : flat.lhs) EXPECT_NEAR(v, 0.0, 1e-9);

    const Eigen::VectorXd phi1 = sys.eigenvectors.col(1);
    const Eigen::VectorXd u0 = Eigen::VectorXd::Ones(d.size()) + 0.5 * phi1 / phi1.cwiseAbs().maxCoeff();
    const auto prof = li_yau_check(d, sys, u0, grid, 0.5);
    EXPECT_TRUE(std::isfinite(prof.b));
    EXPECT_EQ(li_yau_violations(prof, prof.a, prof.b), 0);
    EXPECT_EQ(prof.clipped, 0);
    EXPECT_THROW(li_yau_check(d, sys, -u0, grid, 0.5), ParameterError);
    EXPECT_THROW(li_yau_check(d, sys, u0, grid, 1.5), ParameterError);
}

TEST(LiYau, DiskEnvelopeSurvivesRefinement) {
    const auto grid = log_grid(0.01, 1.0, 10);
    const auto cf = smooth_random_fields(disk_coarse_domain(), 3, 5);
    const auto ff = smooth_random_fields(disk_fine_domain(), 3, 5);
    for (std::size_t k = 0; k < cf.size(); ++k) {
        // Same smooth field on both meshes: the shift uses the coarse minimum on both.
        const double shift = -cf[k].minCoeff() + 0.5;
        const auto coarse = li_yau_check(disk_coarse_domain(), disk_coarse(), (cf[k].array() + shift).matrix(), grid, 0.5);
        const auto fine = li_yau_check(disk_fine_domain(), disk_fine(), (ff[k].array() + shift).cwiseMax(0.1).matrix(), grid, 0.5);
        EXPECT_EQ(li_yau_violations(fine, coarse.a, coarse.b, 1.25), 0) << "field " << k;
    }
}

TEST(Determinism, ThreadCountDoesNotChangeResults) {
    const auto grid = log_grid(1e-3, 4.0, 6);
    const auto samples = disk_coarse_domain().sample_nodes(9);
    setenv("FE_THREADS", "1", 1);
    const auto one = diagonal_bound_check(disk_coarse_domain(), disk_coarse(), grid, samples);
    setenv("FE_THREADS", "3", 1);
    const auto three = diagonal_bound_check(disk_coarse_domain(), disk_coarse(), grid, samples);
    unsetenv("FE_THREADS");
    EXPECT_EQ(one.C_obs, three.C_obs);
    EXPECT_EQ(one.per_t, three.per_t);
}
