#include "sobext/heat.hpp"

#include "sobext/parallel.hpp"
#include "sobext/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <queue>
#include <utility>

namespace sobext {

namespace {

constexpr double kTwoPi = 2.0 * kPi;

bool is_flat(const ModelSurface& surface) {
    return surface.kind() == ModelSurface::Kind::constant_curvature && surface.kappa() == 0.0;
}

// Integral of sn_kappa over [a, b].
double sn_integral(double kappa, double a, double b) {
    if (kappa == 0.0) return 0.5 * (b * b - a * a);
    const double k = std::sqrt(std::abs(kappa));
    if (kappa > 0) return (std::cos(k * a) - std::cos(k * b)) / kappa;
    return (std::cosh(k * b) - std::cosh(k * a)) / -kappa;
}

// Weights below this are dropped: their terms are far below every tolerance, and
// subnormal products would slow the dense kernels by orders of magnitude.
constexpr double kNegligibleWeight = 1e-40;

Eigen::VectorXd exp_weights(const NeumannSystem& system, double t) {
    Eigen::VectorXd e = (-t * system.eigenvalues.array()).exp().matrix();
    for (Eigen::Index k = 0; k < e.size(); ++k)
        if (e(k) < kNegligibleWeight) e(k) = 0.0;
    return e;
}

// Eigenvalues ascend, so the retained modes form a prefix.
Eigen::Index active_modes(const Eigen::VectorXd& e) {
    Eigen::Index m = e.size();
    while (m > 0 && e(m - 1) == 0.0) --m;
    return m;
}

} // namespace

double lens_area(double d, double a, double b) {
    if (d >= a + b) return 0.0;
    const double lo = std::min(a, b);
    if (d <= std::abs(a - b)) return kPi * lo * lo;
    const double ca = std::clamp((d * d + a * a - b * b) / (2.0 * d * a), -1.0, 1.0);
    const double cb = std::clamp((d * d + b * b - a * a) / (2.0 * d * b), -1.0, 1.0);
    const double k = (-d + a + b) * (d + a - b) * (d - a + b) * (d + a + b);
    return a * a * std::acos(ca) + b * b * std::acos(cb) - 0.5 * std::sqrt(std::max(0.0, k));
}

DiscreteDomain DiscreteDomain::interval(double L, int N) {
    if (!(L > 0.0) || !std::isfinite(L)) throw ParameterError("interval length must be positive");
    if (N < 16) throw ParameterError("interval needs at least 16 cells");
    DiscreteDomain d;
    d.kind_ = Kind::interval;
    d.length_ = L;
    const double h = L / N;
    d.nodes_.resize(N + 1);
    d.weights_ = Eigen::VectorXd::Constant(N + 1, h);
    d.weights_(0) = d.weights_(N) = 0.5 * h;
    for (int i = 0; i <= N; ++i) d.nodes_[i] = Vec2(i * h, 0.0);
    d.nodes_[N] = Vec2(L, 0.0);
    d.volume_ = L;
    d.diameter_ = L;
    d.mesh_width_ = h;
    return d;
}

DiscreteDomain DiscreteDomain::disk_like(const DomainSpec& domain, int n_radial, int n_angular) {
    if (n_radial < 16 || n_angular < 16) throw ParameterError("polar grid needs at least 16 points per axis");
    DiscreteDomain d;
    d.kind_ = Kind::disk_like;
    d.domain_ = domain;
    d.n_radial_ = n_radial;
    d.n_angular_ = n_angular;
    d.nodes_.resize(1 + std::size_t(n_radial) * n_angular);
    d.nodes_[0] = d.map(0.0, 0.0);
    for (int i = 1; i <= n_radial; ++i)
        for (int j = 0; j < n_angular; ++j) d.nodes_[d.index(i, j)] = d.map(double(i) / n_radial, kTwoPi * j / n_angular);
    d.volume_ = domain.area();
    d.diameter_ = domain.diameter();

    const double dxi = 1.0 / n_radial, dth = kTwoPi / n_angular;
    double width = 0.0;
    for (int j = 0; j < n_angular; ++j) {
        const double th = j * dth;
        width = std::max(width, std::sqrt(d.parameter_metric(1.0, th)(1, 1)) * dth);
        for (int i = 0; i < n_radial; ++i)
            width = std::max(width, std::sqrt(d.parameter_metric((i + 0.5) * dxi, th)(0, 0)) * dxi);
    }
    d.mesh_width_ = width;

    // Lumped masses from the same element quadrature as the stiffness.
    const QuadratureRule g = gauss_legendre(4, 0.0, 1.0);
    d.weights_ = Eigen::VectorXd::Zero(d.size());
    for (int i = 0; i < n_radial; ++i)
        for (int j = 0; j < n_angular; ++j) {
            const int ids[4] = {d.index(i, j), d.index(i + 1, j), d.index(i + 1, j + 1), d.index(i, j + 1)};
            for (std::size_t qu = 0; qu < g.nodes.size(); ++qu)
                for (std::size_t qv = 0; qv < g.nodes.size(); ++qv) {
                    const double u = g.nodes[qu], v = g.nodes[qv];
                    const double w = g.weights[qu] * g.weights[qv] * dxi * dth;
                    const double jac = std::sqrt(d.parameter_metric((i + u) * dxi, (j + v) * dth).determinant());
                    const double N[4] = {(1 - u) * (1 - v), u * (1 - v), u * v, (1 - u) * v};
                    for (int a = 0; a < 4; ++a) d.weights_(ids[a]) += w * jac * N[a];
                }
        }
    return d;
}

int DiscreteDomain::index(int i, int j) const {
    if (i == 0) return 0;
    const int jj = ((j % n_angular_) + n_angular_) % n_angular_;
    return 1 + (i - 1) * n_angular_ + jj;
}

Vec2 DiscreteDomain::parameter(int node) const {
    if (kind_ == Kind::interval) return Vec2(nodes_[node].x(), 0.0);
    if (node == 0) return Vec2::Zero();
    const int i = 1 + (node - 1) / n_angular_, j = (node - 1) % n_angular_;
    return Vec2(double(i) / n_radial_, kTwoPi * j / n_angular_);
}

Vec2 DiscreteDomain::map(double xi, double theta) const {
    const DomainSpec& dom = *domain_;
    if (dom.boundary() == DomainSpec::Boundary::geodesic_disk)
        return dom.center() + dom.surface().from_polar(dom.radius() * xi, theta);
    return xi * dom.profile().value(theta) * Vec2(std::cos(theta), std::sin(theta));
}

Mat2 DiscreteDomain::parameter_metric(double xi, double theta) const {
    const DomainSpec& dom = *domain_;
    Mat2 G;
    if (dom.boundary() == DomainSpec::Boundary::geodesic_disk) {
        const double a = dom.radius();
        const double f = dom.surface().profile().f(a * xi);
        G << a * a, 0.0, 0.0, f * f;
        return G;
    }
    const double r = dom.profile().value(theta), dr = dom.profile().d1(theta);
    G << r * r, xi * r * dr, xi * r * dr, xi * xi * (dr * dr + r * r);
    return G;
}

std::vector<int> DiscreteDomain::interior_nodes() const {
    std::vector<int> out;
    if (kind_ == Kind::interval) {
        for (int i = 1; i + 1 < size(); ++i) out.push_back(i);
        return out;
    }
    for (int i = 1; i < n_radial_; ++i)
        for (int j = 0; j < n_angular_; ++j) out.push_back(index(i, j));
    return out;
}

bool DiscreteDomain::closed_form_distance() const {
    return kind_ == Kind::interval || domain_->surface().kind() == ModelSurface::Kind::constant_curvature;
}

std::vector<double> DiscreteDomain::distances_from(int node) const {
    const int n = size();
    std::vector<double> dist(n, kInf);
    if (kind_ == Kind::interval) {
        for (int j = 0; j < n; ++j) dist[j] = std::abs(nodes_[j].x() - nodes_[node].x());
        return dist;
    }
    const ModelSurface& surface = domain_->surface();
    if (closed_form_distance()) {
        for (int j = 0; j < n; ++j) dist[j] = j == node ? 0.0 : surface.distance(nodes_[node], nodes_[j]);
        return dist;
    }

    // Shortest paths on the parametric grid; the pole connects radially to the first rings.
    const double dxi = 1.0 / n_radial_, dth = kTwoPi / n_angular_;
    const double a = domain_->radius();
    static constexpr int kSteps[16][2] = {{1, 0},  {-1, 0}, {0, 1},  {0, -1}, {1, 1},  {1, -1}, {-1, 1}, {-1, -1},
                                          {1, 2},  {1, -2}, {-1, 2}, {-1, -2}, {2, 1}, {2, -1}, {-2, 1}, {-2, -1}};
    auto edge = [&](int i0, int i1, int dj) {
        const double xm = 0.5 * (i0 + i1) * dxi;
        const Vec2 delta((i1 - i0) * dxi, dj * dth);
        return std::sqrt(delta.dot(parameter_metric(xm, 0.0) * delta));
    };
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    dist[node] = 0.0;
    queue.push({0.0, node});
    while (!queue.empty()) {
        const auto [du, u] = queue.top();
        queue.pop();
        if (du > dist[u]) continue;
        auto relax = [&](int v, double len) {
            if (du + len < dist[v]) {
                dist[v] = du + len;
                queue.push({dist[v], v});
            }
        };
        if (u == 0) {
            for (int i = 1; i <= std::min(2, n_radial_); ++i)
                for (int j = 0; j < n_angular_; ++j) relax(index(i, j), a * i * dxi);
            continue;
        }
        const int i = 1 + (u - 1) / n_angular_, j = (u - 1) % n_angular_;
        if (i <= 2) relax(0, a * i * dxi);
        for (const auto& st : kSteps) {
            const int i1 = i + st[0];
            if (i1 < 1 || i1 > n_radial_) continue;
            relax(index(i1, j + st[1]), edge(i, i1, st[1]));
        }
    }
    return dist;
}

double DiscreteDomain::ball_volume_rays(const Vec2& x, double s, int rays, int steps) const {
    const DomainSpec& dom = *domain_;
    const ModelSurface& surface = dom.surface();
    if (surface.kind() != ModelSurface::Kind::constant_curvature)
        throw DomainError("ray integration needs a constant-curvature surface");
    const double kappa = surface.kappa();
    double reach = s;
    if (kappa > 0) reach = std::min(reach, kPi / std::sqrt(kappa));
    if (!(reach > 0.0)) return 0.0;

    const Mat2 g = surface.metric_at(x);
    const Vec2 e1 = Vec2(1.0, 0.0) / std::sqrt(g(0, 0));
    Vec2 e2 = Vec2(0.0, 1.0);
    e2 -= e2.dot(g * e1) * e1;
    e2 /= std::sqrt(e2.dot(g * e2));

    std::vector<double> per_ray(rays);
    parallel_for(rays, [&](std::size_t k) {
        const double psi = kTwoPi * double(k) / rays;
        const Vec2 dir = std::cos(psi) * e1 + std::sin(psi) * e2;
        auto inside = [&](double rho) {
            if (rho == 0.0) return true;
            try {
                const Vec2 p = surface.exp_closed_form(x, dir, rho);
                return surface.in_chart(p) && dom.contains(p);
            } catch (const Error&) {
                return false;
            }
        };
        double total = 0.0, start = 0.0;
        bool prev = true;
        double prev_rho = 0.0;
        for (int m = 1; m <= steps; ++m) {
            const double rho = reach * m / steps;
            const bool cur = inside(rho);
            if (cur != prev) {
                double lo = prev_rho, hi = rho;
                for (int it = 0; it < 60 && hi - lo > 1e-15 * reach; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    (inside(mid) == prev ? lo : hi) = mid;
                }
                const double cross = 0.5 * (lo + hi);
                if (prev) total += sn_integral(kappa, start, cross);
                else start = cross;
            }
            prev = cur;
            prev_rho = rho;
        }
        if (prev) total += sn_integral(kappa, start, reach);
        per_ray[k] = total;
    });
    double sum = 0.0;
    for (double v : per_ray) sum += v;
    return sum * kTwoPi / rays;
}

double DiscreteDomain::ball_volume(int node, double s) const {
    if (!(s >= 0.0)) throw ParameterError("ball radius must be non-negative");
    if (kind_ == Kind::interval) {
        const double x = nodes_[node].x();
        return std::max(0.0, std::min(x + s, length_) - std::max(x - s, 0.0));
    }
    const DomainSpec& dom = *domain_;
    const ModelSurface& surface = dom.surface();
    if (is_flat(surface) && dom.boundary() == DomainSpec::Boundary::geodesic_disk)
        return lens_area((nodes_[node] - dom.center()).norm(), s, dom.radius());
    if (surface.kind() == ModelSurface::Kind::constant_curvature) return ball_volume_rays(nodes_[node], s);
    const auto dist = distances_from(node);
    double sum = 0.0;
    for (int j = 0; j < size(); ++j)
        if (dist[j] < s) sum += weights_(j);
    return sum;
}

std::vector<int> DiscreteDomain::sample_nodes(int count) const {
    std::vector<int> out;
    if (count <= 0) return out;
    if (kind_ == Kind::interval) {
        const int n = size() - 1;
        for (int k = 0; k < count; ++k) out.push_back(count == 1 ? n / 2 : int(std::lround(double(k) * n / (count - 1))));
    } else {
        const int rings = std::max(2, int(std::ceil(std::sqrt(double(count)))));
        out.push_back(0);
        for (int l = 1; l < rings && int(out.size()) < count; ++l) {
            const int i = int(std::lround(double(l) * n_radial_ / (rings - 1)));
            const int per = std::max(1, std::min(n_angular_, (count - 1 + rings - 2) / (rings - 1)));
            for (int m = 0; m < per && int(out.size()) < count; ++m)
                out.push_back(index(std::max(1, i), int(std::lround(double(m) * n_angular_ / per))));
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace {

Eigen::SparseMatrix<double> assemble_stiffness(const DiscreteDomain& d) {
    const int n = d.size();
    std::vector<Eigen::Triplet<double>> trip;
    if (d.kind() == DiscreteDomain::Kind::interval) {
        for (int i = 0; i + 1 < n; ++i) {
            const double h = d.nodes()[i + 1].x() - d.nodes()[i].x();
            trip.emplace_back(i, i + 1, -1.0 / h);
            trip.emplace_back(i + 1, i, -1.0 / h);
        }
    } else {
        const int nr = d.n_radial(), nt = d.n_angular();
        const double dxi = 1.0 / nr, dth = kTwoPi / nt;
        const QuadratureRule g = gauss_legendre(4, 0.0, 1.0);
        for (int i = 0; i < nr; ++i)
            for (int j = 0; j < nt; ++j) {
                const int ids[4] = {d.index(i, j), d.index(i + 1, j), d.index(i + 1, j + 1), d.index(i, j + 1)};
                Eigen::Matrix4d Ke = Eigen::Matrix4d::Zero();
                for (std::size_t qu = 0; qu < g.nodes.size(); ++qu)
                    for (std::size_t qv = 0; qv < g.nodes.size(); ++qv) {
                        const double u = g.nodes[qu], v = g.nodes[qv];
                        const double w = g.weights[qu] * g.weights[qv] * dxi * dth;
                        const Mat2 G = d.parameter_metric((i + u) * dxi, (j + v) * dth);
                        const Mat2 Ginv = G.inverse();
                        const double jac = std::sqrt(G.determinant());
                        Eigen::Matrix<double, 2, 4> grad;
                        grad << -(1 - v), (1 - v), v, -v, -(1 - u), -u, u, (1 - u);
                        grad.row(0) /= dxi;
                        grad.row(1) /= dth;
                        Ke += w * jac * grad.transpose() * Ginv * grad;
                    }
                for (int a = 0; a < 4; ++a)
                    for (int b = 0; b < 4; ++b)
                        if (ids[a] != ids[b]) trip.emplace_back(ids[a], ids[b], Ke(a, b));
            }
    }
    Eigen::SparseMatrix<double> K(n, n);
    K.setFromTriplets(trip.begin(), trip.end());
    // Diagonal from the off-diagonal row sums, so K 1 = 0 holds by construction.
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    for (int c = 0; c < K.outerSize(); ++c)
        for (Eigen::SparseMatrix<double>::InnerIterator it(K, c); it; ++it) diag(it.row()) -= it.value();
    Eigen::SparseMatrix<double> D(n, n);
    std::vector<Eigen::Triplet<double>> dt;
    for (int i = 0; i < n; ++i) dt.emplace_back(i, i, diag(i));
    D.setFromTriplets(dt.begin(), dt.end());
    Eigen::SparseMatrix<double> out = K + D;
    out.makeCompressed();
    return out;
}

void normalise_ground_state(NeumannSystem& sys) {
    // K 1 = 0 by construction, so the constant is the exact ground state; replace the
    // computed pair once it is recognised.
    const double c = 1.0 / std::sqrt(sys.mass.sum());
    const double overlap = std::abs(sys.mass.dot(sys.eigenvectors.col(0))) * c;
    if (std::abs(overlap - 1.0) > 1e-6) throw AssemblyError("ground state is not constant");
    sys.eigenvalues(0) = 0.0;
    sys.eigenvectors.col(0).setConstant(c);
    for (int k = 1; k < sys.modes(); ++k) {
        // Fix signs deterministically: largest-magnitude entry positive.
        Eigen::Index idx;
        sys.eigenvectors.col(k).cwiseAbs().maxCoeff(&idx);
        if (sys.eigenvectors(idx, k) < 0) sys.eigenvectors.col(k) *= -1.0;
    }
}

void dense_spectrum(NeumannSystem& sys, bool tridiagonal) {
    const int n = sys.size();
    const Eigen::VectorXd s = sys.mass.cwiseSqrt().cwiseInverse();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    if (tridiagonal) {
        Eigen::VectorXd diag(n), sub(n - 1);
        for (int i = 0; i < n; ++i) diag(i) = sys.stiffness.coeff(i, i) * s(i) * s(i);
        for (int i = 0; i + 1 < n; ++i) sub(i) = sys.stiffness.coeff(i + 1, i) * s(i) * s(i + 1);
        es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    } else {
        const Eigen::MatrixXd A = s.asDiagonal() * Eigen::MatrixXd(sys.stiffness) * s.asDiagonal();
        es.compute(A);
    }
    if (es.info() != Eigen::Success) throw AssemblyError("dense eigensolver did not converge");
    sys.eigenvalues = es.eigenvalues();
    sys.eigenvectors = s.asDiagonal() * es.eigenvectors();
}

void sparse_spectrum(NeumannSystem& sys, int modes, double shift) {
    const int n = sys.size();
    const int block = std::min(n, modes + std::max(4, modes / 2));
    Eigen::SparseMatrix<double> shifted = sys.stiffness;
    for (int i = 0; i < n; ++i) shifted.coeffRef(i, i) += shift * sys.mass(i);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(shifted);
    if (solver.info() != Eigen::Success) throw AssemblyError("shifted Neumann matrix is not factorizable");

    boost::random::mt19937 rng(7u);
    boost::random::normal_distribution<double> normal;
    Eigen::MatrixXd X(n, block);
    for (int c = 0; c < block; ++c)
        for (int i = 0; i < n; ++i) X(i, c) = c == 0 ? 1.0 : normal(rng);

    Eigen::VectorXd prev = Eigen::VectorXd::Constant(modes, kInf);
    Eigen::VectorXd ritz;
    for (int it = 0; it < 2000; ++it) {
        Eigen::MatrixXd Y = solver.solve(sys.mass.asDiagonal() * X);
        const Eigen::MatrixXd gram = Y.transpose() * sys.mass.asDiagonal() * Y;
        Eigen::LLT<Eigen::MatrixXd> llt(gram);
        if (llt.info() != Eigen::Success) throw AssemblyError("subspace iteration lost rank");
        Y = llt.matrixL().solve(Y.transpose()).transpose();
        const Eigen::MatrixXd R = Y.transpose() * (sys.stiffness * Y);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (R + R.transpose()));
        X = Y * es.eigenvectors();
        ritz = es.eigenvalues();
        const Eigen::VectorXd head = ritz.head(modes);
        const double change = ((head - prev).array().abs() / (head.array().abs() + shift)).maxCoeff();
        prev = head;
        if (it >= 2 && change < 1e-13) break;
    }
    sys.eigenvalues = ritz.head(modes);
    sys.eigenvectors = X.leftCols(modes);
}

} // namespace

NeumannSystem assemble(const DiscreteDomain& domain, int modes) {
    for (int i = 0; i < domain.size(); ++i)
        if (!(domain.weights()(i) > 0.0) || !std::isfinite(domain.weights()(i)))
            throw AssemblyError("node weight " + std::to_string(i) + " is not positive");
    NeumannSystem sys;
    sys.mass = domain.weights();
    sys.stiffness = assemble_stiffness(domain);
    const int n = sys.size();
    if (modes < 0) throw ParameterError("mode count must be non-negative");
    const bool tridiagonal = domain.kind() == DiscreteDomain::Kind::interval;
    if (modes == 0 || modes >= n || tridiagonal) {
        if (!tridiagonal && n > kDenseLimit)
            throw ParameterError("dense spectrum limited to " + std::to_string(kDenseLimit) + " nodes");
        dense_spectrum(sys, tridiagonal);
        if (modes > 0 && modes < n) {
            sys.eigenvalues.conservativeResize(modes);
            sys.eigenvectors.conservativeResize(Eigen::NoChange, modes);
        }
    } else {
        const double diam = domain.diameter();
        sparse_spectrum(sys, modes, 1.0 / (diam * diam));
    }
    normalise_ground_state(sys);
    return sys;
}

int required_modes(const NeumannSystem& system, double t_min) {
    const int cap = std::min(system.size(), 2000);
    for (int m = 0; m < system.modes(); ++m)
        if (std::exp(-system.eigenvalues(m) * t_min) < 1e-12) return std::min(m + 1, cap);
    return std::min(system.modes(), cap);
}

double truncation_bound(const NeumannSystem& system, double t) {
    if (system.complete()) return 0.0;
    const double tail = std::exp(-system.eigenvalues(system.modes() - 1) * t);
    return double(system.size() - system.modes()) * tail / system.mass.minCoeff();
}

double heat_kernel(const NeumannSystem& system, double t, int i, int j) {
    if (!(t > 0.0)) throw ParameterError("time must be positive");
    const Eigen::VectorXd e = exp_weights(system, t);
    return (system.eigenvectors.row(i).transpose().cwiseProduct(e)).dot(system.eigenvectors.row(j).transpose());
}

Eigen::MatrixXd heat_kernel_matrix(const NeumannSystem& system, double t) {
    if (!(t > 0.0)) throw ParameterError("time must be positive");
    const Eigen::VectorXd e = exp_weights(system, t);
    const Eigen::Index m = active_modes(e);
    const auto phi = system.eigenvectors.leftCols(m);
    const Eigen::MatrixXd scaled = phi * e.head(m).asDiagonal();
    Eigen::MatrixXd h(system.size(), system.size());
    h.noalias() = scaled * phi.transpose();
    return h;
}

Eigen::VectorXd heat_kernel_diagonal(const NeumannSystem& system, double t) {
    if (!(t > 0.0)) throw ParameterError("time must be positive");
    const Eigen::VectorXd e = exp_weights(system, t);
    return system.eigenvectors.array().square().matrix() * e;
}

Eigen::VectorXd heat_apply(const NeumannSystem& system, double t, const Eigen::VectorXd& f) {
    if (!(t >= 0.0)) throw ParameterError("time must be non-negative");
    const Eigen::VectorXd c = system.eigenvectors.transpose() * system.mass.cwiseProduct(f);
    return system.eigenvectors * exp_weights(system, t).cwiseProduct(c);
}

DiagonalBound diagonal_bound_check(const DiscreteDomain& domain, const NeumannSystem& system,
                                   const std::vector<double>& t_grid, const std::vector<int>& x_samples) {
    DiagonalBound out;
    out.per_t.assign(t_grid.size(), 0.0);
    std::vector<int> arg(t_grid.size(), -1);
    parallel_for(t_grid.size(), [&](std::size_t k) {
        const double t = t_grid[k];
        const Eigen::VectorXd diag = heat_kernel_diagonal(system, t);
        for (int x : x_samples) {
            const double v = diag(x) * domain.ball_volume(x, std::sqrt(t));
            if (arg[k] < 0 || v > out.per_t[k]) {
                out.per_t[k] = v;
                arg[k] = x;
            }
        }
    });
    for (std::size_t k = 0; k < t_grid.size(); ++k)
        if (out.node_argmax < 0 || out.per_t[k] > out.C_obs) {
            out.C_obs = out.per_t[k];
            out.t_argmax = t_grid[k];
            out.node_argmax = arg[k];
        }
    out.finite = std::isfinite(out.C_obs);
    return out;
}

DoublingResult doubling_constant(const DiscreteDomain& domain, double R, const std::vector<int>& x_samples) {
    if (!(R > 0.0)) throw ParameterError("doubling scale must be positive");
    const int levels = 25;
    std::vector<double> radii(levels);
    for (int k = 0; k < levels; ++k) radii[k] = R * std::pow(2.0, -0.25 * k);
    const int n = domain.dimension();
    const std::size_t m = x_samples.size();
    std::vector<std::vector<double>> vol(m, std::vector<double>(levels));
    parallel_for(m * levels, [&](std::size_t idx) {
        vol[idx / levels][idx % levels] = domain.ball_volume(x_samples[idx / levels], radii[idx % levels]);
    });

    DoublingResult out;
    for (std::size_t a = 0; a < m; ++a)
        for (int kt = 0; kt < levels; ++kt)
            for (int ks = kt; ks < levels; ++ks) {
                const double c = vol[a][kt] / (std::pow(radii[kt] / radii[ks], n) * vol[a][ks]);
                if (out.node_argmax < 0 || c > out.C_D) {
                    out.C_D = c;
                    out.node_argmax = x_samples[a];
                    out.t_argmax = radii[kt];
                    out.s_argmax = radii[ks];
                }
            }

    const double factor = std::pow(2.0, n) * out.C_D;
    for (std::size_t a = 0; a < m; ++a) {
        const auto dist = domain.distances_from(x_samples[a]);
        for (std::size_t b = 0; b < m; ++b)
            for (int k = 0; k < levels; ++k)
                if (dist[x_samples[b]] <= radii[k])
                    out.comparability = std::max(out.comparability, vol[b][k] / (factor * vol[a][k]));
    }
    out.comparability_ok = out.comparability <= 1.0 + 1e-12;
    return out;
}

std::vector<double> log_grid(double lo, double hi, int count) {
    if (!(lo > 0.0) || !(hi >= lo) || count < 1) throw ParameterError("log grid needs 0 < lo <= hi and count >= 1");
    std::vector<double> out(count);
    for (int k = 0; k < count; ++k)
        out[k] = count == 1 ? lo : lo * std::pow(hi / lo, double(k) / (count - 1));
    out.back() = hi;
    return out;
}

std::vector<Eigen::VectorXd> smooth_random_fields(const DiscreteDomain& domain, int count, std::uint64_t seed) {
    boost::random::mt19937 rng(static_cast<std::uint32_t>(seed ^ (seed >> 32)));
    boost::random::uniform_real_distribution<double> unit(0.0, 1.0);
    const double scale = 0.5 * domain.diameter();
    std::vector<Eigen::VectorXd> out;
    for (int c = 0; c < count; ++c) {
        struct Wave {
            Vec2 k;
            double phase, amp;
        };
        std::vector<Wave> waves;
        for (int m = 0; m < 4; ++m) {
            const double dir = kTwoPi * unit(rng);
            const double mag = (0.5 + 2.5 * unit(rng)) / scale;
            Vec2 k = mag * Vec2(std::cos(dir), std::sin(dir));
            if (domain.dimension() == 1) k = Vec2(k.norm(), 0.0);
            waves.push_back({k, kTwoPi * unit(rng), 2.0 * unit(rng) - 1.0});
        }
        const double offset = 2.0 * unit(rng) - 1.0;
        Eigen::VectorXd f(domain.size());
        for (int i = 0; i < domain.size(); ++i) {
            double v = offset;
            for (const auto& w : waves) v += w.amp * std::cos(w.k.dot(domain.nodes()[i]) + w.phase);
            f(i) = v;
        }
        out.push_back(std::move(f));
    }
    return out;
}

GNResult gn_check(const DiscreteDomain& domain, const NeumannSystem& system, double q,
                  const std::vector<double>& r_grid, std::uint64_t seed) {
    const int n = domain.dimension();
    if (!(q > 2.0)) throw ParameterError("q must exceed 2");
    const bool q_inf = std::isinf(q);
    const double index = q_inf ? double(n) : (q - 2.0) / q * n;
    if (!(index < 2.0)) throw ParameterError("q outside the admissible range (q - 2) n / q < 2");
    if (!system.complete()) throw ParameterError("Gagliardo-Nirenberg check needs the full spectrum");

    std::vector<Eigen::VectorXd> samples;
    const auto& phi = system.eigenvectors;
    const int top = std::min(system.modes(), 6);
    for (int k = 0; k < top; ++k) samples.push_back(phi.col(k));
    for (int k = 1; k < top; ++k) samples.push_back(phi.col(0) + phi.col(k));
    if (top >= 4) samples.push_back(phi.col(1) + phi.col(2) + phi.col(3));
    for (auto& f : smooth_random_fields(domain, 8, seed)) samples.push_back(std::move(f));

    const Eigen::VectorXd& w = system.mass;
    const double exponent = 0.5 - (q_inf ? 0.0 : 1.0 / q);
    GNResult out;
    out.r_grid = r_grid;
    for (double r : r_grid) {
        if (!(r > 0.0)) throw ParameterError("radii must be positive");
        Eigen::VectorXd v(domain.size());
        parallel_for(domain.size(), [&](std::size_t i) { v(i) = domain.ball_volume(int(i), r); });
        const Eigen::VectorXd weight = v.array().pow(exponent).matrix();
        double best = 0.0;
        for (const auto& f : samples) {
            const Eigen::VectorXd g = weight.cwiseProduct(f).cwiseAbs();
            const double lhs = q_inf ? g.maxCoeff() : std::pow(w.dot(g.array().pow(q).matrix()), 1.0 / q);
            const Eigen::VectorXd c = phi.transpose() * w.cwiseProduct(f);
            const double energy = (system.eigenvalues.cwiseMax(0.0).array() * c.array().square()).sum();
            const double rhs = std::sqrt(w.dot(f.cwiseProduct(f))) + r * std::sqrt(energy);
            if (rhs > 0) best = std::max(best, lhs / rhs);
        }
        out.constants.push_back(best);
        if (r <= 0.5 * domain.diameter() * (1.0 + 1e-12)) out.C_GN = std::max(out.C_GN, best);
    }
    return out;
}

std::string to_string(NormPair pair) {
    switch (pair) {
    case NormPair::one_two: return "1,2";
    case NormPair::one_inf: return "1,inf";
    case NormPair::two_inf: return "2,inf";
    case NormPair::inf_inf: return "inf,inf";
    }
    return "?";
}

namespace {

double pair_gap(NormPair pair) {
    switch (pair) {
    case NormPair::one_two: return 0.5;
    case NormPair::one_inf: return 1.0;
    case NormPair::two_inf: return 0.5;
    case NormPair::inf_inf: return 0.0;
    }
    throw ParameterError("unsupported norm pair");
}

// Norm of the operator with kernel v_i^gamma h(i, j) v_j^delta against the measure w.
double weighted_norm(const Eigen::MatrixXd& h, const Eigen::VectorXd& w, const Eigen::VectorXd& v, NormPair pair,
                     double gamma) {
    const double delta = pair_gap(pair) - gamma;
    const Eigen::VectorXd left = v.array().pow(gamma).matrix();
    const Eigen::VectorXd right = v.array().pow(delta).matrix();
    const Eigen::MatrixXd k = left.asDiagonal() * h * right.asDiagonal();
    switch (pair) {
    case NormPair::one_inf: return k.cwiseAbs().maxCoeff();
    case NormPair::one_two: return std::sqrt((w.transpose() * k.array().square().matrix()).maxCoeff());
    case NormPair::two_inf: return std::sqrt((k.array().square().matrix() * w).maxCoeff());
    case NormPair::inf_inf: return (k.cwiseAbs() * w).maxCoeff();
    }
    throw ParameterError("unsupported norm pair");
}

} // namespace

double vev_norm(const NeumannSystem& system, const Eigen::VectorXd& v, NormPair pair, double gamma, double t) {
    if (v.size() != system.size()) throw ParameterError("weight vector size mismatch");
    if (!(v.array() > 0.0).all()) throw ParameterError("weights must be positive");
    return weighted_norm(heat_kernel_matrix(system, t), system.mass, v, pair, gamma);
}

VevSweep vev_sweep(const DiscreteDomain& domain, const NeumannSystem& system, const std::vector<double>& t_grid) {
    if (t_grid.empty()) throw ParameterError("empty time grid");
    if (!system.complete()) throw ParameterError("vEv sweep needs the full spectrum");
    const double t0 = *std::max_element(t_grid.begin(), t_grid.end());
    const Eigen::VectorXd& w = system.mass;
    auto volumes = [&](double radius) {
        Eigen::VectorXd v(domain.size());
        parallel_for(domain.size(), [&](std::size_t i) { v(i) = domain.ball_volume(int(i), radius); });
        return v;
    };

    VevSweep out;
    out.conditions = {{NormPair::inf_inf, 0.5, t0, 0.0, false},
                      {NormPair::one_inf, 0.5, t0, 0.0, false},
                      {NormPair::one_two, 0.0, 0.5 * t0, 0.0, false},
                      {NormPair::two_inf, 0.5, 0.5 * t0, 0.0, false}};
    out.halving_ok = true;
    for (double t : t_grid) {
        const Eigen::VectorXd v = volumes(std::sqrt(t));
        const Eigen::MatrixXd h = heat_kernel_matrix(system, t);
        for (auto& c : out.conditions)
            if (t <= c.horizon * (1.0 + 1e-12)) c.sup = std::max(c.sup, weighted_norm(h, w, v, c.pair, c.gamma));

        // T = e^{-t/2 Delta} v^{1/2}: ||T||_{1,2}^2 against ||T* T||_{1,inf}, and ||T*||_{2,inf}.
        const Eigen::MatrixXd half = heat_kernel_matrix(system, 0.5 * t);
        const double t12 = weighted_norm(half, w, v, NormPair::one_two, 0.0);
        const double tt = weighted_norm(h, w, v, NormPair::one_inf, 0.5);
        const double ts = weighted_norm(half, w, v, NormPair::two_inf, 0.5);
        out.dunford_pettis_error = std::max(out.dunford_pettis_error, std::abs(t12 * t12 - tt) / tt);
        out.duality_error = std::max(out.duality_error, std::abs(ts - t12) / t12);

        if (t <= 0.5 * t0 * (1.0 + 1e-12)) {
            const double n12 = weighted_norm(h, w, v, NormPair::one_two, 0.0);
            const double n1inf = weighted_norm(heat_kernel_matrix(system, 2.0 * t), w, volumes(std::sqrt(2.0 * t)),
                                               NormPair::one_inf, 0.5);
            if (n12 * n12 > n1inf * (1.0 + 1e-10)) out.halving_ok = false;
        }
    }
    for (auto& c : out.conditions) c.finite = std::isfinite(c.sup) && c.sup < 1e100;
    out.flags_agree = std::all_of(out.conditions.begin(), out.conditions.end(),
                                  [&](const VevCondition& c) { return c.finite == out.conditions.front().finite; });
    return out;
}

CurvatureField curvature_field(const DiscreteDomain& domain) {
    CurvatureField field;
    field.rho = Eigen::VectorXd::Zero(domain.size());
    if (domain.kind() == DiscreteDomain::Kind::disk_like) {
        const ModelSurface& surface = domain.domain()->surface();
        const double factor = surface.dimension() - 1;
        for (int i = 0; i < domain.size(); ++i) field.rho(i) = factor * surface.gauss_curvature(domain.nodes()[i]);
    }
    field.rho_minus = (-field.rho).cwiseMax(0.0);
    return field;
}

double integral_ricci(const DiscreteDomain& domain, const CurvatureField& field, double p, double R,
                      const std::vector<int>& x_samples) {
    if (!(p > 0.5 * domain.dimension())) throw ParameterError("p must exceed n / 2");
    if (!(R > 0.0)) throw ParameterError("radius must be positive");
    std::vector<double> per(x_samples.size());
    parallel_for(x_samples.size(), [&](std::size_t a) {
        const auto dist = domain.distances_from(x_samples[a]);
        double num = 0.0, den = 0.0;
        for (int j = 0; j < domain.size(); ++j)
            if (dist[j] < R) {
                num += domain.weights()(j) * std::pow(field.rho_minus(j), p);
                den += domain.weights()(j);
            }
        per[a] = std::pow(num / den, 1.0 / p);
    });
    double best = 0.0;
    for (double v : per) best = std::max(best, v);
    return best;
}

double kato_quantity(const NeumannSystem& system, const Eigen::VectorXd& rho_minus, double T) {
    if (!(T > 0.0)) throw ParameterError("time horizon must be positive");
    if ((rho_minus.array() < 0.0).any()) throw ParameterError("rho_minus must be non-negative");
    const Eigen::VectorXd c = system.eigenvectors.transpose() * system.mass.cwiseProduct(rho_minus);
    auto sup_norm = [&](double t) {
        return (system.eigenvectors * exp_weights(system, t).cwiseProduct(c)).cwiseAbs().maxCoeff();
    };
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(sup_norm, 0.0, T, 12, 1e-12);
}

EigenvalueDiagnostic eigenvalue_diagnostic(const NeumannSystem& system, const DiscreteDomain& domain) {
    if (system.modes() < 2) throw ParameterError("first non-zero eigenvalue not resolved");
    EigenvalueDiagnostic out;
    out.eta1 = system.eigenvalues(1);
    out.scaled = out.eta1 * domain.diameter() * domain.diameter();
    return out;
}

LiYauProfile li_yau_check(const DiscreteDomain& domain, const NeumannSystem& system, const Eigen::VectorXd& u0,
                          const std::vector<double>& t_grid, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ParameterError("alpha must lie in (0, 1]");
    if (!(u0.array() > 0.0).all()) throw ParameterError("initial data must be positive");
    if (t_grid.empty()) throw ParameterError("empty time grid");
    LiYauProfile out;
    out.t_grid = t_grid;
    out.lhs.assign(t_grid.size(), 0.0);
    std::vector<int> clipped(t_grid.size(), 0);
    const auto interior = domain.interior_nodes();
    const Eigen::VectorXd c = system.eigenvectors.transpose() * system.mass.cwiseProduct(u0);

    parallel_for(t_grid.size(), [&](std::size_t k) {
        const double t = t_grid[k];
        const Eigen::VectorXd e = exp_weights(system, t).cwiseProduct(c);
        Eigen::VectorXd u = system.eigenvectors * e;
        const Eigen::VectorXd ut = -(system.eigenvectors * system.eigenvalues.cwiseProduct(e));
        double floor = kInf;
        for (int i = 0; i < u.size(); ++i)
            if (u(i) > 0) floor = std::min(floor, u(i));
        for (int i = 0; i < u.size(); ++i)
            if (!(u(i) > 0)) {
                u(i) = floor;
                ++clipped[k];
            }
        double best = -kInf;
        for (int node : interior) {
            double grad_sq;
            if (domain.kind() == DiscreteDomain::Kind::interval) {
                const double h = domain.nodes()[node + 1].x() - domain.nodes()[node - 1].x();
                const double du = (u(node + 1) - u(node - 1)) / h;
                grad_sq = du * du;
            } else {
                const Vec2 par = domain.parameter(node);
                const int i = int(std::lround(par.x() * domain.n_radial()));
                const int j = int(std::lround(par.y() * domain.n_angular() / kTwoPi));
                const double dxi = 1.0 / domain.n_radial(), dth = kTwoPi / domain.n_angular();
                const Vec2 g((u(domain.index(i + 1, j)) - u(domain.index(i - 1, j))) / (2 * dxi),
                             (u(domain.index(i, j + 1)) - u(domain.index(i, j - 1))) / (2 * dth));
                grad_sq = g.dot(domain.parameter_metric(par.x(), par.y()).inverse() * g);
            }
            const double value = alpha * grad_sq / (u(node) * u(node)) - ut(node) / u(node);
            best = std::max(best, value);
        }
        out.lhs[k] = best;
    });
    for (int v : clipped) out.clipped += v;

    std::size_t last = 0;
    for (std::size_t k = 1; k < t_grid.size(); ++k)
        if (t_grid[k] > t_grid[last]) last = k;
    out.a = std::max(0.0, out.lhs[last]);
    for (std::size_t k = 0; k < t_grid.size(); ++k) out.b = std::max(out.b, t_grid[k] * (out.lhs[k] - out.a));
    return out;
}

int li_yau_violations(const LiYauProfile& profile, double a, double b, double safety) {
    int count = 0;
    for (std::size_t k = 0; k < profile.t_grid.size(); ++k) {
        const double env = safety * (a + b / profile.t_grid[k]);
        if (profile.lhs[k] > env + 1e-12 * std::max(1.0, std::abs(env))) ++count;
    }
    return count;
}

} // namespace sobext
