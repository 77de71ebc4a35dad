#pragma once

#include "sobext/fermi_domain.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sobext {

// Nodes and lumped quadrature masses of a discretized domain.
//
// interval(L, N): nodes x_i = i L / N, i = 0..N, masses L/N (halved at the ends).
// disk_like(domain, n_r, n_theta): parametric polar grid x(xi, theta) with
// xi = i / n_r, i = 1..n_r, theta_j = 2 pi j / n_theta, plus one pole node (index 0).
// Geodesic disks use center + from_polar(a xi, theta); radial profiles use
// xi rho(theta) (cos theta, sin theta).
class DiscreteDomain {
public:
    enum class Kind { interval, disk_like };

    static DiscreteDomain interval(double L, int N);
    static DiscreteDomain disk_like(const DomainSpec& domain, int n_radial, int n_angular);

    Kind kind() const { return kind_; }
    int dimension() const { return kind_ == Kind::interval ? 1 : 2; }
    int size() const { return static_cast<int>(nodes_.size()); }
    const std::vector<Vec2>& nodes() const { return nodes_; }
    const Eigen::VectorXd& weights() const { return weights_; }
    // Exact measure of the continuous domain.
    double volume() const { return volume_; }
    double diameter() const { return diameter_; }
    // Longest grid edge in the surface metric.
    double mesh_width() const { return mesh_width_; }
    const std::optional<DomainSpec>& domain() const { return domain_; }
    int n_radial() const { return n_radial_; }
    int n_angular() const { return n_angular_; }
    double length() const { return length_; }

    // Grid index of (i, j), i = 0..n_radial (i = 0 is the pole), j taken mod n_angular.
    int index(int i, int j) const;
    // Parametric coordinates (xi, theta) of a node.
    Vec2 parameter(int node) const;
    // Parametric metric J^T g J at (xi, theta).
    Mat2 parameter_metric(double xi, double theta) const;
    Vec2 map(double xi, double theta) const;
    // Nodes where centred differences on the grid are defined (no pole, no boundary).
    std::vector<int> interior_nodes() const;

    // Distances from a node to all nodes: closed form on constant-curvature surfaces,
    // shortest grid paths (16-neighbour stencil) on other warped surfaces.
    std::vector<double> distances_from(int node) const;
    bool closed_form_distance() const;

    // Vol(Omega cap B(x, s)) for a node x: exact on intervals and flat disks, ray
    // integration in geodesic polar coordinates on constant-curvature surfaces, node sums
    // over the grid metric otherwise.
    double ball_volume(int node, double s) const;
    // Ray integration with explicit resolution (constant curvature only).
    double ball_volume_rays(const Vec2& x, double s, int rays = 256, int steps = 32) const;

    // Evenly spread node indices for sampling.
    std::vector<int> sample_nodes(int count) const;

private:
    Kind kind_ = Kind::interval;
    std::vector<Vec2> nodes_;
    Eigen::VectorXd weights_;
    double volume_ = 0.0;
    double diameter_ = 0.0;
    double mesh_width_ = 0.0;
    double length_ = 0.0;
    int n_radial_ = 0;
    int n_angular_ = 0;
    std::optional<DomainSpec> domain_;
};

// Area of the intersection of two flat disks with radii a, b and centres d apart.
double lens_area(double d, double a, double b);

// Lumped-mass Neumann Laplacian: K u = lambda W u, with eigenvectors W-orthonormal.
struct NeumannSystem {
    Eigen::SparseMatrix<double> stiffness;
    Eigen::VectorXd mass;
    Eigen::VectorXd eigenvalues;  // ascending
    Eigen::MatrixXd eigenvectors; // columns phi_k, sum_i w_i phi_k(i) phi_l(i) = delta_kl

    int size() const { return static_cast<int>(mass.size()); }
    int modes() const { return static_cast<int>(eigenvalues.size()); }
    bool complete() const { return modes() == size(); }
};

// Dense systems above this size require an explicit mode count.
constexpr int kDenseLimit = 6000;

// modes = 0: full spectrum by a dense symmetric eigensolve. modes > 0: lowest modes
// eigenpairs by shift-invert subspace iteration on the sparse system.
NeumannSystem assemble(const DiscreteDomain& domain, int modes = 0);

// Lowest m modes needed so that exp(-lambda_m t_min) < 1e-12, capped at min(N, 2000).
int required_modes(const NeumannSystem& system, double t_min);

// Bound on the neglected tail sum_{k >= m} e^{-lambda_k t} |phi_k(i) phi_k(j)|; zero for
// a complete spectrum.
double truncation_bound(const NeumannSystem& system, double t);

// h_t(i, j) = sum_k e^{-lambda_k t} phi_k(i) phi_k(j); (H_t f)(i) = sum_j h_t(i, j) w_j f_j.
double heat_kernel(const NeumannSystem& system, double t, int i, int j);
Eigen::MatrixXd heat_kernel_matrix(const NeumannSystem& system, double t);
Eigen::VectorXd heat_kernel_diagonal(const NeumannSystem& system, double t);
Eigen::VectorXd heat_apply(const NeumannSystem& system, double t, const Eigen::VectorXd& f);

struct DiagonalBound {
    double C_obs = 0.0;
    double t_argmax = 0.0;
    int node_argmax = -1;
    std::vector<double> per_t; // max over samples at each t
    bool finite = false;
};

// C_obs = max over (t, x) of h_t(x, x) Vol_Omega(B(x, sqrt t)).
DiagonalBound diagonal_bound_check(const DiscreteDomain& domain, const NeumannSystem& system,
                                   const std::vector<double>& t_grid, const std::vector<int>& x_samples);

struct DoublingResult {
    double C_D = 0.0;
    int node_argmax = -1;
    double s_argmax = 0.0;
    double t_argmax = 0.0;
    // max over sampled pairs with d(x, y) <= s of Vol(B(y, s)) / (2^n C_D Vol(B(x, s)))
    double comparability = 0.0;
    bool comparability_ok = false;
};

// Smallest C with Vol(B(x,t)) <= C (t/s)^n Vol(B(x,s)) over the samples and a geometric
// grid of radii R 2^{-k/4} >= R / 64.
DoublingResult doubling_constant(const DiscreteDomain& domain, double R, const std::vector<int>& x_samples);

struct GNResult {
    std::vector<double> r_grid;
    std::vector<double> constants; // per r
    double C_GN = 0.0;
};

// Smallest C with ||v_r^{1/2 - 1/q} f||_q <= C (||f||_2 + r ||Delta^{1/2} f||_2) over low
// eigenfunction combinations and seeded smooth random fields. q = inf is +infinity.
GNResult gn_check(const DiscreteDomain& domain, const NeumannSystem& system, double q,
                  const std::vector<double>& r_grid, std::uint64_t seed = 42);

enum class NormPair { one_two, one_inf, two_inf, inf_inf };

std::string to_string(NormPair pair);

// Operator norm of v^gamma e^{-t Delta} v^delta between mass-weighted L^p and L^q,
// delta = 1/p - 1/q - gamma.
double vev_norm(const NeumannSystem& system, const Eigen::VectorXd& v, NormPair pair, double gamma, double t);

struct VevCondition {
    NormPair pair = NormPair::one_inf;
    double gamma = 0.0;
    double horizon = 0.0; // largest t of the sweep for this condition
    double sup = 0.0;
    bool finite = false;
};

struct VevSweep {
    std::vector<VevCondition> conditions; // (inf,inf,1/2), (1,inf,1/2), (1,2,0), (2,inf,1/2)
    bool flags_agree = false;
    // max over t of | ||T||_{1,2}^2 - ||T* T||_{1,inf} | / ||T* T||_{1,inf}, T = e^{-t/2 Delta} v^{1/2}
    double dunford_pettis_error = 0.0;
    // max over t of | ||T*||_{2,inf} - ||T||_{1,2} | / ||T||_{1,2}
    double duality_error = 0.0;
    // ||e^{-t Delta} v_{sqrt t}^{1/2}||_{1,2}^2 <= ||v_{sqrt 2t}^{1/2} e^{-2t Delta} v_{sqrt 2t}^{1/2}||_{1,inf}
    bool halving_ok = false;
};

// Sweeps t over t_grid (up to t0 = max of the grid); the (1,2) and (2,inf) conditions
// use the part of the grid up to t0 / 2. Requires a complete spectrum.
VevSweep vev_sweep(const DiscreteDomain& domain, const NeumannSystem& system, const std::vector<double>& t_grid);

struct CurvatureField {
    Eigen::VectorXd rho;
    Eigen::VectorXd rho_minus;
};

// rho = (n - 1) K at the nodes; zero on intervals.
CurvatureField curvature_field(const DiscreteDomain& domain);

// sup over sampled x of ((1 / Vol(B(x,R))) sum_{d(x,j) < R} w_j rho_-(j)^p)^{1/p}.
double integral_ricci(const DiscreteDomain& domain, const CurvatureField& field, double p, double R,
                      const std::vector<int>& x_samples);

// int_0^T max_i (e^{-t Delta} rho_-)(i) dt by adaptive Gauss-Kronrod quadrature.
double kato_quantity(const NeumannSystem& system, const Eigen::VectorXd& rho_minus, double T);

struct EigenvalueDiagnostic {
    double eta1 = 0.0;
    double scaled = 0.0; // eta1 diam^2
};

EigenvalueDiagnostic eigenvalue_diagnostic(const NeumannSystem& system, const DiscreteDomain& domain);

struct LiYauProfile {
    std::vector<double> t_grid;
    std::vector<double> lhs; // max over interior nodes of alpha |grad ln u|^2 - d_t ln u
    double a = 0.0;
    double b = 0.0;
    int clipped = 0; // nodes with u <= 0 replaced by the smallest positive value
};

// Envelope lhs <= a + b / t with a = max(0, lhs at the largest t) and the smallest b.
LiYauProfile li_yau_check(const DiscreteDomain& domain, const NeumannSystem& system, const Eigen::VectorXd& u0,
                          const std::vector<double>& t_grid, double alpha);

// Grid points where lhs exceeds safety (a + b / t).
int li_yau_violations(const LiYauProfile& profile, double a, double b, double safety = 1.0);

// Deterministic smooth random fields sampled at the nodes.
std::vector<Eigen::VectorXd> smooth_random_fields(const DiscreteDomain& domain, int count, std::uint64_t seed);

// Geometric grid of count points from lo to hi.
std::vector<double> log_grid(double lo, double hi, int count);

} // namespace sobext
