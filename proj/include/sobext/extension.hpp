#pragma once

#include "sobext/fermi_domain.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace sobext {

// Function on the closed domain with its chart gradient (partial derivatives in the
// surface chart coordinates).
struct ScalarField {
    enum class Smoothness { C1, C2 };

    std::function<double(const Vec2&)> value;
    std::function<Vec2(const Vec2&)> gradient;
    Smoothness smoothness = Smoothness::C2;

    double operator()(const Vec2& p) const { return value(p); }
};

// Largest relative mismatch between the gradient and central differences of the value.
double gradient_consistency(const ScalarField& field, const std::vector<Vec2>& probes, double h = 1e-6);

// Profile eta with eta = 1 on [0, 1/2], eta = 0 on [1, inf) and a cubic smoothstep in
// between; sup |eta'| = 3. G is the declared gradient constant, |grad phi| <= G / r.
class CutoffFamily {
public:
    explicit CutoffFamily(double G = 3.0);
    static CutoffFamily ball_preset() { return CutoffFamily(8.0); }

    double eta(double t) const;
    double deta(double t) const;
    double G() const { return G_; }
    static constexpr double slope() { return 3.0; }

private:
    double G_;
};

// eta(d(center, point) / r) with the closed-form distance of a constant-curvature surface.
double cutoff_value(const CutoffFamily& family, const ModelSurface& surface, const Vec2& center, double r,
                    const Vec2& point);

// s <= 0: trace(s); s > 0: (-3 trace(-s) + 4 trace(-s/2)) cutoff(s).
double extend_1d(const std::function<double(double)>& trace, const std::function<double(double)>& cutoff,
                 double s);

// E u: u on the closed domain, the reflected trace times eta(s / r) in the exterior
// tube, zero elsewhere.
class ExtendedField {
public:
    ExtendedField(const FermiChart& chart, ScalarField source, CutoffFamily cutoff = CutoffFamily());

    double operator()(const Vec2& point) const;
    // Value at Fermi coordinates; s in (-r, inf).
    double in_fermi(double s, double theta) const;

    const FermiChart& chart() const { return chart_; }
    const ScalarField& source() const { return source_; }
    const CutoffFamily& cutoff() const { return cutoff_; }

private:
    FermiChart chart_;
    ScalarField source_;
    CutoffFamily cutoff_;
};

double extend(const ExtendedField& field, const Vec2& point);

struct H1Norm {
    double l2_sq = 0.0;
    double grad_l2_sq = 0.0;
    double total() const { return l2_sq + grad_l2_sq; }
};

struct QuadratureSpec {
    int nodes = 64; // Gauss-Legendre nodes per radial panel; the angular grid uses 4x
};

enum class Region { omega, tube_exterior, all };

// Integrals over the domain use the source gradient; the exterior tube is integrated in
// Fermi coordinates with area element speed * X(s) and finite-difference gradients
// |grad F|^2 = F_s^2 + F_theta^2 / (speed X)^2.
H1Norm h1_norm(const ExtendedField& field, Region region, const QuadratureSpec& quad = {});

// H1 norm over the domain of a field with gradient.
H1Norm h1_norm_domain(const DomainSpec& domain, const ScalarField& field, const QuadratureSpec& quad = {});

// H1 norm of a function of Fermi coordinates over s in [s_lo, s_hi], split at the given
// interior break points.
H1Norm h1_norm_tube(const FermiChart& chart, const std::function<double(double, double)>& f, double s_lo,
                    double s_hi, const std::vector<double>& breaks, const QuadratureSpec& quad = {});

// C1 function on [-r, 0] given with its derivative.
struct Trace1D {
    std::function<double(double)> value;
    std::function<double(double)> derivative;
};

struct InequalityCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;
};

// ||E u||^2_{H1(0, r)} against 164 ||u'||^2 + (82 + 164 G^2 / r^2) ||u||^2 on (-r, 0).
InequalityCheck verify_1d_inequality(const Trace1D& trace, double r, double G, const QuadratureSpec& quad = {});

struct OperatorNormEstimate {
    double max_ratio = 0.0;
    double bound = 0.0;
    double distortion = 0.0;
    std::vector<double> ratios;
    bool within_bound = false;
};

// Rayleigh ratios ||E u||^2_{H1(M)} / ||u||^2_{H1(domain)} over the samples against
// extension_norm_bound. Throws RegularityError for an inadmissible chart.
OperatorNormEstimate operator_norm_estimate(const FermiChart& chart, const CutoffFamily& cutoff,
                                            const std::vector<ScalarField>& samples, const QuadratureSpec& quad = {});

// Distortion max D(t)/d(s) of the comparison profile built from the sampled curvature
// bounds of the chart's domain (exact ball ratios for flat disks).
double chart_distortion(const FermiChart& chart);

struct C1Mismatch {
    double normal = 0.0;
    double tangential = 0.0;
};

// Largest disagreement of one-sided normal and tangential derivatives of E u across the
// boundary, second-order one-sided stencils with step h, evaluated through extend().
C1Mismatch c1_mismatch(const ExtendedField& field, int probes = 256, double h = 1e-4);

// Deterministic family of smooth test fields: low-degree polynomials, plane waves and
// Gaussian bumps centred near the boundary.
std::vector<ScalarField> random_fields(const DomainSpec& domain, int count, std::uint64_t seed);

// Random trigonometric trace on [-r, 0].
Trace1D random_trace(double r, std::uint64_t seed);

} // namespace sobext
