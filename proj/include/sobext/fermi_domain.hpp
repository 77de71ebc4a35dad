#pragma once

#include "sobext/geometry.hpp"

#include <string>
#include <vector>

namespace sobext {

// rho(theta) = sum_k cos_coeffs[k] cos(k theta) + sin_coeffs[k] sin(k theta), k >= 0.
struct FourierSeries {
    std::vector<double> cos_coeffs;
    std::vector<double> sin_coeffs;

    double value(double theta) const;
    double d1(double theta) const;
    double d2(double theta) const;
};

// Boundary data at one parameter value. The second fundamental form is the geodesic
// curvature in the convention X'(0) = II for the Jacobi field X(0) = 1 along the
// outward normal geodesic, so a round disk of radius R has II = +1/R.
struct BoundarySample {
    double theta = 0.0;
    Vec2 point = Vec2::Zero();
    Vec2 normal = Vec2::Zero();
    double second_fundamental_form = 0.0;
    double speed = 0.0;
};

// Local minimiser of the distance from a point to the boundary.
struct FootPoint {
    double theta = 0.0;
    double distance = 0.0;
    double signed_distance = 0.0; // negative inside the domain
};

class DomainSpec {
public:
    enum class Boundary { geodesic_disk, radial_profile };

    // Geodesic disk. Curved surfaces require the centre at the pole of the normal chart.
    static DomainSpec disk(ModelSurface surface, Vec2 center, double radius);
    // Star-shaped domain {rho(theta) > |x|} in the flat plane.
    static DomainSpec fourier(ModelSurface surface, FourierSeries rho, int dense_samples = 2048);

    const ModelSurface& surface() const { return surface_; }
    Boundary boundary() const { return boundary_; }
    const Vec2& center() const { return center_; }
    double radius() const { return radius_; }
    const FourierSeries& profile() const { return rho_; }

    BoundarySample boundary_sample(double theta) const;
    // Point at signed depth s along the normal geodesic from theta (no tube check).
    Vec2 normal_point(double theta, double s) const;
    // Length of the normal Jacobi field with X(0) = 1, X'(0) = II at depth s.
    double normal_jacobian(double theta, double s) const;
    // Largest depth for which normal_point stays in the surface chart, per side.
    double max_depth_outward() const;
    double max_depth_inward() const;

    // Local minimisers of the distance to the boundary, nearest first.
    std::vector<FootPoint> feet(const Vec2& p) const;
    double signed_distance(const Vec2& p) const;
    // Membership by the radial description (|x - c| <= a, or |x| <= rho(arg x)).
    bool contains(const Vec2& p) const;

    double area() const;
    double perimeter() const;
    // Largest distance between two boundary points (closed form or dense sampling).
    double diameter() const;

private:
    ModelSurface surface_ = ModelSurface::constant_curvature(0.0);
    Boundary boundary_ = Boundary::geodesic_disk;
    Vec2 center_ = Vec2::Zero();
    double radius_ = 1.0;
    FourierSeries rho_;
    std::vector<double> dense_theta_;
    std::vector<Vec2> dense_points_;
};

BoundarySample boundary_point(const DomainSpec& domain, double theta);

class FermiChart {
public:
    // Throws DegenerateTubeError if a normal Jacobi field vanishes in the tube and
    // RegularityError if psi fails the injectivity check.
    FermiChart(DomainSpec domain, double r, int samples = 256);

    const DomainSpec& domain() const { return domain_; }
    double r() const { return r_; }
    const std::vector<BoundarySample>& boundary_samples() const { return samples_; }

private:
    DomainSpec domain_;
    double r_ = 0.0;
    std::vector<BoundarySample> samples_;
};

struct FermiCoords {
    double s = 0.0;
    double theta = 0.0;
};

Vec2 fermi_map(const FermiChart& chart, double s, double theta);
FermiCoords fermi_invert(const FermiChart& chart, const Vec2& point, double tol = 1e-12);
// dvol_s / dvol_0 along the normal geodesic at theta.
double volume_element_ratio(const FermiChart& chart, double theta, double s);

struct RegularityReport {
    double r = 0.0;
    bool interior_ball_ok = false;
    bool exterior_ball_ok = false;
    // min over theta of (dist(centre, boundary) - r) / r; negative means a violation
    double interior_margin = 0.0;
    double exterior_margin = 0.0;
    bool injectivity_ok = false;
    double injectivity_defect = 0.0;
    double H = 0.0; // smallest H >= 0 with II >= -H for both normals
    double K = 0.0; // sup |Sec| on the tube
    double k_lower = 0.0;
    double K_upper = 0.0;
    double H_min = 0.0;
    double H_max = 0.0;
    double r0 = 0.0; // focal radius of the boundary
    bool admissible = false;
    std::vector<std::string> failures;
};

RegularityReport check_regularity(const DomainSpec& domain, double r, int samples = 256);

// Smallest angular distance between two parameters on the circle.
double angle_gap(double a, double b);

} // namespace sobext
