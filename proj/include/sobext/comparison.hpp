#pragma once

#include "sobext/errors.hpp"

#include <functional>
#include <optional>

namespace sobext {

// Solution of mu'' + k mu = 0 with mu(0) = 1, mu'(0) = h. Defined for all real s;
// negative s walks the normal geodesic backwards.
double mu(double k, double h, double s);
double mu_prime(double k, double h, double s);
double mu_second(double k, double h, double s);

// First positive zero of mu(k, h, .), or +inf.
double first_zero(double k, double h);

// Focal distance for a hypersurface with II >= H and Sec <= K, using the sign
// convention in which the K = 0 case reads r = 1/H. Equivalent to first_zero(K, -H).
double focal_radius(double K, double H);

// Largest r in (0, 1] with sqrt(K) tan(r sqrt(K)) <= (1 + H)/2 and
// (H / sqrt(K)) tan(r sqrt(K)) <= 1/2 (K -> 0 limits taken). K, H >= 0.
double admissible_rolling_radius(double K, double H);

// Curvature bounds on a tube around the boundary. H_min / H_max are the extreme
// principal curvatures of the boundary w.r.t. the outward normal, in the convention
// where a round disk of radius R has curvature +1/R.
struct CurvatureData {
    double k_lower = 0.0;
    double K_upper = 0.0;
    double H_min = 0.0;
    double H_max = 0.0;
    int n = 2;

    void validate() const;
};

struct VolumeRatioBounds {
    double d = 1.0; // lower envelope of dvol_s / dvol_0, s >= 0
    double D = 1.0; // upper envelope
};

// d = mu(K_upper, H_min, s)^(n-1), D = mu(k_lower, H_max, s)^(n-1).
VolumeRatioBounds volume_ratio_bounds(const CurvatureData& data, double s);

struct MuDescriptor {
    double k = 0.0;
    double h = 0.0;
};

// Pair of functions d, D on [0, r] with d(s) dvol_s <= dvol_0 and dvol_0 <= D(s) dvol_{-s}.
// By default both come from comparison functions:
//   d(s) = mu(mu_d.k, mu_d.h,  s)^-(n-1)   (exterior growth, Sec >= k_lower)
//   D(s) = mu(mu_D.k, mu_D.h, -s)^-(n-1)   (interior shrinkage, Sec <= K_upper)
// An exact pair can be supplied instead.
class ComparisonProfile {
public:
    using Fn = std::function<double(double)>;

    static ComparisonProfile from_curvature(const CurvatureData& data, double r);
    static ComparisonProfile exact(Fn d, Fn D, int n, double r, double r0);
    // Euclidean ball of radius R0: d = (R0/(R0+s))^(n-1), D = (R0/(R0-s))^(n-1).
    static ComparisonProfile ball(double R0, int n, double r);

    double d(double s) const;
    double D(double s) const;

    MuDescriptor mu_d;
    MuDescriptor mu_D;
    double r0 = 0.0;
    double r = 0.0;
    int n = 2;

private:
    Fn exact_d_;
    Fn exact_D_;
};

// max_{s,t in [0,r]} D(t)/d(s) by a 1024-point grid plus golden-section refinement.
double distortion_factor(const ComparisonProfile& profile, double r);

// Squared-norm bound 1 + distortion * max(164, 82 + 164 G^2 / r^2).
double extension_norm_bound(double distortion, double G, double r);

// (n-1) mu'/mu, the comparison bound for the mean curvature of the level set at depth s.
double mean_curvature_bound(double k, double h, double s, int n);

// Maximum of a function on [a, b]: dense grid, then golden-section around the best node.
double maximize_on_interval(const std::function<double(double)>& fn, double a, double b, int grid = 1024);

} // namespace sobext
