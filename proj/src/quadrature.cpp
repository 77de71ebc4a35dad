#include "sobext/quadrature.hpp"

#include "sobext/errors.hpp"

#include <boost/math/special_functions/legendre.hpp>

#include <cmath>

namespace sobext {

QuadratureRule gauss_legendre(int n, double a, double b) {
    if (n < 1) throw ParameterError("quadrature needs at least one node");
    // boost returns the non-negative zeros in increasing order
    const auto zeros = boost::math::legendre_p_zeros<double>(n);
    std::vector<double> x, w;
    for (double z : zeros) {
        const double dp = boost::math::legendre_p_prime(n, z);
        const double wz = 2.0 / ((1.0 - z * z) * dp * dp);
        if (z == 0.0) {
            x.push_back(0.0);
            w.push_back(wz);
        } else {
            x.push_back(z);
            w.push_back(wz);
            x.push_back(-z);
            w.push_back(wz);
        }
    }
    QuadratureRule rule;
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (std::size_t i = 0; i < x.size(); ++i) {
        rule.nodes.push_back(mid + half * x[i]);
        rule.weights.push_back(half * w[i]);
    }
    return rule;
}

QuadratureRule gauss_legendre_panels(int n, const std::vector<double>& breaks) {
    QuadratureRule rule;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const auto panel = gauss_legendre(n, breaks[i], breaks[i + 1]);
        rule.nodes.insert(rule.nodes.end(), panel.nodes.begin(), panel.nodes.end());
        rule.weights.insert(rule.weights.end(), panel.weights.begin(), panel.weights.end());
    }
    return rule;
}

QuadratureRule periodic_trapezoid(int n) {
    if (n < 1) throw ParameterError("quadrature needs at least one node");
    QuadratureRule rule;
    const double h = 2.0 * 3.14159265358979323846 / n;
    for (int i = 0; i < n; ++i) {
        rule.nodes.push_back(i * h);
        rule.weights.push_back(h);
    }
    return rule;
}

} // namespace sobext
