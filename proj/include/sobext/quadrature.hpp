#pragma once

#include <vector>

namespace sobext {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// n-point Gauss-Legendre rule mapped to [a, b].
QuadratureRule gauss_legendre(int n, double a, double b);

// Composite Gauss-Legendre over consecutive panels [breaks[i], breaks[i+1]].
QuadratureRule gauss_legendre_panels(int n, const std::vector<double>& breaks);

// n equispaced nodes on [0, 2 pi) with equal weights (periodic trapezoid).
QuadratureRule periodic_trapezoid(int n);

} // namespace sobext
