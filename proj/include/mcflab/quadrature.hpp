#pragma once

#include <vector>

#include "mcflab/gridfield.hpp"

namespace mcflab {

struct Rule1d {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Gauss-Legendre rule with `points` nodes on [a, b].
Rule1d gauss_legendre(int points, double a = -1.0, double b = 1.0);

/// Panels of width <= max_panel on [a, b], each with a `points`-node Gauss rule.
Rule1d composite_gauss(double a, double b, double max_panel, int points = 3);

struct WeightedPoint {
    Vec point;
    double weight;
};

/**
 * Lebesgue quadrature for the ball |x| <= R in R^n, n in {1, 2, 3}: composite
 * Gauss in the radius (panels <= resolution) times uniform angles (n=2) or
 * Gauss-in-cos(phi) by uniform-theta (n=3).
 */
std::vector<WeightedPoint> ball_rule(int n, double radius, double resolution);

/// Parameterized points of the sphere |x| = R for n in {1, 2, 3}: each entry
/// carries the point, the parameter-space weight, and the coordinate
/// derivatives dx/du for the n-1 sphere parameters.
struct SpherePatchPoint {
    Vec point;
    double weight;           // weight in parameter space (dtheta, or dcos(phi) dtheta)
    std::vector<Vec> tangents;  // dx/dtheta (n=2); dx/dphi and dx/dtheta (n=3)
    double parameter_jacobian = 1.0;  // dphi per dcos(phi) for n=3, else 1
};
std::vector<SpherePatchPoint> sphere_rule(int n, double radius, double resolution);

} // namespace mcflab
