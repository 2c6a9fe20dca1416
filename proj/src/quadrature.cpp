#include "mcflab/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "mcflab/error.hpp"

namespace mcflab {

Rule1d gauss_legendre(int points, double a, double b) {
    if (points < 1) throw ValidationError("Gauss rule needs at least one node");
    Rule1d rule;
    rule.nodes.resize(points);
    rule.weights.resize(points);
    // Newton on P_points starting from the Chebyshev-like guess
    for (int i = 0; i < (points + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (points + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = z;
            for (int j = 2; j <= points; ++j) {
                const double p2 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            if (points == 1) p1 = z, p0 = 1.0;
            dp = points * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - z * z) * dp * dp);
        rule.nodes[i] = -z;
        rule.nodes[points - 1 - i] = z;
        rule.weights[i] = w;
        rule.weights[points - 1 - i] = w;
    }
    if (points == 1) {
        rule.nodes[0] = 0.0;
        rule.weights[0] = 2.0;
    }
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (b + a);
    for (int i = 0; i < points; ++i) {
        rule.nodes[i] = mid + half * rule.nodes[i];
        rule.weights[i] *= half;
    }
    return rule;
}

Rule1d composite_gauss(double a, double b, double max_panel, int points) {
    if (!(b > a)) return {};
    const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / max_panel)));
    const double w = (b - a) / panels;
    Rule1d out;
    for (int p = 0; p < panels; ++p) {
        const Rule1d g = gauss_legendre(points, a + p * w, a + (p + 1) * w);
        out.nodes.insert(out.nodes.end(), g.nodes.begin(), g.nodes.end());
        out.weights.insert(out.weights.end(), g.weights.begin(), g.weights.end());
    }
    return out;
}

namespace {

int angular_count(double radius, double resolution, int minimum) {
    return std::max(minimum, static_cast<int>(std::ceil(2.0 * std::numbers::pi * radius / resolution)));
}

void check_dimension(int n) {
    if (n < 1 || n > 3) throw ValidationError("ball and sphere rules are implemented for n in {1, 2, 3}");
}

} // namespace

std::vector<WeightedPoint> ball_rule(int n, double radius, double resolution) {
    check_dimension(n);
    std::vector<WeightedPoint> out;
    if (!(radius > 0.0)) return out;
    if (n == 1) {
        const Rule1d r = composite_gauss(-radius, radius, resolution);
        for (std::size_t i = 0; i < r.nodes.size(); ++i) out.push_back({Vec::Constant(1, r.nodes[i]), r.weights[i]});
        return out;
    }
    const Rule1d radial = composite_gauss(0.0, radius, resolution);
    for (const SpherePatchPoint& s : sphere_rule(n, 1.0, resolution / radius)) {
        const double angular = s.weight * s.parameter_jacobian * (n == 3 ? s.tangents[1].norm() : 1.0);
        for (std::size_t i = 0; i < radial.nodes.size(); ++i) {
            const double r = radial.nodes[i];
            out.push_back({r * s.point, radial.weights[i] * std::pow(r, n - 1) * angular});
        }
    }
    return out;
}

std::vector<SpherePatchPoint> sphere_rule(int n, double radius, double resolution) {
    check_dimension(n);
    std::vector<SpherePatchPoint> out;
    if (n == 1) {
        out.push_back({Vec::Constant(1, -radius), 1.0, {}, 1.0});
        out.push_back({Vec::Constant(1, radius), 1.0, {}, 1.0});
        return out;
    }
    if (n == 2) {
        const int count = angular_count(radius, resolution, 64);
        const double w = 2.0 * std::numbers::pi / count;
        for (int j = 0; j < count; ++j) {
            const double th = w * j;
            Vec x(2), dx(2);
            x << radius * std::cos(th), radius * std::sin(th);
            dx << -radius * std::sin(th), radius * std::cos(th);
            out.push_back({x, w, {dx}, 1.0});
        }
        return out;
    }
    const int n_theta = angular_count(radius, resolution, 32);
    const int n_phi = std::max(16, n_theta / 2);
    const Rule1d u = gauss_legendre(n_phi, -1.0, 1.0);
    const double wt = 2.0 * std::numbers::pi / n_theta;
    for (int i = 0; i < n_phi; ++i) {
        const double c = u.nodes[i];
        const double s = std::sqrt(1.0 - c * c);
        for (int j = 0; j < n_theta; ++j) {
            const double th = wt * j;
            Vec x(3), dphi(3), dtheta(3);
            x << radius * s * std::cos(th), radius * s * std::sin(th), radius * c;
            dphi << radius * c * std::cos(th), radius * c * std::sin(th), -radius * s;
            dtheta << -radius * s * std::sin(th), radius * s * std::cos(th), 0.0;
            // dphi = -du / sin(phi)
            out.push_back({x, u.weights[i] * wt, {dphi, dtheta}, 1.0 / s});
        }
    }
    return out;
}

} // namespace mcflab
