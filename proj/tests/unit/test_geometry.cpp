#include <cmath>

#include <doctest.h>

#include "mcflab/fixtures.hpp"
#include "mcflab/geometry.hpp"

using namespace mcflab;

namespace {

JetSample make_jet(const Vec& x, const Vec& f, const Mat& Df, std::vector<Mat> hess) {
    JetSample jet;
    jet.point = x;
    jet.value = f;
    jet.gradient = Df;
    jet.hessian = std::move(hess);
    return jet;
}

std::size_t origin(const GridSpec& spec) {
    GridIndex idx{};
    for (int a = 0; a < spec.n(); ++a) idx[a] = spec.center();
    return spec.flatten(idx);
}

double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

} // namespace

TEST_CASE("metric") {
    const JetSample flat = make_jet(Vec::Zero(2), Vec::Zero(1), Mat::Zero(1, 2), {Mat::Zero(2, 2)});
    CHECK(max_abs(induced_metric(flat) - Mat::Identity(2, 2)) == 0.0);

    Mat D(1, 2);
    D << 1.0, 2.0;
    const Mat g = induced_metric(make_jet(Vec::Zero(2), Vec::Zero(1), D, {Mat::Zero(2, 2)}));
    Mat want(2, 2);
    want << 2, 2, 2, 5;
    CHECK(max_abs(g - want) == 0.0);
    CHECK(g.determinant() == doctest::Approx(6.0));

    Mat D2(2, 1);
    D2 << 3.0, 4.0;
    const Mat g1 = induced_metric(make_jet(Vec::Zero(1), Vec::Zero(2), D2, {Mat::Zero(1, 1), Mat::Zero(1, 1)}));
    CHECK(g1(0, 0) == 26.0);
}

TEST_CASE("normal projection") {
    const JetSample flat = make_jet(Vec::Zero(2), Vec::Zero(2), Mat::Zero(2, 2), {Mat::Zero(2, 2), Mat::Zero(2, 2)});
    Vec d(4);
    d << 0, 0, 1, 1;
    CHECK(max_abs(normal_projection(flat) - Mat(d.asDiagonal())) == 0.0);

    const JetSample slope = make_jet(Vec::Zero(1), Vec::Zero(1), Mat::Ones(1, 1), {Mat::Zero(1, 1)});
    Mat half(2, 2);
    half << 0.5, -0.5, -0.5, 0.5;
    CHECK(max_abs(normal_projection(slope) - half) < 1e-15);

    const GridSpec spec = GridSpec::make(3, 2, 1.0, 0.25);
    const GraphField f = build_field(spec, fixtures::random_smooth(3, 2, 5, 3, 0.8));
    for (std::size_t node : spec.interior_nodes()) {
        const GeometrySample s = geometry_at(f, node);
        const Mat& Q = s.projection;
        CHECK(Q.trace() == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(max_abs(Q * Q - Q) < 1e-10);
        CHECK(max_abs(Q - Q.transpose()) < 1e-12);
        CHECK(max_abs(Q * s.frame) < 1e-10);
        for (const Vec& II : s.second_fundamental) CHECK(max_abs(s.frame.transpose() * II) < 1e-10);
    }
}

TEST_CASE("curvature of the unit sphere at the pole") {
    std::vector<Mat> hess{-Mat::Identity(2, 2)};
    const JetSample jet = make_jet(Vec::Zero(2), Vec::Ones(1), Mat::Zero(1, 2), hess);
    const auto II = second_fundamental_form(jet);
    Vec e3 = Vec::Zero(3);
    e3[2] = 1.0;
    CHECK((II[0] + e3).norm() < 1e-15);
    CHECK(II[1].norm() < 1e-15);
    CHECK((II[3] + e3).norm() < 1e-15);
    CHECK((mean_curvature(jet) + 2 * e3).norm() < 1e-15);
}

TEST_CASE("planes and constants") {
    const GridSpec spec = GridSpec::make(2, 2, 1.0, 0.25);
    Mat A(2, 2);
    A << 1.5, -0.5, 0.25, 2.0;
    const GraphField lin = build_field(spec, fixtures::linear_map(A));
    for (std::size_t node : spec.interior_nodes()) {
        const GeometrySample s = geometry_at(lin, node);
        CHECK(s.mean_curvature.norm() < 1e-11);
        CHECK(s.position_normal.norm() < 1e-12);
    }

    const GraphField c = build_field(GridSpec::make(2, 1, 1.0, 0.25), fixtures::constant_map(Vec::Constant(1, 0.7)));
    const GeometrySample s = geometry_at(c, origin(c.spec()));
    CHECK(s.position_normal[2] == doctest::Approx(0.7));
    CHECK(s.position_tangential.norm() < 1e-15);
}

TEST_CASE("shrinking sphere patch at the pole") {
    const GridSpec spec = GridSpec::make(2, 1, 0.5, 1.0 / 64);
    const GraphField f = build_field(spec, fixtures::sphere_cap(std::sqrt(2.0)));
    const GeometrySample s = geometry_at(f, origin(spec));
    CHECK(s.mean_curvature[2] == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-4));
    CHECK(s.position_normal[2] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK((s.mean_curvature + s.position_normal).norm() < 1e-4);
}

TEST_CASE("codimension one agrees with the divergence of the unit conormal") {
    // f = 0.4 sin(x1) cos(0.7 x2) + 0.2 x1 x2
    auto f = [](double x1, double x2) { return 0.4 * std::sin(x1) * std::cos(0.7 * x2) + 0.2 * x1 * x2; };
    auto fx = [](double x1, double x2) { return 0.4 * std::cos(x1) * std::cos(0.7 * x2) + 0.2 * x2; };
    auto fy = [](double x1, double x2) { return -0.28 * std::sin(x1) * std::sin(0.7 * x2) + 0.2 * x1; };
    auto flux = [&](double x1, double x2, int c) {
        const double w = std::sqrt(1 + fx(x1, x2) * fx(x1, x2) + fy(x1, x2) * fy(x1, x2));
        return (c == 0 ? fx(x1, x2) : fy(x1, x2)) / w;
    };
    const double e = 1e-5;
    const GridSpec spec = GridSpec::make(2, 1, 1.0, 1.0 / 64);
    const GraphField field = build_field(spec, [&](const Vec& x) { return Vec::Constant(1, f(x[0], x[1])); });
    double worst = 0.0;
    for (std::size_t node : spec.interior_nodes(8)) {
        const Vec x = spec.point(node);
        const double div = (flux(x[0] + e, x[1], 0) - flux(x[0] - e, x[1], 0)) / (2 * e) +
                           (flux(x[0], x[1] + e, 1) - flux(x[0], x[1] - e, 1)) / (2 * e);
        Vec nu(3);
        nu << -fx(x[0], x[1]), -fy(x[0], x[1]), 1.0;
        nu /= nu.norm();
        worst = std::max(worst, (geometry_at(field, node).mean_curvature - div * nu).norm());
    }
    CHECK(worst < 1e-3);
}

TEST_CASE("surface divergence") {
    const GridSpec spec = GridSpec::make(2, 1, 1.0, 1.0 / 32);
    const GraphField sphere = build_field(spec, fixtures::sphere_cap(std::sqrt(2.0)));
    const AmbientField position = [](const Vec& p) { return p; };
    const AmbientField constant = [](const Vec& p) { return Vec::Constant(p.size(), 0.3); };
    for (std::size_t node : spec.interior_nodes(4)) {
        CHECK(surface_divergence(position, sphere, node) == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(std::abs(surface_divergence(constant, sphere, node)) < 1e-12);
    }

    Mat A(1, 2);
    A << 0.6, -0.8;
    const double s = 2.0;
    const AmbientField weighted = [s](const Vec& p) -> Vec { return std::pow(1 + p.norm(), -s) * p; };
    // the field has a kink at the origin, so compare away from it
    std::vector<double> errors;
    for (double h : {1.0 / 16, 1.0 / 32, 1.0 / 64}) {
        const GraphField plane = build_field(GridSpec::make(2, 1, 1.0, h), fixtures::linear_map(A));
        double worst = 0.0;
        for (std::size_t node : plane.spec().interior_nodes(2)) {
            const GeometrySample g = geometry_at(plane, node);
            const double r = g.position.norm();
            if (r < 0.3) continue;
            const double want = -s * std::pow(1 + r, -s - 1) * r + 2 * std::pow(1 + r, -s);
            worst = std::max(worst, std::abs(surface_divergence(weighted, plane, node) - want));
        }
        errors.push_back(worst);
    }
    CHECK(errors[2] < 1e-3);
    CHECK(errors[1] < errors[0] / 3.0);
    CHECK(errors[2] < errors[1] / 3.0);
}
