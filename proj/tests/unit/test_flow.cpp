#include <cmath>
#include <numbers>

#include <doctest.h>

#include "mcflab/fixtures.hpp"
#include "mcflab/flow.hpp"

using namespace mcflab;

namespace {

double sup_diff(const GraphField& a, const GraphField& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.values().size(); ++i) d = std::max(d, std::abs(a.values()[i] - b.values()[i]));
    return d;
}

double sup_abs(const GraphField& a) {
    double d = 0.0;
    for (double v : a.values()) d = std::max(d, std::abs(v));
    return d;
}

} // namespace

TEST_CASE("planes are stationary under both flows") {
    const GridSpec spec = GridSpec::make(2, 2, 1.0, 0.125);
    Mat A(2, 2);
    A << 2.0, -1.0, 0.5, 1.5;
    const GraphField f = build_field(spec, fixtures::linear_map(A));
    FlowConfig cfg;
    FlowState st{f, 0.0, 0};
    RescaledFlowState rs = make_rescaled_state(f, 0.0);
    for (int i = 0; i < 50; ++i) {
        st = mcf_step(st, cfg);
        rs = rescaled_step(rs, cfg);
    }
    CHECK(sup_diff(st.field, f) < 1e-13);
    CHECK(sup_diff(rs.field, f) < 1e-13);
    CHECK(st.t == doctest::Approx(50 * cfg.cfl * 0.125 * 0.125));
}

TEST_CASE("one step along the grim reaper") {
    // f(x, t) = t - log cos x solves f_t = f'' / (1 + f'^2)
    const double h = 1.0 / 32;
    const GridSpec spec = GridSpec::make(1, 1, 1.0, h);
    const GraphField f0 = build_field(spec, [](const Vec& x) { return Vec::Constant(1, -std::log(std::cos(x[0]))); });
    FlowConfig cfg;
    const FlowState next = mcf_step(FlowState{f0, 0.0, 0}, cfg);
    const double dt = next.t;
    CHECK(dt == doctest::Approx(cfg.cfl * h * h));
    double err = 0.0;
    for (std::size_t node : spec.interior_nodes()) {
        const double exact = dt - std::log(std::cos(spec.point(node)[0]));
        err = std::max(err, std::abs(next.field.values()[node] - exact));
    }
    CHECK(err < 10 * dt * (dt + h * h));
}

TEST_CASE("small sine decays with frozen ends") {
    const double pi = std::numbers::pi;
    const GridSpec spec = GridSpec::make(1, 1, pi, pi / 32);
    const GraphField f0 = build_field(spec, [](const Vec& x) { return Vec::Constant(1, 0.05 * std::sin(x[0])); });
    FlowConfig cfg;
    cfg.t_end = 1.0;
    cfg.snapshots = {0.5, 1.0};
    const auto states = run_flow(FlowState{f0, 0.0, 0}, cfg);
    REQUIRE(states.size() == 2);
    CHECK(states[1].t == doctest::Approx(1.0).epsilon(1e-14));
    const double a0 = sup_abs(f0), a1 = sup_abs(states[0].field), a2 = sup_abs(states[1].field);
    CHECK(a1 < a0);
    CHECK(a2 < a1);
    // linearized: sin x decays like e^{-t}
    CHECK(a2 / a0 == doctest::Approx(std::exp(-1.0)).epsilon(0.02));
}

TEST_CASE("normalization") {
    const GridSpec spec = GridSpec::make(1, 1, 4.0, 0.125);
    const Generator phi = [](const Vec& x) { return Vec::Constant(1, std::sin(x[0]) + 0.3 * x[0]); };
    const GraphField f1 = build_field(spec, phi);
    const GraphField f4 = build_field(spec, [&](const Vec& x) { return Vec(2.0 * phi(x / 2.0)); });
    const auto out = normalize_snapshots({FlowState{f1, 1.0, 0}, FlowState{f4, 4.0, 0}});
    REQUIRE(out.size() == 2);
    CHECK(out[0].field == f1);
    CHECK(out[0].s == 0.0);
    CHECK(out[1].s == doctest::Approx(std::log(2.0)));
    std::size_t present = 0;
    for (std::size_t i = 0; i < spec.node_count(); ++i) {
        if (out[1].missing[i]) {
            CHECK(std::abs(spec.point(i)[0]) > 2.0);
            continue;
        }
        ++present;
        CHECK(out[1].field.values()[i] == doctest::Approx(f1.values()[i]).epsilon(1e-13));
    }
    CHECK(present == 33);
}

TEST_CASE("scaling invariance of the flow") {
    FlowConfig cfg;
    cfg.t_end = 0.02;
    const GridSpec spec = GridSpec::make(1, 1, 2.0, 1.0 / 16);
    Mat A(1, 1);
    A << 0.7;
    CHECK(scaling_invariance_test(fixtures::linear_map(A), spec, 2.0, cfg).defect < 1e-13);
    const auto bump = scaling_invariance_test(fixtures::compact_bump(Vec::Zero(1), 1.0, 0.2), spec, 2.0, cfg);
    CHECK(bump.nodes_compared > 0);
    CHECK(bump.defect < 1e-12);
}

TEST_CASE("rescaled flow reduces the expander residual") {
    const GridSpec spec = GridSpec::make(1, 1, 2.0, 1.0 / 16);
    const GraphField f0 = build_field(spec, fixtures::sum(fixtures::linear_map(Mat::Constant(1, 1, 0.3)),
                                                          fixtures::compact_bump(Vec::Zero(1), 1.0, 0.2)));
    FlowConfig cfg;
    cfg.t_end = 2.0;
    cfg.snapshots = {1.0, 2.0};
    const auto states = run_rescaled(make_rescaled_state(f0, 0.0), cfg);
    REQUIRE(states.size() == 2);
    CHECK(flow_diagnostics(states[1].field).expander_residual < flow_diagnostics(states[0].field).expander_residual);
}

TEST_CASE("flow config") {
    FlowConfig cfg;
    cfg.cfl = 0.0;
    CHECK_THROWS(cfg.validate());
    cfg.cfl = 0.2;
    cfg.t_end = std::nan("");
    CHECK_THROWS(cfg.validate());
    CHECK(boundary_policy_from_string(to_string(BoundaryPolicy::LinearExtrapolation)) ==
          BoundaryPolicy::LinearExtrapolation);
    const auto snaps = geometric_snapshots(1.0, 8.0);
    CHECK(snaps == std::vector<double>{1.0, 2.0, 4.0, 8.0});
}
