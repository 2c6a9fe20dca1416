// End-to-end acceptance checks. One PASS/FAIL line per criterion; the exit
// status is nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "mcflab/analysis.hpp"
#include "mcflab/error.hpp"
#include "mcflab/fixtures.hpp"
#include "mcflab/flow.hpp"
#include "mcflab/geometry.hpp"
#include "mcflab/soliton.hpp"

using namespace mcflab;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + std::string("FAILED ") + what;
        }
    }
    void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

double order(double coarse, double fine) { return std::log2(coarse / fine); }

const double kSqrt2 = std::numbers::sqrt2;
const double kSphereL = 31.0 / 32.0;

Generator sphere() { return fixtures::sphere_cap(kSqrt2); }

Generator soliton_boundary() {
    return [](const Vec& x) -> Vec { return Vec::Constant(1, 0.5 * x[0] - 0.25 * x[1] + 0.3 * x[0] * x[1]); };
}

GraphField solved_soliton(double L, double h) {
    SolverConfig cfg;
    const SolveResult r = solve_dirichlet(GridSpec::make(2, 1, L, h), soliton_boundary(), cfg);
    if (!r.report.converged) throw NumericalError("soliton fixture did not converge");
    return r.field;
}

double sup_parametric(const GraphField& field, double radius) {
    double sup = 0.0;
    for (std::size_t f : field.spec().interior_nodes(1)) {
        if (field.spec().point(f).norm() > radius + 1e-12) continue;
        const GeometrySample g = geometry_at(field, f);
        sup = std::max(sup, (g.mean_curvature + g.position_normal).norm());
    }
    return sup;
}

// ---------------------------------------------------------------------------

Outcome c01_planes() {
    Outcome out;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst_h = 0.0, worst_r = 0.0, worst_flow = 0.0, worst_rescaled = 0.0;
    for (int n = 1; n <= 3; ++n) {
        for (int k = 1; k <= 2; ++k) {
            Mat A(k, n);
            for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = u(rng);
            A *= 3.0 / A.norm();
            const GridSpec spec = GridSpec::make(n, k, 1.0, 0.25);
            const GraphField field = build_field(spec, fixtures::linear_map(A));
            for (std::size_t f : spec.interior_nodes(1)) {
                const GeometrySample g = geometry_at(field, f);
                worst_h = std::max(worst_h, g.mean_curvature.norm());
                worst_r = std::max(worst_r, (g.mean_curvature + g.position_normal).norm());
            }
            FlowConfig cfg;
            const double dt = cfg.cfl * 0.25 * 0.25;
            FlowState state{field, 0.0, 0};
            RescaledFlowState rs = make_rescaled_state(field, 0.0);
            for (int s = 0; s < 1000; ++s) {
                state = mcf_step(state, cfg, dt);
                rs = rescaled_step(rs, cfg, 0.5 * dt);
            }
            for (std::size_t i = 0; i < field.values().size(); ++i) {
                worst_flow = std::max(worst_flow, std::abs(state.field.values()[i] - field.values()[i]));
                worst_rescaled = std::max(worst_rescaled, std::abs(rs.field.values()[i] - field.values()[i]));
            }
        }
    }
    out.require(worst_h <= 1e-12, "sup|H| = " + fmt(worst_h));
    out.require(worst_r <= 1e-12, "sup|H + F^perp| = " + fmt(worst_r));
    out.require(worst_flow <= 1e-12, "MCF drift = " + fmt(worst_flow));
    out.require(worst_rescaled <= 1e-12, "rescaled drift = " + fmt(worst_rescaled));
    out.note("sup|H| " + fmt(worst_h) + ", sup|H+F^perp| " + fmt(worst_r) + ", drift " + fmt(worst_flow) + "/" +
             fmt(worst_rescaled));
    return out;
}

Outcome c02_sphere() {
    Outcome out;
    std::vector<double> errs;
    for (double h : {1.0 / 32, 1.0 / 64, 1.0 / 128}) {
        const GraphField field = build_field(GridSpec::make(2, 1, kSphereL, h), sphere());
        const double e = sup_parametric(field, 0.9);
        errs.push_back(e);
        out.require(e <= 8 * h * h, "h = " + fmt(h) + ": " + fmt(e) + " > 8h^2");
    }
    for (std::size_t i = 0; i + 1 < errs.size(); ++i) {
        const double p = order(errs[i], errs[i + 1]);
        out.require(p >= 1.7 && p <= 2.3, "order " + fmt(p));
        out.note("order " + fmt(p));
    }
    out.note("errors " + fmt(errs[0]) + " " + fmt(errs[1]) + " " + fmt(errs[2]));
    return out;
}

Outcome c03_div_position() {
    Outcome out;
    const AmbientField position = [](const Vec& p) { return p; };
    struct Case {
        std::string name;
        GridSpec spec;
        Generator f;
    };
    const std::vector<Case> cases = {
        {"sphere", GridSpec::make(2, 1, kSphereL, 1.0 / 64), sphere()},
        {"gaussian", GridSpec::make(2, 1, 1.5, 1.0 / 32), fixtures::gaussian_bump(0.7, 0.5)},
        {"random n=3 k=2", GridSpec::make(3, 2, 1.0, 1.0 / 16), fixtures::random_smooth(3, 2, 11)},
        {"random n=1 k=2", GridSpec::make(1, 2, 2.0, 1.0 / 64), fixtures::random_smooth(1, 2, 5)},
    };
    for (const Case& c : cases) {
        const GraphField field = build_field(c.spec, c.f);
        const double h = c.spec.spacing();
        double worst = 0.0;
        for (std::size_t f : c.spec.interior_nodes(1)) {
            worst = std::max(worst, std::abs(surface_divergence(position, field, f) - c.spec.n()));
        }
        out.require(worst <= 5 * h * h, c.name + " defect " + fmt(worst));
        out.note(c.name + " " + fmt(worst));
    }
    return out;
}

Outcome c04_divergence_theorem() {
    Outcome out;
    Mat A(1, 2);
    A << 0.8, -0.5;
    const std::vector<std::pair<std::string, Generator>> surfaces = {{"plane", fixtures::linear_map(A)},
                                                                      {"sphere", sphere()}};
    Vec c(3);
    c << 0.3, -0.7, 1.1;
    const std::vector<std::pair<std::string, AmbientField>> fields = {
        {"constant", [c](const Vec&) { return c; }},
        {"position", [](const Vec& p) { return p; }},
        {"weighted", DivergenceFieldSpec{2.0}.field()},
    };
    for (const auto& [sname, gen] : surfaces) {
        for (const auto& [xname, X] : fields) {
            std::vector<double> rel;
            std::vector<bool> roundoff;
            for (double h : {1.0 / 32, 1.0 / 64, 1.0 / 128}) {
                const GraphField field = build_field(GridSpec::make(2, 1, kSphereL, h), gen);
                const DivergenceIdentityResult r = divergence_identity_check(field, X, 0.9);
                rel.push_back(r.relative_defect);
                // all three integrals vanish identically: only roundoff is left to compare
                roundoff.push_back(r.integral_defect <= 1e-12 * (1.0 + r.boundary_mass));
            }
            const std::string tag = sname + "/" + xname;
            for (std::size_t i = 0; i + 1 < rel.size(); ++i) {
                out.require(rel[i + 1] < rel[i] || (roundoff[i] && roundoff[i + 1]),
                            tag + " not decreasing " + fmt(rel[i]) + " -> " + fmt(rel[i + 1]));
            }
            out.require(rel.back() <= 1e-2 || roundoff.back(), tag + " defect " + fmt(rel.back()));
            out.note(tag + (roundoff.back() ? " at roundoff" : " " + fmt(rel.back())));
        }
    }
    return out;
}

Outcome c05_estimate_star() {
    Outcome out;
    const GraphField field = build_field(GridSpec::make(2, 1, 1.25, 1.0 / 64), sphere());
    const EstimateReport r = estimate_star(field, {0.4, 0.8, 1.2});
    for (const EstimateRow& row : r.rows) {
        out.require(row.lhs <= 1.05 * row.rhs, "R = " + fmt(row.param[0]) + " ratio " + fmt(row.ratio));
        out.note("R " + fmt(row.param[0]) + " ratio " + fmt(row.ratio));
    }
    out.require(r.flags.at("holds"), "holds flag");
    return out;
}

Outcome c06_estimate_K() {
    Outcome out;
    const std::vector<double> radii = {0.2, 0.4, 0.6, 0.8, 0.9};
    auto check = [&](const std::string& name, const GraphField& coarse, const GraphField& fine) {
        const EstimateReport a = estimate_K(coarse, radii);
        const EstimateReport b = estimate_K(fine, radii);
        const double change = std::abs(b.fitted_c - a.fitted_c) / a.fitted_c;
        out.require(a.fitted_c > 0.0 && change <= 0.10, name + " C change " + fmt(change));
        out.require(a.flags.at("bounded") && b.flags.at("bounded"), name + " LHS exceeds C sup RHS");
        out.note(name + " C " + fmt(a.fitted_c) + " -> " + fmt(b.fitted_c));
    };
    check("sphere", build_field(GridSpec::make(2, 1, 1.0, 1.0 / 32), sphere()),
          build_field(GridSpec::make(2, 1, 1.0, 1.0 / 64), sphere()));
    check("soliton", solved_soliton(1.0, 1.0 / 16), solved_soliton(1.0, 1.0 / 32));
    return out;
}

Outcome c07_cauchy() {
    Outcome out;
    const ClosedFormSource cone(fixtures::abs_plus_const(1.0), 2, 1);
    const SphereSampling s = sphere_sampling(2, 1.0, 360);
    const BlowdownSequence seq = sample_blowdown(cone, {1, 2, 4, 8}, s);
    const EstimateReport r = cauchy_bound_check(seq);
    double worst = 0.0;
    for (const EstimateRow& row : r.rows) {
        const double l = row.param[0], m = row.param[1];
        const double exact = 2 * std::numbers::pi * (1 / l - 1 / m) / (1 / l + 1 / m);
        worst = std::max(worst, std::abs(row.ratio - exact) / exact);
    }
    out.require(worst <= 0.01, "closed-form ratio mismatch " + fmt(worst));
    out.require(r.fitted_c <= 2 * std::numbers::pi * 1.01, "C = " + fmt(r.fitted_c));
    out.note("|x|+1: C " + fmt(r.fitted_c) + ", max rel mismatch " + fmt(worst));

    const GraphField field = solved_soliton(1.25, 1.0 / 16);
    const FieldSource src(field, FieldSource::Interpolation::Cubic);
    const EstimateReport t = cauchy_bound_check(sample_blowdown(src, {1.0, 1.05, 1.1, 1.15, 1.2}, s));
    out.require(t.flags.at("no_growth"), "soliton ratios grow");
    out.note("soliton: top/bottom quartile " + fmt(t.extras.at("top_quartile_mean")) + "/" +
             fmt(t.extras.at("bottom_quartile_mean")));
    return out;
}

Outcome c08_cone() {
    Outcome out;
    const ClosedFormSource src(fixtures::abs_plus_const(1.0), 2, 1);
    std::vector<double> ladder;
    for (int i = 0; i <= 11; ++i) ladder.push_back(std::ldexp(1.0, i));
    const ConeEstimate c = estimate_cone(sample_blowdown(src, ladder, sphere_sampling(2, 1.0, 360)));
    double worst = 0.0;
    for (double v : c.profile.values) worst = std::max(worst, std::abs(v - 1.0));
    out.require(worst <= 1e-3, "f_inf off by " + fmt(worst));
    out.require(c.rate.slope && std::abs(*c.rate.slope + 1.0) <= 0.1,
                "slope " + (c.rate.slope ? fmt(*c.rate.slope) : std::string("none")));
    double self = 0.0;
    for (const HomogeneityRow& row : homogeneity_defect(c.profile, {0.5, 2.0, 10.0, -1.0, -3.0})) {
        self = std::max(self, row.defect);
    }
    out.require(self == 0.0, "extension homogeneity defect " + fmt(self));
    out.require(std::isfinite(c.rate.antipodal_defect), "antipodal defect not finite");
    out.note("max|f_inf - 1| " + fmt(worst) + ", slope " + fmt(c.rate.slope.value_or(NAN)) + ", antipodal defect " +
             fmt(c.rate.antipodal_defect));
    return out;
}

Outcome c09_dlambda() {
    Outcome out;
    const std::vector<double> ladder = {1.0, 1.5, 2.0};
    std::vector<Vec> points;
    for (const Vec& x : sphere_sampling(2, 1.0, 16).nodes) points.push_back(0.4 * x);

    const std::vector<std::pair<std::string, ClosedFormSource>> smooth = {
        {"sphere", ClosedFormSource(sphere(), 2, 1)},
        {"gaussian", ClosedFormSource(fixtures::gaussian_bump(0.8, 0.5), 2, 1)},
        {"random", ClosedFormSource(fixtures::random_smooth(2, 2, 3), 2, 2)},
        {"|x|^2", ClosedFormSource(fixtures::quadratic_bowl(1.0), 2, 1)},
    };
    double worst_a = 0.0;
    for (const auto& [name, src] : smooth) {
        const double a = dlambda_identity_check(src, ladder, points).max_defect_a;
        out.require(a <= 1e-6, name + " defect A " + fmt(a));
        worst_a = std::max(worst_a, a);
    }
    out.note("max defect A " + fmt(worst_a));

    for (double h : {1.0 / 32, 1.0 / 64}) {
        const GraphField field = build_field(GridSpec::make(2, 1, kSphereL, h), sphere());
        const FieldSource src(field, FieldSource::Interpolation::Cubic);
        const double b = dlambda_identity_check(src, ladder, points).max_defect_b;
        out.require(b <= 8 * h * h, "sphere h = " + fmt(h) + " defect B " + fmt(b));
        out.note("sphere h=" + fmt(h) + " B " + fmt(b));
    }
    {
        const GraphField field = build_field(GridSpec::make(2, 1, kSphereL, 1.0 / 64), fixtures::quadratic_bowl(1.0));
        const FieldSource src(field, FieldSource::Interpolation::Cubic);
        const DLambdaReport r = dlambda_identity_check(src, ladder, points);
        double min_b = INFINITY;
        for (const DLambdaRow& row : r.rows) min_b = std::min(min_b, row.defect_b);
        out.require(min_b >= 0.1, "|x|^2 defect B " + fmt(min_b));
        out.note("|x|^2 min B " + fmt(min_b) + ", A " + fmt(r.max_defect_a));
    }
    return out;
}

Outcome c10_solver() {
    Outcome out;
    {
        const double h = 1.0 / 64;
        const GridSpec spec = GridSpec::make(2, 1, 0.75, h);
        const Generator exact = sphere();
        GraphField init = build_field(spec, exact);
        const Generator bump = fixtures::compact_bump(Vec::Zero(2), 0.7, 0.01);
        auto v = init.mutable_values();
        for (std::size_t f = 0; f < spec.node_count(); ++f) v[f] *= 1.0 + bump(spec.point(f))[0];
        const SolveResult r = solve_dirichlet(spec, exact, init, SolverConfig{});
        double err = 0.0;
        for (std::size_t f = 0; f < spec.node_count(); ++f) err = std::max(err, std::abs(r.field.values()[f] - exact(spec.point(f))[0]));
        out.require(r.report.converged, "sphere did not converge");
        out.require(err <= 10 * h * h, "sphere error " + fmt(err));
        out.note("sphere err " + fmt(err) + " (" + std::to_string(r.report.iterations) + " it)");
    }
    {
        const double h = 1.0 / 32;
        Mat A(2, 2);
        A << 0.5, -0.3, 0.2, 0.4;
        const Generator exact = fixtures::linear_map(A);
        const GridSpec spec = GridSpec::make(2, 2, 0.75, h);
        GraphField init = boundary_extension(spec, exact);
        const Generator bump = fixtures::compact_bump(Vec::Zero(2), 0.6, 0.1);
        auto v = init.mutable_values();
        for (std::size_t f = 0; f < spec.node_count(); ++f) {
            v[f * 2] += bump(spec.point(f))[0];
            v[f * 2 + 1] -= 0.5 * bump(spec.point(f))[0];
        }
        SolverConfig cfg;
        cfg.eps = 1e-12;
        const SolveResult r = solve_dirichlet(spec, exact, init, cfg);
        double err = 0.0;
        for (std::size_t f = 0; f < spec.node_count(); ++f) {
            err = std::max(err, (r.field.value_vec(f) - exact(spec.point(f))).cwiseAbs().maxCoeff());
        }
        out.require(err <= 1e-10, "linear error " + fmt(err));
        out.note("linear err " + fmt(err));

        cfg.c_tau = 0.9;
        const SolveResult d = solve_dirichlet(spec, exact, init, cfg);
        out.require(d.report.diverged && !d.report.converged, "c_tau = 0.9 not reported as divergent");
        out.note("c_tau=0.9 diverged after " + std::to_string(d.report.iterations) + " it");
    }
    return out;
}

Outcome c11_scaling() {
    Outcome out;
    const Generator f0 = fixtures::compact_bump(Vec::Zero(1), 0.8, 0.3);
    FlowConfig cfg;
    cfg.t_end = 0.05;
    std::vector<double> defects;
    for (double h : {1.0 / 16, 1.0 / 32, 1.0 / 64}) {
        const ScalingInvarianceResult r = scaling_invariance_test(f0, GridSpec::make(1, 1, 2.0, h), 2.0, cfg);
        out.require(r.defect <= 8 * (r.dt + h * h), "h = " + fmt(h) + " defect " + fmt(r.defect));
        defects.push_back(r.defect);
    }
    const double floor = 1e-13;
    for (std::size_t i = 0; i + 1 < defects.size(); ++i) {
        out.require(defects[i + 1] <= 0.5 * defects[i] || (defects[i] <= floor && defects[i + 1] <= floor),
                    "defect does not halve: " + fmt(defects[i]) + " -> " + fmt(defects[i + 1]));
    }
    out.note("defects " + fmt(defects[0]) + " " + fmt(defects[1]) + " " + fmt(defects[2]));
    return out;
}

Outcome c12_dual_route() {
    Outcome out;
    const Generator f0 = fixtures::sum(fixtures::linear_map(Mat::Constant(1, 1, 0.3)),
                                       fixtures::compact_bump(Vec::Zero(1), 1.5, 0.4));
    const std::vector<double> times = {1.0, std::sqrt(2.0), 2.0};
    std::vector<double> gaps;
    std::vector<double> scales;
    for (double h : {1.0 / 32, 1.0 / 64, 1.0 / 128}) {
        FlowConfig cfg;
        cfg.t_end = 2.0;
        cfg.snapshots = times;
        const GridSpec rescaled_spec = GridSpec::make(1, 1, 6.0, h);
        const auto stepped = run_rescaled(make_rescaled_state(build_field(rescaled_spec, f0), 0.0), cfg);
        const auto plain = run_flow({build_field(GridSpec::make(1, 1, 12.0, h), f0), 1.0, 0}, cfg);
        const auto normalized = normalize_snapshots(plain, rescaled_spec);
        double gap = 0.0;
        for (std::size_t i = 0; i < stepped.size(); ++i) gap = std::max(gap, sup_distance(stepped[i], normalized[i], 2.0));
        const double scale = 0.5 * cfg.cfl * h * h + h * h;
        out.require(gap <= 8 * scale, "h = " + fmt(h) + " gap " + fmt(gap));
        gaps.push_back(gap);
        scales.push_back(scale);
    }
    for (std::size_t i = 0; i + 1 < gaps.size(); ++i) {
        const double p = std::log(gaps[i] / gaps[i + 1]) / std::log(scales[i] / scales[i + 1]);
        out.require(p >= 0.8, "order " + fmt(p));
        out.note("order " + fmt(p));
    }
    out.note("gaps " + fmt(gaps[0]) + " " + fmt(gaps[1]) + " " + fmt(gaps[2]));
    return out;
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"C01 plane fixtures", c01_planes},
        {"C02 shrinking sphere residual", c02_sphere},
        {"C03 surface divergence of position", c03_div_position},
        {"C04 divergence theorem", c04_divergence_theorem},
        {"C05 weighted curvature estimate", c05_estimate_star},
        {"C06 key curvature estimate", c06_estimate_K},
        {"C07 Cauchy estimate", c07_cauchy},
        {"C08 cone limit and homogeneity", c08_cone},
        {"C09 scale derivative identity", c09_dlambda},
        {"C10 Dirichlet solver", c10_solver},
        {"C11 scaling invariance", c11_scaling},
        {"C12 dual-route normalized flow", c12_dual_route},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("[%s] %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), secs, o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass) ++failed;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
