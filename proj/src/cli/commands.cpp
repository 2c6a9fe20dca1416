#include <chrono>
#include <cmath>
#include <iostream>
#include <sstream>
#include <utility>

#include <CLI11.hpp>

#include "mcflab/cli.hpp"
#include "mcflab/error.hpp"
#include "mcflab/field_io.hpp"
#include "mcflab/format.hpp"
#include "mcflab/geometry.hpp"

namespace mcflab::cli {

namespace {

struct Context {
    json config;
    const RunConfig* run = nullptr;
    OutputSet* out = nullptr;
    std::filesystem::path base_dir;
    int exit_code = 0;

    void say(const std::string& line) const {
        if (!run->quiet) std::cout << line << '\n';
    }
};

json nullable(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::vector<double> default_radii(const GridSpec& spec) {
    const double top = spec.extent() - 2.0 * spec.spacing();
    return {0.25 * top, 0.5 * top, 0.75 * top, top};
}

std::vector<double> radii_from(json& cfg, const GridSpec& spec) {
    if (!cfg.contains("radii")) cfg["radii"] = default_radii(spec);
    std::vector<double> out;
    for (const json& r : cfg["radii"]) {
        if (!r.is_number()) throw ValidationError("radii must be numbers");
        out.push_back(r.get<double>());
    }
    return out;
}

// ---------------------------------------------------------------------------

void cmd_geometry(Context& ctx) {
    json& cfg = ctx.config;
    const GridSpec spec = parse_grid(cfg);
    const GraphField field = parse_field(cfg["field"], spec, ctx.run->seed, ctx.base_dir);
    std::optional<double> radius;
    if (cfg.contains("radius")) radius = cfg["radius"].get<double>();

    const auto rows = geometry_report(field, radius);
    std::ostringstream csv;
    write_geometry_csv(csv, spec.n(), rows);
    ctx.out->write("geometry.csv", csv.str());

    double sup_h = 0.0;
    double sup_r = 0.0;
    for (const auto& r : rows) {
        sup_h = std::max(sup_h, r.mean_curvature_norm);
        sup_r = std::max(sup_r, r.soliton_residual_norm);
    }
    double div_defect = 0.0;
    const AmbientField position = [](const Vec& p) { return p; };
    for (std::size_t f : spec.interior_nodes(1)) {
        if (radius && spec.point(f).norm() > *radius) continue;
        div_defect = std::max(div_defect, std::abs(surface_divergence(position, field, f) - spec.n()));
    }
    const MetricBoundReport metric = metric_bound_check(field, radius);
    json summary = {{"nodes", rows.size()},
                    {"sup_mean_curvature", sup_h},
                    {"sup_soliton_residual", sup_r},
                    {"sup_scalar_residual", residual_scalar(field).scalar_sup},
                    {"equivalence_defect", equivalence_check(field)},
                    {"div_position_defect", div_defect},
                    {"metric",
                     {{"C0", metric.c0},
                      {"C_metric", metric.c_metric},
                      {"lambda_min", metric.lambda_min},
                      {"det_max", metric.det_max},
                      {"violations", metric.violations}}}};
    ctx.out->write_json("summary.json", summary);
    ctx.say("geometry: " + std::to_string(rows.size()) + " nodes, sup|H + F^perp| = " + format_double(sup_r));
}

void cmd_solve(Context& ctx) {
    json& cfg = ctx.config;
    const GridSpec spec = parse_grid(cfg);
    if (!cfg.contains("boundary")) throw ValidationError("missing config key 'boundary'");
    const Generator boundary = parse_generator(cfg["boundary"], spec.n(), spec.k(), ctx.run->seed);
    SolverConfig solver = parse_solver(cfg["solver"]);

    json& init_cfg = cfg["init"];
    if (!init_cfg.is_object()) init_cfg = json::object();
    if (!init_cfg.contains("kind")) init_cfg["kind"] = "extension";
    const std::string kind = init_cfg["kind"].get<std::string>();
    GraphField init = kind == "extension"       ? boundary_extension(spec, boundary)
                      : kind == "boundary_field" ? build_field(spec, boundary)
                                                 : throw ValidationError("init.kind must be extension or boundary_field");
    if (init_cfg.contains("perturbation")) {
        const Generator p = parse_generator(init_cfg["perturbation"], spec.n(), spec.k(), ctx.run->seed);
        auto values = init.mutable_values();
        for (std::size_t f : spec.interior_nodes(1)) {
            const Vec d = p(spec.point(f));
            for (int a = 0; a < spec.k(); ++a) values[f * spec.k() + a] += d[a];
        }
    }

    const SolveResult result = solve_dirichlet(spec, boundary, init, solver);
    const SolverReport& rep = result.report;
    ctx.out->write("field.json", field_to_json(result.field));

    std::ostringstream csv;
    csv << "iteration,residual_sup,residual_l2,best_sup\n";
    for (std::size_t i = 0; i < rep.residual_sup.size(); ++i) {
        csv << i << ',' << format_double(rep.residual_sup[i]) << ',' << format_double(rep.residual_l2[i]) << ','
            << format_double(rep.best_sup[i]) << '\n';
    }
    ctx.out->write("residuals.csv", csv.str());

    const double last = rep.residual_sup.empty() ? 0.0 : rep.residual_sup.back();
    json summary = {{"converged", rep.converged},
                    {"diverged", rep.diverged},
                    {"iterations", rep.iterations},
                    {"best_iteration", rep.best_iteration},
                    {"target", rep.target},
                    {"residual_sup", std::isfinite(last) ? json(last) : json(nullptr)},
                    {"best_sup", rep.best_sup.empty() ? 0.0 : rep.best_sup.back()},
                    {"final_C0", rep.final_c0},
                    {"warnings", rep.warnings}};
    ctx.out->write_json("summary.json", summary);
    for (const std::string& w : rep.warnings) std::cerr << "warning: " << w << '\n';
    if (rep.diverged) {
        std::cerr << "solver diverged after " << rep.iterations << " iterations\n";
        ctx.exit_code = 3;
        return;
    }
    ctx.say(std::string("solve-soliton: ") + (rep.converged ? "converged" : "not converged") + " after " +
            std::to_string(rep.iterations) + " iterations, sup residual " + format_double(rep.best_sup.back()));
}

void cmd_flow(Context& ctx) {
    json& cfg = ctx.config;
    const GridSpec spec = parse_grid(cfg);
    const GraphField field = parse_field(cfg["field"], spec, ctx.run->seed, ctx.base_dir);
    FlowConfig flow = parse_flow(cfg["flow"]);
    if (!cfg.contains("equation")) cfg["equation"] = "mcf";
    const std::string equation = cfg["equation"].get<std::string>();
    if (auto w = flow.validate()) std::cerr << "warning: " << *w << '\n';

    std::vector<std::pair<double, GraphField>> states;
    states.emplace_back(equation == "rescaled" ? 1.0 : 0.0, field);
    long steps = 0;
    if (equation == "mcf") {
        for (const FlowState& s : run_flow({field, 0.0, 0}, flow)) {
            states.emplace_back(s.t, s.field);
            steps = s.steps;
        }
    } else if (equation == "rescaled") {
        if (flow.t_end < 1.0) throw ValidationError("rescaled runs start at t = 1; flow.t_end must be >= 1");
        for (const RescaledFlowState& s : run_rescaled(make_rescaled_state(field, 0.0), flow)) {
            states.emplace_back(s.t, s.field);
            steps = s.steps;
        }
    } else {
        throw ValidationError("equation must be mcf or rescaled");
    }

    std::ostringstream csv;
    csv << "t,sup_grad,sup_soliton_residual,sup_expander_residual\n";
    for (std::size_t i = 0; i < states.size(); ++i) {
        const FlowDiagnostics d = flow_diagnostics(states[i].second);
        for (double v : {d.sup_gradient, d.soliton_residual, d.expander_residual}) {
            if (!std::isfinite(v)) throw NumericalError("non-finite flow diagnostic at t = " + format_double(states[i].first));
        }
        csv << format_double(states[i].first) << ',' << format_double(d.sup_gradient) << ','
            << format_double(d.soliton_residual) << ',' << format_double(d.expander_residual) << '\n';
        char name[64];
        std::snprintf(name, sizeof name, "snapshots/snapshot_%03zu.json", i);
        ctx.out->write(name, field_to_json(states[i].second));
    }
    ctx.out->write("run.csv", csv.str());
    json summary = {{"equation", equation},
                    {"steps", steps},
                    {"t_final", states.back().first},
                    {"snapshots", states.size()},
                    {"sup_change", 0.0}};
    double change = 0.0;
    const auto a = states.front().second.values();
    const auto b = states.back().second.values();
    for (std::size_t i = 0; i < a.size(); ++i) change = std::max(change, std::abs(a[i] - b[i]));
    summary["sup_change"] = change;
    ctx.out->write_json("summary.json", summary);
    ctx.say("run-flow: " + std::to_string(steps) + " steps to t = " + format_double(states.back().first));
}

struct Source {
    std::optional<GraphField> field;
    std::unique_ptr<ProfileSource> source;
};

Source source_from(Context& ctx, json& cfg) {
    Source s;
    if (cfg.contains("spec") || (cfg.contains("field") && cfg["field"].value("kind", "") == "file")) {
        std::optional<GridSpec> spec;
        if (cfg.contains("spec")) spec = parse_grid(cfg);
        s.field.emplace(parse_field(cfg["field"], spec, ctx.run->seed, ctx.base_dir));
        if (!cfg.contains("interpolation")) cfg["interpolation"] = "multilinear";
        const std::string mode = cfg["interpolation"].get<std::string>();
        if (mode != "multilinear" && mode != "cubic") throw ValidationError("interpolation must be multilinear or cubic");
        s.source = std::make_unique<FieldSource>(
            *s.field, mode == "cubic" ? FieldSource::Interpolation::Cubic : FieldSource::Interpolation::Multilinear);
    } else {
        const int n = require(cfg, "n", "").get<int>();
        const int k = require(cfg, "k", "").get<int>();
        if (n < 1 || n > kMaxDim || k < 1 || k > kMaxDim) throw ValidationError("n and k must lie in [1, 4]");
        if (!cfg.contains("field")) throw ValidationError("missing config key 'field'");
        s.source = std::make_unique<ClosedFormSource>(parse_generator(cfg["field"], n, k, ctx.run->seed), n, k);
    }
    return s;
}

std::vector<double> ladder_from(json& cfg) {
    const json& l = require(cfg, "ladder", "");
    std::vector<double> out;
    for (const json& v : l) out.push_back(v.get<double>());
    return out;
}

struct BlowdownOutcome {
    EstimateReport cauchy;
    EstimateReport cone_rows;
    ConeEstimate cone;
    std::vector<HomogeneityRow> homogeneity;
    std::vector<HomogeneityRow> self_homogeneity;
};

BlowdownOutcome blowdown_pipeline(Context& ctx, json& cfg, const ProfileSource& source) {
    const std::vector<double> ladder = ladder_from(cfg);
    const SphereSampling sampling = parse_sampling(cfg["sphere"], source.n(), ctx.run->seed);
    const BlowdownSequence seq = sample_blowdown(source, ladder, sampling);
    BlowdownOutcome out;
    out.cauchy = cauchy_bound_check(seq);
    out.cone = estimate_cone(seq);
    out.cone_rows.check = "cone";
    for (std::size_t l = 0; l < ladder.size(); ++l) {
        const double d2 = out.cone.rate.distances[l] * out.cone.rate.distances[l];
        const double rhs = out.cauchy.fitted_c / (ladder[l] * ladder[l]);
        out.cone_rows.rows.push_back({{ladder[l]}, d2, rhs, rhs > 0.0 ? d2 / rhs : 0.0});
    }
    if (!cfg.contains("homogeneity_radii")) cfg["homogeneity_radii"] = std::vector<double>{1.0, -1.0};
    std::vector<double> radii;
    for (const json& r : cfg["homogeneity_radii"]) radii.push_back(r.get<double>());
    out.self_homogeneity = homogeneity_defect(out.cone.profile, radii);
    out.homogeneity = homogeneity_defect(out.cone.profile, source, radii);

    if (cfg.value("pointwise", false)) {
        std::ostringstream csv;
        csv << "lambda,mu,node,abs_diff\n";
        for (std::size_t i = 0; i < ladder.size(); ++i) {
            for (std::size_t j = i + 1; j < ladder.size(); ++j) {
                for (std::size_t p = 0; p < sampling.size(); ++p) {
                    csv << format_double(ladder[i]) << ',' << format_double(ladder[j]) << ',' << p << ','
                        << format_double((seq.at(i, p) - seq.at(j, p)).norm()) << '\n';
                }
            }
        }
        ctx.out->write("pointwise.csv", csv.str());
    }
    ctx.out->write_json("profile.json", profile_to_json(out.cone.profile));
    return out;
}

json homogeneity_json(const std::vector<HomogeneityRow>& rows) {
    json out = json::array();
    for (const auto& r : rows) out.push_back({{"r", r.r}, {"defect", r.defect}});
    return out;
}

void blowdown_summary(json& summary, const BlowdownOutcome& b) {
    summary["C_cauchy"] = b.cauchy.fitted_c;
    summary["rate_slope"] = nullable(b.cone.rate.slope);
    summary["antipodal_defect"] = b.cone.rate.antipodal_defect;
    summary["cauchy_no_growth"] = b.cauchy.flags.at("no_growth");
    summary["already_conical"] = b.cone.rate.already_conical;
    summary["cone_monotone"] = b.cone.rate.monotone;
    summary["homogeneity"] = homogeneity_json(b.homogeneity);
    summary["profile_homogeneity"] = homogeneity_json(b.self_homogeneity);
}

void cmd_blowdown(Context& ctx) {
    json& cfg = ctx.config;
    Source src = source_from(ctx, cfg);
    const BlowdownOutcome b = blowdown_pipeline(ctx, cfg, *src.source);
    std::ostringstream csv;
    write_estimates_csv(csv, {b.cauchy, b.cone_rows});
    ctx.out->write("estimates.csv", csv.str());
    json summary = {{"C_K", nullptr}, {"C_star_ok", nullptr}};
    blowdown_summary(summary, b);
    ctx.out->write_json("summary.json", summary);
    ctx.say("blowdown: C_cauchy = " + format_double(b.cauchy.fitted_c));
}

AmbientField divergence_field(json& item, int d, int n, std::string& name) {
    if (item.is_string()) item = json{{"kind", item.get<std::string>()}};
    const std::string kind = require(item, "kind", "divergence_fields[]").get<std::string>();
    name = kind;
    if (kind == "constant") {
        if (!item.contains("c")) item["c"] = std::vector<double>(d, 1.0);
        const std::vector<double> c = item["c"].get<std::vector<double>>();
        if (static_cast<int>(c.size()) != d) throw ValidationError("constant divergence field needs n + k entries");
        const Vec v = Eigen::Map<const Vec>(c.data(), d);
        return [v](const Vec&) { return v; };
    }
    if (kind == "position") return [](const Vec& p) { return p; };
    if (kind == "weighted") {
        if (!item.contains("s")) item["s"] = n;
        DivergenceFieldSpec s{item["s"].get<double>()};
        return s.field();
    }
    throw ValidationError("unknown divergence field kind '" + kind + "'");
}

void cmd_verify(Context& ctx) {
    json& cfg = ctx.config;
    const GridSpec spec = parse_grid(cfg);
    const GraphField field = parse_field(cfg["field"], spec, ctx.run->seed, ctx.base_dir);
    const int n = spec.n();
    const std::vector<double> radii = radii_from(cfg, spec);

    std::vector<EstimateReport> tables;
    json summary;
    json defects;

    const SolitonResidual residual = soliton_residual(field);
    defects["soliton_residual"] = residual.parametric_sup;
    defects["equivalence"] = equivalence_check(field);
    {
        double div = 0.0;
        const AmbientField position = [](const Vec& p) { return p; };
        for (std::size_t f : spec.interior_nodes(1)) div = std::max(div, std::abs(surface_divergence(position, field, f) - n));
        defects["div_position"] = div;
    }

    const EstimateReport K = estimate_K(field, radii);
    tables.push_back(K);
    summary["C_K"] = K.fitted_c;

    if (n <= 3) {
        const EstimateReport star = estimate_star(field, radii);
        tables.push_back(star);
        summary["C_star_ok"] = star.flags.at("holds");

        if (!cfg.contains("divergence_fields")) cfg["divergence_fields"] = json::array({"constant", "position"});
        for (json& item : cfg["divergence_fields"]) {
            std::string name;
            const AmbientField X = divergence_field(item, n + spec.k(), n, name);
            EstimateReport table;
            table.check = "divergence_" + name;
            double pointwise = 0.0;
            double relative = 0.0;
            for (double R : radii) {
                const DivergenceIdentityResult r = divergence_identity_check(field, X, R);
                const double scale = std::max({std::abs(r.divergence_integral), std::abs(r.curvature_integral),
                                               std::abs(r.flux_integral), r.boundary_mass});
                table.rows.push_back({{R}, r.integral_defect, scale, r.relative_defect});
                pointwise = std::max(pointwise, r.pointwise_defect);
                relative = std::max(relative, r.relative_defect);
            }
            defects[table.check + "_pointwise"] = pointwise;
            defects[table.check + "_integral"] = relative;
            tables.push_back(table);
        }
    } else {
        summary["C_star_ok"] = nullptr;
    }

    const MetricBoundReport metric = metric_bound_check(field);
    summary["metric"] = {{"C0", metric.c0},
                         {"C_metric", metric.c_metric},
                         {"lambda_min", metric.lambda_min},
                         {"sqrt_det_min", metric.sqrt_det_min},
                         {"sqrt_det_max", metric.sqrt_det_max},
                         {"violations", metric.violations}};

    summary["C_cauchy"] = nullptr;
    summary["rate_slope"] = nullptr;
    summary["antipodal_defect"] = nullptr;
    if (cfg.contains("blowdown")) {
        json& bcfg = cfg["blowdown"];
        if (!bcfg.contains("interpolation")) bcfg["interpolation"] = "cubic";
        const std::string mode = bcfg["interpolation"].get<std::string>();
        const FieldSource source(field, mode == "cubic" ? FieldSource::Interpolation::Cubic
                                                        : FieldSource::Interpolation::Multilinear);
        const BlowdownOutcome b = blowdown_pipeline(ctx, bcfg, source);
        tables.push_back(b.cauchy);
        tables.push_back(b.cone_rows);
        blowdown_summary(summary, b);
    }
    if (cfg.contains("dlambda")) {
        json& dcfg = cfg["dlambda"];
        const std::vector<double> ladder = ladder_from(dcfg);
        if (!dcfg.contains("radius")) dcfg["radius"] = 0.5;
        const double radius = dcfg["radius"].get<double>();
        SphereSampling nodes = parse_sampling(dcfg["sphere"], n, ctx.run->seed);
        std::vector<Vec> points;
        for (const Vec& x : nodes.nodes) points.push_back(radius * x);
        const FieldSource source(field, FieldSource::Interpolation::Cubic);
        const DLambdaReport r = dlambda_identity_check(source, ladder, points);
        defects["dlambda_chain_rule"] = r.max_defect_a;
        defects["dlambda_soliton_form"] = r.max_defect_b;
    }
    summary["defects"] = defects;

    std::ostringstream csv;
    write_estimates_csv(csv, tables);
    ctx.out->write("estimates.csv", csv.str());
    ctx.out->write_json("summary.json", summary);
    ctx.say("verify: C_K = " + format_double(K.fitted_c));
}

} // namespace

int exit_code_for(const std::exception& e) {
    if (const auto* err = dynamic_cast<const Error*>(&e)) {
        return err->kind() == Error::Kind::Numerical ? 3 : 2;
    }
    return 2;
}

int run(const RunConfig& rc) {
    const auto started = std::chrono::steady_clock::now();
    std::unique_ptr<OutputSet> out;
    Context ctx;
    ctx.run = &rc;
    int code = 0;
    std::string error;
    try {
        out = std::make_unique<OutputSet>(rc.out_dir);
        ctx.out = out.get();
        ctx.config = load_config(rc.config_path);
        ctx.base_dir = rc.config_path.parent_path();
        if (rc.subcommand == "geometry") {
            cmd_geometry(ctx);
        } else if (rc.subcommand == "solve-soliton") {
            cmd_solve(ctx);
        } else if (rc.subcommand == "run-flow") {
            cmd_flow(ctx);
        } else if (rc.subcommand == "blowdown") {
            cmd_blowdown(ctx);
        } else if (rc.subcommand == "verify") {
            cmd_verify(ctx);
        } else {
            throw ValidationError("unknown subcommand " + rc.subcommand);
        }
        code = ctx.exit_code;
    } catch (const json::exception& e) {
        error = std::string("config error: ") + e.what();
        code = 2;
    } catch (const std::exception& e) {
        error = e.what();
        code = exit_code_for(e);
    }
    if (!error.empty()) std::cerr << "error: " << error << '\n';
    if (!out) return code;

    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    json manifest = {{"tool", "mcflab"},
                     {"version", kToolVersion},
                     {"subcommand", rc.subcommand},
                     {"seed", rc.seed},
                     {"config", ctx.config},
                     {"duration_seconds", seconds},
                     {"exit_code", code},
                     {"status", code == 0 ? "ok" : "error"},
                     {"files", out->checksums()}};
    if (!error.empty()) manifest["error"] = error;
    try {
        std::ofstream f(out->dir() / "manifest.json", std::ios::binary);
        f << manifest.dump(2) << '\n';
        if (!f) throw IoError("cannot write manifest");
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return code == 0 ? 2 : code;
    }
    return code;
}

int dispatch(int argc, char** argv) {
    CLI::App app{"Numerical laboratory for graphical mean-curvature-flow solitons"};
    app.set_version_flag("--version", kToolVersion);
    RunConfig rc;
    std::string config;
    std::string out_dir = "out";
    app.require_subcommand(1);
    const std::pair<const char*, const char*> subcommands[] = {
        {"geometry", "per-node geometry report of a sampled graph"},
        {"solve-soliton", "relax the soliton equation with Dirichlet data"},
        {"run-flow", "evolve by mean curvature flow or its rescaled form"},
        {"blowdown", "blow-down sequence, Cauchy ratios and cone profile"},
        {"verify", "all identities and estimates on one field"},
    };
    for (const auto& [name, help] : subcommands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config, "JSON config file")->required();
        sub->add_option("--out", out_dir, "output directory")->capture_default_str();
        sub->add_option("--seed", rc.seed, "seed for stochastic sampling")->capture_default_str();
        sub->add_flag("--quiet", rc.quiet, "suppress progress output");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    rc.subcommand = app.get_subcommands().front()->get_name();
    rc.config_path = config;
    rc.out_dir = out_dir;
    return run(rc);
}

} // namespace mcflab::cli
