#include "mcflab/flow.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mcflab/error.hpp"
#include "mcflab/parallel.hpp"
#include "stencil.hpp"

namespace mcflab {

std::string to_string(BoundaryPolicy policy) {
    return policy == BoundaryPolicy::Frozen ? "frozen" : "linear";
}

BoundaryPolicy boundary_policy_from_string(const std::string& name) {
    if (name == "frozen") return BoundaryPolicy::Frozen;
    if (name == "linear" || name == "linear-extrapolation") return BoundaryPolicy::LinearExtrapolation;
    throw ValidationError("unknown boundary policy '" + name + "'");
}

std::optional<std::string> FlowConfig::validate() const {
    if (!(cfl > 0.0) || !std::isfinite(cfl)) throw ValidationError("flow CFL factor must be positive");
    if (!std::isfinite(t_end)) throw ValidationError("flow end time must be finite");
    for (double t : snapshots) {
        if (!std::isfinite(t)) throw ValidationError("snapshot times must be finite");
    }
    if (cfl > 0.5) return "CFL factor " + std::to_string(cfl) + " lies above the stable range (0, 0.5]";
    return std::nullopt;
}

std::vector<double> geometric_snapshots(double t0, double t_end) {
    if (!(t0 > 0.0)) throw ValidationError("geometric snapshots need t0 > 0");
    std::vector<double> out;
    for (double t = t0; t < t_end * (1.0 - 1e-12); t *= 2.0) out.push_back(t);
    out.push_back(t_end);
    return out;
}

RescaledFlowState make_rescaled_state(GraphField field, double s) {
    RescaledFlowState st{std::move(field), s, std::exp(2.0 * s), 0, {}};
    st.missing.assign(st.field.spec().node_count(), false);
    return st;
}

namespace {

enum class Equation { Mcf, Rescaled };

class Stepper {
public:
    Stepper(const GridSpec& spec, Equation eq, BoundaryPolicy policy)
        : spec_(spec), kernel_(spec), eq_(eq), policy_(policy), interior_(spec.interior_nodes(1)) {
        rate_.assign(interior_.size() * spec.k(), 0.0);
        if (policy_ == BoundaryPolicy::LinearExtrapolation && spec.points_per_axis() < 5) {
            throw ValidationError("linear extrapolation boundary needs at least 5 nodes per axis");
        }
    }

    // next = cur + dt * rate(cur) on the interior, boundary per policy
    void step(const std::vector<double>& cur, std::vector<double>& next, double dt, double time) {
        const int k = spec_.k();
        parallel_for(interior_.size(), [&](std::size_t b, std::size_t e) {
            detail::LocalJet jet;
            for (std::size_t i = b; i < e; ++i) {
                kernel_.evaluate(cur.data(), interior_[i], jet);
                for (int a = 0; a < k; ++a) {
                    rate_[i * k + a] = eq_ == Equation::Mcf
                                           ? jet.trace_term(a)
                                           : 2.0 * jet.trace_term(a) + jet.drift_term(a) - jet.f[a];
                }
            }
        });
        next = cur;
        for (std::size_t i = 0; i < interior_.size(); ++i) {
            const std::size_t f = interior_[i];
            for (int a = 0; a < k; ++a) {
                const double v = cur[f * k + a] + dt * rate_[i * k + a];
                if (!std::isfinite(v)) {
                    std::ostringstream os;
                    os << "non-finite value after step at node " << spec_.point(f).transpose() << " (t=" << time
                       << ", dt=" << dt << ")";
                    throw NumericalError(os.str());
                }
                next[f * k + a] = v;
            }
        }
        if (policy_ == BoundaryPolicy::LinearExtrapolation) extrapolate(next);
    }

private:
    void extrapolate(std::vector<double>& v) const {
        const int k = spec_.k();
        const int m = spec_.points_per_axis();
        for (int d = 0; d < spec_.n(); ++d) {
            const auto s = static_cast<std::ptrdiff_t>(spec_.stride(d));
            for (std::size_t f = 0; f < spec_.node_count(); ++f) {
                const int i = spec_.unflatten(f)[d];
                std::ptrdiff_t dir = 0;
                if (i == 0) dir = s;
                else if (i == m - 1) dir = -s;
                else continue;
                const auto f1 = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(f) + dir);
                const auto f2 = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(f) + 2 * dir);
                for (int a = 0; a < k; ++a) v[f * k + a] = 2.0 * v[f1 * k + a] - v[f2 * k + a];
            }
        }
    }

    GridSpec spec_;
    detail::StencilKernel kernel_;
    Equation eq_;
    BoundaryPolicy policy_;
    std::vector<std::size_t> interior_;
    std::vector<double> rate_;
};

std::vector<double> copy_values(const GraphField& f) { return {f.values().begin(), f.values().end()}; }

// Steps from t0 to each target in order with dt_max, shortening the last step
// before every target. on_target(index, values, time, steps) is invoked at each.
template <typename OnTarget>
long march(Stepper& stepper, std::vector<double>& cur, double t0, double dt_max, const std::vector<double>& targets,
           OnTarget&& on_target) {
    std::vector<double> next(cur.size());
    double t = t0;
    long steps = 0;
    for (std::size_t j = 0; j < targets.size(); ++j) {
        const double target = targets[j];
        while (t < target) {
            const double remaining = target - t;
            double dt = dt_max;
            bool last = false;
            if (remaining <= dt_max * (1.0 + 1e-9)) {
                dt = remaining;
                last = true;
            }
            stepper.step(cur, next, dt, t);
            std::swap(cur, next);
            t = last ? target : t + dt;
            ++steps;
        }
        on_target(j, cur, t, steps);
    }
    return steps;
}

std::vector<double> sorted_targets(const FlowConfig& cfg, double t0) {
    std::vector<double> targets;
    for (double t : cfg.snapshots) {
        if (t < t0 - 1e-12 * std::max(1.0, std::abs(t0))) {
            throw ValidationError("snapshot time " + std::to_string(t) + " precedes the initial time");
        }
        if (t <= cfg.t_end * (1.0 + 1e-12)) targets.push_back(std::max(t, t0));
    }
    targets.push_back(std::max(cfg.t_end, t0));
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end(),
                              [](double a, double b) { return std::abs(a - b) <= 1e-14 * std::max(1.0, std::abs(a)); }),
                  targets.end());
    return targets;
}

} // namespace

FlowState mcf_step(const FlowState& state, const FlowConfig& cfg, double dt) {
    const GridSpec& spec = state.field.spec();
    Stepper stepper(spec, Equation::Mcf, cfg.boundary);
    std::vector<double> cur = copy_values(state.field);
    std::vector<double> next;
    stepper.step(cur, next, dt, state.t);
    return {GraphField(spec, std::move(next), state.field.gradient_bound()), state.t + dt, state.steps + 1};
}

FlowState mcf_step(const FlowState& state, const FlowConfig& cfg) {
    cfg.validate();
    const double h = state.field.spec().spacing();
    return mcf_step(state, cfg, cfg.cfl * h * h);
}

RescaledFlowState rescaled_step(const RescaledFlowState& state, const FlowConfig& cfg, double ds) {
    const GridSpec& spec = state.field.spec();
    Stepper stepper(spec, Equation::Rescaled, cfg.boundary);
    std::vector<double> cur = copy_values(state.field);
    std::vector<double> next;
    stepper.step(cur, next, ds, state.s);
    RescaledFlowState out = make_rescaled_state(GraphField(spec, std::move(next)), state.s + ds);
    out.steps = state.steps + 1;
    return out;
}

RescaledFlowState rescaled_step(const RescaledFlowState& state, const FlowConfig& cfg) {
    cfg.validate();
    const double h = state.field.spec().spacing();
    return rescaled_step(state, cfg, 0.5 * cfg.cfl * h * h);
}

std::vector<FlowState> run_flow(const FlowState& initial, const FlowConfig& cfg) {
    cfg.validate();
    const GridSpec& spec = initial.field.spec();
    Stepper stepper(spec, Equation::Mcf, cfg.boundary);
    std::vector<double> cur = copy_values(initial.field);
    const double h = spec.spacing();
    std::vector<FlowState> out;
    march(stepper, cur, initial.t, cfg.cfl * h * h, sorted_targets(cfg, initial.t),
          [&](std::size_t, const std::vector<double>& v, double t, long steps) {
              out.push_back({GraphField(spec, v, initial.field.gradient_bound()), t, initial.steps + steps});
          });
    return out;
}

std::vector<RescaledFlowState> run_rescaled(const RescaledFlowState& initial, const FlowConfig& cfg) {
    cfg.validate();
    const GridSpec& spec = initial.field.spec();
    Stepper stepper(spec, Equation::Rescaled, cfg.boundary);
    std::vector<double> cur = copy_values(initial.field);
    const double h = spec.spacing();

    FlowConfig in_s = cfg;
    for (double& t : in_s.snapshots) {
        if (!(t > 0.0)) throw ValidationError("rescaled snapshots need t > 0");
        t = 0.5 * std::log(t);
    }
    if (!(cfg.t_end > 0.0)) throw ValidationError("rescaled run needs t_end > 0");
    in_s.t_end = 0.5 * std::log(cfg.t_end);

    std::vector<RescaledFlowState> out;
    march(stepper, cur, initial.s, 0.5 * cfg.cfl * h * h, sorted_targets(in_s, initial.s),
          [&](std::size_t, const std::vector<double>& v, double s, long steps) {
              RescaledFlowState st = make_rescaled_state(GraphField(spec, v), s);
              st.steps = initial.steps + steps;
              out.push_back(std::move(st));
          });
    return out;
}

std::vector<RescaledFlowState> normalize_snapshots(const std::vector<FlowState>& snapshots,
                                                   std::optional<GridSpec> target) {
    std::vector<RescaledFlowState> out;
    for (const FlowState& snap : snapshots) {
        if (!(snap.t >= 1.0 - 1e-12)) {
            throw ValidationError("normalization needs snapshot times t >= 1, got " + std::to_string(snap.t));
        }
        const GridSpec& src = snap.field.spec();
        const GridSpec grid = target.value_or(src);
        if (grid.k() != src.k() || grid.n() != src.n()) {
            throw ValidationError("normalization target grid has different n or k");
        }
        const double t = std::max(1.0, snap.t);
        const double root = std::sqrt(t);
        const int k = grid.k();
        std::vector<double> values(grid.node_count() * k, 0.0);
        std::vector<bool> missing(grid.node_count(), false);
        const double ext = src.extent() * (1.0 + 1e-12);
        for (std::size_t f = 0; f < grid.node_count(); ++f) {
            const Vec y = root * grid.point(f);
            if (y.cwiseAbs().maxCoeff() > ext) {
                missing[f] = true;
                continue;
            }
            const Vec v = interpolate(snap.field, y.cwiseMax(-src.extent()).cwiseMin(src.extent())) / root;
            for (int a = 0; a < k; ++a) values[f * k + a] = v[a];
        }
        RescaledFlowState st = make_rescaled_state(GraphField(grid, std::move(values)), 0.5 * std::log(t));
        st.t = t;
        st.steps = snap.steps;
        st.missing = std::move(missing);
        out.push_back(std::move(st));
    }
    return out;
}

double sup_distance(const RescaledFlowState& a, const RescaledFlowState& b, std::optional<double> radius) {
    const GridSpec& spec = a.field.spec();
    if (!(spec == b.field.spec())) throw ValidationError("states live on different grids");
    const int k = spec.k();
    double d = 0.0;
    for (std::size_t f = 0; f < spec.node_count(); ++f) {
        if (a.missing[f] || b.missing[f]) continue;
        if (radius && spec.point(f).norm() > *radius) continue;
        double norm2 = 0.0;
        for (int c = 0; c < k; ++c) {
            const double diff = a.field.values()[f * k + c] - b.field.values()[f * k + c];
            norm2 += diff * diff;
        }
        d = std::max(d, std::sqrt(norm2));
    }
    return d;
}

FlowDiagnostics flow_diagnostics(const GraphField& field) {
    const GridSpec& spec = field.spec();
    const detail::StencilKernel kernel(spec);
    detail::LocalJet jet;
    FlowDiagnostics out;
    const int k = spec.k();
    for (std::size_t f : spec.interior_nodes(1)) {
        kernel.evaluate(field.values().data(), f, jet);
        Mat grad(k, spec.n());
        for (int a = 0; a < k; ++a)
            for (int i = 0; i < spec.n(); ++i) grad(a, i) = jet.grad[a][i];
        out.sup_gradient = std::max(out.sup_gradient, Eigen::JacobiSVD<Mat>(grad).singularValues()(0));
        double sol = 0.0;
        double exp = 0.0;
        for (int a = 0; a < k; ++a) {
            const double tr = jet.trace_term(a);
            const double dr = jet.drift_term(a);
            const double r1 = tr - dr + jet.f[a];
            const double r2 = 2.0 * tr + dr - jet.f[a];
            sol += r1 * r1;
            exp += r2 * r2;
        }
        out.soliton_residual = std::max(out.soliton_residual, std::sqrt(sol));
        out.expander_residual = std::max(out.expander_residual, std::sqrt(exp));
    }
    return out;
}

ScalingInvarianceResult scaling_invariance_test(const Generator& f0, const GridSpec& spec, double lambda,
                                                const FlowConfig& cfg) {
    if (!(lambda > 0.0)) throw ValidationError("scaling factor must be positive");
    const GridSpec scaled =
        GridSpec::make(spec.n(), spec.k(), spec.half_width() / lambda, spec.spacing() / lambda);
    if (scaled.points_per_axis() != spec.points_per_axis()) {
        throw ValidationError("rescaled grid is not node-compatible with the original grid");
    }
    const double h = spec.spacing();
    FlowConfig c1 = cfg;
    c1.snapshots.clear();
    FlowConfig c2 = c1;
    c2.t_end = cfg.t_end / (lambda * lambda);

    const GraphField base = build_field(spec, f0);
    const GraphField small = build_field(scaled, [&](const Vec& x) { Vec y = lambda * x; return Vec(f0(y) / lambda); });
    const auto r1 = run_flow({base, 0.0, 0}, c1);
    const auto r2 = run_flow({small, 0.0, 0}, c2);
    const GraphField& a = r1.back().field;
    const GraphField& b = r2.back().field;

    ScalingInvarianceResult out;
    out.dt = cfg.cfl * h * h;
    out.h = h;
    out.steps = r1.back().steps;
    out.nodes_compared = spec.node_count();
    for (std::size_t i = 0; i < a.values().size(); ++i) {
        out.defect = std::max(out.defect, std::abs(a.values()[i] / lambda - b.values()[i]));
    }
    return out;
}

} // namespace mcflab
