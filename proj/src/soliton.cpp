#include "mcflab/soliton.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <sstream>

#include "mcflab/error.hpp"
#include "mcflab/geometry.hpp"
#include "mcflab/parallel.hpp"
#include "stencil.hpp"

namespace mcflab {

namespace {

void fill_parametric(const GraphField& field, SolitonResidual& out) {
    const int d = out.n + out.k;
    out.parametric.assign(out.nodes.size() * d, 0.0);
    out.parametric_sup = 0.0;
    for (std::size_t i = 0; i < out.nodes.size(); ++i) {
        const GeometrySample g = geometry_at(field, out.nodes[i]);
        const Vec r = g.mean_curvature + g.position_normal;
        for (int c = 0; c < d; ++c) out.parametric[i * d + c] = r[c];
        out.parametric_sup = std::max(out.parametric_sup, r.norm());
    }
}

void fill_scalar(const GraphField& field, SolitonResidual& out) {
    const detail::StencilKernel kernel(field.spec());
    const int k = out.k;
    out.scalar.assign(out.nodes.size() * k, 0.0);
    out.scalar_sup = 0.0;
    detail::LocalJet jet;
    for (std::size_t i = 0; i < out.nodes.size(); ++i) {
        kernel.evaluate(field.values().data(), out.nodes[i], jet);
        double norm2 = 0.0;
        for (int a = 0; a < k; ++a) {
            const double r = jet.trace_term(a) - jet.drift_term(a) + jet.f[a];
            out.scalar[i * k + a] = r;
            norm2 += r * r;
        }
        out.scalar_sup = std::max(out.scalar_sup, std::sqrt(norm2));
    }
}

SolitonResidual empty_residual(const GraphField& field) {
    SolitonResidual out;
    out.n = field.spec().n();
    out.k = field.spec().k();
    out.nodes = field.spec().interior_nodes(1);
    return out;
}

// rounding floor of the discrete operator: cancellation in the h^-2 stencil
double stencil_rounding_floor(const GridSpec& spec, std::span<const double> values) {
    double fmax = 0.0;
    for (double v : values) fmax = std::max(fmax, std::abs(v));
    const double h = spec.spacing();
    return 32.0 * DBL_EPSILON * (1.0 + fmax) * spec.n() / (h * h);
}

std::string describe_point(const Vec& x) {
    std::ostringstream os;
    os << '(';
    for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
    os << ')';
    return os.str();
}

} // namespace

SolitonResidual residual_parametric(const GraphField& field) {
    SolitonResidual out = empty_residual(field);
    fill_parametric(field, out);
    return out;
}

SolitonResidual residual_scalar(const GraphField& field) {
    SolitonResidual out = empty_residual(field);
    fill_scalar(field, out);
    return out;
}

SolitonResidual soliton_residual(const GraphField& field) {
    SolitonResidual out = empty_residual(field);
    fill_parametric(field, out);
    fill_scalar(field, out);
    return out;
}

double equivalence_check(const GraphField& field) {
    const SolitonResidual r = soliton_residual(field);
    const int n = r.n;
    const int k = r.k;
    const int d = n + k;
    double defect = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) {
        const JetSample jet = jet_at(field, r.nodes[i]);
        for (int a = 0; a < k; ++a) {
            double pairing = 0.0;
            for (int c = 0; c < n; ++c) pairing += jet.gradient(a, c) * r.parametric[i * d + c];
            pairing -= r.parametric[i * d + n + a];
            defect = std::max(defect, std::abs(pairing + r.scalar[i * k + a]));
        }
    }
    return defect;
}

ResidualNorms scalar_residual_norms(const GraphField& field) {
    const SolitonResidual r = residual_scalar(field);
    ResidualNorms out;
    out.sup = r.scalar_sup;
    double sum = 0.0;
    for (double v : r.scalar) sum += v * v;
    out.l2 = std::sqrt(sum * std::pow(field.spec().spacing(), field.spec().n()));
    return out;
}

std::optional<std::string> SolverConfig::validate() const {
    if (!(c_tau > 0.0) || !std::isfinite(c_tau)) throw ValidationError("solver c_tau must be positive");
    if (!(eps > 0.0)) throw ValidationError("solver eps must be positive");
    if (abs_tol < 0.0) throw ValidationError("solver abs_tol must be nonnegative");
    if (max_iters < 0) throw ValidationError("solver max_iters must be nonnegative");
    if (!(damping_initial > 0.0 && damping_initial <= 1.0)) {
        throw ValidationError("solver damping_initial must lie in (0, 1]");
    }
    if (damping_ramp < 0) throw ValidationError("solver damping_ramp must be nonnegative");
    if (!(divergence_factor > 1.0)) throw ValidationError("solver divergence_factor must exceed 1");
    if (c_tau > 0.5) {
        return "c_tau=" + std::to_string(c_tau) + " lies above the stable range (0, 0.5]";
    }
    return std::nullopt;
}

std::vector<std::size_t> boundary_band(const GridSpec& spec) {
    std::vector<std::size_t> out;
    for (std::size_t f = 0; f < spec.node_count(); ++f) {
        if (spec.depth(f) == 0) out.push_back(f);
    }
    return out;
}

GraphField boundary_extension(const GridSpec& spec, const Generator& boundary) {
    const int n = spec.n();
    const int k = spec.k();
    const double ext = spec.extent();
    std::vector<Vec> corners;
    for (int c = 0; c < (1 << n); ++c) {
        Vec x(n);
        for (int d = 0; d < n; ++d) x[d] = (c & (1 << d)) ? ext : -ext;
        corners.push_back(boundary(x));
    }
    std::vector<double> values(spec.node_count() * k);
    for (std::size_t f = 0; f < spec.node_count(); ++f) {
        const Vec x = spec.point(f);
        Vec v;
        if (spec.depth(f) == 0) {
            v = boundary(x);
        } else {
            v = Vec::Zero(k);
            for (int c = 0; c < (1 << n); ++c) {
                double w = 1.0;
                for (int d = 0; d < n; ++d) {
                    const double t = 0.5 * (1.0 + x[d] / ext);
                    w *= (c & (1 << d)) ? t : 1.0 - t;
                }
                v += w * corners[c];
            }
        }
        if (v.size() != k) throw ValidationError("boundary map returned the wrong number of components");
        for (int a = 0; a < k; ++a) values[f * k + a] = v[a];
    }
    return GraphField(spec, std::move(values));
}

SolveResult solve_dirichlet(const GridSpec& spec, const Generator& boundary, const SolverConfig& cfg) {
    return solve_dirichlet(spec, boundary, boundary_extension(spec, boundary), cfg);
}

SolveResult solve_dirichlet(const GridSpec& spec, const Generator& boundary, const GraphField& init,
                            const SolverConfig& cfg) {
    SolverReport report;
    if (auto warning = cfg.validate()) report.warnings.push_back(*warning);
    if (!(init.spec() == spec)) throw ValidationError("initial field grid does not match the solver grid");
    const int k = spec.k();
    const double h = spec.spacing();
    if (spec.extent() > 2.0 * std::sqrt(static_cast<double>(spec.n()))) {
        report.warnings.push_back("domain half width exceeds 2 sqrt(n); relaxation may not converge");
    }

    std::vector<double> cur(init.values().begin(), init.values().end());
    for (std::size_t f : boundary_band(spec)) {
        const Vec x = spec.point(f);
        const Vec b = boundary(x);
        if (b.size() != k) throw ValidationError("boundary map returned the wrong number of components");
        for (int a = 0; a < k; ++a) {
            if (!std::isfinite(b[a])) throw ValidationError("boundary data is not finite at " + describe_point(x));
            if (std::abs(cur[f * k + a] - b[a]) > 1e-12 * (1.0 + std::abs(b[a]))) {
                throw ValidationError("initial field disagrees with boundary data at " + describe_point(x));
            }
            cur[f * k + a] = b[a];
        }
    }
    std::vector<double> other = cur;
    std::vector<double> stored;
    std::vector<double> residual;

    const std::vector<std::size_t> interior = spec.interior_nodes(1);
    residual.assign(interior.size() * k, 0.0);
    const detail::StencilKernel kernel(spec);
    const double dtau0 = cfg.c_tau * h * h;
    const double cell = std::pow(h, spec.n());
    const double floor = cfg.abs_tol > 0.0 ? cfg.abs_tol : stencil_rounding_floor(spec, cur);

    enum class Where { Current, Previous, Stored } best_at = Where::Current;
    double best_sup = INFINITY;
    double target = 0.0;

    for (long it = 0;; ++it) {
        // residual of the current iterate
        parallel_for(interior.size(), [&](std::size_t b, std::size_t e) {
            detail::LocalJet jet;
            for (std::size_t i = b; i < e; ++i) {
                kernel.evaluate(cur.data(), interior[i], jet);
                for (int a = 0; a < k; ++a) {
                    residual[i * k + a] = jet.trace_term(a) - jet.drift_term(a) + jet.f[a];
                }
            }
        });
        double sup = 0.0;
        double sum = 0.0;
        for (std::size_t i = 0; i < interior.size(); ++i) {
            double norm2 = 0.0;
            for (int a = 0; a < k; ++a) norm2 += residual[i * k + a] * residual[i * k + a];
            sup = std::max(sup, std::sqrt(norm2));
            sum += norm2;
        }
        if (std::isnan(sup)) sup = INFINITY;
        report.residual_sup.push_back(sup);
        report.residual_l2.push_back(std::sqrt(sum * cell));
        if (it == 0) target = std::max(cfg.eps * sup, floor);

        if (sup < best_sup) {
            best_sup = sup;
            best_at = Where::Current;
            report.best_iteration = it;
        }
        report.best_sup.push_back(best_sup);
        report.iterations = it;

        if (sup <= target) {
            report.converged = true;
            break;
        }
        if (!std::isfinite(sup) || sup > cfg.divergence_factor * best_sup) {
            report.diverged = true;
            break;
        }
        if (it >= cfg.max_iters) break;

        if (best_at == Where::Previous) {
            stored = other;
            best_at = Where::Stored;
        }
        double damping = 1.0;
        if (cfg.damping_ramp > 0 && it < cfg.damping_ramp) {
            damping = cfg.damping_initial + (1.0 - cfg.damping_initial) * static_cast<double>(it) / cfg.damping_ramp;
        } else if (cfg.damping_ramp == 0) {
            damping = cfg.damping_initial;
        }
        const double dtau = dtau0 * damping;
        parallel_for(interior.size(), [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) {
                const std::size_t f = interior[i];
                for (int a = 0; a < k; ++a) other[f * k + a] = cur[f * k + a] + dtau * residual[i * k + a];
            }
        });
        std::swap(cur, other);
        if (best_at == Where::Current) best_at = Where::Previous;
    }
    report.target = target;

    std::vector<double> best;
    switch (best_at) {
    case Where::Current: best = std::move(cur); break;
    case Where::Previous: best = std::move(other); break;
    case Where::Stored: best = std::move(stored); break;
    }
    GraphField field(spec, std::move(best));
    report.final_c0 = check_gradient_bound(field).measured;
    return {std::move(field), std::move(report)};
}

} // namespace mcflab
