#include "mcflab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "mcflab/error.hpp"
#include "mcflab/quadrature.hpp"

namespace mcflab {

namespace {

std::string describe_point(const Vec& x) {
    std::ostringstream os;
    os.precision(17);
    os << '(';
    for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
    os << ')';
    return os.str();
}

Vec lift(const Vec& x, const Vec& f) {
    Vec F(x.size() + f.size());
    F << x, f;
    return F;
}

// Containing cell of x: corner flats and multilinear weights.
struct Cell {
    std::vector<std::size_t> flats;
    std::vector<double> weights;
};

Cell containing_cell(const GridSpec& spec, const Vec& x) {
    const int n = spec.n();
    if (x.size() != n) throw ValidationError("query point has wrong dimension");
    const double ext = spec.extent();
    const double h = spec.spacing();
    const int m = spec.points_per_axis();
    double overshoot = 0.0;
    for (int d = 0; d < n; ++d) overshoot = std::max(overshoot, std::abs(x[d]) - ext);
    if (!(overshoot <= 0.0)) {
        throw DomainError("query point " + describe_point(x) + " lies outside the grid cube", overshoot);
    }
    GridIndex base{};
    std::array<double, kMaxDim> t{};
    for (int d = 0; d < n; ++d) {
        double u = (x[d] + ext) / h;
        const double nearest = std::round(u);
        if (std::abs(u - nearest) <= 1e-10) u = nearest;
        const int i = std::clamp(static_cast<int>(std::floor(u)), 0, m - 2);
        base[d] = i;
        t[d] = u - i;
    }
    Cell cell;
    for (int corner = 0; corner < (1 << n); ++corner) {
        double w = 1.0;
        GridIndex idx = base;
        for (int d = 0; d < n; ++d) {
            if (corner & (1 << d)) {
                idx[d] += 1;
                w *= t[d];
            } else {
                w *= 1.0 - t[d];
            }
        }
        if (w == 0.0) continue;
        cell.flats.push_back(spec.flatten(idx));
        cell.weights.push_back(w);
    }
    return cell;
}

void check_boundary_dimension(int n) {
    if (n < 1 || n > 3) throw ValidationError("boundary integrals are implemented for n in {1, 2, 3}");
}

void check_radius(const GridSpec& spec, double radius) {
    if (!(radius > 0.0) || !std::isfinite(radius)) throw ValidationError("radius must be positive");
    const double limit = spec.extent() - 2.0 * spec.spacing();
    if (radius > limit + 1e-12) {
        throw ValidationError("radius " + std::to_string(radius) + " exceeds the usable half width " +
                              std::to_string(limit));
    }
}

// Integral over |x| <= R of a nodal density, via polar Gauss points and
// multilinear interpolation.
double ball_integral(const NodalGeometry& geo, const std::vector<double>& density, double radius) {
    const GridSpec& spec = geo.spec();
    double sum = 0.0;
    for (const WeightedPoint& p : ball_rule(spec.n(), radius, spec.spacing())) {
        sum += p.weight * geo.interpolate(p.point, density, 1)[0];
    }
    return sum;
}

JetSample first_order_jet(const Vec& x, const Vec& value, const Mat& gradient) {
    JetSample jet;
    jet.point = x;
    jet.value = value;
    jet.gradient = gradient;
    jet.hessian.assign(value.size(), Mat::Zero(x.size(), x.size()));
    return jet;
}

} // namespace

// ---------------------------------------------------------------------------

NodalGeometry::NodalGeometry(const GraphField& field) : field_(&field) {
    const GridSpec& spec = field.spec();
    const int n = spec.n();
    const int k = spec.k();
    valid_.assign(spec.node_count(), 0);
    samples_.resize(spec.node_count());
    gradients_.assign(spec.node_count() * k * n, 0.0);
    for (std::size_t f : spec.interior_nodes(1)) {
        const JetSample jet = jet_at(field, f);
        samples_[f] = geometry_from_jet(jet);
        for (int a = 0; a < k; ++a) {
            for (int i = 0; i < n; ++i) gradients_[(f * k + a) * n + i] = jet.gradient(a, i);
        }
        valid_[f] = 1;
    }
}

Vec NodalGeometry::interpolate(const Vec& x, const std::vector<double>& nodal, int dim) const {
    const Cell cell = containing_cell(spec(), x);
    Vec out = Vec::Zero(dim);
    for (std::size_t c = 0; c < cell.flats.size(); ++c) {
        const std::size_t f = cell.flats[c];
        if (!valid_[f]) {
            throw BoundaryError("query point " + describe_point(x) + " needs geometry on the outer node band", 0);
        }
        for (int i = 0; i < dim; ++i) out[i] += cell.weights[c] * nodal[f * dim + i];
    }
    return out;
}

Vec NodalGeometry::value(const Vec& x) const { return mcflab::interpolate(*field_, x); }

Mat NodalGeometry::gradient(const Vec& x) const {
    const int n = spec().n();
    const int k = spec().k();
    const Vec flat = interpolate(x, gradients_, k * n);
    Mat out(k, n);
    for (int a = 0; a < k; ++a) {
        for (int i = 0; i < n; ++i) out(a, i) = flat[a * n + i];
    }
    return out;
}

BoundaryQuadrature boundary_quadrature(const NodalGeometry& geo, double radius, double resolution) {
    const int n = geo.spec().n();
    check_boundary_dimension(n);
    BoundaryQuadrature q;
    q.radius = radius;
    for (const SpherePatchPoint& s : sphere_rule(n, radius, resolution)) {
        const Vec& x = s.point;
        const Vec value = geo.value(x);
        const Mat grad = geo.gradient(x);
        const JetSample jet = first_order_jet(x, value, grad);
        const Mat T = tangent_frame(jet);
        const Mat Q = normal_projection(jet);
        const int d = static_cast<int>(T.rows());

        std::vector<Vec> eta;
        for (const Vec& dx : s.tangents) eta.push_back(T * dx);

        const Vec radial = x / x.norm();
        const Vec lifted = T * radial;
        Vec e = Vec::Zero(d);
        e.head(n) = radial;
        Vec nu = e - Q * e;
        // Gram-Schmidt against the boundary tangents
        std::vector<Vec> basis;
        for (const Vec& t : eta) {
            Vec u = t;
            for (const Vec& b : basis) u -= u.dot(b) * b;
            basis.push_back(u.normalized());
        }
        for (const Vec& b : basis) nu -= nu.dot(b) * b;
        for (const Vec& b : basis) nu -= nu.dot(b) * b;
        nu.normalize();
        if (nu.dot(lifted) < 0.0) nu = -nu;

        double weight = s.weight;
        if (n == 2) {
            weight *= eta[0].norm();
        } else if (n == 3) {
            Mat G(2, 2);
            G << eta[0].dot(eta[0]), eta[0].dot(eta[1]), eta[1].dot(eta[0]), eta[1].dot(eta[1]);
            weight *= std::sqrt(std::max(G.determinant(), 0.0)) * s.parameter_jacobian;
        }

        q.base_points.push_back(x);
        q.positions.push_back(lift(x, value));
        q.conormals.push_back(nu);
        q.weights.push_back(weight);
        q.projections.push_back(Q);
        q.tangents.push_back(std::move(eta));
        q.lifted_radial.push_back(lifted);
    }
    return q;
}

// ---------------------------------------------------------------------------

AmbientField DivergenceFieldSpec::field() const {
    if (!std::isfinite(exponent)) throw ValidationError("divergence field exponent must be finite");
    const double s = exponent;
    return [s](const Vec& p) -> Vec { return std::pow(1.0 + p.norm(), -s) * p; };
}

DivergenceIdentityResult divergence_identity_check(const GraphField& field, const AmbientField& X, double radius) {
    const GridSpec& spec = field.spec();
    check_boundary_dimension(spec.n());
    check_radius(spec, radius);
    const NodalGeometry geo(field);
    const std::size_t count = spec.node_count();

    std::vector<double> div_density(count, 0.0);
    std::vector<double> curv_density(count, 0.0);
    std::vector<Vec> tangential(count);
    std::vector<double> divergence(count, 0.0);
    std::vector<double> pairing(count, 0.0);
    for (std::size_t f = 0; f < count; ++f) {
        if (!geo.valid(f)) continue;
        const GeometrySample& g = geo.at(f);
        const Vec Xf = X(g.position);
        divergence[f] = surface_divergence(X, field, f);
        pairing[f] = Xf.dot(g.mean_curvature);
        div_density[f] = divergence[f] * g.area_element;
        curv_density[f] = pairing[f] * g.area_element;
        tangential[f] = Xf - g.projection * Xf;
    }

    DivergenceIdentityResult out;
    const double r2 = radius * radius * (1.0 + 1e-12);
    for (std::size_t f : spec.interior_nodes(2)) {
        if (spec.point(f).squaredNorm() > r2) continue;
        const double lhs = surface_divergence_sampled(tangential, field, f);
        out.pointwise_defect = std::max(out.pointwise_defect, std::abs(lhs - divergence[f] - pairing[f]));
    }

    out.divergence_integral = ball_integral(geo, div_density, radius);
    out.curvature_integral = ball_integral(geo, curv_density, radius);
    const BoundaryQuadrature bq = boundary_quadrature(geo, radius, spec.spacing());
    double flux = 0.0;
    for (std::size_t i = 0; i < bq.weights.size(); ++i) {
        const Vec Xb = X(bq.positions[i]);
        flux += bq.weights[i] * Xb.dot(bq.conormals[i]);
        out.boundary_mass += bq.weights[i] * Xb.norm();
    }
    out.flux_integral = flux;
    out.integral_defect = std::abs(out.divergence_integral + out.curvature_integral - out.flux_integral);
    const double scale = std::max({std::abs(out.divergence_integral), std::abs(out.curvature_integral),
                                   std::abs(out.flux_integral), out.boundary_mass});
    out.relative_defect = scale > 0.0 ? out.integral_defect / scale : out.integral_defect;
    return out;
}

EstimateReport estimate_star(const GraphField& field, const std::vector<double>& radii) {
    const GridSpec& spec = field.spec();
    const int n = spec.n();
    check_boundary_dimension(n);
    for (double R : radii) check_radius(spec, R);
    const NodalGeometry geo(field);

    std::vector<double> density(spec.node_count(), 0.0);
    for (std::size_t f = 0; f < spec.node_count(); ++f) {
        if (!geo.valid(f)) continue;
        const GeometrySample& g = geo.at(f);
        density[f] = std::pow(1.0 + g.position.norm(), -n) * g.mean_curvature.squaredNorm() * g.area_element;
    }

    EstimateReport report;
    report.check = "estimate_star";
    bool holds = true;
    for (double R : radii) {
        EstimateRow row;
        row.param = {R};
        row.lhs = ball_integral(geo, density, R);
        const BoundaryQuadrature bq = boundary_quadrature(geo, R, spec.spacing());
        for (std::size_t i = 0; i < bq.weights.size(); ++i) {
            row.rhs += bq.weights[i] * std::pow(1.0 + bq.positions[i].norm(), 1 - n);
        }
        row.ratio = row.rhs > 0.0 ? row.lhs / row.rhs : 0.0;
        holds = holds && row.lhs <= 1.05 * row.rhs;
        report.fitted_c = std::max(report.fitted_c, row.ratio);
        report.rows.push_back(row);
    }
    report.flags["holds"] = holds;
    return report;
}

double estimate_K_rhs(int n, double radius) {
    return sphere_area(n, 1.0) * std::pow(radius, n - 1) * std::pow(1.0 + radius, 1 - n);
}

EstimateReport estimate_K(const GraphField& field, const std::vector<double>& radii) {
    const GridSpec& spec = field.spec();
    const int n = spec.n();
    std::vector<double> sorted = radii;
    std::sort(sorted.begin(), sorted.end());

    EstimateReport report;
    report.check = "estimate_K";
    double sqrt_det_min = INFINITY;
    double sqrt_det_max = 0.0;
    double rhs_sup = 0.0;
    for (double R : sorted) {
        if (!(R > 0.0) || R > spec.extent() - spec.spacing() + 1e-12) {
            throw ValidationError("radius " + std::to_string(R) + " leaves the interior of the grid");
        }
        EstimateRow row;
        row.param = {R};
        for (const QuadratureNode& q : ball_quadrature_nodes(spec, R)) {
            const GeometrySample g = geometry_at(field, q.flat);
            row.lhs += q.weight * std::pow(1.0 + q.point.norm(), -n) * g.mean_curvature.squaredNorm();
            sqrt_det_min = std::min(sqrt_det_min, g.area_element);
            sqrt_det_max = std::max(sqrt_det_max, g.area_element);
        }
        row.rhs = estimate_K_rhs(n, R);
        row.ratio = row.lhs / row.rhs;
        rhs_sup = std::max(rhs_sup, row.rhs);
        report.fitted_c = std::max(report.fitted_c, row.ratio);
        report.rows.push_back(row);
    }
    bool nondecreasing = true;
    bool bounded = true;
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        if (i > 0 && report.rows[i].lhs < report.rows[i - 1].lhs) nondecreasing = false;
        if (report.rows[i].lhs > report.fitted_c * rhs_sup * (1.0 + 1e-12)) bounded = false;
    }
    report.flags["lhs_nondecreasing"] = nondecreasing;
    report.flags["bounded"] = bounded;
    report.extras["rhs_sup"] = rhs_sup;
    if (!report.rows.empty() && sqrt_det_max > 0.0) {
        report.extras["sqrt_det_g_min"] = sqrt_det_min;
        report.extras["sqrt_det_g_max"] = sqrt_det_max;
    }
    return report;
}

MetricBoundReport metric_bound_check(const GraphField& field, std::optional<double> radius) {
    const GridSpec& spec = field.spec();
    MetricBoundReport out;
    out.lambda_min = INFINITY;
    out.sqrt_det_min = INFINITY;

    std::size_t origin = 0;
    {
        GridIndex idx{};
        for (int d = 0; d < spec.n(); ++d) idx[d] = spec.center();
        origin = spec.flatten(idx);
    }
    out.position_bound_checked = field.value_vec(origin).norm() == 0.0;

    struct Node {
        std::size_t flat;
        GeometrySample g;
        double grad;
    };
    std::vector<Node> nodes;
    for (std::size_t f : spec.interior_nodes(1)) {
        const Vec x = spec.point(f);
        if (radius && x.norm() > *radius * (1.0 + 1e-12)) continue;
        const JetSample jet = jet_at(field, f);
        const double grad = jet.gradient.size() ? Eigen::JacobiSVD<Mat>(jet.gradient).singularValues()[0] : 0.0;
        Node node{f, geometry_from_jet(jet), grad};
        out.c0 = std::max(out.c0, grad);
        out.c_metric = std::max(out.c_metric, node.g.metric_eig_max);
        out.lambda_min = std::min(out.lambda_min, node.g.metric_eig_min);
        out.det_max = std::max(out.det_max, node.g.metric_det);
        out.sqrt_det_min = std::min(out.sqrt_det_min, node.g.area_element);
        out.sqrt_det_max = std::max(out.sqrt_det_max, node.g.area_element);
        nodes.push_back(std::move(node));
    }
    if (nodes.empty()) {
        out.lambda_min = 1.0;
        out.sqrt_det_min = 1.0;
        out.c_metric = 1.0;
        return out;
    }

    const double growth = std::sqrt(1.0 + out.c0 * out.c0);
    for (const Node& node : nodes) {
        const Vec& x = node.g.point;
        if (node.g.metric_eig_min < 1.0 - 1e-10) {
            out.violations.push_back("lambda_min(g) = " + std::to_string(node.g.metric_eig_min) + " < 1 at " +
                                     describe_point(x));
        }
        if (node.g.metric_eig_max > 1.0 + out.c0 * out.c0 + 1e-8) {
            out.violations.push_back("lambda_max(g) = " + std::to_string(node.g.metric_eig_max) +
                                     " exceeds 1 + C0^2 at " + describe_point(x));
        }
        if (out.position_bound_checked) {
            const double a = 1.0 + x.norm();
            const double b = 1.0 + node.g.position.norm();
            if (b < a - 1e-12 || b > growth * a + 1e-8) {
                out.violations.push_back("1 + |F| = " + std::to_string(b) + " outside [1 + |x|, sqrt(1 + C0^2)(1 + |x|)] at " +
                                         describe_point(x));
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

JetSample ClosedFormSource::jet(const Vec& x) const {
    if (x.size() != n_) throw ValidationError("query point has wrong dimension");
    JetSample jet;
    jet.point = x;
    jet.value = f_(x);
    if (jet.value.size() != k_) throw ValidationError("closed-form map returned the wrong number of components");
    const double scale = 1.0 + x.norm();
    const double e1 = 1e-3 * scale;
    const double e2 = 2e-3 * scale;
    static constexpr double c1[4] = {1.0, -8.0, 8.0, -1.0};
    static constexpr double o1[4] = {-2.0, -1.0, 1.0, 2.0};

    jet.gradient = Mat::Zero(k_, n_);
    for (int i = 0; i < n_; ++i) {
        Vec acc = Vec::Zero(k_);
        for (int s = 0; s < 4; ++s) {
            Vec y = x;
            y[i] += o1[s] * e1;
            acc += c1[s] * f_(y);
        }
        jet.gradient.col(i) = acc / (12.0 * e1);
    }

    jet.hessian.assign(k_, Mat::Zero(n_, n_));
    for (int i = 0; i < n_; ++i) {
        static constexpr double c2[5] = {-1.0, 16.0, -30.0, 16.0, -1.0};
        Vec acc = Vec::Zero(k_);
        for (int s = 0; s < 5; ++s) {
            Vec y = x;
            y[i] += (s - 2) * e2;
            acc += c2[s] * (s == 2 ? jet.value : f_(y));
        }
        acc /= 12.0 * e2 * e2;
        for (int a = 0; a < k_; ++a) jet.hessian[a](i, i) = acc[a];
        for (int j = i + 1; j < n_; ++j) {
            Vec mixed = Vec::Zero(k_);
            for (int s = 0; s < 4; ++s) {
                for (int t = 0; t < 4; ++t) {
                    Vec y = x;
                    y[i] += o1[s] * e2;
                    y[j] += o1[t] * e2;
                    mixed += c1[s] * c1[t] * f_(y);
                }
            }
            mixed /= 144.0 * e2 * e2;
            for (int a = 0; a < k_; ++a) {
                jet.hessian[a](i, j) = mixed[a];
                jet.hessian[a](j, i) = mixed[a];
            }
        }
    }
    return jet;
}

Mat ClosedFormSource::gradient(const Vec& x) const {
    if (x.size() != n_) throw ValidationError("query point has wrong dimension");
    const double e1 = 1e-3 * (1.0 + x.norm());
    static constexpr double c1[4] = {1.0, -8.0, 8.0, -1.0};
    static constexpr double o1[4] = {-2.0, -1.0, 1.0, 2.0};
    Mat out(k_, n_);
    for (int i = 0; i < n_; ++i) {
        Vec acc = Vec::Zero(k_);
        for (int s = 0; s < 4; ++s) {
            Vec y = x;
            y[i] += o1[s] * e1;
            acc += c1[s] * f_(y);
        }
        out.col(i) = acc / (12.0 * e1);
    }
    return out;
}

Vec ClosedFormSource::mean_curvature(const Vec& x) const { return mcflab::mean_curvature(jet(x)); }

FieldSource::FieldSource(const GraphField& field, Interpolation mode) : field_(&field), mode_(mode) {
    if (mode == Interpolation::Cubic && field.spec().points_per_axis() < 4) {
        throw ValidationError("cubic interpolation needs at least four nodes per axis");
    }
}

const NodalGeometry& FieldSource::geometry() const {
    if (!geometry_) geometry_ = std::make_unique<NodalGeometry>(*field_);
    return *geometry_;
}

namespace {

// Lagrange basis on the nodes 0, 1, 2, 3 and its derivative at t.
void lagrange4(double t, double L[4], double dL[4]) {
    static constexpr double denom[4] = {-6.0, 2.0, -2.0, 6.0};
    for (int j = 0; j < 4; ++j) {
        double p = 1.0;
        double dp = 0.0;
        for (int m = 0; m < 4; ++m) {
            if (m == j) continue;
            dp = dp * (t - m) + p;
            p *= t - m;
        }
        L[j] = p / denom[j];
        dL[j] = dp / denom[j];
    }
}

} // namespace

void FieldSource::cubic(const Vec& x, Vec* value, Mat* gradient) const {
    const GridSpec& spec = field_->spec();
    const int n = spec.n();
    const int k = spec.k();
    if (x.size() != n) throw ValidationError("query point has wrong dimension");
    const double ext = spec.extent();
    const double h = spec.spacing();
    const int m = spec.points_per_axis();
    double overshoot = 0.0;
    for (int d = 0; d < n; ++d) overshoot = std::max(overshoot, std::abs(x[d]) - ext);
    if (!(overshoot <= 0.0)) {
        throw DomainError("query point " + describe_point(x) + " lies outside the grid cube", overshoot);
    }
    std::array<int, kMaxDim> start{};
    std::array<std::array<double, 4>, kMaxDim> L{};
    std::array<std::array<double, 4>, kMaxDim> dL{};
    for (int d = 0; d < n; ++d) {
        double u = (x[d] + ext) / h;
        const double nearest = std::round(u);
        if (std::abs(u - nearest) <= 1e-10) u = nearest;
        const int i = std::clamp(static_cast<int>(std::floor(u)), 0, m - 2);
        start[d] = std::clamp(i - 1, 0, m - 4);
        lagrange4(u - start[d], L[d].data(), dL[d].data());
        for (double& v : dL[d]) v /= h;
    }

    if (value) *value = Vec::Zero(k);
    if (gradient) *gradient = Mat::Zero(k, n);
    const auto vals = field_->values();
    int total = 1;
    for (int d = 0; d < n; ++d) total *= 4;
    for (int c = 0; c < total; ++c) {
        GridIndex idx{};
        std::array<int, kMaxDim> off{};
        int rest = c;
        for (int d = 0; d < n; ++d) {
            off[d] = rest % 4;
            rest /= 4;
            idx[d] = start[d] + off[d];
        }
        const std::size_t f = spec.flatten(idx);
        double w = 1.0;
        for (int d = 0; d < n; ++d) w *= L[d][off[d]];
        for (int a = 0; a < k; ++a) {
            const double v = vals[f * k + a];
            if (value) (*value)[a] += w * v;
            if (gradient) {
                for (int i = 0; i < n; ++i) {
                    double wi = 1.0;
                    for (int d = 0; d < n; ++d) wi *= d == i ? dL[d][off[d]] : L[d][off[d]];
                    (*gradient)(a, i) += wi * v;
                }
            }
        }
    }
}

Vec FieldSource::value(const Vec& x) const {
    if (mode_ == Interpolation::Multilinear) return interpolate(*field_, x);
    Vec v;
    cubic(x, &v, nullptr);
    return v;
}

Mat FieldSource::gradient(const Vec& x) const {
    if (mode_ == Interpolation::Multilinear) return geometry().gradient(x);
    Mat g;
    cubic(x, nullptr, &g);
    return g;
}

Vec FieldSource::mean_curvature(const Vec& x) const {
    const NodalGeometry& geo = geometry();
    const GridSpec& spec = field_->spec();
    const int d = spec.n() + spec.k();
    if (curvature_.empty()) {
        curvature_.assign(spec.node_count() * d, 0.0);
        for (std::size_t f = 0; f < spec.node_count(); ++f) {
            if (!geo.valid(f)) continue;
            for (int c = 0; c < d; ++c) curvature_[f * d + c] = geo.at(f).mean_curvature[c];
        }
    }
    return geo.interpolate(x, curvature_, d);
}

// ---------------------------------------------------------------------------

Vec BlowdownSequence::at(std::size_t l, std::size_t j) const {
    Vec v(k);
    for (int a = 0; a < k; ++a) v[a] = values[(l * sampling.size() + j) * k + a];
    return v;
}

BlowdownSequence sample_blowdown(const ProfileSource& source, const std::vector<double>& ladder,
                                 const SphereSampling& sampling) {
    if (ladder.empty()) throw ValidationError("blow-down ladder is empty");
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        if (!(ladder[i] >= 1.0) || !std::isfinite(ladder[i])) {
            throw ValidationError("blow-down scales must be finite and at least 1");
        }
        if (i > 0 && !(ladder[i] > ladder[i - 1])) throw ValidationError("blow-down ladder must increase strictly");
    }
    if (sampling.n != source.n()) throw ValidationError("sphere sampling dimension does not match the source");
    if (std::abs(sampling.radius - 1.0) > 1e-12) throw ValidationError("blow-down sampling must lie on the unit sphere");

    BlowdownSequence seq;
    seq.ladder = ladder;
    seq.sampling = sampling;
    seq.k = source.k();
    seq.values.resize(ladder.size() * sampling.size() * seq.k);
    const auto coverage = source.coverage();
    for (std::size_t l = 0; l < ladder.size(); ++l) {
        const double lambda = ladder[l];
        for (std::size_t j = 0; j < sampling.size(); ++j) {
            const Vec y = lambda * sampling.nodes[j];
            if (coverage) {
                const double over = y.cwiseAbs().maxCoeff() - *coverage;
                if (over > 0.0) {
                    throw DomainError("blow-down query lambda = " + std::to_string(lambda) + " at " +
                                          describe_point(y) + " lies outside the sampled cube",
                                      over);
                }
            }
            const Vec v = source.value(y);
            for (int a = 0; a < seq.k; ++a) {
                const double m = v[a] / lambda;
                if (!std::isfinite(m)) {
                    throw NumericalError("non-finite blow-down value at " + describe_point(y));
                }
                seq.values[(l * sampling.size() + j) * seq.k + a] = m;
            }
        }
    }
    return seq;
}

double cauchy_distance2(const BlowdownSequence& seq, std::size_t i, std::size_t j) {
    double d2 = 0.0;
    const std::size_t count = seq.sampling.size();
    for (std::size_t p = 0; p < count; ++p) {
        double local = 0.0;
        for (int a = 0; a < seq.k; ++a) {
            const double diff = seq.values[(i * count + p) * seq.k + a] - seq.values[(j * count + p) * seq.k + a];
            local += diff * diff;
        }
        d2 += seq.sampling.weights[p] * local;
    }
    return d2;
}

double cauchy_ratio(const BlowdownSequence& seq, std::size_t i, std::size_t j) {
    const double li = seq.ladder[i];
    const double lj = seq.ladder[j];
    const double denom = std::abs(1.0 / (lj * lj) - 1.0 / (li * li));
    if (denom == 0.0) return 0.0;
    return cauchy_distance2(seq, i, j) / denom;
}

EstimateReport cauchy_bound_check(const BlowdownSequence& seq) {
    if (seq.ladder.size() < 3) throw ValidationError("Cauchy check needs at least three scales");
    EstimateReport report;
    report.check = "cauchy";
    struct Pair {
        double key;
        double ratio;
    };
    std::vector<Pair> pairs;
    for (std::size_t i = 0; i < seq.ladder.size(); ++i) {
        for (std::size_t j = i + 1; j < seq.ladder.size(); ++j) {
            const double l = seq.ladder[i];
            const double m = seq.ladder[j];
            const double denom = std::abs(1.0 / (m * m) - 1.0 / (l * l));
            if (denom == 0.0) continue;
            EstimateRow row;
            row.param = {l, m};
            row.lhs = cauchy_distance2(seq, i, j);
            row.rhs = denom;
            row.ratio = row.lhs / denom;
            report.fitted_c = std::max(report.fitted_c, row.ratio);
            report.rows.push_back(row);
            pairs.push_back({std::sqrt(l * m), row.ratio});
        }
    }
    std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.key < b.key; });
    const std::size_t q = std::max<std::size_t>(1, (pairs.size() + 3) / 4);
    double bottom = 0.0;
    double top = 0.0;
    for (std::size_t i = 0; i < q; ++i) {
        bottom += pairs[i].ratio;
        top += pairs[pairs.size() - 1 - i].ratio;
    }
    bottom /= q;
    top /= q;
    report.extras["bottom_quartile_mean"] = bottom;
    report.extras["top_quartile_mean"] = top;
    report.flags["no_growth"] = top <= 2.0 * bottom + 1e-300;
    return report;
}

Vec ConeProfile::direction_value(std::size_t j) const {
    Vec v(k);
    for (int a = 0; a < k; ++a) v[a] = values[j * k + a];
    return v;
}

Vec ConeProfile::evaluate_ray(std::size_t j, double r) const { return r * direction_value(j); }

std::size_t ConeProfile::nearest_direction(const Vec& u) const {
    std::size_t best = 0;
    double best_dot = -INFINITY;
    for (std::size_t j = 0; j < sampling.size(); ++j) {
        const double d = sampling.nodes[j].dot(u);
        if (d > best_dot) {
            best_dot = d;
            best = j;
        }
    }
    return best;
}

Vec ConeProfile::evaluate(const Vec& x) const {
    const double r = x.norm();
    if (r == 0.0) return Vec::Zero(k);
    return r * direction_value(nearest_direction(x / r));
}

ConeEstimate estimate_cone(const BlowdownSequence& seq) {
    if (seq.ladder.size() < 3) throw ValidationError("cone estimate needs at least three scales");
    const std::size_t last = seq.ladder.size() - 1;
    const std::size_t count = seq.sampling.size();
    ConeEstimate out;
    out.profile.sampling = seq.sampling;
    out.profile.k = seq.k;
    out.profile.values.assign(seq.values.begin() + last * count * seq.k, seq.values.end());

    ConeRateReport& rate = out.rate;
    double scale = 0.0;
    for (double v : seq.values) scale = std::max(scale, std::abs(v));
    for (std::size_t l = 0; l <= last; ++l) rate.distances.push_back(std::sqrt(cauchy_distance2(seq, l, last)));
    const double tiny = 1e-12 * (1.0 + scale);
    rate.already_conical = *std::max_element(rate.distances.begin(), rate.distances.end()) <= tiny;
    for (std::size_t l = 1; l <= last; ++l) {
        if (rate.distances[l] > rate.distances[l - 1] * (1.0 + 1e-9) + tiny) rate.monotone = false;
    }

    if (!rate.already_conical) {
        const double cut = std::sqrt(seq.ladder.front() * seq.ladder.back()) * (1.0 + 1e-12);
        std::vector<double> xs;
        std::vector<double> ys;
        for (std::size_t l = 0; l < last; ++l) {
            if (seq.ladder[l] > cut || rate.distances[l] <= tiny) continue;
            xs.push_back(std::log(seq.ladder[l]));
            ys.push_back(std::log(rate.distances[l]));
        }
        rate.fit_points = xs.size();
        if (xs.size() >= 2) {
            const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
            const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
            double sxy = 0.0;
            double sxx = 0.0;
            for (std::size_t i = 0; i < xs.size(); ++i) {
                sxy += (xs[i] - mx) * (ys[i] - my);
                sxx += (xs[i] - mx) * (xs[i] - mx);
            }
            rate.slope = sxy / sxx;
        }
    }

    double anti = 0.0;
    for (std::size_t j = 0; j < count; ++j) {
        const std::size_t opp = out.profile.nearest_direction(-seq.sampling.nodes[j]);
        anti += seq.sampling.weights[j] *
                (out.profile.direction_value(j) + out.profile.direction_value(opp)).squaredNorm();
    }
    rate.antipodal_defect = std::sqrt(anti);
    return out;
}

std::vector<HomogeneityRow> homogeneity_defect(const ConeProfile& profile, const ProfileSource& source,
                                               const std::vector<double>& radii) {
    std::vector<HomogeneityRow> out;
    const auto coverage = source.coverage();
    for (double r : radii) {
        if (r == 0.0 || !std::isfinite(r)) throw ValidationError("homogeneity radius must be finite and nonzero");
        double sum = 0.0;
        for (std::size_t j = 0; j < profile.sampling.size(); ++j) {
            const Vec y = r * profile.sampling.nodes[j];
            if (coverage) {
                const double over = y.cwiseAbs().maxCoeff() - *coverage;
                if (over > 0.0) {
                    throw DomainError("homogeneity query " + describe_point(y) + " lies outside the sampled cube",
                                      over);
                }
            }
            sum += profile.sampling.weights[j] * (source.value(y) - r * profile.direction_value(j)).squaredNorm();
        }
        out.push_back({r, sum / (r * r)});
    }
    return out;
}

std::vector<HomogeneityRow> homogeneity_defect(const ConeProfile& profile, const std::vector<double>& radii) {
    std::vector<HomogeneityRow> out;
    for (double r : radii) {
        if (r == 0.0 || !std::isfinite(r)) throw ValidationError("homogeneity radius must be finite and nonzero");
        double sum = 0.0;
        for (std::size_t j = 0; j < profile.sampling.size(); ++j) {
            sum += profile.sampling.weights[j] *
                   (profile.evaluate_ray(j, r) - r * profile.direction_value(j)).squaredNorm();
        }
        out.push_back({r, sum / (r * r)});
    }
    return out;
}

DLambdaReport dlambda_identity_check(const ProfileSource& source, const std::vector<double>& ladder,
                                     const std::vector<Vec>& points) {
    const int n = source.n();
    const int k = source.k();
    const auto coverage = source.coverage();
    DLambdaReport report;
    for (double lambda : ladder) {
        if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ValidationError("scales must be positive");
        const double dl = 1e-3 * lambda;
        for (std::size_t p = 0; p < points.size(); ++p) {
            const Vec& x = points[p];
            if (x.size() != n) throw ValidationError("query point has wrong dimension");
            if (coverage) {
                const double over = ((lambda + 2.0 * dl) * x).cwiseAbs().maxCoeff() - *coverage;
                if (over > 0.0) {
                    throw DomainError("scale stencil at lambda = " + std::to_string(lambda) + " leaves the cube at " +
                                          describe_point(x),
                                      over);
                }
            }
            auto f_lambda = [&](double l) -> Vec { return source.value(l * x) / l; };
            const Vec fd = (f_lambda(lambda - 2.0 * dl) - 8.0 * f_lambda(lambda - dl) + 8.0 * f_lambda(lambda + dl) -
                            f_lambda(lambda + 2.0 * dl)) /
                           (12.0 * dl);
            const Vec y = lambda * x;
            const Vec f = source.value(y);
            const Mat Df = source.gradient(y);
            const Vec H = source.mean_curvature(y);
            const double inv2 = 1.0 / (lambda * lambda);
            for (int a = 0; a < k; ++a) {
                DLambdaRow row;
                row.lambda = lambda;
                row.node = p;
                row.component = a;
                row.finite_difference = fd[a];
                row.chain_rule = inv2 * (Df.row(a).dot(y) - f[a]);
                row.soliton_form = inv2 * (-Df.row(a).dot(H.head(n)) + H[n + a]);
                row.defect_a = std::abs(fd[a] - row.chain_rule);
                row.defect_b = std::abs(fd[a] - row.soliton_form);
                report.max_defect_a = std::max(report.max_defect_a, row.defect_a);
                report.max_defect_b = std::max(report.max_defect_b, row.defect_b);
                report.rows.push_back(row);
            }
        }
    }
    return report;
}

} // namespace mcflab
