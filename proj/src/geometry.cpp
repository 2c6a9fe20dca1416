#include "mcflab/geometry.hpp"

#include <cmath>
#include <ostream>

#include "mcflab/error.hpp"
#include "mcflab/format.hpp"

namespace mcflab {

Mat tangent_frame(const JetSample& jet) {
    const auto n = jet.gradient.cols();
    const auto k = jet.gradient.rows();
    Mat T(n + k, n);
    T.topRows(n).setIdentity();
    T.bottomRows(k) = jet.gradient;
    return T;
}

Mat induced_metric(const JetSample& jet) {
    const auto n = jet.gradient.cols();
    Mat g = Mat::Identity(n, n);
    g.noalias() += jet.gradient.transpose() * jet.gradient;
    return g;
}

Mat normal_projection(const JetSample& jet) {
    const Mat T = tangent_frame(jet);
    const Mat g = induced_metric(jet);
    const Eigen::LDLT<Mat> ldlt(g);
    const auto d = T.rows();
    Mat Q = Mat::Identity(d, d);
    Q.noalias() -= T * ldlt.solve(T.transpose());
    // exact symmetry; the subtraction above is symmetric only up to rounding
    return 0.5 * (Q + Q.transpose());
}

namespace {

std::vector<Vec> second_fundamental_with(const JetSample& jet, const Mat& Q) {
    const auto n = jet.gradient.cols();
    const auto k = jet.gradient.rows();
    std::vector<Vec> II(static_cast<std::size_t>(n * n));
    Vec lifted = Vec::Zero(n + k);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j) {
            for (Eigen::Index a = 0; a < k; ++a) lifted[n + a] = jet.hessian[a](i, j);
            Vec v = Q * lifted;
            II[i * n + j] = v;
            II[j * n + i] = std::move(v);
        }
    }
    return II;
}

Vec trace_with(const std::vector<Vec>& II, const Mat& ginv) {
    const auto n = ginv.rows();
    Vec H = Vec::Zero(II.front().size());
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) H += ginv(i, j) * II[i * n + j];
    return H;
}

} // namespace

std::vector<Vec> second_fundamental_form(const JetSample& jet) {
    return second_fundamental_with(jet, normal_projection(jet));
}

Vec mean_curvature(const JetSample& jet) {
    const Mat g = induced_metric(jet);
    return trace_with(second_fundamental_form(jet), Eigen::LDLT<Mat>(g).solve(Mat::Identity(g.rows(), g.cols())));
}

GeometrySample geometry_from_jet(const JetSample& jet) {
    const auto n = jet.gradient.cols();
    const auto k = jet.gradient.rows();
    GeometrySample s;
    s.point = jet.point;
    s.position.resize(n + k);
    s.position << jet.point, jet.value;
    s.frame = tangent_frame(jet);
    s.metric = induced_metric(jet);

    const Eigen::SelfAdjointEigenSolver<Mat> eig(s.metric);
    s.metric_eig_min = eig.eigenvalues().minCoeff();
    s.metric_eig_max = eig.eigenvalues().maxCoeff();
    s.metric_condition = s.metric_eig_max / s.metric_eig_min;

    const Eigen::LLT<Mat> llt(s.metric);
    s.metric_inverse = llt.solve(Mat::Identity(n, n));
    s.metric_inverse = 0.5 * (s.metric_inverse + s.metric_inverse.transpose()).eval();
    const double sqrt_det = llt.matrixL().toDenseMatrix().diagonal().prod();
    s.metric_det = sqrt_det * sqrt_det;
    s.area_element = sqrt_det;

    s.projection = Mat::Identity(n + k, n + k);
    s.projection.noalias() -= s.frame * s.metric_inverse * s.frame.transpose();
    s.projection = 0.5 * (s.projection + s.projection.transpose()).eval();

    s.second_fundamental = second_fundamental_with(jet, s.projection);
    s.mean_curvature = trace_with(s.second_fundamental, s.metric_inverse);
    s.position_normal = s.projection * s.position;
    s.position_tangential = s.position - s.position_normal;
    return s;
}

GeometrySample geometry_at(const GraphField& field, std::size_t flat) {
    return geometry_from_jet(jet_at(field, flat));
}

double surface_divergence_sampled(const std::vector<Vec>& values, const GraphField& field, std::size_t flat) {
    const GridSpec& spec = field.spec();
    const JetSample jet = jet_at(field, flat);
    const Mat T = tangent_frame(jet);
    const Mat ginv = Eigen::LLT<Mat>(induced_metric(jet)).solve(Mat::Identity(spec.n(), spec.n()));
    const double h = spec.spacing();
    double div = 0.0;
    for (int i = 0; i < spec.n(); ++i) {
        const std::size_t s = spec.stride(i);
        const Vec dX = (values[flat + s] - values[flat - s]) / (2.0 * h);
        for (int j = 0; j < spec.n(); ++j) div += ginv(i, j) * dX.dot(T.col(j));
    }
    return div;
}

double surface_divergence(const AmbientField& X, const GraphField& field, std::size_t flat) {
    const GridSpec& spec = field.spec();
    if (!spec.is_interior(flat, 1)) {
        const GridIndex idx = spec.unflatten(flat);
        int axis = 0;
        for (int d = 0; d < spec.n(); ++d) {
            if (idx[d] < 1 || idx[d] > spec.points_per_axis() - 2) {
                axis = d;
                break;
            }
        }
        throw BoundaryError("surface divergence needs one ring of neighbors; node touches a face on axis " +
                                std::to_string(axis),
                            axis);
    }
    const int n = spec.n();
    const int k = spec.k();
    auto lift = [&](std::size_t f) {
        Vec F(n + k);
        F << spec.point(f), field.value_vec(f);
        return X(F);
    };
    const JetSample jet = jet_at(field, flat);
    const Mat T = tangent_frame(jet);
    const Mat ginv = Eigen::LLT<Mat>(induced_metric(jet)).solve(Mat::Identity(n, n));
    const double h = spec.spacing();
    double div = 0.0;
    for (int i = 0; i < n; ++i) {
        const std::size_t s = spec.stride(i);
        const Vec dX = (lift(flat + s) - lift(flat - s)) / (2.0 * h);
        for (int j = 0; j < n; ++j) div += ginv(i, j) * dX.dot(T.col(j));
    }
    return div;
}

Vec tangential_gradient_of_norm(const GraphField& field, std::size_t flat) {
    const GridSpec& spec = field.spec();
    const int n = spec.n();
    const int k = spec.k();
    auto norm_at = [&](std::size_t f) {
        Vec F(n + k);
        F << spec.point(f), field.value_vec(f);
        return F.norm();
    };
    const JetSample jet = jet_at(field, flat);
    const Mat T = tangent_frame(jet);
    const Mat ginv = Eigen::LLT<Mat>(induced_metric(jet)).solve(Mat::Identity(n, n));
    Vec d(n);
    for (int i = 0; i < n; ++i) {
        const std::size_t s = spec.stride(i);
        d[i] = (norm_at(flat + s) - norm_at(flat - s)) / (2.0 * spec.spacing());
    }
    return T * (ginv * d);
}

std::vector<GeometryReportRow> geometry_report(const GraphField& field, std::optional<double> radius) {
    std::vector<GeometryReportRow> rows;
    const GridSpec& spec = field.spec();
    for (std::size_t f : spec.interior_nodes(1)) {
        const Vec x = spec.point(f);
        if (radius && x.norm() > *radius) continue;
        const GeometrySample g = geometry_at(field, f);
        rows.push_back({x, g.mean_curvature.norm(), g.position_normal.norm(),
                        (g.mean_curvature + g.position_normal).norm(), g.metric_det, g.metric_eig_min,
                        g.metric_eig_max});
    }
    return rows;
}

void write_geometry_csv(std::ostream& out, int n, const std::vector<GeometryReportRow>& rows) {
    for (int d = 0; d < n; ++d) out << 'x' << (d + 1) << ',';
    out << "mean_curvature_norm,normal_position_norm,soliton_residual_norm,det_g,lambda_min_g,lambda_max_g\n";
    for (const auto& r : rows) {
        for (int d = 0; d < n; ++d) out << format_double(r.point[d]) << ',';
        out << format_double(r.mean_curvature_norm) << ',' << format_double(r.normal_position_norm) << ','
            << format_double(r.soliton_residual_norm) << ',' << format_double(r.metric_det) << ','
            << format_double(r.metric_eig_min) << ',' << format_double(r.metric_eig_max) << '\n';
    }
}

} // namespace mcflab
