#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "mcflab/gridfield.hpp"

namespace mcflab {

/// Vector field on the ambient space R^{n+k}.
using AmbientField = std::function<Vec(const Vec&)>;

/// Columns tau_i = e_i (+) D_i f, the coordinate tangent vectors of the graph.
Mat tangent_frame(const JetSample& jet);

/// g_ij = delta_ij + sum_alpha D_i f^alpha D_j f^alpha.
Mat induced_metric(const JetSample& jet);

/// Orthogonal projection onto the normal space, I - T g^{-1} T^T.
Mat normal_projection(const JetSample& jet);

/// II_ij = Q (0 (+) D^2_ij f); entry i*n + j of the result.
std::vector<Vec> second_fundamental_form(const JetSample& jet);

/// H = g^ij II_ij.
Vec mean_curvature(const JetSample& jet);

struct GeometrySample {
    Vec point;          // x
    Vec position;       // F = (x, f(x))
    Mat frame;          // (n+k) x n
    Mat metric;         // g
    Mat metric_inverse;
    double metric_det = 1.0;
    double area_element = 1.0;  // sqrt(det g)
    double metric_condition = 1.0;
    double metric_eig_min = 1.0;
    double metric_eig_max = 1.0;
    Mat projection;     // Q
    std::vector<Vec> second_fundamental;  // n*n entries
    Vec mean_curvature;
    Vec position_normal;      // F^perp = Q F
    Vec position_tangential;  // F^T = F - F^perp
};

GeometrySample geometry_from_jet(const JetSample& jet);
GeometrySample geometry_at(const GraphField& field, std::size_t flat);

/**
 * div_Sigma X = g^ij <d(X o F)/dx^i, tau_j>, the composite derivative taken by
 * centered differences of X evaluated at F of the neighboring nodes.
 */
double surface_divergence(const AmbientField& X, const GraphField& field, std::size_t flat);

/// Surface divergence of a field already sampled along Sigma: values[node] in R^{n+k}.
/// Needs one ring of neighbors around flat.
double surface_divergence_sampled(const std::vector<Vec>& values, const GraphField& field,
                                  std::size_t flat);

/// Tangential gradient of p -> |p| along Sigma, expressed in R^{n+k}.
Vec tangential_gradient_of_norm(const GraphField& field, std::size_t flat);

/// One row of the geometry report CSV.
struct GeometryReportRow {
    Vec point;
    double mean_curvature_norm;
    double normal_position_norm;
    double soliton_residual_norm;  // |H + F^perp|
    double metric_det;
    double metric_eig_min;
    double metric_eig_max;
};

/// Rows for every interior node, optionally restricted to |x| <= radius.
std::vector<GeometryReportRow> geometry_report(const GraphField& field,
                                               std::optional<double> radius = std::nullopt);
void write_geometry_csv(std::ostream& out, int n, const std::vector<GeometryReportRow>& rows);

} // namespace mcflab
