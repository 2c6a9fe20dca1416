#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mcflab/geometry.hpp"
#include "mcflab/gridfield.hpp"

namespace mcflab {

// ---------------------------------------------------------------------------
// Nodal geometry cache and boundary quadrature
// ---------------------------------------------------------------------------

/// Geometry evaluated once at every node with depth >= 1.
class NodalGeometry {
public:
    explicit NodalGeometry(const GraphField& field);

    const GraphField& field() const { return *field_; }
    const GridSpec& spec() const { return field_->spec(); }
    bool valid(std::size_t flat) const { return valid_[flat] != 0; }
    const GeometrySample& at(std::size_t flat) const { return samples_[flat]; }

    /// Multilinear interpolation of a per-node quantity q(sample) of fixed
    /// length; every corner of the containing cell must be a valid node.
    Vec interpolate(const Vec& x, const std::vector<double>& nodal, int dim) const;

    /// f(x) and Df(x) at an off-grid point (multilinear in values and in the
    /// nodal centered-difference gradients).
    Vec value(const Vec& x) const;
    Mat gradient(const Vec& x) const;

    const std::vector<double>& nodal_gradients() const { return gradients_; }

private:
    const GraphField* field_;
    std::vector<char> valid_;
    std::vector<GeometrySample> samples_;
    std::vector<double> gradients_;  // k*n per node, row-major
};

/// Quadrature on the lifted sphere dSigma_R = {(x, f(x)) : |x| = R}.
struct BoundaryQuadrature {
    double radius = 0.0;
    std::vector<Vec> base_points;   // x
    std::vector<Vec> positions;     // F = (x, f(x))
    std::vector<Vec> conormals;     // nu
    std::vector<double> weights;    // (n-1)-dimensional surface measure
    std::vector<Mat> projections;   // normal projection Q at each node
    std::vector<std::vector<Vec>> tangents;  // tangents of dSigma_R
    std::vector<Vec> lifted_radial; // T x/|x|, the radial direction pushed to T Sigma
};

/// n in {1, 2, 3}; resolution is the target node spacing along the boundary.
BoundaryQuadrature boundary_quadrature(const NodalGeometry& geo, double radius, double resolution);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct EstimateRow {
    std::vector<double> param;  // {R} or {lambda, mu}
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;
};

struct EstimateReport {
    std::string check;
    std::vector<EstimateRow> rows;
    double fitted_c = 0.0;
    std::map<std::string, bool> flags;
    std::map<std::string, double> extras;
};

// ---------------------------------------------------------------------------
// Divergence identities and integral estimates
// ---------------------------------------------------------------------------

/// X(p) = (1 + |p|)^{-s} p.
struct DivergenceFieldSpec {
    double exponent = 0.0;
    AmbientField field() const;
};

struct DivergenceIdentityResult {
    double pointwise_defect = 0.0;  // max |div X^T - div X - <X, H>|
    double integral_defect = 0.0;   // |int div X + int <H, X> - int_bd <X, nu>|
    double divergence_integral = 0.0;
    double curvature_integral = 0.0;  // int <H, X>
    double flux_integral = 0.0;       // int_bd <X, nu>
    double relative_defect = 0.0;     // integral_defect / max(largest |integral|, boundary_mass)
    double boundary_mass = 0.0;       // int_bd |X|
};

/// Requires n in {1, 2, 3} and R <= L - 2h.
DivergenceIdentityResult divergence_identity_check(const GraphField& field, const AmbientField& X, double radius);

/// LHS = int_{Sigma_R} (1+|F|)^{-n} |H|^2 dmu, RHS = int_{dSigma_R} (1+|F|)^{1-n} dsigma.
/// Flag "holds" is LHS <= 1.05 RHS at every R.
EstimateReport estimate_star(const GraphField& field, const std::vector<double>& radii);

/// LHS = sum over |x| <= R grid nodes of h^n (1+|x|)^{-n} |H|^2, RHS = |S^{n-1}| R^{n-1} (1+R)^{1-n}.
EstimateReport estimate_K(const GraphField& field, const std::vector<double>& radii);
double estimate_K_rhs(int n, double radius);

struct MetricBoundReport {
    double c0 = 0.0;          // sup operator norm of Df
    double c_metric = 0.0;    // sup lambda_max(g)
    double lambda_min = 0.0;  // inf lambda_min(g)
    double det_max = 0.0;
    double sqrt_det_min = 0.0;
    double sqrt_det_max = 0.0;
    bool position_bound_checked = false;  // only when f(0) = 0
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

/// Nodes with depth >= 1, restricted to |x| <= radius when given.
MetricBoundReport metric_bound_check(const GraphField& field, std::optional<double> radius = std::nullopt);

// ---------------------------------------------------------------------------
// Blow-down
// ---------------------------------------------------------------------------

/// Something that can be evaluated at arbitrary points of R^n.
class ProfileSource {
public:
    virtual ~ProfileSource() = default;
    virtual int n() const = 0;
    virtual int k() const = 0;
    virtual Vec value(const Vec& x) const = 0;
    virtual Mat gradient(const Vec& x) const = 0;
    virtual Vec mean_curvature(const Vec& x) const = 0;
    /// Half width of the covered cube; nullopt for closed forms defined everywhere.
    virtual std::optional<double> coverage() const = 0;
};

/// Closed-form map. Gradient and Hessian by fourth-order central differences.
class ClosedFormSource : public ProfileSource {
public:
    ClosedFormSource(Generator f, int n, int k) : f_(std::move(f)), n_(n), k_(k) {}
    int n() const override { return n_; }
    int k() const override { return k_; }
    Vec value(const Vec& x) const override { return f_(x); }
    Mat gradient(const Vec& x) const override;
    Vec mean_curvature(const Vec& x) const override;
    std::optional<double> coverage() const override { return std::nullopt; }
    JetSample jet(const Vec& x) const;

private:
    Generator f_;
    int n_;
    int k_;
};

/**
 * Sampled field. Values use multilinear interpolation by default; the cubic
 * mode uses tensor four-point Lagrange interpolation and its exact gradient,
 * which keeps derivatives along rays second-order accurate. Mean curvature is
 * always interpolated multilinearly from nodal values.
 */
class FieldSource : public ProfileSource {
public:
    enum class Interpolation { Multilinear, Cubic };
    explicit FieldSource(const GraphField& field, Interpolation mode = Interpolation::Multilinear);

    int n() const override { return field_->spec().n(); }
    int k() const override { return field_->spec().k(); }
    Vec value(const Vec& x) const override;
    Mat gradient(const Vec& x) const override;
    Vec mean_curvature(const Vec& x) const override;
    std::optional<double> coverage() const override { return field_->spec().extent(); }

private:
    const NodalGeometry& geometry() const;
    void cubic(const Vec& x, Vec* value, Mat* gradient) const;

    const GraphField* field_;
    Interpolation mode_;
    mutable std::unique_ptr<NodalGeometry> geometry_;
    mutable std::vector<double> curvature_;  // nodal H, (n+k) per node
};

struct BlowdownSequence {
    std::vector<double> ladder;
    SphereSampling sampling;  // unit sphere
    int k = 0;
    std::vector<double> values;  // [ladder][node][component]

    Vec at(std::size_t l, std::size_t j) const;
};

/// M[lambda, j] = f(lambda x_j) / lambda. Throws DomainError on the first query outside coverage.
BlowdownSequence sample_blowdown(const ProfileSource& source, const std::vector<double>& ladder,
                                 const SphereSampling& sampling);

/// Ratio for one pair; symmetric in (i, j).
double cauchy_ratio(const BlowdownSequence& seq, std::size_t i, std::size_t j);
double cauchy_distance2(const BlowdownSequence& seq, std::size_t i, std::size_t j);

/// All pairs lambda < mu; flag "no_growth" compares top- and bottom-quartile means.
EstimateReport cauchy_bound_check(const BlowdownSequence& seq);

struct ConeProfile {
    SphereSampling sampling;  // unit directions
    int k = 0;
    std::vector<double> values;  // f_inf at the directions

    Vec direction_value(std::size_t j) const;
    /// r f_inf(x_j) for any real r; negative r follows the odd convention.
    Vec evaluate_ray(std::size_t j, double r) const;
    /// |x| f_inf(nearest sampled direction to x / |x|); 0 at the origin.
    Vec evaluate(const Vec& x) const;
    std::size_t nearest_direction(const Vec& u) const;
};

struct ConeRateReport {
    std::vector<double> distances;  // ||f_lambda - f_inf||_{L2(S^{n-1})} per ladder entry
    std::optional<double> slope;    // log-log fit; empty when already conical
    bool already_conical = false;
    bool monotone = true;           // distances non-increasing in lambda
    double antipodal_defect = 0.0;  // ||f_inf(-x) + f_inf(x)||_{L2}
    std::size_t fit_points = 0;
};

struct ConeEstimate {
    ConeProfile profile;
    ConeRateReport rate;
};

/// f_inf = f_{lambda_max}; the rate is fitted over the lower geometric half of the ladder.
ConeEstimate estimate_cone(const BlowdownSequence& seq);

struct HomogeneityRow {
    double r = 0.0;
    double defect = 0.0;
};

/// sum_j w_j |f(r x_j) - r f_inf(x_j)|^2 / r^2 for each r.
std::vector<HomogeneityRow> homogeneity_defect(const ConeProfile& profile, const ProfileSource& source,
                                               const std::vector<double>& radii);
/// The profile's own extension, evaluated along the sampled rays.
std::vector<HomogeneityRow> homogeneity_defect(const ConeProfile& profile, const std::vector<double>& radii);

struct DLambdaRow {
    double lambda = 0.0;
    std::size_t node = 0;
    int component = 0;
    double finite_difference = 0.0;
    double chain_rule = 0.0;     // lambda^-2 (Df(lambda x).lambda x - f(lambda x))
    double soliton_form = 0.0;   // lambda^-2 <(-Df(lambda x), e_alpha), H(lambda x)>
    double defect_a = 0.0;
    double defect_b = 0.0;
};

struct DLambdaReport {
    double max_defect_a = 0.0;
    double max_defect_b = 0.0;
    std::vector<DLambdaRow> rows;
};

/// Centered difference in lambda with step 1e-3 lambda at the given points.
DLambdaReport dlambda_identity_check(const ProfileSource& source, const std::vector<double>& ladder,
                                     const std::vector<Vec>& points);

} // namespace mcflab
