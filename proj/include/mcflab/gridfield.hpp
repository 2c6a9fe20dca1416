#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mcflab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Largest base dimension n and codimension k handled by the fixed-size kernels.
inline constexpr int kMaxDim = 4;

using GridIndex = std::array<int, kMaxDim>;

/// Map R^n -> R^k sampled by build_field.
using Generator = std::function<Vec(const Vec&)>;

/**
 * Uniform cube grid over [-L, L]^n carrying k-vector values.
 *
 * m = 2 round(L/h) + 1 points per axis, node i sits at (i - c) h with c the
 * center index, so the origin is always a node. Nodes are stored row-major
 * with axis 0 varying slowest, which is also lexicographic order.
 */
class GridSpec {
public:
    static GridSpec make(int n, int k, double half_width, double spacing);

    int n() const { return n_; }
    int k() const { return k_; }
    double half_width() const { return half_width_; }
    double spacing() const { return spacing_; }
    int points_per_axis() const { return m_; }
    int center() const { return (m_ - 1) / 2; }
    /// Half width actually covered by the nodes, c h.
    double extent() const { return center() * spacing_; }
    std::size_t node_count() const { return count_; }
    std::size_t stride(int axis) const { return strides_[axis]; }

    double coordinate(int i) const { return (i - center()) * spacing_; }
    GridIndex unflatten(std::size_t flat) const;
    std::size_t flatten(const GridIndex& idx) const;
    Vec point(std::size_t flat) const;

    /// Distance (in nodes) from the nearest face, minimum over axes.
    int depth(std::size_t flat) const;
    bool is_interior(std::size_t flat, int rings = 1) const { return depth(flat) >= rings; }
    /// Flat indices with depth >= rings, lexicographic.
    std::vector<std::size_t> interior_nodes(int rings = 1) const;

    bool operator==(const GridSpec&) const = default;

private:
    GridSpec() = default;
    int n_ = 0;
    int k_ = 0;
    double half_width_ = 0.0;
    double spacing_ = 0.0;
    int m_ = 0;
    std::size_t count_ = 0;
    std::array<std::size_t, kMaxDim> strides_{};
};

class GraphField {
public:
    GraphField(GridSpec spec, std::vector<double> values,
               std::optional<double> gradient_bound = std::nullopt);

    const GridSpec& spec() const { return spec_; }
    std::span<const double> values() const { return values_; }
    std::span<double> mutable_values() { return values_; }
    std::span<const double> value(std::size_t flat) const {
        return {values_.data() + flat * spec_.k(), static_cast<std::size_t>(spec_.k())};
    }
    Vec value_vec(std::size_t flat) const;

    const std::optional<double>& gradient_bound() const { return gradient_bound_; }
    void set_gradient_bound(std::optional<double> c0) { gradient_bound_ = c0; }

    bool operator==(const GraphField&) const = default;

private:
    GridSpec spec_;
    std::vector<double> values_;
    std::optional<double> gradient_bound_;
};

/// Outcome of checking a declared C0 against centered-difference gradients.
struct GradientBoundCheck {
    double measured = 0.0;      // max interior operator norm of Df
    std::optional<double> declared;
    bool within = true;         // measured <= declared + tolerance
    double tolerance = 0.0;
};
GradientBoundCheck check_gradient_bound(const GraphField& field);

struct JetSample {
    Vec point;                  // x, length n
    Vec value;                  // f(x), length k
    Mat gradient;               // k x n, row alpha = Df^alpha
    std::vector<Mat> hessian;   // k entries of n x n, symmetric
};

GraphField build_field(const GridSpec& spec, const Generator& generator,
                       std::optional<double> gradient_bound = std::nullopt);

/// Centered second-order jet. Throws BoundaryError within one node of a face.
JetSample jet_at(const GraphField& field, std::size_t flat);
JetSample jet_at(const GraphField& field, const GridIndex& idx);

/// Multilinear interpolation over the containing cell; DomainError outside the cube.
Vec interpolate(const GraphField& field, const Vec& x);

enum class SphereScheme { UniformAngle, Fibonacci, MonteCarlo };
std::string to_string(SphereScheme scheme);
SphereScheme sphere_scheme_from_string(const std::string& name);
SphereScheme default_sphere_scheme(int n);

/// Equal-weight quadrature on the sphere of radius r in R^n.
struct SphereSampling {
    int n = 0;
    double radius = 1.0;
    std::vector<Vec> nodes;
    std::vector<double> weights;
    SphereScheme scheme = SphereScheme::UniformAngle;
    std::uint64_t seed = 0;

    std::size_t size() const { return nodes.size(); }
    double total_weight() const;
};

/// Surface area of the radius-r sphere in R^n (n = 1 gives the two-point count 2).
double sphere_area(int n, double r);
double ball_volume(int n, double r);

/// n=1 {-r, r}; n=2 uniform angles; n=3 Fibonacci lattice; n>=4 seeded Gaussian
/// directions. The scheme must be compatible with n.
SphereSampling sphere_sampling(int n, double r, int count, SphereScheme scheme,
                               std::uint64_t seed = 0);
SphereSampling sphere_sampling(int n, double r, int count, std::uint64_t seed = 0);

struct QuadratureNode {
    std::size_t flat;
    Vec point;
    double weight;
};

/// Grid nodes with |x| <= R, weight h^n each, lexicographic.
std::vector<QuadratureNode> ball_quadrature_nodes(const GridSpec& spec, double radius);

} // namespace mcflab
