#include "mcflab/gridfield.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "mcflab/error.hpp"

namespace mcflab {

namespace {

std::string describe_point(const Vec& x) {
    std::ostringstream os;
    os << '(';
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (i) os << ", ";
        os << x[i];
    }
    os << ')';
    return os.str();
}

double operator_norm(const Mat& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<Mat> svd(m);
    return svd.singularValues()(0);
}

} // namespace

GridSpec GridSpec::make(int n, int k, double half_width, double spacing) {
    if (n < 1 || n > kMaxDim) {
        throw ValidationError("grid dimension n must lie in [1, " + std::to_string(kMaxDim) + "]");
    }
    if (k < 1 || k > kMaxDim) {
        throw ValidationError("codimension k must lie in [1, " + std::to_string(kMaxDim) + "]");
    }
    if (!(half_width > 0.0) || !std::isfinite(half_width)) {
        throw ValidationError("half width L must be positive and finite");
    }
    if (!(spacing > 0.0) || !std::isfinite(spacing)) {
        throw ValidationError("spacing h must be positive and finite");
    }
    if (spacing > half_width) {
        throw ValidationError("spacing h must not exceed half width L");
    }
    GridSpec s;
    s.n_ = n;
    s.k_ = k;
    s.half_width_ = half_width;
    s.spacing_ = spacing;
    const long half = std::lround(half_width / spacing);
    s.m_ = static_cast<int>(2 * half + 1);
    std::size_t stride = 1;
    for (int d = n - 1; d >= 0; --d) {
        s.strides_[d] = stride;
        stride *= static_cast<std::size_t>(s.m_);
    }
    s.count_ = stride;
    return s;
}

GridIndex GridSpec::unflatten(std::size_t flat) const {
    GridIndex idx{};
    for (int d = 0; d < n_; ++d) {
        idx[d] = static_cast<int>(flat / strides_[d]);
        flat %= strides_[d];
    }
    return idx;
}

std::size_t GridSpec::flatten(const GridIndex& idx) const {
    std::size_t flat = 0;
    for (int d = 0; d < n_; ++d) flat += static_cast<std::size_t>(idx[d]) * strides_[d];
    return flat;
}

Vec GridSpec::point(std::size_t flat) const {
    const GridIndex idx = unflatten(flat);
    Vec x(n_);
    for (int d = 0; d < n_; ++d) x[d] = coordinate(idx[d]);
    return x;
}

int GridSpec::depth(std::size_t flat) const {
    const GridIndex idx = unflatten(flat);
    int depth = m_;
    for (int d = 0; d < n_; ++d) depth = std::min({depth, idx[d], m_ - 1 - idx[d]});
    return depth;
}

std::vector<std::size_t> GridSpec::interior_nodes(int rings) const {
    std::vector<std::size_t> out;
    for (std::size_t f = 0; f < count_; ++f) {
        if (depth(f) >= rings) out.push_back(f);
    }
    return out;
}

GraphField::GraphField(GridSpec spec, std::vector<double> values, std::optional<double> gradient_bound)
    : spec_(std::move(spec)), values_(std::move(values)), gradient_bound_(gradient_bound) {
    if (values_.size() != spec_.node_count() * static_cast<std::size_t>(spec_.k())) {
        throw ValidationError("field value count " + std::to_string(values_.size()) +
                              " does not match grid (" + std::to_string(spec_.node_count()) +
                              " nodes x k=" + std::to_string(spec_.k()) + ")");
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) {
            throw ValidationError("non-finite field value at node " +
                                  describe_point(spec_.point(i / spec_.k())));
        }
    }
    if (gradient_bound_ && !(*gradient_bound_ >= 0.0)) {
        throw ValidationError("gradient bound C0 must be nonnegative");
    }
}

Vec GraphField::value_vec(std::size_t flat) const {
    auto v = value(flat);
    return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

GradientBoundCheck check_gradient_bound(const GraphField& field) {
    GradientBoundCheck out;
    out.declared = field.gradient_bound();
    for (std::size_t f : field.spec().interior_nodes(1)) {
        out.measured = std::max(out.measured, operator_norm(jet_at(field, f).gradient));
    }
    if (out.declared) {
        out.tolerance = field.spec().spacing() * (1.0 + *out.declared);
        out.within = out.measured <= *out.declared + out.tolerance;
    }
    return out;
}

GraphField build_field(const GridSpec& spec, const Generator& generator,
                       std::optional<double> gradient_bound) {
    const int k = spec.k();
    std::vector<double> values(spec.node_count() * static_cast<std::size_t>(k));
    for (std::size_t f = 0; f < spec.node_count(); ++f) {
        const Vec x = spec.point(f);
        const Vec v = generator(x);
        if (v.size() != k) {
            throw ValidationError("generator returned " + std::to_string(v.size()) +
                                  " components, expected k=" + std::to_string(k));
        }
        for (int a = 0; a < k; ++a) {
            if (!std::isfinite(v[a])) {
                throw ValidationError("generator produced a non-finite value at node " +
                                      describe_point(x));
            }
            values[f * k + a] = v[a];
        }
    }
    return GraphField(spec, std::move(values), gradient_bound);
}

JetSample jet_at(const GraphField& field, const GridIndex& idx) {
    const GridSpec& spec = field.spec();
    const int n = spec.n();
    const int k = spec.k();
    const int m = spec.points_per_axis();
    for (int d = 0; d < n; ++d) {
        if (idx[d] < 1 || idx[d] > m - 2) {
            throw BoundaryError("jet requested on a boundary node along axis " + std::to_string(d), d);
        }
    }
    const std::size_t c = spec.flatten(idx);
    const double h = spec.spacing();
    const auto vals = field.values();
    auto at = [&](std::size_t flat, int a) { return vals[flat * k + a]; };

    JetSample jet;
    jet.point = spec.point(c);
    jet.value = field.value_vec(c);
    jet.gradient = Mat::Zero(k, n);
    jet.hessian.assign(static_cast<std::size_t>(k), Mat::Zero(n, n));
    for (int i = 0; i < n; ++i) {
        const std::size_t si = spec.stride(i);
        for (int a = 0; a < k; ++a) {
            const double fp = at(c + si, a);
            const double fm = at(c - si, a);
            jet.gradient(a, i) = (fp - fm) / (2.0 * h);
            jet.hessian[a](i, i) = (fp - 2.0 * at(c, a) + fm) / (h * h);
        }
        for (int j = i + 1; j < n; ++j) {
            const std::size_t sj = spec.stride(j);
            for (int a = 0; a < k; ++a) {
                const double cross = (at(c + si + sj, a) - at(c + si - sj, a) -
                                      at(c - si + sj, a) + at(c - si - sj, a)) /
                                     (4.0 * h * h);
                jet.hessian[a](i, j) = cross;
                jet.hessian[a](j, i) = cross;
            }
        }
    }
    return jet;
}

JetSample jet_at(const GraphField& field, std::size_t flat) {
    return jet_at(field, field.spec().unflatten(flat));
}

Vec interpolate(const GraphField& field, const Vec& x) {
    const GridSpec& spec = field.spec();
    const int n = spec.n();
    const int k = spec.k();
    if (x.size() != n) throw ValidationError("interpolation point has wrong dimension");
    const double ext = spec.extent();
    const double h = spec.spacing();
    const int m = spec.points_per_axis();

    double overshoot = 0.0;
    for (int d = 0; d < n; ++d) overshoot = std::max(overshoot, std::abs(x[d]) - ext);
    if (!(overshoot <= 0.0)) {
        throw DomainError("interpolation point " + describe_point(x) + " lies outside the grid cube by " +
                              std::to_string(overshoot),
                          overshoot);
    }

    GridIndex base{};
    std::array<double, kMaxDim> t{};
    for (int d = 0; d < n; ++d) {
        double u = (x[d] + ext) / h;
        // queries on a node reproduce the stored value exactly
        const double nearest = std::round(u);
        if (std::abs(u - nearest) <= 1e-10) u = nearest;
        int i = static_cast<int>(std::floor(u));
        i = std::clamp(i, 0, m - 2);
        base[d] = i;
        t[d] = u - i;
    }

    Vec out = Vec::Zero(k);
    const auto vals = field.values();
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
        const std::size_t f = spec.flatten(idx);
        for (int a = 0; a < k; ++a) out[a] += w * vals[f * k + a];
    }
    return out;
}

std::string to_string(SphereScheme scheme) {
    switch (scheme) {
    case SphereScheme::UniformAngle: return "uniform-angle";
    case SphereScheme::Fibonacci: return "fibonacci";
    case SphereScheme::MonteCarlo: return "monte-carlo";
    }
    return "unknown";
}

SphereScheme sphere_scheme_from_string(const std::string& name) {
    if (name == "uniform-angle") return SphereScheme::UniformAngle;
    if (name == "fibonacci") return SphereScheme::Fibonacci;
    if (name == "monte-carlo") return SphereScheme::MonteCarlo;
    throw ValidationError("unknown sphere scheme '" + name + "'");
}

SphereScheme default_sphere_scheme(int n) {
    if (n <= 2) return SphereScheme::UniformAngle;
    if (n == 3) return SphereScheme::Fibonacci;
    return SphereScheme::MonteCarlo;
}

double SphereSampling::total_weight() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
}

double sphere_area(int n, double r) {
    if (n == 1) return 2.0;
    const double unit = 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
    return unit * std::pow(r, n - 1);
}

double ball_volume(int n, double r) {
    return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0) * std::pow(r, n);
}

SphereSampling sphere_sampling(int n, double r, int count, SphereScheme scheme, std::uint64_t seed) {
    if (n < 1) throw ValidationError("sphere sampling needs n >= 1");
    if (count < 2) throw ValidationError("sphere sampling needs count >= 2");
    if (!(r > 0.0)) throw ValidationError("sphere radius must be positive");

    SphereSampling s;
    s.n = n;
    s.radius = r;
    s.scheme = scheme;
    s.seed = seed;
    s.nodes.reserve(count);

    auto unsupported = [&] {
        return ValidationError("sphere scheme " + to_string(scheme) + " does not support n=" +
                               std::to_string(n) + " with count=" + std::to_string(count));
    };

    if (n == 1) {
        if (scheme != SphereScheme::UniformAngle || count != 2) throw unsupported();
        s.nodes.push_back(Vec::Constant(1, -r));
        s.nodes.push_back(Vec::Constant(1, r));
    } else if (scheme == SphereScheme::UniformAngle) {
        if (n != 2) throw unsupported();
        for (int j = 0; j < count; ++j) {
            const double theta = 2.0 * std::numbers::pi * j / count;
            Vec x(2);
            x << r * std::cos(theta), r * std::sin(theta);
            s.nodes.push_back(x);
        }
    } else if (scheme == SphereScheme::Fibonacci) {
        if (n != 3) throw unsupported();
        const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
        for (int j = 0; j < count; ++j) {
            const double z = 1.0 - (2.0 * j + 1.0) / count;
            const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double phi = golden * j;
            Vec x(3);
            x << rho * std::cos(phi), rho * std::sin(phi), z;
            s.nodes.push_back(r * x / x.norm());
        }
    } else {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (int j = 0; j < count; ++j) {
            Vec x(n);
            double norm = 0.0;
            do {
                for (int d = 0; d < n; ++d) x[d] = normal(rng);
                norm = x.norm();
            } while (norm < 1e-12);
            s.nodes.push_back(r * x / norm);
        }
    }

    const double w = sphere_area(n, r) / count;
    s.weights.assign(static_cast<std::size_t>(count), w);
    return s;
}

SphereSampling sphere_sampling(int n, double r, int count, std::uint64_t seed) {
    return sphere_sampling(n, r, count, default_sphere_scheme(n), seed);
}

std::vector<QuadratureNode> ball_quadrature_nodes(const GridSpec& spec, double radius) {
    if (radius < 0.0) throw ValidationError("ball radius must be nonnegative");
    if (radius > spec.extent() * (1.0 + 1e-12)) {
        throw ValidationError("ball radius " + std::to_string(radius) + " exceeds grid half width " +
                              std::to_string(spec.extent()));
    }
    const double w = std::pow(spec.spacing(), spec.n());
    const double r2 = radius * radius * (1.0 + 1e-12);
    std::vector<QuadratureNode> out;
    for (std::size_t f = 0; f < spec.node_count(); ++f) {
        Vec x = spec.point(f);
        if (x.squaredNorm() <= r2) out.push_back({f, std::move(x), w});
    }
    return out;
}

} // namespace mcflab
