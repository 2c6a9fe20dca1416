#pragma once

// Allocation-free centered-difference kernel for the hot loops of the
// soliton solver and the flow steppers. Works on raw node-major value arrays
// so two buffers can alternate without rebuilding a GraphField.

#include <array>
#include <cmath>
#include <cstddef>

#include "mcflab/gridfield.hpp"

namespace mcflab::detail {

struct LocalJet {
    int n = 0;
    int k = 0;
    std::array<double, kMaxDim> x{};
    std::array<double, kMaxDim> f{};
    std::array<std::array<double, kMaxDim>, kMaxDim> grad{};  // [alpha][i]
    std::array<std::array<std::array<double, kMaxDim>, kMaxDim>, kMaxDim> hess{};  // [alpha][i][j]
    std::array<std::array<double, kMaxDim>, kMaxDim> ginv{};

    /// g^ij D^2_ij f^alpha
    double trace_term(int a) const {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) s += ginv[i][j] * hess[a][i][j];
        return s;
    }
    /// x . D f^alpha
    double drift_term(int a) const {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += x[i] * grad[a][i];
        return s;
    }
    /// Operator norm squared is bounded by this Frobenius norm squared.
    double grad_frobenius2() const {
        double s = 0.0;
        for (int a = 0; a < k; ++a)
            for (int i = 0; i < n; ++i) s += grad[a][i] * grad[a][i];
        return s;
    }
};

class StencilKernel {
public:
    explicit StencilKernel(const GridSpec& spec) : spec_(spec), h_(spec.spacing()) {}

    const GridSpec& spec() const { return spec_; }

    /// Fills x, f, gradient, hessian and the inverse metric at an interior node.
    void evaluate(const double* values, std::size_t flat, LocalJet& jet) const {
        const int n = spec_.n();
        const int k = spec_.k();
        jet.n = n;
        jet.k = k;
        const GridIndex idx = spec_.unflatten(flat);
        for (int d = 0; d < n; ++d) jet.x[d] = spec_.coordinate(idx[d]);
        const double inv2h = 1.0 / (2.0 * h_);
        const double invh2 = 1.0 / (h_ * h_);
        const double inv4h2 = 1.0 / (4.0 * h_ * h_);
        const double* c = values + flat * k;
        for (int a = 0; a < k; ++a) jet.f[a] = c[a];
        for (int i = 0; i < n; ++i) {
            const auto si = static_cast<std::ptrdiff_t>(spec_.stride(i)) * k;
            const double* p = c + si;
            const double* m = c - si;
            for (int a = 0; a < k; ++a) {
                jet.grad[a][i] = (p[a] - m[a]) * inv2h;
                jet.hess[a][i][i] = (p[a] - 2.0 * c[a] + m[a]) * invh2;
            }
            for (int j = i + 1; j < n; ++j) {
                const auto sj = static_cast<std::ptrdiff_t>(spec_.stride(j)) * k;
                const double* pp = c + si + sj;
                const double* pm = c + si - sj;
                const double* mp = c - si + sj;
                const double* mm = c - si - sj;
                for (int a = 0; a < k; ++a) {
                    const double v = (pp[a] - pm[a] - mp[a] + mm[a]) * inv4h2;
                    jet.hess[a][i][j] = v;
                    jet.hess[a][j][i] = v;
                }
            }
        }
        invert_metric(jet);
    }

private:
    // Cholesky of g = I + Df^T Df followed by a triangular inverse.
    static void invert_metric(LocalJet& jet) {
        const int n = jet.n;
        double g[kMaxDim][kMaxDim];
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double s = (i == j) ? 1.0 : 0.0;
                for (int a = 0; a < jet.k; ++a) s += jet.grad[a][i] * jet.grad[a][j];
                g[i][j] = s;
            }
        double L[kMaxDim][kMaxDim] = {};
        for (int j = 0; j < n; ++j) {
            double d = g[j][j];
            for (int p = 0; p < j; ++p) d -= L[j][p] * L[j][p];
            L[j][j] = std::sqrt(d);
            for (int i = j + 1; i < n; ++i) {
                double s = g[i][j];
                for (int p = 0; p < j; ++p) s -= L[i][p] * L[j][p];
                L[i][j] = s / L[j][j];
            }
        }
        double Linv[kMaxDim][kMaxDim] = {};
        for (int i = 0; i < n; ++i) {
            Linv[i][i] = 1.0 / L[i][i];
            for (int j = 0; j < i; ++j) {
                double s = 0.0;
                for (int p = j; p < i; ++p) s -= L[i][p] * Linv[p][j];
                Linv[i][j] = s / L[i][i];
            }
        }
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                double s = 0.0;
                for (int p = j; p < n; ++p) s += Linv[p][i] * Linv[p][j];
                jet.ginv[i][j] = s;
                jet.ginv[j][i] = s;
            }
    }

    GridSpec spec_;
    double h_;
};

} // namespace mcflab::detail
