#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mcflab/gridfield.hpp"

namespace mcflab {

/**
 * Residuals of the soliton equation H + F^perp = 0 on interior nodes.
 *
 * parametric: r_par = H + Q F in R^{n+k}, (n+k) entries per node.
 * scalar:     r^alpha = g^ij D^2_ij f^alpha - x.Df^alpha + f^alpha, k entries per node.
 *
 * Pairing r_par with nu^alpha = (Df^alpha, -e_alpha) gives -r^alpha, so the
 * two vanish together.
 */
struct SolitonResidual {
    int n = 0;
    int k = 0;
    std::vector<std::size_t> nodes;
    std::vector<double> parametric;
    std::vector<double> scalar;
    double parametric_sup = 0.0;
    double scalar_sup = 0.0;
};

SolitonResidual residual_parametric(const GraphField& field);
SolitonResidual residual_scalar(const GraphField& field);
/// Both parts on the same node list.
SolitonResidual soliton_residual(const GraphField& field);

/// max over nodes and alpha of |<nu^alpha, r_par> + r^alpha|.
double equivalence_check(const GraphField& field);

/// Sup and L2 (h^n-weighted) norms of the scalar residual, fast path.
struct ResidualNorms {
    double sup = 0.0;
    double l2 = 0.0;
};
ResidualNorms scalar_residual_norms(const GraphField& field);

struct SolverConfig {
    double c_tau = 0.2;           // pseudo-time step factor, dtau = c_tau h^2
    double eps = 1e-8;            // stop when sup residual <= eps * initial sup
    double abs_tol = 0.0;         // absolute floor; 0 selects the rounding floor of the stencil
    long max_iters = 200000;
    double damping_initial = 1.0; // dtau multiplier at iteration 0
    long damping_ramp = 0;        // iterations to ramp the multiplier linearly to 1
    double divergence_factor = 10.0;

    /// Throws ValidationError; returns a warning for c_tau above the stable range.
    std::optional<std::string> validate() const;
};

struct SolverReport {
    long iterations = 0;
    std::vector<double> residual_sup;
    std::vector<double> residual_l2;
    std::vector<double> best_sup;  // running minimum of residual_sup
    bool converged = false;
    bool diverged = false;
    long best_iteration = 0;
    double target = 0.0;
    double final_c0 = 0.0;
    std::vector<std::string> warnings;
};

struct SolveResult {
    GraphField field;  // best iterate
    SolverReport report;
};

/// Nodes on the outer one-node band (depth 0), lexicographic.
std::vector<std::size_t> boundary_band(const GridSpec& spec);

/// Interior filled by multilinear interpolation of the boundary corner values, band exact.
GraphField boundary_extension(const GridSpec& spec, const Generator& boundary);

/**
 * Pseudo-time relaxation f <- f + dtau r_scalar(f) with the band frozen to
 * boundary(x). init must agree with boundary on the band.
 */
SolveResult solve_dirichlet(const GridSpec& spec, const Generator& boundary, const GraphField& init,
                            const SolverConfig& cfg);
SolveResult solve_dirichlet(const GridSpec& spec, const Generator& boundary, const SolverConfig& cfg);

} // namespace mcflab
