#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mcflab/gridfield.hpp"

namespace mcflab {

enum class BoundaryPolicy { Frozen, LinearExtrapolation };
std::string to_string(BoundaryPolicy policy);
BoundaryPolicy boundary_policy_from_string(const std::string& name);

struct FlowConfig {
    double cfl = 0.2;  // dt = cfl h^2; the rescaled stepper uses ds = cfl h^2 / 2
    double t_end = 1.0;
    BoundaryPolicy boundary = BoundaryPolicy::Frozen;
    std::vector<double> snapshots;  // times t at which states are kept

    std::optional<std::string> validate() const;
};

/// Geometric snapshot times t0, 2 t0, 4 t0, ... up to and including t_end.
std::vector<double> geometric_snapshots(double t0, double t_end);

struct FlowState {
    GraphField field;
    double t = 0.0;
    long steps = 0;
};

/// t = e^{2s}.
struct RescaledFlowState {
    GraphField field;
    double s = 0.0;
    double t = 1.0;
    long steps = 0;
    std::vector<bool> missing;  // nodes without data (normalize_snapshots only)
};

RescaledFlowState make_rescaled_state(GraphField field, double s);

/// Explicit Euler for df/dt = g^ij D^2_ij f on interior nodes.
FlowState mcf_step(const FlowState& state, const FlowConfig& cfg);
FlowState mcf_step(const FlowState& state, const FlowConfig& cfg, double dt);

/// Explicit Euler for df/ds = 2 g^ij D^2_ij f + x.Df - f on interior nodes.
RescaledFlowState rescaled_step(const RescaledFlowState& state, const FlowConfig& cfg);
RescaledFlowState rescaled_step(const RescaledFlowState& state, const FlowConfig& cfg, double ds);

/// Advances to cfg.t_end, landing exactly on every snapshot time. Returns the
/// states at the snapshot times (the initial state is included when t0 is listed).
std::vector<FlowState> run_flow(const FlowState& initial, const FlowConfig& cfg);

/// Rescaled run; cfg.t_end and cfg.snapshots are underlying times t = e^{2s}.
std::vector<RescaledFlowState> run_rescaled(const RescaledFlowState& initial, const FlowConfig& cfg);

/// f_hat(x, s) = t^{-1/2} f(sqrt(t) x, t), s = log(t)/2, on the target grid
/// (default: each snapshot's own grid). Queries outside the snapshot cube are
/// marked missing.
std::vector<RescaledFlowState> normalize_snapshots(const std::vector<FlowState>& snapshots,
                                                   std::optional<GridSpec> target = std::nullopt);

/// Sup-norm distance over nodes present in both states, optionally within |x| <= radius.
double sup_distance(const RescaledFlowState& a, const RescaledFlowState& b,
                    std::optional<double> radius = std::nullopt);

/// Diagnostics of one state: sup |Df| and sup of the soliton and expander residuals.
struct FlowDiagnostics {
    double sup_gradient = 0.0;
    double soliton_residual = 0.0;   // g D^2 f - x.Df + f
    double expander_residual = 0.0;  // 2 g D^2 f + x.Df - f
};
FlowDiagnostics flow_diagnostics(const GraphField& field);

struct ScalingInvarianceResult {
    double defect = 0.0;
    double dt = 0.0;  // step of the unscaled run
    double h = 0.0;
    long steps = 0;
    std::size_t nodes_compared = 0;
};

/**
 * Evolves f0 on (L, h) to t_end and x -> f0(lambda x)/lambda on (L/lambda,
 * h/lambda) to t_end/lambda^2, then compares f(lambda x)/lambda with the
 * second run on the shared node set.
 */
ScalingInvarianceResult scaling_invariance_test(const Generator& f0, const GridSpec& spec, double lambda,
                                                const FlowConfig& cfg);

} // namespace mcflab
