#pragma once

#include <bitset>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "limbgo/limb_model.hpp"

namespace limbgo {

/// Per-segment scalar weights of the marker cost (1/mm^2).
struct WeightingScheme {
    PerSegment<double> weights{1.0, 1.0, 1.0, 1.0};

    double operator[](Segment s) const { return weights[static_cast<std::size_t>(s)]; }
};

/// Floor applied to squared residuals before inversion (mm^2).
inline constexpr double kWeightResidualFloor = 0.01;

/// weight_s = 1 / max(residual_s^2, 0.01 mm^2), rescaled to mean 1 when
/// `normalize` is set. The rescaling leaves the minimizer unchanged.
WeightingScheme compute_weights(const PerSegment<double>& segment_residuals, bool normalize = true);

struct SegmentalFit {
    SegmentPoses poses;
    PerSegment<double> residuals{};  // rms, mm
};

/// Independent least-squares fit of every cluster from its calibrated local
/// coordinates (the estimator without global optimisation). Uses whichever
/// cluster markers are present; throws DegenerateCluster below three.
SegmentalFit segmental_fit(const KinematicModel& model, const MarkerFrame& frame);

using Tangent = GeneralizedCoordinates::Tangent;

struct SolveOptions {
    int max_iterations = 200;
    /// Convergence: |projected gradient| <= tolerance * (1 + cost).
    double gradient_tolerance = 1e-8;
    /// Tangent coordinates held fixed at their initial value.
    std::bitset<GeneralizedCoordinates::kTangentSize> frozen;
    bool record_costs = false;
};

struct SolveDiagnostics {
    int iterations = 0;
    double final_cost = 0.0;
    double projected_gradient_norm = 0.0;
    /// Largest violation of any joint constraint, each normalized by its bound.
    double max_constraint_violation = 0.0;
    bool converged = false;
    bool max_iterations_reached = false;
    /// Iterate costs, starting with the projected initial point.
    std::vector<double> cost_history;
};

struct SolveResult {
    GeneralizedCoordinates q;
    SolveDiagnostics diagnostics;
};

/// Stacked weighted residuals sqrt(w_s) (predicted - observed) over the
/// present cluster markers, and their Jacobian with respect to the tangent
/// coordinates of `q`.
struct ResidualJacobian {
    Eigen::VectorXd residuals;
    Eigen::Matrix<double, Eigen::Dynamic, GeneralizedCoordinates::kTangentSize> jacobian;
};

ResidualJacobian go_residuals(const KinematicModel& model, const MarkerFrame& frame,
                              const WeightingScheme& weights, const GeneralizedCoordinates& q);

/// sum_s w_s sum_{m in s} |predict(q)_m - observed_m|^2
double go_cost(const KinematicModel& model, const MarkerFrame& frame, const WeightingScheme& weights,
               const GeneralizedCoordinates& q);

/// Gradient of go_cost with respect to the tangent coordinates.
Tangent go_gradient(const KinematicModel& model, const MarkerFrame& frame, const WeightingScheme& weights,
                    const GeneralizedCoordinates& q);

/// Clamps bounded joint angles and pulls joint translations radially back
/// into their balls. Throws InfeasibleStart for non-finite coordinates.
GeneralizedCoordinates project_to_constraints(const KinematicModel& model, const GeneralizedCoordinates& q);

double constraint_violation(const KinematicModel& model, const GeneralizedCoordinates& q);

/// Gradient projected onto the tangent cone of the feasible set at q
/// (components that would push an active constraint outward are removed).
Tangent projected_gradient(const KinematicModel& model, const GeneralizedCoordinates& q, const Tangent& gradient);

/// Weighted constrained least squares over the chain coordinates, solved by
/// a projected Gauss-Newton iteration with an active set on the box and
/// ball constraints and Armijo backtracking. Iterate costs never increase.
SolveResult go_solve(const KinematicModel& model, const MarkerFrame& frame, const WeightingScheme& weights,
                     const GeneralizedCoordinates& q_init, const SolveOptions& options = {});

// ---------------------------------------------------------------------------

enum class SolveMode { go, segmental };

std::string_view to_string(SolveMode mode);
SolveMode solve_mode_from_string(std::string_view name);

enum class WeightUpdate { per_frame, trial_constant };

struct TrialSolveOptions {
    SolveOptions solver;
    WeightUpdate weights = WeightUpdate::per_frame;
    /// Hold the trunk at its segmental fit instead of optimizing it.
    bool fix_trunk = false;
};

struct FrameSolution {
    double time = 0.0;
    bool ok = false;
    std::string error;
    PerJoint<Vec3> angles{};          // rad, model Euler sequence
    PerJoint<double> dislocations{};  // mm
    SegmentPoses poses;
    PerSegment<double> segment_residuals{};
    SolveDiagnostics diagnostics;
};

struct TrialSolution {
    SolveMode mode = SolveMode::go;
    std::vector<FrameSolution> frames;

    std::size_t failed_frames() const;
};

/// Frame 0 starts from the segmental fit projected onto the constraints;
/// later frames are warm-started from the previous solution. Per-frame
/// failures are recorded and processing continues.
TrialSolution solve_trial(const KinematicModel& model, const TrialRecording& trial, SolveMode mode,
                          const TrialSolveOptions& options = {});

}  // namespace limbgo
