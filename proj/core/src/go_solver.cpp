#include "limbgo/go_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "limbgo/errors.hpp"

namespace limbgo {

namespace {

using GC = GeneralizedCoordinates;
using Jacobian3 = Eigen::Matrix<double, 3, GC::kTangentSize>;

std::size_t idx(Segment s) { return static_cast<std::size_t>(s); }

struct BoxConstraint {
    Joint joint;
    int angle;
    int tangent_index;
    double lower;
    double upper;
};

struct BallConstraint {
    Joint joint;
    int tangent_offset;
    Vec3 center;  // in the coordinate block
    double radius;
};

struct ConstraintSet {
    std::vector<BoxConstraint> boxes;
    std::vector<BallConstraint> balls;
};

ConstraintSet constraints_of(const KinematicModel& model) {
    ConstraintSet set;
    for (Joint j : kJoints) {
        const JointConstraint& c = model.joint(j).constraint;
        if (c.bounded_angle) {
            if (j == Joint::shoulder) {
                throw ConfigError("angle bounds on the shoulder are not supported (free 6-DOF joint)");
            }
            const int base = j == Joint::elbow ? GC::kElbowAngles : GC::kWristAngles;
            set.boxes.push_back({j, *c.bounded_angle, base + *c.bounded_angle, c.lower, c.upper});
        }
        if (c.max_dislocation) {
            switch (j) {
                case Joint::shoulder:
                    set.balls.push_back({j, GC::kShoulderOffset, model.joint(j).center_in_proximal,
                                         *c.max_dislocation});
                    break;
                case Joint::elbow:
                    set.balls.push_back({j, GC::kElbowTranslation, Vec3::Zero(), *c.max_dislocation});
                    break;
                case Joint::wrist:
                    set.balls.push_back({j, GC::kWristTranslation, Vec3::Zero(), *c.max_dislocation});
                    break;
            }
        }
    }
    return set;
}

double& angle_ref(GC& q, Joint j, int k) {
    return j == Joint::elbow ? q.elbow_angles(k) : q.wrist_angles(k);
}

double angle_of(const GC& q, Joint j, int k) {
    return j == Joint::elbow ? q.elbow_angles(k) : q.wrist_angles(k);
}

Vec3& block_ref(GC& q, Joint j) {
    switch (j) {
        case Joint::shoulder: return q.shoulder_offset;
        case Joint::elbow: return q.elbow_translation;
        case Joint::wrist: return q.wrist_translation;
    }
    return q.elbow_translation;
}

const Vec3& block_of(const GC& q, Joint j) { return block_ref(const_cast<GC&>(q), j); }

// Radial projection that never leaves the ball in floating point.
Vec3 project_ball(const Vec3& v, double radius) {
    const double n = v.norm();
    if (n <= radius) {
        return v;
    }
    Vec3 out = v * (radius / n);
    while (out.norm() > radius) {
        out *= 1.0 - std::numeric_limits<double>::epsilon();
    }
    return out;
}

struct ActiveSet {
    std::vector<int> fixed_coordinates;       // active boxes
    std::vector<std::pair<int, Vec3>> radial;  // active balls: offset, outward unit normal
};

constexpr double kBoundTolerance = 1e-12;

ActiveSet active_set(const ConstraintSet& cs, const GC& q, const Tangent& gradient) {
    ActiveSet active;
    for (const auto& b : cs.boxes) {
        const double a = angle_of(q, b.joint, b.angle);
        const double descent = -gradient(b.tangent_index);
        const double span = std::max(1.0, std::abs(b.upper - b.lower));
        if ((a <= b.lower + kBoundTolerance * span && descent < 0.0) ||
            (a >= b.upper - kBoundTolerance * span && descent > 0.0)) {
            active.fixed_coordinates.push_back(b.tangent_index);
        }
    }
    for (const auto& b : cs.balls) {
        const Vec3 v = block_of(q, b.joint) - b.center;
        const double n = v.norm();
        if (n >= b.radius * (1.0 - 1e-10) && n > 0.0) {
            const Vec3 normal = v / n;
            const double outward = -gradient.segment<3>(b.tangent_offset).dot(normal);
            if (outward > 0.0) {
                active.radial.emplace_back(b.tangent_offset, normal);
            }
        }
    }
    return active;
}

Tangent project_onto_cone(const ActiveSet& active, Tangent g) {
    for (int i : active.fixed_coordinates) {
        g(i) = 0.0;
    }
    for (const auto& [offset, normal] : active.radial) {
        const Vec3 block = g.segment<3>(offset);
        g.segment<3>(offset) = block - block.dot(normal) * normal;
    }
    return g;
}

void zero_frozen(Tangent& g, const std::bitset<GC::kTangentSize>& frozen) {
    for (int i = 0; i < GC::kTangentSize; ++i) {
        if (frozen.test(static_cast<std::size_t>(i))) {
            g(i) = 0.0;
        }
    }
}

// Orthonormal basis of the subspace the Gauss-Newton step may move in.
Eigen::MatrixXd free_basis(const ActiveSet& active, const std::bitset<GC::kTangentSize>& frozen) {
    std::vector<Eigen::Matrix<double, GC::kTangentSize, 1>> cols;
    std::bitset<GC::kTangentSize> handled = frozen;
    for (int i : active.fixed_coordinates) {
        handled.set(static_cast<std::size_t>(i));
    }
    for (const auto& [offset, normal] : active.radial) {
        Vec3 e1 = normal.unitOrthogonal();
        Vec3 e2 = normal.cross(e1);
        for (const Vec3& e : {e1, e2}) {
            Tangent col = Tangent::Zero();
            for (int k = 0; k < 3; ++k) {
                if (!frozen.test(static_cast<std::size_t>(offset + k))) {
                    col(offset + k) = e(k);
                }
            }
            if (col.norm() > 1e-12) {
                cols.push_back(col.normalized());
            }
        }
        for (int k = 0; k < 3; ++k) {
            handled.set(static_cast<std::size_t>(offset + k));
        }
    }
    for (int i = 0; i < GC::kTangentSize; ++i) {
        if (!handled.test(static_cast<std::size_t>(i))) {
            cols.push_back(Tangent::Unit(i));
        }
    }
    Eigen::MatrixXd z(GC::kTangentSize, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) {
        z.col(static_cast<Eigen::Index>(c)) = cols[c];
    }
    return z;
}

// Bound on the rounding noise of go_cost near q: every residual is the
// difference of two coordinates of size |observed|, so each term carries an
// error of order eps * |r| * |observed|.
double cost_evaluation_noise(const KinematicModel& model, const MarkerFrame& frame, const WeightingScheme& weights,
                             const Eigen::VectorXd& residuals) {
    double sum = 0.0;
    Eigen::Index row = 0;
    for (Segment s : kSegments) {
        const double sw = std::sqrt(weights[s]);
        for (const auto& m : model.segment(s).cluster) {
            if (!frame.has(m.name)) {
                continue;
            }
            sum += sw * residuals.segment<3>(row).norm() * frame.at(m.name).norm();
            row += 3;
        }
    }
    return 16.0 * std::numeric_limits<double>::epsilon() * sum;
}

}  // namespace

WeightingScheme compute_weights(const PerSegment<double>& segment_residuals, bool normalize) {
    WeightingScheme scheme;
    double sum = 0.0;
    for (std::size_t s = 0; s < kSegmentCount; ++s) {
        const double r = segment_residuals[s];
        if (!(r >= 0.0) || !std::isfinite(r)) {
            throw Error("segment residuals must be finite and non-negative");
        }
        scheme.weights[s] = 1.0 / std::max(r * r, kWeightResidualFloor);
        sum += scheme.weights[s];
    }
    if (normalize) {
        const double mean = sum / static_cast<double>(kSegmentCount);
        for (double& w : scheme.weights) {
            w /= mean;
        }
    }
    return scheme;
}

SegmentalFit segmental_fit(const KinematicModel& model, const MarkerFrame& frame) {
    SegmentalFit out;
    std::vector<Vec3> ref;
    std::vector<Vec3> cur;
    for (Segment s : kSegments) {
        ref.clear();
        cur.clear();
        for (const auto& m : model.segment(s).cluster) {
            if (frame.has(m.name)) {
                ref.push_back(m.local);
                cur.push_back(frame.at(m.name));
            }
        }
        try {
            const RigidFit fit = fit_rigid_transform(ref, cur);
            out.poses[idx(s)] = fit.pose;
            out.residuals[idx(s)] = fit.rms_residual;
        } catch (const DegenerateCluster& e) {
            throw DegenerateCluster(std::string(to_string(s)) + " cluster: " + e.what());
        }
    }
    return out;
}

ResidualJacobian go_residuals(const KinematicModel& model, const MarkerFrame& frame,
                              const WeightingScheme& weights, const GeneralizedCoordinates& q) {
    const SegmentPoses poses = segment_poses(model, q);
    const Mat3& r_trunk = poses[0].rotation.matrix();
    const Mat3& r_arm = poses[1].rotation.matrix();
    const Mat3& r_forearm = poses[2].rotation.matrix();
    const Mat3& r_hand = poses[3].rotation.matrix();

    const Vec3 shoulder_point = poses[0].apply(q.shoulder_offset);
    const Vec3 elbow_point = poses[1].apply(model.joint(Joint::elbow).center_in_proximal + q.elbow_translation);
    const Vec3 wrist_point =
        poses[2].apply(model.joint(Joint::wrist).center_in_proximal + q.wrist_translation);
    const auto elbow_d = compose_euler_derivatives(q.elbow_angles, model.sequence);
    const auto wrist_d = compose_euler_derivatives(q.wrist_angles, model.sequence);

    std::size_t count = 0;
    for (Segment s : kSegments) {
        for (const auto& m : model.segment(s).cluster) {
            count += frame.has(m.name) ? 1 : 0;
        }
    }

    ResidualJacobian out;
    out.residuals.resize(static_cast<Eigen::Index>(3 * count));
    out.jacobian.setZero(static_cast<Eigen::Index>(3 * count), GC::kTangentSize);

    Eigen::Index row = 0;
    for (Segment s : kSegments) {
        const double sw = std::sqrt(weights[s]);
        const int level = static_cast<int>(s);
        for (const auto& m : model.segment(s).cluster) {
            if (!frame.has(m.name)) {
                continue;
            }
            const Vec3 p = poses[idx(s)].apply(m.local);
            Jacobian3 j = Jacobian3::Zero();

            j.block<3, 3>(0, GC::kTrunkRotation) = -r_trunk * skew(r_trunk.transpose() * (p - poses[0].translation));
            j.block<3, 3>(0, GC::kTrunkTranslation) = Mat3::Identity();
            if (level >= 1) {
                j.block<3, 3>(0, GC::kShoulderRotation) = -r_arm * skew(r_arm.transpose() * (p - shoulder_point));
                j.block<3, 3>(0, GC::kShoulderOffset) = r_trunk;
            }
            if (level >= 2) {
                const Vec3 v = r_forearm.transpose() * (p - elbow_point);
                for (int k = 0; k < 3; ++k) {
                    j.col(GC::kElbowAngles + k) = r_arm * (elbow_d[static_cast<std::size_t>(k)] * v);
                }
                j.block<3, 3>(0, GC::kElbowTranslation) = r_arm;
            }
            if (level >= 3) {
                const Vec3 v = r_hand.transpose() * (p - wrist_point);
                for (int k = 0; k < 3; ++k) {
                    j.col(GC::kWristAngles + k) = r_forearm * (wrist_d[static_cast<std::size_t>(k)] * v);
                }
                j.block<3, 3>(0, GC::kWristTranslation) = r_forearm;
            }

            out.residuals.segment<3>(row) = sw * (p - frame.at(m.name));
            out.jacobian.middleRows<3>(row) = sw * j;
            row += 3;
        }
    }
    return out;
}

double go_cost(const KinematicModel& model, const MarkerFrame& frame, const WeightingScheme& weights,
               const GeneralizedCoordinates& q) {
    const SegmentPoses poses = segment_poses(model, q);
    double cost = 0.0;
    for (Segment s : kSegments) {
        double seg = 0.0;
        for (const auto& m : model.segment(s).cluster) {
            if (frame.has(m.name)) {
                seg += (poses[idx(s)].apply(m.local) - frame.at(m.name)).squaredNorm();
            }
        }
        cost += weights[s] * seg;
    }
    return cost;
}

Tangent go_gradient(const KinematicModel& model, const MarkerFrame& frame, const WeightingScheme& weights,
                    const GeneralizedCoordinates& q) {
    const ResidualJacobian rj = go_residuals(model, frame, weights, q);
    return 2.0 * rj.jacobian.transpose() * rj.residuals;
}

GeneralizedCoordinates project_to_constraints(const KinematicModel& model, const GeneralizedCoordinates& q) {
    if (!q.all_finite()) {
        throw InfeasibleStart("cannot project non-finite coordinates onto the joint constraints");
    }
    const ConstraintSet cs = constraints_of(model);
    GeneralizedCoordinates out = q;
    for (const auto& b : cs.boxes) {
        double& a = angle_ref(out, b.joint, b.angle);
        a = std::clamp(a, b.lower, b.upper);
    }
    for (const auto& b : cs.balls) {
        Vec3& v = block_ref(out, b.joint);
        v = b.center + project_ball(v - b.center, b.radius);
    }
    return out;
}

double constraint_violation(const KinematicModel& model, const GeneralizedCoordinates& q) {
    const ConstraintSet cs = constraints_of(model);
    double worst = 0.0;
    for (const auto& b : cs.boxes) {
        const double a = angle_of(q, b.joint, b.angle);
        const double scale = std::max({std::abs(b.lower), std::abs(b.upper), 1e-12});
        worst = std::max(worst, std::max({0.0, b.lower - a, a - b.upper}) / scale);
    }
    for (const auto& b : cs.balls) {
        const double n = (block_of(q, b.joint) - b.center).norm();
        worst = std::max(worst, std::max(0.0, n - b.radius) / std::max(b.radius, 1e-12));
    }
    return worst;
}

Tangent projected_gradient(const KinematicModel& model, const GeneralizedCoordinates& q, const Tangent& gradient) {
    const ConstraintSet cs = constraints_of(model);
    return project_onto_cone(active_set(cs, q, gradient), gradient);
}

SolveResult go_solve(const KinematicModel& model, const MarkerFrame& frame, const WeightingScheme& weights,
                     const GeneralizedCoordinates& q_init, const SolveOptions& options) {
    for (double w : weights.weights) {
        if (!(w > 0.0) || !std::isfinite(w)) {
            throw Error("segment weights must be positive and finite");
        }
    }
    const ConstraintSet cs = constraints_of(model);
    const auto& frozen = options.frozen;

    SolveResult result;
    GC q = project_to_constraints(model, q_init);
    SolveDiagnostics& diag = result.diagnostics;

    ResidualJacobian rj = go_residuals(model, frame, weights, q);
    double cost = rj.residuals.squaredNorm();
    if (options.record_costs) {
        diag.cost_history.push_back(cost);
    }

    for (int iter = 0;; ++iter) {
        Tangent g = 2.0 * rj.jacobian.transpose() * rj.residuals;
        zero_frozen(g, frozen);
        const ActiveSet active = active_set(cs, q, g);
        const Tangent pg = project_onto_cone(active, g);
        diag.projected_gradient_norm = pg.norm();
        diag.iterations = iter;
        if (diag.projected_gradient_norm <= options.gradient_tolerance * (1.0 + cost)) {
            diag.converged = true;
            break;
        }
        if (iter >= options.max_iterations) {
            diag.max_iterations_reached = true;
            break;
        }

        // Gauss-Newton step restricted to the free subspace.
        const Eigen::MatrixXd z = free_basis(active, frozen);
        const Eigen::MatrixXd jz = rj.jacobian * z;
        Eigen::MatrixXd h = jz.transpose() * jz;
        // Curvature of each active ball: the multiplier times the tangential identity.
        for (const auto& [offset, normal] : active.radial) {
            for (const auto& b : cs.balls) {
                if (b.tangent_offset != offset) {
                    continue;
                }
                const double nu = std::abs(g.segment<3>(offset).dot(normal)) / (2.0 * b.radius);
                const auto zb = z.middleRows(offset, 3);
                h += nu * (zb.transpose() * (Mat3::Identity() - normal * normal.transpose()) * zb);
            }
        }
        const Eigen::VectorXd b = -(jz.transpose() * rj.residuals);
        Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
        Tangent step = Tangent::Zero();
        if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
            step = z * ldlt.solve(b);
        }
        if (!step.allFinite() || step.dot(g) >= 0.0) {
            // Not a descent direction: damp towards steepest descent.
            h.diagonal().array() += 1e-6 * (1.0 + h.diagonal().maxCoeff());
            step = z * h.ldlt().solve(b);
        }
        if (!step.allFinite() || step.dot(g) >= 0.0) {
            step = -pg;
        }

        // Backtracking along the projection arc. Once the predicted decrease
        // drops below the cost's rounding noise, values can no longer rank
        // candidates; the full step is then taken if it stays within that noise.
        const double dg = step.dot(g);
        const double noise = cost_evaluation_noise(model, frame, weights, rj.residuals);
        double alpha = 1.0;
        bool accepted = false;
        GC candidate;
        double candidate_cost = cost;
        for (int k = 0; k < 60; ++k, alpha *= 0.5) {
            candidate = project_to_constraints(model, q.retract(alpha * step));
            candidate_cost = go_cost(model, frame, weights, candidate);
            const bool armijo = candidate_cost <= cost + 1e-4 * alpha * dg && (candidate_cost < cost || alpha == 1.0);
            const bool within_noise = alpha == 1.0 && -dg <= noise && candidate_cost <= cost + noise;
            if (armijo || within_noise) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            // Stalled at the floating-point floor above the gradient tolerance.
            diag.iterations = iter + 1;
            break;
        }
        q = candidate;
        rj = go_residuals(model, frame, weights, q);
        cost = rj.residuals.squaredNorm();
        if (options.record_costs) {
            diag.cost_history.push_back(cost);
        }
    }

    diag.final_cost = cost;
    diag.max_constraint_violation = constraint_violation(model, q);
    if (diag.converged && diag.max_constraint_violation > 1e-9) {
        diag.converged = false;
    }
    result.q = q;
    return result;
}

// ---------------------------------------------------------------------------

std::string_view to_string(SolveMode mode) { return mode == SolveMode::go ? "go" : "segmental"; }

SolveMode solve_mode_from_string(std::string_view name) {
    if (name == "go") {
        return SolveMode::go;
    }
    if (name == "segmental") {
        return SolveMode::segmental;
    }
    throw ConfigError("unknown solve mode '" + std::string(name) + "'");
}

std::size_t TrialSolution::failed_frames() const {
    return static_cast<std::size_t>(std::count_if(frames.begin(), frames.end(), [](const auto& f) { return !f.ok; }));
}

namespace {

void fill_from_poses(const KinematicModel& model, FrameSolution& out) {
    for (Joint j : kJoints) {
        const auto& jd = model.joint(j);
        const Pose& prox = out.poses[idx(jd.proximal)];
        const Pose& dist = out.poses[idx(jd.distal)];
        out.angles[static_cast<std::size_t>(j)] = joint_angles(model, prox, dist).angles;
        out.dislocations[static_cast<std::size_t>(j)] = dislocation(model, prox, dist, j);
    }
}

void fill_from_coordinates(const KinematicModel& model, const GC& q, FrameSolution& out) {
    out.poses = segment_poses(model, q);
    // Elbow and wrist angles are the optimised coordinates themselves.
    out.angles[0] = euler_angles(q.shoulder_rotation, model.sequence).angles;
    out.angles[1] = q.elbow_angles;
    out.angles[2] = q.wrist_angles;
    out.dislocations[0] = (q.shoulder_offset - model.joint(Joint::shoulder).center_in_proximal).norm();
    out.dislocations[1] = q.elbow_translation.norm();
    out.dislocations[2] = q.wrist_translation.norm();
}

PerSegment<double> trial_rms_residuals(const KinematicModel& model, const TrialRecording& trial) {
    PerSegment<double> sum{};
    std::size_t n = 0;
    for (const auto& frame : trial.frames) {
        try {
            const SegmentalFit fit = segmental_fit(model, frame);
            for (std::size_t s = 0; s < kSegmentCount; ++s) {
                sum[s] += fit.residuals[s] * fit.residuals[s];
            }
            ++n;
        } catch (const Error&) {
        }
    }
    for (double& v : sum) {
        v = n > 0 ? std::sqrt(v / static_cast<double>(n)) : 0.0;
    }
    return sum;
}

}  // namespace

TrialSolution solve_trial(const KinematicModel& model, const TrialRecording& trial, SolveMode mode,
                          const TrialSolveOptions& options) {
    TrialSolution out;
    out.mode = mode;
    out.frames.reserve(trial.frames.size());

    std::optional<WeightingScheme> constant_weights;
    if (mode == SolveMode::go && options.weights == WeightUpdate::trial_constant) {
        constant_weights = compute_weights(trial_rms_residuals(model, trial));
    }

    SolveOptions solver = options.solver;
    if (options.fix_trunk) {
        for (int i = 0; i < 6; ++i) {
            solver.frozen.set(static_cast<std::size_t>(GC::kTrunkRotation + i));
        }
    }

    std::optional<GC> previous;
    for (const MarkerFrame& frame : trial.frames) {
        FrameSolution fs;
        fs.time = frame.time;
        try {
            const SegmentalFit seg = segmental_fit(model, frame);
            fs.segment_residuals = seg.residuals;
            if (mode == SolveMode::segmental) {
                fs.poses = seg.poses;
                fill_from_poses(model, fs);
            } else {
                const WeightingScheme w = constant_weights ? *constant_weights : compute_weights(seg.residuals);
                GC init = previous ? *previous : project_to_constraints(model, coordinates_from_poses(model, seg.poses));
                if (options.fix_trunk) {
                    init.trunk = seg.poses[0];
                }
                SolveResult res = go_solve(model, frame, w, init, solver);
                fs.diagnostics = std::move(res.diagnostics);
                fill_from_coordinates(model, res.q, fs);
                previous = res.q;
            }
            fs.ok = true;
        } catch (const Error& e) {
            fs.ok = false;
            fs.error = e.what();
            previous.reset();
        }
        out.frames.push_back(std::move(fs));
    }
    return out;
}

}  // namespace limbgo
