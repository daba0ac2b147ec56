#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "frozen.hpp"
#include "oracles.hpp"
#include "random_q.hpp"
#include "slice_cases.hpp"
#include "limbgo/errors.hpp"
#include "limbgo/go_solver.hpp"
#include "limbgo/sim_study.hpp"
#include "limbgo/trial_io.hpp"

using namespace limbgo;
using GC = GeneralizedCoordinates;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

const SyntheticSubject& subject() {
    static const SyntheticSubject s = make_synthetic_subject();
    return s;
}

const KinematicModel& model() {
    static const KinematicModel m = calibrate_subject(subject()).model;
    return m;
}

MarkerFrame noisy(const MarkerFrame& f, std::uint64_t seed, double sigma) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, sigma);
    MarkerFrame out = f;
    for (auto& [name, x] : out.positions) x += Vec3(n(rng), n(rng), n(rng));
    return out;
}

double distance(const GC& a, const GC& b) {
    double d = a.trunk.rotation.angle_to(b.trunk.rotation);
    d = std::max(d, (a.trunk.translation - b.trunk.translation).norm());
    d = std::max(d, a.shoulder_rotation.angle_to(b.shoulder_rotation));
    d = std::max(d, (a.shoulder_offset - b.shoulder_offset).norm());
    d = std::max(d, (a.elbow_angles - b.elbow_angles).norm());
    d = std::max(d, (a.elbow_translation - b.elbow_translation).norm());
    d = std::max(d, (a.wrist_angles - b.wrist_angles).norm());
    d = std::max(d, (a.wrist_translation - b.wrist_translation).norm());
    return d;
}

GC initial_guess(const MarkerFrame& f) {
    return project_to_constraints(model(), coordinates_from_poses(model(), segmental_fit(model(), f).poses));
}

}  // namespace

TEST(SegmentalFit, NoiseFreeMatchesForwardKinematics) {
    std::mt19937_64 rng(1);
    const GC q = instances::random_feasible(model(), static_coordinates(model()), rng);
    const SegmentalFit fit = segmental_fit(model(), predict_markers(model(), q));
    const SegmentPoses poses = segment_poses(model(), q);
    for (std::size_t s = 0; s < kSegmentCount; ++s) {
        EXPECT_LT(fit.poses[s].rotation.angle_to(poses[s].rotation), 1e-9);
        EXPECT_LT((fit.poses[s].translation - poses[s].translation).norm(), 1e-9);
        EXPECT_LT(fit.residuals[s], 1e-9);
    }
}

TEST(SegmentalFit, ArtefactRaisesOnlyThatResidual) {
    MarkerFrame f = noisy(predict_markers(model(), static_coordinates(model())), 5, 0.615);
    f.positions.at("ARM1") += Vec3(12, -8, 5);
    f.positions.at("ARM2") += Vec3(-10, 4, 9);
    const SegmentalFit fit = segmental_fit(model(), f);
    for (Segment s : {Segment::trunk, Segment::forearm, Segment::hand}) {
        EXPECT_LT(fit.residuals[static_cast<std::size_t>(s)], 1.5);
        EXPECT_GT(fit.residuals[1], 3.0 * fit.residuals[static_cast<std::size_t>(s)]);
    }
}

TEST(SegmentalFit, TwoMarkerClusterIsDegenerate) {
    MarkerFrame f = predict_markers(model(), static_coordinates(model()));
    f.positions.erase("ARM1");
    EXPECT_NO_THROW(segmental_fit(model(), f));
    f.positions.erase("ARM3");
    EXPECT_THROW(segmental_fit(model(), f), DegenerateCluster);
}

TEST(Weights, Examples) {
    const WeightingScheme equal = compute_weights({0.7, 0.7, 0.7, 0.7});
    for (double w : equal.weights) EXPECT_DOUBLE_EQ(w, 1.0);

    const WeightingScheme raw = compute_weights({1.0, 2.0, 1.0, 1.0}, false);
    EXPECT_DOUBLE_EQ(raw.weights[0] / raw.weights[1], 4.0);
    const WeightingScheme norm = compute_weights({1.0, 2.0, 1.0, 1.0});
    EXPECT_DOUBLE_EQ(norm.weights[0] / norm.weights[1], 4.0);
    EXPECT_NEAR((norm.weights[0] + norm.weights[1] + norm.weights[2] + norm.weights[3]) / 4.0, 1.0, 1e-15);

    const WeightingScheme floored = compute_weights({0.0, 1.0, 1.0, 1.0}, false);
    EXPECT_DOUBLE_EQ(floored.weights[0], 100.0);
    EXPECT_THROW(compute_weights({-1.0, 1.0, 1.0, 1.0}), Error);
}

TEST(GoSolve, NoiseFreeRecoversTruth) {
    std::mt19937_64 rng(2);
    for (int k = 0; k < 10; ++k) {
        const GC truth = instances::random_feasible(model(), static_coordinates(model()), rng);
        const MarkerFrame f = predict_markers(model(), truth);
        const SolveResult r = go_solve(model(), f, WeightingScheme{}, initial_guess(noisy(f, 50 + k, 2.0)));
        EXPECT_TRUE(r.diagnostics.converged);
        EXPECT_LT(distance(r.q, truth), 1e-6);
        EXPECT_LT(r.diagnostics.final_cost, 1e-12);
    }
}

TEST(GoSolve, AbductionPushedToBound) {
    GC q = static_coordinates(model());
    q.elbow_angles(1) = 5.0 * kDeg;
    const MarkerFrame f = predict_markers(model(), q);
    const SegmentalFit seg = segmental_fit(model(), f);
    ASSERT_NEAR(joint_angles(model(), seg.poses[1], seg.poses[2]).angles(1), 5.0 * kDeg, 1e-9);
    const SolveResult r = go_solve(model(), f, compute_weights(seg.residuals), initial_guess(f));
    EXPECT_TRUE(r.diagnostics.converged);
    EXPECT_GE(r.q.elbow_angles(1), -1.0 * kDeg);
    EXPECT_LE(r.q.elbow_angles(1), 1.0 * kDeg);
    EXPECT_EQ(r.q.elbow_angles(1), 1.0 * kDeg);
    const SegmentPoses p = segment_poses(model(), r.q);
    EXPECT_LE(joint_angles(model(), p[1], p[2]).angles(1), 1.0 * kDeg + 1e-12);
}

TEST(GoSolve, DislocationPulledInsideBall) {
    GC q = static_coordinates(model());
    q.elbow_translation = Vec3(3.0, -4.0, 5.0).normalized() * 8.0;
    const MarkerFrame f = predict_markers(model(), q);
    const SegmentalFit seg = segmental_fit(model(), f);
    ASSERT_NEAR(dislocation(model(), seg.poses[1], seg.poses[2], Joint::elbow), 8.0, 1e-9);
    const SolveResult r = go_solve(model(), f, compute_weights(seg.residuals), initial_guess(f));
    EXPECT_TRUE(r.diagnostics.converged);
    EXPECT_LE(r.q.elbow_translation.norm(), 2.0);
    const SegmentPoses p = segment_poses(model(), r.q);
    EXPECT_LE(dislocation(model(), p[1], p[2], Joint::elbow), 2.0 + 1e-12);
}

TEST(GoSolve, ElbowSliceMatchesFrozenOracle) {
    const auto cases = instances::slice_cases();
    // The frames themselves are frozen too.
    EXPECT_EQ(trial_csv(cases.frames), fixtures::slurp(fixtures::data_dir() / "oracles" / "slice_frames.csv"));
    const auto rows = fixtures::read_table(fixtures::data_dir() / "oracles" / "elbow_slice.csv");
    ASSERT_EQ(rows.size(), 20u);
    SolveOptions o;
    o.frozen = instances::elbow_slice_mask();
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto& c = cases.cases[k];
        GC start = c.truth;
        start.elbow_angles(0) += 0.2;
        start.elbow_angles(1) = -0.9 * kDeg;
        const SolveResult r = go_solve(cases.model, c.frame, c.weights, start, o);
        EXPECT_TRUE(r.diagnostics.converged) << "case " << k;
        EXPECT_NEAR(r.q.elbow_angles(0), rows[k][1], 1e-7) << "case " << k;
        EXPECT_NEAR(r.q.elbow_angles(1), rows[k][2], 1e-7) << "case " << k;
        EXPECT_LE(r.diagnostics.final_cost, rows[k][3] * (1 + 1e-12));
        // Everything outside the slice stayed put.
        GC frozen_part = r.q;
        frozen_part.elbow_angles.head<2>() = c.truth.elbow_angles.head<2>();
        EXPECT_EQ(distance(frozen_part, c.truth), 0.0);
    }
}

TEST(GoSolve, FullSolutionIsOptimalOnElbowSlice) {
    const auto cases = instances::slice_cases();
    for (std::size_t k = 0; k < cases.cases.size(); k += 4) {
        const auto& c = cases.cases[k];
        const SolveResult r = go_solve(cases.model, c.frame, c.weights, initial_guess(c.frame));
        ASSERT_TRUE(r.diagnostics.converged);
        const auto o = oracle::elbow_slice(cases.model, c.frame, c.weights, r.q, 0.1);
        EXPECT_NEAR(r.q.elbow_angles(0), o.flexion, 1e-6) << "case " << k;
        EXPECT_NEAR(r.q.elbow_angles(1), o.abduction, 1e-6) << "case " << k;
    }
}

TEST(GoSolve, GradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(3);
    for (int k = 0; k < 5; ++k) {
        const GC truth = instances::random_feasible(model(), static_coordinates(model()), rng);
        const MarkerFrame f = noisy(predict_markers(model(), truth), 70 + k, 3.0);
        const GC q = instances::random_feasible(model(), truth, rng);
        const WeightingScheme w = compute_weights({0.6, 4.0, 1.2, 0.8});
        const Tangent g = go_gradient(model(), f, w, q);
        Tangent fd;
        for (int i = 0; i < GC::kTangentSize; ++i) {
            Tangent d = Tangent::Zero();
            d(i) = 1e-6;
            const double plus = go_cost(model(), f, w, q.retract(d));
            d(i) = -1e-6;
            const double minus = go_cost(model(), f, w, q.retract(d));
            fd(i) = (plus - minus) / 2e-6;
        }
        EXPECT_LT((fd - g).norm(), 1e-5 * g.norm()) << "sample " << k;
        // Residuals and cost agree.
        EXPECT_NEAR(go_residuals(model(), f, w, q).residuals.squaredNorm(), go_cost(model(), f, w, q),
                    1e-12 * go_cost(model(), f, w, q));
    }
}

TEST(GoSolve, CostsNeverIncrease) {
    const StudyConfig config;
    const SimulatedTrial trial = simulate_trial(config, subject(), 2);
    SolveOptions o;
    o.record_costs = true;
    for (std::size_t k = 0; k < trial.recording.frames.size(); k += 7) {
        const MarkerFrame& f = trial.recording.frames[k];
        const SolveResult r =
            go_solve(model(), f, compute_weights(segmental_fit(model(), f).residuals), initial_guess(f), o);
        const auto& h = r.diagnostics.cost_history;
        ASSERT_FALSE(h.empty());
        for (std::size_t i = 1; i < h.size(); ++i) EXPECT_LE(h[i], h[i - 1] + 1e-9 * (1.0 + h[i - 1]));
        EXPECT_LE(h.back(), h.front());
        EXPECT_EQ(h.back(), r.diagnostics.final_cost);
    }
}

TEST(GoSolve, ConvergedOutputIsFeasibleAndStationary) {
    const StudyConfig config;
    const SimulatedTrial trial = simulate_trial(config, subject(), 4);
    for (std::size_t k = 0; k < trial.recording.frames.size(); k += 5) {
        const MarkerFrame& f = trial.recording.frames[k];
        const WeightingScheme w = compute_weights(segmental_fit(model(), f).residuals);
        const SolveResult r = go_solve(model(), f, w, initial_guess(f));
        ASSERT_TRUE(r.diagnostics.converged) << "frame " << k;
        EXPECT_EQ(constraint_violation(model(), r.q), 0.0);
        const double cost = go_cost(model(), f, w, r.q);
        EXPECT_LE(projected_gradient(model(), r.q, go_gradient(model(), f, w, r.q)).norm(), 1e-8 * (1.0 + cost));
        EXPECT_LE(std::abs(r.q.elbow_angles(1)), 1.0 * kDeg);
        EXPECT_LE(std::abs(r.q.wrist_angles(2)), 1.0 * kDeg);
        EXPECT_LE(r.q.elbow_translation.norm(), 2.0);
        EXPECT_LE(r.q.wrist_translation.norm(), 2.0);
    }
}

TEST(GoSolve, WeightScaleInvariance) {
    const StudyConfig config;
    const SimulatedTrial trial = simulate_trial(config, subject(), 5);
    for (std::size_t k = 0; k < trial.recording.frames.size(); k += 20) {
        const MarkerFrame& f = trial.recording.frames[k];
        WeightingScheme w = compute_weights(segmental_fit(model(), f).residuals);
        const SolveResult a = go_solve(model(), f, w, initial_guess(f));
        for (double& x : w.weights) x *= 37.5;
        const SolveResult b = go_solve(model(), f, w, initial_guess(f));
        ASSERT_TRUE(a.diagnostics.converged && b.diagnostics.converged);
        EXPECT_LT(distance(a.q, b.q), 1e-6) << "frame " << k;
    }
}

TEST(GoSolve, IterationCapIsFlagged) {
    const StudyConfig config;
    const SimulatedTrial trial = simulate_trial(config, subject(), 1);
    const MarkerFrame& f = trial.recording.frames[25];
    SolveOptions o;
    o.max_iterations = 1;
    const SolveResult r = go_solve(model(), f, compute_weights(segmental_fit(model(), f).residuals), initial_guess(f), o);
    EXPECT_FALSE(r.diagnostics.converged);
    EXPECT_TRUE(r.diagnostics.max_iterations_reached);
    EXPECT_EQ(r.diagnostics.iterations, 1);
}

TEST(GoSolve, ProjectsInfeasibleStartAndRejectsNonFinite) {
    GC q = static_coordinates(model());
    q.wrist_angles(2) = 0.4;
    q.wrist_translation = Vec3(0, 0, 10);
    const GC p = project_to_constraints(model(), q);
    EXPECT_EQ(p.wrist_angles(2), 1.0 * kDeg);
    EXPECT_LE(p.wrist_translation.norm(), 2.0);
    EXPECT_EQ(constraint_violation(model(), p), 0.0);
    EXPECT_GT(constraint_violation(model(), q), 1.0);
    q.elbow_angles(0) = std::nan("");
    EXPECT_THROW(project_to_constraints(model(), q), InfeasibleStart);
}

TEST(SolveTrial, StaticReplay) {
    TrialRecording rec;
    for (int k = 0; k < 10; ++k) {
        MarkerFrame f = subject().static_frame;
        f.time = rec.time_at(static_cast<std::size_t>(k));
        rec.frames.push_back(f);
    }
    const SegmentPoses& sp = model().static_posture;
    for (SolveMode mode : {SolveMode::go, SolveMode::segmental}) {
        const TrialSolution sol = solve_trial(model(), rec, mode);
        ASSERT_EQ(sol.frames.size(), 10u);
        EXPECT_EQ(sol.failed_frames(), 0u);
        for (const auto& fs : sol.frames) {
            for (Joint j : kJoints) {
                const auto& jd = model().joint(j);
                const Vec3 expected = joint_angles(model(), sp[static_cast<std::size_t>(jd.proximal)],
                                                   sp[static_cast<std::size_t>(jd.distal)])
                                          .angles;
                EXPECT_LT((fs.angles[static_cast<std::size_t>(j)] - expected).norm(), 1e-9);
                EXPECT_LT(fs.dislocations[static_cast<std::size_t>(j)], 1e-9);
            }
        }
    }
}

TEST(SolveTrial, NoiseFreeShoulderRotationCurve) {
    const GroundTruth truth =
        generate_ground_truth(subject(), movement_profile(subject(), Movement::shoulder_rotation));
    const MovementProfile profile = movement_profile(subject(), Movement::shoulder_rotation);
    const TrialSolution go = solve_trial(model(), truth.recording, SolveMode::go);
    const TrialSolution seg = solve_trial(model(), truth.recording, SolveMode::segmental);
    for (std::size_t k = 0; k < truth.recording.frames.size(); ++k) {
        const double t = truth.recording.time_at(k);
        const double expected = wrap_angle(profile.initial_angle + std::numbers::pi / 3 * std::sin(std::numbers::pi * t));
        EXPECT_NEAR(wrap_angle(go.frames[k].angles[0](2) - expected), 0.0, 1e-5) << "frame " << k;
        EXPECT_TRUE(go.frames[k].diagnostics.converged);
        // Exact data: both estimators give the same answer.
        for (std::size_t j = 0; j < kJointCount; ++j) {
            EXPECT_LT((go.frames[k].angles[j] - seg.frames[k].angles[j]).norm(), 1e-6);
            EXPECT_NEAR(go.frames[k].dislocations[j], seg.frames[k].dislocations[j], 1e-6);
        }
    }
}

TEST(SolveTrial, FailedFramesAreRecorded) {
    TrialRecording rec = generate_ground_truth(subject(), movement_profile(subject(), Movement::shoulder_rotation)).recording;
    rec.frames.resize(5);
    rec.frames[2].positions.erase("HAND_ANT");
    rec.frames[2].positions.erase("HAND_POST");
    const TrialSolution sol = solve_trial(model(), rec, SolveMode::go);
    EXPECT_EQ(sol.failed_frames(), 1u);
    EXPECT_FALSE(sol.frames[2].ok);
    EXPECT_FALSE(sol.frames[2].error.empty());
    EXPECT_TRUE(sol.frames[3].ok);
    EXPECT_TRUE(sol.frames[3].diagnostics.converged);
}

TEST(SolveMode, Names) {
    EXPECT_EQ(solve_mode_from_string("go"), SolveMode::go);
    EXPECT_EQ(to_string(SolveMode::segmental), "segmental");
    EXPECT_THROW(solve_mode_from_string("both"), Error);
}
