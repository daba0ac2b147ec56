#include "limbgo/sim_study.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cmath>
#include <set>
#include <thread>

#include "limbgo/errors.hpp"

namespace limbgo {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::vector<LocalMarker> markers(std::initializer_list<std::pair<std::string, Vec3>> list) {
    std::vector<LocalMarker> out;
    for (const auto& [name, local] : list) {
        out.push_back({name, local});
    }
    return out;
}

void require_positive(double value, const char* what) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        throw DegenerateGeometry(std::string(what) + " must be positive and finite");
    }
}

void require_non_collinear(const SegmentDefinition& seg) {
    std::vector<Vec3> pts;
    for (const auto& m : seg.cluster) {
        pts.push_back(m.local);
    }
    try {
        fit_rigid_transform(pts, pts);
    } catch (const DegenerateCluster&) {
        throw DegenerateGeometry(std::string(to_string(seg.segment)) + " cluster is collinear");
    }
}

Vec3 shoulder_euler(const KinematicModel& model, const GeneralizedCoordinates& q) {
    return euler_angles(q.shoulder_rotation, model.sequence).angles;
}

}  // namespace

SyntheticSubject make_synthetic_subject(const Anthropometry& a) {
    require_positive(a.upper_arm_mm, "upper arm length");
    require_positive(a.forearm_mm, "forearm length");
    require_positive(a.hand_mm, "hand length");
    if (std::abs(std::sin(a.elbow_flexion_deg * kDeg)) < 1e-3) {
        throw DegenerateGeometry("elbow must be flexed in the static posture to define the arm frame");
    }

    SyntheticSubject s;
    s.anthropometry = a;
    const MarkerSet& n = s.names;
    const double la = a.upper_arm_mm;
    const double lf = a.forearm_mm;
    const double lh = a.hand_mm;

    KinematicModel& m = s.truth;

    // Trunk frame: origin C7, Y up along L3 -> C7, X anterior, Z to the right.
    m.segments[0] = {Segment::trunk,
                     markers({{n.c7, Vec3(0.0, 0.0, 0.0)},
                              {n.l3, Vec3(0.0, -420.0, 0.0)},
                              {n.sternum, Vec3(170.0, -180.0, 0.0)}}),
                     markers({{n.acromion, Vec3(40.0, -20.0, 170.0)}})};

    // Arm frame: origin at the shoulder centre, elbow centre on -Y. Cluster on the lateral side.
    m.segments[1] = {Segment::arm,
                     markers({{n.arm[0], Vec3(25.0, -0.28 * la, 45.0)},
                              {n.arm[1], Vec3(-20.0, -0.33 * la, 42.0)},
                              {n.arm[2], Vec3(30.0, -0.65 * la, 40.0)},
                              {n.arm[3], Vec3(-25.0, -0.72 * la, 38.0)}}),
                     markers({{n.elbow_medial, Vec3(0.0, -la, -35.0)},
                              {n.elbow_lateral, Vec3(0.0, -la, 35.0)}})};

    m.segments[2] = {Segment::forearm,
                     markers({{n.forearm[0], Vec3(25.0, -0.25 * lf, 30.0)},
                              {n.forearm[1], Vec3(30.0, -0.70 * lf, 25.0)},
                              {n.forearm[2], Vec3(-20.0, -0.75 * lf, 28.0)}}),
                     markers({{n.styloid_posterior, Vec3(-25.0, -0.98 * lf, 0.0)},
                              {n.styloid_anterior, Vec3(25.0, -0.98 * lf, 0.0)}})};

    // Barycentre -> wrist-side marker is +Y, posterior -> anterior is +X.
    m.segments[3] = {Segment::hand,
                     markers({{n.hand_wrist, Vec3(0.0, -0.28 * lh, 30.0)},
                              {n.hand_posterior, Vec3(-20.0, -0.89 * lh, 30.0)},
                              {n.hand_anterior, Vec3(20.0, -0.89 * lh, 30.0)}}),
                     {}};

    for (const auto& seg : m.segments) {
        require_non_collinear(seg);
    }

    m.joints[0] = {Joint::shoulder, Segment::trunk, Segment::arm, Vec3(50.0, -60.0, 180.0), Vec3::Zero(),
                   default_joint_constraint(Joint::shoulder)};
    m.joints[1] = {Joint::elbow, Segment::arm, Segment::forearm, Vec3(0.0, -la, 0.0), Vec3::Zero(),
                   default_joint_constraint(Joint::elbow)};
    m.joints[2] = {Joint::wrist, Segment::forearm, Segment::hand, Vec3(0.0, -lf, 0.0), Vec3::Zero(),
                   default_joint_constraint(Joint::wrist)};

    GeneralizedCoordinates& q = s.static_q;
    q.trunk = {Rotation(), Vec3(0.0, 1400.0, 0.0)};
    // Negative rotation about the trunk X axis carries the elbow laterally.
    q.shoulder_rotation =
        compose_euler(Vec3(0.0, -a.shoulder_abduction_deg * kDeg, a.shoulder_rotation_deg * kDeg), m.sequence);
    q.shoulder_offset = m.joints[0].center_in_proximal;
    q.elbow_angles = Vec3(a.elbow_flexion_deg * kDeg, 0.0, 0.0);
    q.wrist_angles = Vec3(a.wrist_flexion_deg * kDeg, a.wrist_abduction_deg * kDeg, 0.0);

    m.static_posture = segment_poses(m, q);
    s.static_frame = predict_markers(m, q, true);
    s.centers.shoulder = m.static_posture[1].translation;
    s.centers.elbow = m.static_posture[2].translation;
    s.centers.wrist = m.static_posture[3].translation;

    s.arm_proximal = {n.arm[0], n.arm[1]};
    s.arm_distal = {n.arm[2], n.arm[3]};
    s.forearm_proximal = {n.forearm[0]};
    s.forearm_distal = {n.forearm[1], n.forearm[2]};
    return s;
}

TrialRecording make_circumduction(const SyntheticSubject& subject, Joint joint, const CircumductionOptions& options) {
    if (joint == Joint::elbow) {
        throw Error("circumduction is defined for the shoulder and the wrist");
    }
    if (options.frames < 2) {
        throw Error("circumduction needs at least 2 frames");
    }
    TrialRecording rec;
    rec.sample_rate = options.sample_rate;
    const auto& model = subject.truth;
    for (std::size_t k = 0; k < options.frames; ++k) {
        const double u = static_cast<double>(k) / static_cast<double>(options.frames - 1);
        const double cone = (options.min_cone_deg + (options.max_cone_deg - options.min_cone_deg) * u) * kDeg;
        const double phi = 2.0 * std::numbers::pi * options.revolutions * u;
        const Vec3 swing(cone * std::cos(phi), cone * std::sin(phi), 0.0);

        GeneralizedCoordinates q = subject.static_q;
        if (joint == Joint::shoulder) {
            q.shoulder_rotation = q.shoulder_rotation * compose_euler(swing, model.sequence);
        } else {
            q.wrist_angles += swing;
        }
        MarkerFrame f = predict_markers(model, q);
        f.time = rec.time_at(k);
        rec.frames.push_back(std::move(f));
    }
    return rec;
}

CalibrationResult calibrate_subject(const SyntheticSubject& subject) {
    return calibrate_with_report(subject.static_frame, make_circumduction(subject, Joint::shoulder),
                                 make_circumduction(subject, Joint::wrist), subject.names);
}

std::string_view to_string(Movement m) {
    return m == Movement::shoulder_rotation ? "shoulder-rotation" : "pro-supination";
}

Movement movement_from_string(std::string_view name) {
    if (name == "shoulder-rotation") {
        return Movement::shoulder_rotation;
    }
    if (name == "pro-supination") {
        return Movement::pro_supination;
    }
    throw ConfigError("unknown movement '" + std::string(name) + "' (expected shoulder-rotation or pro-supination)");
}

double MovementProfile::angle_at(double t) const { return initial_angle + amplitude * sin_pi(2.0 * frequency * t); }

std::size_t MovementProfile::frame_count() const {
    return static_cast<std::size_t>(std::llround(duration * sample_rate)) + 1;
}

MovementProfile movement_profile(const SyntheticSubject& subject, Movement movement) {
    MovementProfile p;
    p.movement = movement;
    p.initial_angle = movement == Movement::shoulder_rotation
                          ? shoulder_euler(subject.truth, subject.static_q)(2)
                          : subject.static_q.elbow_angles(2);
    return p;
}

GroundTruth generate_ground_truth(const SyntheticSubject& subject, const MovementProfile& profile) {
    GroundTruth out;
    out.recording.sample_rate = profile.sample_rate;
    const auto& model = subject.truth;
    const Vec3 shoulder0 = shoulder_euler(model, subject.static_q);
    const std::size_t n = profile.frame_count();
    for (std::size_t k = 0; k < n; ++k) {
        const double t = out.recording.time_at(k);
        GeneralizedCoordinates q = subject.static_q;
        Vec3 shoulder = shoulder0;
        if (profile.movement == Movement::shoulder_rotation) {
            shoulder(2) = profile.angle_at(t);
            q.shoulder_rotation = compose_euler(shoulder, model.sequence);
        } else {
            q.elbow_angles(2) = profile.angle_at(t);
        }
        MarkerFrame f = predict_markers(model, q);
        f.time = t;
        out.recording.frames.push_back(std::move(f));
        PerJoint<Vec3> angles;
        for (int i = 0; i < 3; ++i) {
            angles[0](i) = wrap_angle(shoulder(i));
            angles[1](i) = wrap_angle(q.elbow_angles(i));
            angles[2](i) = wrap_angle(q.wrist_angles(i));
        }
        out.angles.push_back(angles);
        out.coordinates.push_back(q);
    }
    return out;
}

TrialRecording add_measurement_noise(const TrialRecording& recording, const MeasurementNoiseParams& params,
                                     const StreamFactory& streams) {
    if (!(params.sigma_mm >= 0.0)) {
        throw ConfigError("measurement noise sigma must be non-negative");
    }
    TrialRecording out = recording;
    if (params.sigma_mm == 0.0) {
        return out;
    }
    std::set<std::string> names;
    for (const auto& f : recording.frames) {
        for (const auto& [name, p] : f.positions) {
            names.insert(name);
        }
    }
    for (const auto& name : names) {
        for (int axis = 0; axis < 3; ++axis) {
            RandomStream rs = streams.stream("measurement", name, axis);
            for (auto& f : out.frames) {
                const double e = rs.normal(0.0, params.sigma_mm);
                const auto it = f.positions.find(name);
                if (it != f.positions.end()) {
                    it->second(axis) += e;
                }
            }
        }
    }
    return out;
}

ArtefactParams artefact_params_for(const SyntheticSubject& subject, Movement movement) {
    ArtefactParams p;
    if (movement == Movement::shoulder_rotation) {
        for (const auto& m : subject.arm_proximal) p.amplitude_mm[m] = 20.0;
        for (const auto& m : subject.arm_distal) p.amplitude_mm[m] = 10.0;
    } else {
        for (const auto& m : subject.forearm_proximal) p.amplitude_mm[m] = 20.0;
        for (const auto& m : subject.forearm_distal) p.amplitude_mm[m] = 10.0;
        for (const auto& m : subject.arm_proximal) p.amplitude_mm[m] = 5.0;
        for (const auto& m : subject.arm_distal) p.amplitude_mm[m] = 5.0;
    }
    return p;
}

Vec3 artefact_displacement(const ArtefactDraw& draw, const ArtefactParams& params, double t) {
    const double envelope = draw.amplitude_mm * std::abs(sin_pi(2.0 * params.schedule_frequency * t));
    if (params.direction == ArtefactDirection::fixed_direction) {
        return envelope * std::sin(draw.omega(0) * t + draw.phase(0)) * draw.direction;
    }
    Vec3 d;
    for (int axis = 0; axis < 3; ++axis) {
        d(axis) = envelope * std::sin(draw.omega(axis) * t + draw.phase(axis));
    }
    return d;
}

ArtefactResult add_skin_artefacts(const TrialRecording& recording, const ArtefactParams& params,
                                  const StreamFactory& streams) {
    ArtefactResult out;
    out.recording = recording;
    for (const auto& [name, amplitude] : params.amplitude_mm) {
        if (!(amplitude >= 0.0)) {
            throw ConfigError("artefact amplitude of '" + name + "' must be non-negative");
        }
        if (amplitude == 0.0) {
            continue;
        }
        ArtefactDraw draw;
        draw.marker = name;
        draw.amplitude_mm = amplitude;
        const bool shared = params.share_across_axes || params.direction == ArtefactDirection::fixed_direction;
        for (int axis = 0; axis < 3; ++axis) {
            if (shared && axis > 0) {
                draw.omega(axis) = draw.omega(0);
                draw.phase(axis) = draw.phase(0);
                continue;
            }
            RandomStream rs = streams.stream("artefact", name, axis);
            draw.omega(axis) = rs.uniform(params.omega_min, params.omega_max);
            draw.phase(axis) = rs.uniform(params.phase_min, params.phase_max);
        }
        if (params.direction == ArtefactDirection::fixed_direction) {
            RandomStream rs = streams.stream("artefact-direction", name);
            Vec3 u;
            do {
                u = Vec3(rs.normal(0.0, 1.0), rs.normal(0.0, 1.0), rs.normal(0.0, 1.0));
            } while (u.norm() < 1e-12);
            draw.direction = u.normalized();
        }
        for (auto& f : out.recording.frames) {
            const auto it = f.positions.find(name);
            if (it != f.positions.end()) {
                it->second += artefact_displacement(draw, params, f.time);
            }
        }
        out.draws.push_back(std::move(draw));
    }
    return out;
}

// ---------------------------------------------------------------------------

void StudyConfig::validate() const {
    if (n_trials < 1) {
        throw ConfigError("n_trials must be at least 1");
    }
    if (!(noise.sigma_mm >= 0.0) || !std::isfinite(noise.sigma_mm)) {
        throw ConfigError("measurement noise sigma must be finite and non-negative");
    }
    if (modes.empty()) {
        throw ConfigError("at least one solve mode is required");
    }
    if (solver.solver.max_iterations < 1) {
        throw ConfigError("solver max_iterations must be positive");
    }
    if (!(solver.solver.gradient_tolerance > 0.0)) {
        throw ConfigError("solver gradient_tolerance must be positive");
    }
}

std::uint64_t trial_seed(std::uint64_t master_seed, int trial) {
    return StreamFactory(master_seed).trial(static_cast<std::uint64_t>(trial)).seed();
}

SimulatedTrial simulate_trial(const StudyConfig& config, const SyntheticSubject& subject, int trial) {
    const std::uint64_t seed = trial_seed(config.master_seed, trial);
    const StreamFactory streams(seed);
    const StreamFactory noise_streams(config.redraw_measurement_noise ? seed : trial_seed(config.master_seed, 1));
    SimulatedTrial out;
    out.truth = generate_ground_truth(subject, movement_profile(subject, config.movement));
    out.recording = out.truth.recording;
    if (config.measurement_noise) {
        out.recording = add_measurement_noise(out.recording, config.noise, noise_streams);
    }
    if (config.artefacts) {
        ArtefactParams params = artefact_params_for(subject, config.movement);
        params.direction = config.artefact_direction;
        params.share_across_axes = config.share_artefact_phase;
        ArtefactResult art = add_skin_artefacts(out.recording, params, streams);
        out.recording = std::move(art.recording);
        out.draws = std::move(art.draws);
    }
    return out;
}

TrialResult run_trial(const StudyConfig& config, const SyntheticSubject& subject, const KinematicModel& model,
                      int trial) {
    TrialResult result;
    result.trial = trial;
    result.seed = trial_seed(config.master_seed, trial);
    try {
        const SimulatedTrial sim = simulate_trial(config, subject, trial);
        const GroundTruth& truth = sim.truth;
        const TrialRecording& rec = sim.recording;

        const JointConstraint& elbow = model.joint(Joint::elbow).constraint;
        const JointConstraint& wrist = model.joint(Joint::wrist).constraint;
        const auto outside = [](const JointConstraint& c, const Vec3& angles) {
            if (!c.bounded_angle) {
                return false;
            }
            const double a = angles(*c.bounded_angle);
            return a < c.lower || a > c.upper;
        };
        const auto too_far = [](const JointConstraint& c, double d) {
            return c.max_dislocation && d > *c.max_dislocation;
        };

        for (SolveMode mode : config.modes) {
            const TrialSolution sol = solve_trial(model, rec, mode, config.solver);
            for (const auto& f : sol.frames) {
                if (!f.ok) {
                    result.solver.failed_frames += 1;
                    continue;
                }
                if (mode == SolveMode::go) {
                    result.solver.frames += 1;
                    result.solver.converged += f.diagnostics.converged ? 1 : 0;
                    result.solver.max_iterations = std::max(result.solver.max_iterations, f.diagnostics.iterations);
                    result.solver.total_iterations += f.diagnostics.iterations;
                    result.solver.max_constraint_violation =
                        std::max(result.solver.max_constraint_violation, f.diagnostics.max_constraint_violation);
                    auto& c = result.constraints;
                    c.go_frames += 1;
                    c.elbow_angle_violations += outside(elbow, f.angles[1]) ? 1 : 0;
                    c.wrist_angle_violations += outside(wrist, f.angles[2]) ? 1 : 0;
                    c.elbow_dislocation_violations += too_far(elbow, f.dislocations[1]) ? 1 : 0;
                    c.wrist_dislocation_violations += too_far(wrist, f.dislocations[2]) ? 1 : 0;
                } else {
                    auto& c = result.constraints;
                    c.segmental_frames += 1;
                    c.segmental_elbow_angle_outside += outside(elbow, f.angles[1]) ? 1 : 0;
                    c.segmental_wrist_angle_outside += outside(wrist, f.angles[2]) ? 1 : 0;
                }
            }
            for (const auto& series : error_series(sol, truth.angles)) {
                result.rms[{series.dof, mode}] = rms(series.errors);
            }
        }
    } catch (const std::exception& e) {
        result.ok = false;
        result.error = e.what();
        result.rms.clear();
    }
    return result;
}

StudyReport run_study(const StudyConfig& config) {
    config.validate();
    const SyntheticSubject subject = make_synthetic_subject(config.subject);
    const KinematicModel model = calibrate_subject(subject).model;

    StudyReport report;
    report.movement = std::string(to_string(config.movement));
    report.master_seed = config.master_seed;
    report.config_json = to_json(config);
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a64(report.config_json)));
    report.config_hash = hash;
    report.modes = config.modes;
    report.trials.resize(static_cast<std::size_t>(config.n_trials));

    unsigned workers = config.threads > 0 ? config.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(config.n_trials));
    std::atomic<int> next{0};
    const auto work = [&] {
        for (int k = next++; k < config.n_trials; k = next++) {
            report.trials[static_cast<std::size_t>(k)] = run_trial(config, subject, model, k + 1);
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back(work);
        }
    }

    finalize_report(report);
    return report;
}

}  // namespace limbgo
