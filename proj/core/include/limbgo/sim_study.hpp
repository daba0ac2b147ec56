#pragma once

#include <cstdint>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "limbgo/eval_report.hpp"
#include "limbgo/go_solver.hpp"
#include "limbgo/limb_model.hpp"
#include "limbgo/rng.hpp"

namespace limbgo {

/// Geometry of the synthetic subject. Lengths are plausible adult values
/// used only to lay out markers.
struct Anthropometry {
    double upper_arm_mm = 300.0;
    double forearm_mm = 260.0;
    double hand_mm = 90.0;
    /// Static posture: arm abducted from vertical, elbow flexed.
    double shoulder_abduction_deg = 30.0;
    double elbow_flexion_deg = 45.0;
    double wrist_flexion_deg = -10.0;
    double wrist_abduction_deg = 5.0;
    /// Initial (static) axial rotation of the arm.
    double shoulder_rotation_deg = 0.0;
};

struct SyntheticSubject {
    Anthropometry anthropometry;
    MarkerSet names;
    /// Ground-truth geometry; calibration on noise-free trials recovers it.
    KinematicModel truth;
    GeneralizedCoordinates static_q;
    /// Every marker of the static trial: clusters, elbow/styloid landmarks, acromion.
    MarkerFrame static_frame;
    JointCenters centers;
    std::vector<std::string> arm_proximal;
    std::vector<std::string> arm_distal;
    std::vector<std::string> forearm_proximal;
    std::vector<std::string> forearm_distal;
};

/// Deterministic subject. Throws DegenerateGeometry for non-positive
/// lengths or any collinear cluster.
SyntheticSubject make_synthetic_subject(const Anthropometry& anthropometry = {});

struct CircumductionOptions {
    double sample_rate = 50.0;
    std::size_t frames = 201;
    double revolutions = 2.0;
    /// Cone half-angle ramps linearly between these over the trial.
    double min_cone_deg = 15.0;
    double max_cone_deg = 45.0;
};

/// Noise-free circumduction about the shoulder or the wrist; the proximal
/// segment stays at its static pose.
TrialRecording make_circumduction(const SyntheticSubject& subject, Joint joint,
                                  const CircumductionOptions& options = {});

/// Calibration from the subject's noise-free static and circumduction trials.
CalibrationResult calibrate_subject(const SyntheticSubject& subject);

enum class Movement { shoulder_rotation, pro_supination };

std::string_view to_string(Movement m);
Movement movement_from_string(std::string_view name);

/// angle(t) = initial + amplitude * sin(2 pi f t)
struct MovementProfile {
    Movement movement = Movement::shoulder_rotation;
    double initial_angle = 0.0;  // rad
    double amplitude = std::numbers::pi / 3.0;
    double frequency = 0.5;  // Hz
    double duration = 2.0;   // s
    double sample_rate = 50.0;

    double angle_at(double t) const;
    /// duration * sample_rate + 1 samples, both endpoints included.
    std::size_t frame_count() const;
};

/// Profile of a movement starting from the subject's static angle.
MovementProfile movement_profile(const SyntheticSubject& subject, Movement movement);

struct GroundTruth {
    TrialRecording recording;
    std::vector<GeneralizedCoordinates> coordinates;
    std::vector<PerJoint<Vec3>> angles;  // rad, model sequence
};

/// Exactly one DOF (shoulder axial rotation, or elbow pronation-supination)
/// follows the profile; everything else stays at the static posture.
GroundTruth generate_ground_truth(const SyntheticSubject& subject, const MovementProfile& profile);

struct MeasurementNoiseParams {
    double sigma_mm = 0.615;
};

/// Independent Gaussian noise per marker, axis and frame; each (marker, axis)
/// pair draws from its own stream.
TrialRecording add_measurement_noise(const TrialRecording& recording, const MeasurementNoiseParams& params,
                                     const StreamFactory& streams);

enum class ArtefactDirection { per_axis, fixed_direction };

struct ArtefactParams {
    /// B_m per marker (mm); markers not listed are untouched.
    std::map<std::string, double> amplitude_mm;
    double omega_min = std::numbers::pi;        // rad/s
    double omega_max = 3.0 * std::numbers::pi;  // rad/s
    double phase_min = 0.0;
    double phase_max = 2.0 * std::numbers::pi;
    /// A_m(t) = B_m |sin(2 pi f t)|
    double schedule_frequency = 0.5;
    ArtefactDirection direction = ArtefactDirection::per_axis;
    /// One (omega, phase) shared by a marker's three axes.
    bool share_across_axes = false;
};

/// Artefact amplitudes of a movement: shoulder rotation puts 20 mm on the two
/// proximal arm markers and 10 mm on the distal pair; pro-supination puts
/// 20 mm on the proximal forearm marker, 10 mm on the distal two and 5 mm on
/// every arm marker.
ArtefactParams artefact_params_for(const SyntheticSubject& subject, Movement movement);

struct ArtefactDraw {
    std::string marker;
    double amplitude_mm = 0.0;
    Vec3 omega = Vec3::Zero();
    Vec3 phase = Vec3::Zero();
    Vec3 direction = Vec3::Ones();  // unit vector in fixed-direction mode
};

/// Displacement of one marker at time t.
Vec3 artefact_displacement(const ArtefactDraw& draw, const ArtefactParams& params, double t);

struct ArtefactResult {
    TrialRecording recording;
    std::vector<ArtefactDraw> draws;
};

ArtefactResult add_skin_artefacts(const TrialRecording& recording, const ArtefactParams& params,
                                  const StreamFactory& streams);

struct StudyConfig {
    Movement movement = Movement::shoulder_rotation;
    int n_trials = 30;
    std::uint64_t master_seed = 1;
    bool measurement_noise = true;
    MeasurementNoiseParams noise;
    /// Draw fresh measurement noise in every trial (otherwise trial 1's is reused).
    bool redraw_measurement_noise = true;
    bool artefacts = true;
    ArtefactDirection artefact_direction = ArtefactDirection::per_axis;
    bool share_artefact_phase = false;
    std::vector<SolveMode> modes{SolveMode::go, SolveMode::segmental};
    TrialSolveOptions solver;
    Anthropometry subject;
    /// Worker threads for the trial loop; 0 picks the hardware concurrency.
    unsigned threads = 0;

    /// Throws ConfigError.
    void validate() const;
};

/// Parses the declarative JSON study file; unknown keys are rejected.
/// Throws ConfigError.
StudyConfig study_config_from_json(const std::string& text);

/// Canonical JSON text of a configuration (stable key order).
std::string to_json(const StudyConfig& config);

/// Seed of trial k (1-based) under a master seed.
std::uint64_t trial_seed(std::uint64_t master_seed, int trial);

struct SimulatedTrial {
    GroundTruth truth;
    /// Truth plus the configured measurement noise and artefacts.
    TrialRecording recording;
    std::vector<ArtefactDraw> draws;
};

/// Marker data of trial k (1-based) exactly as the study sees it.
SimulatedTrial simulate_trial(const StudyConfig& config, const SyntheticSubject& subject, int trial);

/// One simulated trial: truth, noise, artefacts, every requested mode.
TrialResult run_trial(const StudyConfig& config, const SyntheticSubject& subject, const KinematicModel& model,
                      int trial);

/// The full study; results are a pure function of the configuration.
StudyReport run_study(const StudyConfig& config);

}  // namespace limbgo
