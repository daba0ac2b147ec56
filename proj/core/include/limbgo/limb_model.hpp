#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "limbgo/geometry.hpp"

namespace limbgo {

enum class Segment { trunk = 0, arm = 1, forearm = 2, hand = 3 };
enum class Joint { shoulder = 0, elbow = 1, wrist = 2 };

inline constexpr std::size_t kSegmentCount = 4;
inline constexpr std::size_t kJointCount = 3;
inline constexpr std::array<Segment, kSegmentCount> kSegments{Segment::trunk, Segment::arm,
                                                              Segment::forearm, Segment::hand};
inline constexpr std::array<Joint, kJointCount> kJoints{Joint::shoulder, Joint::elbow, Joint::wrist};

std::string_view to_string(Segment s);
std::string_view to_string(Joint j);
Segment segment_from_string(std::string_view name);
Joint joint_from_string(std::string_view name);

/// Anatomical name of the joint's i-th Euler angle ("abduction_adduction", ...).
std::string_view angle_name(Joint j, int index);

template <class T>
using PerSegment = std::array<T, kSegmentCount>;
template <class T>
using PerJoint = std::array<T, kJointCount>;

using SegmentPoses = PerSegment<Pose>;

/// Marker names by anatomical role. Defaults match the shipped synthetic subject.
struct MarkerSet {
    std::string c7 = "C7";
    std::string l3 = "L3";
    std::string sternum = "STERNUM";
    std::string acromion = "ACROMION";
    /// The first two arm markers are the proximal pair.
    std::array<std::string, 4> arm{"ARM1", "ARM2", "ARM3", "ARM4"};
    std::string elbow_medial = "ELB_MED";
    std::string elbow_lateral = "ELB_LAT";
    /// The first forearm marker is the proximal one.
    std::array<std::string, 3> forearm{"FA1", "FA2", "FA3"};
    std::string styloid_posterior = "STYL_POST";
    std::string styloid_anterior = "STYL_ANT";
    std::string hand_wrist = "HAND_WRIST";
    std::string hand_posterior = "HAND_POST";
    std::string hand_anterior = "HAND_ANT";
    std::string chin = "CHIN";
    std::string forehead = "FOREHEAD";
    std::string temple_left = "TEMPLE_L";
    std::string temple_right = "TEMPLE_R";

    /// Tracking cluster of a segment.
    std::vector<std::string> cluster(Segment s) const;
    /// Static-only anatomical markers attached to a segment.
    std::vector<std::string> landmarks(Segment s) const;
};

/// One time sample. A marker absent from `positions` was not seen.
struct MarkerFrame {
    double time = 0.0;  // s
    std::map<std::string, Vec3> positions;  // mm, global frame

    bool has(const std::string& name) const { return positions.contains(name); }
    /// Throws MissingMarker.
    const Vec3& at(const std::string& name) const;
};

struct TrialRecording {
    double sample_rate = 50.0;  // Hz
    std::vector<MarkerFrame> frames;

    /// Throws Error unless times increase uniformly at 1/sample_rate (1e-6 s
    /// tolerance) and every position is finite.
    void validate() const;

    /// Time of sample k, computed as k / sample_rate.
    double time_at(std::size_t k) const { return static_cast<double>(k) / sample_rate; }
};

struct LocalMarker {
    std::string name;
    Vec3 local = Vec3::Zero();  // mm, segment anatomical frame

    bool operator==(const LocalMarker&) const = default;
};

struct SegmentDefinition {
    Segment segment = Segment::trunk;
    std::vector<LocalMarker> cluster;
    std::vector<LocalMarker> landmarks;
};

/// Joint laxity: one Euler angle kept in [lower, upper] and the joint
/// translation kept within a ball. An empty constraint leaves the joint free.
struct JointConstraint {
    std::optional<int> bounded_angle;
    double lower = 0.0;  // rad
    double upper = 0.0;  // rad
    std::optional<double> max_dislocation;  // mm

    bool unconstrained() const { return !bounded_angle && !max_dislocation; }
    static JointConstraint none() { return {}; }

    bool operator==(const JointConstraint&) const = default;
};

/// Elbow: abduction-adduction in [-1 deg, 1 deg]; wrist: pronation-supination
/// in [-1 deg, 1 deg]; both with at most 2 mm translation. Shoulder free.
JointConstraint default_joint_constraint(Joint j);

struct JointDefinition {
    Joint joint = Joint::shoulder;
    Segment proximal = Segment::trunk;
    Segment distal = Segment::arm;
    Vec3 center_in_proximal = Vec3::Zero();  // mm
    Vec3 center_in_distal = Vec3::Zero();    // mm
    JointConstraint constraint;
};

/// Generalized coordinates of the chain trunk -> shoulder -> arm -> elbow ->
/// forearm -> wrist -> hand.
///
/// The arm has six free DOF relative to the trunk. Elbow and wrist rotations
/// are Euler angles in the model's sequence; their translations are the
/// displacement of the joint centre between the two segments, expressed in
/// the proximal frame (its norm is the dislocation).
struct GeneralizedCoordinates {
    static constexpr int kTangentSize = 24;
    using Tangent = Eigen::Matrix<double, kTangentSize, 1>;

    // Tangent layout offsets.
    static constexpr int kTrunkRotation = 0;
    static constexpr int kTrunkTranslation = 3;
    static constexpr int kShoulderRotation = 6;
    static constexpr int kShoulderOffset = 9;
    static constexpr int kElbowAngles = 12;
    static constexpr int kElbowTranslation = 15;
    static constexpr int kWristAngles = 18;
    static constexpr int kWristTranslation = 21;

    Pose trunk;
    Rotation shoulder_rotation;                   // arm relative to trunk
    Vec3 shoulder_offset = Vec3::Zero();          // shoulder centre in trunk frame, mm
    Vec3 elbow_angles = Vec3::Zero();             // rad
    Vec3 elbow_translation = Vec3::Zero();        // mm
    Vec3 wrist_angles = Vec3::Zero();             // rad
    Vec3 wrist_translation = Vec3::Zero();        // mm

    /// Rotations updated on the right (R <- R exp(delta)), everything else additively.
    /// Euler angles are wrapped into (-pi, pi].
    GeneralizedCoordinates retract(const Tangent& delta) const;

    bool all_finite() const;
};

struct KinematicModel {
    PerSegment<SegmentDefinition> segments;
    PerJoint<JointDefinition> joints;
    EulerSequence sequence = EulerSequence::zxy();
    SegmentPoses static_posture;

    const SegmentDefinition& segment(Segment s) const { return segments[static_cast<std::size_t>(s)]; }
    const JointDefinition& joint(Joint j) const { return joints[static_cast<std::size_t>(j)]; }

    /// Names of every tracked cluster marker, in segment order.
    std::vector<std::string> tracked_markers() const;
};

// ---------------------------------------------------------------------------
// Joint centres and frames

/// Component-wise midpoint of the two epicondyle markers.
Vec3 elbow_center(const Vec3& medial, const Vec3& lateral);

struct MarkerSphere {
    std::string marker;
    SphereFit fit;
    double weight = 0.0;
};

struct FunctionalCenter {
    Vec3 center = Vec3::Zero();
    std::vector<MarkerSphere> spheres;
    std::size_t frames_used = 0;
};

/// Functional joint centre from a circumduction trial. Each moving marker
/// is expressed in the proximal cluster frame (registered per sample against
/// `proximal_reference`) and sphere-fitted; the centres are averaged with
/// weights 1 / (rms^2 + 1e-6 mm^2). The result is in the coordinates of
/// `proximal_reference`. Samples missing any needed marker are skipped.
FunctionalCenter estimate_joint_center_functional(const TrialRecording& trajectory,
                                                  std::span<const std::string> moving_markers,
                                                  std::span<const LocalMarker> proximal_reference);

FunctionalCenter estimate_joint_center_functional(const TrialRecording& trajectory,
                                                  std::span<const std::string> moving_markers,
                                                  const SegmentDefinition& proximal_segment);

/// Global joint centres at the static trial.
struct JointCenters {
    Vec3 shoulder = Vec3::Zero();
    Vec3 elbow = Vec3::Zero();
    Vec3 wrist = Vec3::Zero();
};

struct AnatomicalFrames {
    SegmentPoses segments;
    std::optional<Pose> head;
    std::optional<Pose> shoulder_girdle;
};

/// Segment frames at the static trial (X = Y ^ Z throughout):
///   trunk   Y = L3 -> C7, Z = (L3 -> sternum) ^ Y, origin C7
///   arm     Y = elbow -> shoulder centre, Z = (elbow -> wrist) ^ Y, origin shoulder centre
///   forearm Y = wrist -> elbow centre, Z = (posterior -> anterior styloid) ^ Y, origin elbow centre
///   hand    Y = hand-cluster barycentre -> wrist-side hand marker,
///           Z = (posterior -> anterior hand marker) ^ Y, origin wrist centre
/// Head and shoulder-girdle frames are built only when their markers exist.
/// Throws DegenerateFrame when a defining cross product falls below 1e-6
/// (unit inputs) and MissingMarker when a required marker is absent.
AnatomicalFrames build_anatomical_frames(const MarkerFrame& static_frame, const JointCenters& centers,
                                         const MarkerSet& names = {});

struct CalibrationResult {
    KinematicModel model;
    JointCenters centers;
    FunctionalCenter shoulder;
    FunctionalCenter wrist;
};

CalibrationResult calibrate_with_report(const MarkerFrame& static_frame,
                                        const TrialRecording& shoulder_circumduction,
                                        const TrialRecording& wrist_circumduction,
                                        const MarkerSet& names = {});

KinematicModel calibrate(const MarkerFrame& static_frame, const TrialRecording& shoulder_circumduction,
                         const TrialRecording& wrist_circumduction, const MarkerSet& names = {});

// ---------------------------------------------------------------------------
// Forward kinematics and joint quantities

SegmentPoses segment_poses(const KinematicModel& model, const GeneralizedCoordinates& q);

/// Cluster marker positions for `q`; landmarks too when requested.
MarkerFrame predict_markers(const KinematicModel& model, const GeneralizedCoordinates& q,
                            bool include_landmarks = false);

/// Coordinates reproducing the given segment poses exactly; no projection
/// onto joint constraints is applied.
GeneralizedCoordinates coordinates_from_poses(const KinematicModel& model, const SegmentPoses& poses);

/// Coordinates of the calibration posture.
GeneralizedCoordinates static_coordinates(const KinematicModel& model);

/// Euler angles of proximal^T * distal in the model's sequence.
EulerAngles joint_angles(const KinematicModel& model, const Pose& proximal, const Pose& distal);

/// Distance between the joint centre carried by each of the two segments (mm).
double dislocation(const KinematicModel& model, const Pose& proximal, const Pose& distal, Joint joint);

}  // namespace limbgo
