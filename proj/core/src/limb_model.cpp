#include "limbgo/limb_model.hpp"

#include <cmath>
#include <numbers>

#include "limbgo/errors.hpp"

namespace limbgo {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::size_t idx(Segment s) { return static_cast<std::size_t>(s); }
std::size_t idx(Joint j) { return static_cast<std::size_t>(j); }

Vec3 wrap(const Vec3& a) { return Vec3(wrap_angle(a(0)), wrap_angle(a(1)), wrap_angle(a(2))); }

}  // namespace

std::string_view to_string(Segment s) {
    switch (s) {
        case Segment::trunk: return "trunk";
        case Segment::arm: return "arm";
        case Segment::forearm: return "forearm";
        case Segment::hand: return "hand";
    }
    return "?";
}

std::string_view to_string(Joint j) {
    switch (j) {
        case Joint::shoulder: return "shoulder";
        case Joint::elbow: return "elbow";
        case Joint::wrist: return "wrist";
    }
    return "?";
}

Segment segment_from_string(std::string_view name) {
    for (Segment s : kSegments) {
        if (to_string(s) == name) {
            return s;
        }
    }
    throw Error("unknown segment '" + std::string(name) + "'");
}

Joint joint_from_string(std::string_view name) {
    for (Joint j : kJoints) {
        if (to_string(j) == name) {
            return j;
        }
    }
    throw Error("unknown joint '" + std::string(name) + "'");
}

std::string_view angle_name(Joint j, int index) {
    static constexpr std::array<std::array<std::string_view, 3>, 3> names{{
        {"flexion_extension", "abduction_adduction", "internal_external_rotation"},
        {"flexion_extension", "abduction_adduction", "pronation_supination"},
        {"flexion_extension", "abduction_adduction", "pronation_supination"},
    }};
    return names.at(idx(j)).at(static_cast<std::size_t>(index));
}

std::vector<std::string> MarkerSet::cluster(Segment s) const {
    switch (s) {
        case Segment::trunk: return {c7, l3, sternum};
        case Segment::arm: return {arm.begin(), arm.end()};
        case Segment::forearm: return {forearm.begin(), forearm.end()};
        case Segment::hand: return {hand_wrist, hand_posterior, hand_anterior};
    }
    return {};
}

std::vector<std::string> MarkerSet::landmarks(Segment s) const {
    switch (s) {
        case Segment::trunk: return {acromion};
        case Segment::arm: return {elbow_medial, elbow_lateral};
        case Segment::forearm: return {styloid_posterior, styloid_anterior};
        case Segment::hand: return {};
    }
    return {};
}

const Vec3& MarkerFrame::at(const std::string& name) const {
    const auto it = positions.find(name);
    if (it == positions.end()) {
        throw MissingMarker(name, "frame at t=" + std::to_string(time) + " s");
    }
    return it->second;
}

void TrialRecording::validate() const {
    if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) {
        throw Error("trial sample rate must be positive");
    }
    const double dt = 1.0 / sample_rate;
    for (std::size_t k = 0; k < frames.size(); ++k) {
        if (k > 0) {
            const double step = frames[k].time - frames[k - 1].time;
            if (!(step > 0.0) || std::abs(step - dt) > 1e-6) {
                throw Error("trial times are not uniform at 1/" + std::to_string(sample_rate) +
                            " s (sample " + std::to_string(k) + ")");
            }
        }
        for (const auto& [name, p] : frames[k].positions) {
            if (!p.allFinite()) {
                throw Error("non-finite position for marker '" + name + "' at sample " +
                            std::to_string(k));
            }
        }
    }
}

JointConstraint default_joint_constraint(Joint j) {
    switch (j) {
        case Joint::shoulder: return JointConstraint::none();
        case Joint::elbow: return {1, -1.0 * kDeg, 1.0 * kDeg, 2.0};
        case Joint::wrist: return {2, -1.0 * kDeg, 1.0 * kDeg, 2.0};
    }
    return {};
}

GeneralizedCoordinates GeneralizedCoordinates::retract(const Tangent& d) const {
    using GC = GeneralizedCoordinates;
    GeneralizedCoordinates out = *this;
    out.trunk.rotation = trunk.rotation * Rotation::exp(d.segment<3>(GC::kTrunkRotation));
    out.trunk.translation += d.segment<3>(GC::kTrunkTranslation);
    out.shoulder_rotation = shoulder_rotation * Rotation::exp(d.segment<3>(GC::kShoulderRotation));
    out.shoulder_offset += d.segment<3>(GC::kShoulderOffset);
    out.elbow_angles = wrap(elbow_angles + d.segment<3>(GC::kElbowAngles));
    out.elbow_translation += d.segment<3>(GC::kElbowTranslation);
    out.wrist_angles = wrap(wrist_angles + d.segment<3>(GC::kWristAngles));
    out.wrist_translation += d.segment<3>(GC::kWristTranslation);
    return out;
}

bool GeneralizedCoordinates::all_finite() const {
    return trunk.rotation.matrix().allFinite() && trunk.translation.allFinite() &&
           shoulder_rotation.matrix().allFinite() && shoulder_offset.allFinite() &&
           elbow_angles.allFinite() && elbow_translation.allFinite() && wrist_angles.allFinite() &&
           wrist_translation.allFinite();
}

std::vector<std::string> KinematicModel::tracked_markers() const {
    std::vector<std::string> out;
    for (const auto& seg : segments) {
        for (const auto& m : seg.cluster) {
            out.push_back(m.name);
        }
    }
    return out;
}

Vec3 elbow_center(const Vec3& medial, const Vec3& lateral) { return 0.5 * (medial + lateral); }

SegmentPoses segment_poses(const KinematicModel& model, const GeneralizedCoordinates& q) {
    const auto& shoulder = model.joint(Joint::shoulder);
    const auto& elbow = model.joint(Joint::elbow);
    const auto& wrist = model.joint(Joint::wrist);

    SegmentPoses p;
    p[0] = q.trunk;

    const Vec3 shoulder_point = q.trunk.apply(q.shoulder_offset);
    p[1].rotation = q.trunk.rotation * q.shoulder_rotation;
    p[1].translation = shoulder_point - p[1].rotation * shoulder.center_in_distal;

    const Vec3 elbow_point = p[1].apply(elbow.center_in_proximal + q.elbow_translation);
    p[2].rotation = p[1].rotation * compose_euler(q.elbow_angles, model.sequence);
    p[2].translation = elbow_point - p[2].rotation * elbow.center_in_distal;

    const Vec3 wrist_point = p[2].apply(wrist.center_in_proximal + q.wrist_translation);
    p[3].rotation = p[2].rotation * compose_euler(q.wrist_angles, model.sequence);
    p[3].translation = wrist_point - p[3].rotation * wrist.center_in_distal;
    return p;
}

MarkerFrame predict_markers(const KinematicModel& model, const GeneralizedCoordinates& q,
                            bool include_landmarks) {
    const SegmentPoses poses = segment_poses(model, q);
    MarkerFrame frame;
    for (Segment s : kSegments) {
        const auto& seg = model.segment(s);
        const Pose& pose = poses[idx(s)];
        for (const auto& m : seg.cluster) {
            frame.positions[m.name] = pose.apply(m.local);
        }
        if (include_landmarks) {
            for (const auto& m : seg.landmarks) {
                frame.positions[m.name] = pose.apply(m.local);
            }
        }
    }
    return frame;
}

GeneralizedCoordinates coordinates_from_poses(const KinematicModel& model, const SegmentPoses& poses) {
    const auto& shoulder = model.joint(Joint::shoulder);
    const auto& elbow = model.joint(Joint::elbow);
    const auto& wrist = model.joint(Joint::wrist);
    const Pose& trunk = poses[0];
    const Pose& arm = poses[1];
    const Pose& forearm = poses[2];
    const Pose& hand = poses[3];

    GeneralizedCoordinates q;
    q.trunk = trunk;
    q.shoulder_rotation = trunk.rotation.inverse() * arm.rotation;
    q.shoulder_offset = trunk.apply_inverse(arm.apply(shoulder.center_in_distal));
    q.elbow_angles = euler_angles(arm.rotation.inverse() * forearm.rotation, model.sequence).angles;
    q.elbow_translation = arm.apply_inverse(forearm.apply(elbow.center_in_distal)) - elbow.center_in_proximal;
    q.wrist_angles = euler_angles(forearm.rotation.inverse() * hand.rotation, model.sequence).angles;
    q.wrist_translation = forearm.apply_inverse(hand.apply(wrist.center_in_distal)) - wrist.center_in_proximal;
    return q;
}

GeneralizedCoordinates static_coordinates(const KinematicModel& model) {
    return coordinates_from_poses(model, model.static_posture);
}

EulerAngles joint_angles(const KinematicModel& model, const Pose& proximal, const Pose& distal) {
    return euler_angles(proximal.rotation.inverse() * distal.rotation, model.sequence);
}

double dislocation(const KinematicModel& model, const Pose& proximal, const Pose& distal, Joint joint) {
    const auto& j = model.joint(joint);
    return (proximal.apply(j.center_in_proximal) - distal.apply(j.center_in_distal)).norm();
}

// ---------------------------------------------------------------------------

FunctionalCenter estimate_joint_center_functional(const TrialRecording& trajectory,
                                                  std::span<const std::string> moving_markers,
                                                  std::span<const LocalMarker> proximal_reference) {
    std::vector<std::vector<Vec3>> local_paths(moving_markers.size());
    FunctionalCenter out;

    std::vector<Vec3> ref;
    std::vector<Vec3> cur;
    for (const MarkerFrame& frame : trajectory.frames) {
        ref.clear();
        cur.clear();
        for (const auto& m : proximal_reference) {
            if (frame.has(m.name)) {
                ref.push_back(m.local);
                cur.push_back(frame.at(m.name));
            }
        }
        if (ref.size() < 3) {
            continue;
        }
        const Pose proximal = fit_rigid_transform(ref, cur).pose;
        bool used = false;
        for (std::size_t i = 0; i < moving_markers.size(); ++i) {
            if (frame.has(moving_markers[i])) {
                local_paths[i].push_back(proximal.apply_inverse(frame.at(moving_markers[i])));
                used = true;
            }
        }
        out.frames_used += used ? 1 : 0;
    }

    double weight_sum = 0.0;
    Vec3 weighted = Vec3::Zero();
    for (std::size_t i = 0; i < moving_markers.size(); ++i) {
        MarkerSphere ms;
        ms.marker = moving_markers[i];
        try {
            ms.fit = fit_sphere(local_paths[i]);
        } catch (const DegenerateSphere& e) {
            throw DegenerateSphere("functional joint centre, marker '" + moving_markers[i] + "': " + e.what());
        }
        ms.weight = 1.0 / (ms.fit.rms_residual * ms.fit.rms_residual + 1e-6);
        weight_sum += ms.weight;
        weighted += ms.weight * ms.fit.center;
        out.spheres.push_back(std::move(ms));
    }
    if (out.spheres.empty()) {
        throw DegenerateSphere("functional joint centre: no moving markers");
    }
    out.center = weighted / weight_sum;
    return out;
}

FunctionalCenter estimate_joint_center_functional(const TrialRecording& trajectory,
                                                  std::span<const std::string> moving_markers,
                                                  const SegmentDefinition& proximal_segment) {
    return estimate_joint_center_functional(trajectory, moving_markers,
                                            std::span<const LocalMarker>(proximal_segment.cluster));
}

namespace {

std::vector<LocalMarker> static_reference(const MarkerFrame& frame, const std::vector<std::string>& names) {
    std::vector<LocalMarker> out;
    for (const auto& n : names) {
        out.push_back({n, frame.at(n)});
    }
    return out;
}

std::vector<LocalMarker> to_local(const MarkerFrame& frame, const std::vector<std::string>& names,
                                  const Pose& pose, bool optional) {
    std::vector<LocalMarker> out;
    for (const auto& n : names) {
        if (optional && !frame.has(n)) {
            continue;
        }
        out.push_back({n, pose.apply_inverse(frame.at(n))});
    }
    return out;
}

}  // namespace

CalibrationResult calibrate_with_report(const MarkerFrame& static_frame,
                                        const TrialRecording& shoulder_circumduction,
                                        const TrialRecording& wrist_circumduction, const MarkerSet& names) {
    // Everything but the acromion is required in the static trial.
    for (Segment s : kSegments) {
        for (const auto& n : names.cluster(s)) {
            static_frame.at(n);
        }
        if (s != Segment::trunk) {
            for (const auto& n : names.landmarks(s)) {
                static_frame.at(n);
            }
        }
    }

    CalibrationResult out;
    const auto arm_cluster = names.cluster(Segment::arm);
    const auto hand_cluster = names.cluster(Segment::hand);
    out.shoulder = estimate_joint_center_functional(
        shoulder_circumduction, arm_cluster, static_reference(static_frame, names.cluster(Segment::trunk)));
    out.wrist = estimate_joint_center_functional(
        wrist_circumduction, hand_cluster, static_reference(static_frame, names.cluster(Segment::forearm)));

    out.centers.shoulder = out.shoulder.center;
    out.centers.wrist = out.wrist.center;
    out.centers.elbow = elbow_center(static_frame.at(names.elbow_medial), static_frame.at(names.elbow_lateral));

    const AnatomicalFrames frames = build_anatomical_frames(static_frame, out.centers, names);

    KinematicModel& model = out.model;
    model.static_posture = frames.segments;
    for (Segment s : kSegments) {
        auto& seg = model.segments[idx(s)];
        seg.segment = s;
        seg.cluster = to_local(static_frame, names.cluster(s), frames.segments[idx(s)], false);
        seg.landmarks = to_local(static_frame, names.landmarks(s), frames.segments[idx(s)], true);
    }

    const std::array<Vec3, kJointCount> centers{out.centers.shoulder, out.centers.elbow, out.centers.wrist};
    for (Joint j : kJoints) {
        auto& jd = model.joints[idx(j)];
        jd.joint = j;
        jd.proximal = static_cast<Segment>(idx(j));
        jd.distal = static_cast<Segment>(idx(j) + 1);
        jd.center_in_proximal = frames.segments[idx(jd.proximal)].apply_inverse(centers[idx(j)]);
        jd.center_in_distal = frames.segments[idx(jd.distal)].apply_inverse(centers[idx(j)]);
        jd.constraint = default_joint_constraint(j);
    }
    return out;
}

KinematicModel calibrate(const MarkerFrame& static_frame, const TrialRecording& shoulder_circumduction,
                         const TrialRecording& wrist_circumduction, const MarkerSet& names) {
    return calibrate_with_report(static_frame, shoulder_circumduction, wrist_circumduction, names).model;
}

}  // namespace limbgo
