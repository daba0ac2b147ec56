#pragma once

#include <random>

#include "instances.hpp"
#include "limbgo/limb_model.hpp"

namespace limbgo::instances {

inline Vec3 in_ball(std::mt19937_64& rng, double radius) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    while (true) {
        const Vec3 v(u(rng), u(rng), u(rng));
        if (v.norm() <= 1.0) return radius * v;
    }
}

/// Feasible coordinates around `base`: every DOF moved, bounded angles kept
/// inside their boxes and translations inside their balls.
inline GeneralizedCoordinates random_feasible(const KinematicModel& model, const GeneralizedCoordinates& base,
                                              std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    GeneralizedCoordinates q = base;
    q.trunk.rotation = Rotation::exp(in_ball(rng, 0.5)) * q.trunk.rotation;
    q.trunk.translation += in_ball(rng, 100.0);
    q.shoulder_rotation = q.shoulder_rotation * Rotation::exp(in_ball(rng, 0.8));
    q.shoulder_offset += in_ball(rng, 5.0);
    q.elbow_angles += Vec3(u(rng), u(rng), u(rng)) * 0.5;
    q.wrist_angles += Vec3(u(rng), u(rng), u(rng)) * 0.4;
    for (Joint j : {Joint::elbow, Joint::wrist}) {
        const auto& c = model.joint(j).constraint;
        Vec3& angles = j == Joint::elbow ? q.elbow_angles : q.wrist_angles;
        Vec3& translation = j == Joint::elbow ? q.elbow_translation : q.wrist_translation;
        if (c.bounded_angle) {
            const double mid = 0.5 * (c.lower + c.upper);
            angles(*c.bounded_angle) = mid + 0.5 * (c.upper - c.lower) * u(rng);
        }
        if (c.max_dislocation) {
            translation = in_ball(rng, *c.max_dislocation);
        }
    }
    return q;
}

}  // namespace limbgo::instances
