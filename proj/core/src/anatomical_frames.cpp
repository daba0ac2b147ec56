#include <cmath>
#include <string>

#include "limbgo/errors.hpp"
#include "limbgo/limb_model.hpp"

namespace limbgo {

namespace {

constexpr double kMinCross = 1e-6;

Vec3 unit(const Vec3& v, const std::string& what) {
    const double n = v.norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw DegenerateFrame(what + ": defining vector has zero length");
    }
    return v / n;
}

Vec3 cross_unit(const Vec3& a, const Vec3& b, const std::string& what) {
    const Vec3 c = unit(a, what).cross(unit(b, what));
    const double n = c.norm();
    if (n < kMinCross) {
        throw DegenerateFrame(what + ": defining vectors are parallel");
    }
    return c / n;
}

Pose frame(const Vec3& x, const Vec3& y, const Vec3& z, const Vec3& origin) {
    Mat3 m;
    m.col(0) = x;
    m.col(1) = y;
    m.col(2) = z;
    return {Rotation::from_matrix(m), origin};
}

// Y given, Z = seed ^ Y, X = Y ^ Z.
Pose frame_from_y(const Vec3& y_dir, const Vec3& z_seed, const Vec3& origin, const std::string& what) {
    const Vec3 y = unit(y_dir, what);
    const Vec3 z = cross_unit(z_seed, y, what);
    return frame(y.cross(z), y, z, origin);
}

}  // namespace

AnatomicalFrames build_anatomical_frames(const MarkerFrame& static_frame, const JointCenters& centers,
                                         const MarkerSet& names) {
    const auto& f = static_frame;
    AnatomicalFrames out;

    const Vec3& c7 = f.at(names.c7);
    const Vec3& l3 = f.at(names.l3);
    out.segments[0] = frame_from_y(c7 - l3, f.at(names.sternum) - l3, c7, "trunk frame");

    // Arm Z: forearm longitudinal axis (elbow -> wrist) crossed with the arm Y axis.
    out.segments[1] = frame_from_y(centers.shoulder - centers.elbow, centers.wrist - centers.elbow,
                                   centers.shoulder, "arm frame");

    out.segments[2] = frame_from_y(centers.elbow - centers.wrist,
                                   f.at(names.styloid_anterior) - f.at(names.styloid_posterior),
                                   centers.elbow, "forearm frame");

    const Vec3& hw = f.at(names.hand_wrist);
    const Vec3& hp = f.at(names.hand_posterior);
    const Vec3& ha = f.at(names.hand_anterior);
    const Vec3 barycentre = (hw + hp + ha) / 3.0;
    out.segments[3] = frame_from_y(hw - barycentre, ha - hp, centers.wrist, "hand frame");

    if (f.has(names.chin) && f.has(names.forehead) && f.has(names.temple_left) &&
        f.has(names.temple_right)) {
        const Vec3 y = unit(f.at(names.forehead) - f.at(names.chin), "head frame");
        const Vec3 x = cross_unit(y, f.at(names.temple_right) - f.at(names.temple_left), "head frame");
        out.head = frame(x, y, x.cross(y), 0.5 * (f.at(names.temple_left) + f.at(names.temple_right)));
    }

    if (f.has(names.acromion)) {
        const Vec3& acromion = f.at(names.acromion);
        const Vec3 z = unit(acromion - c7, "shoulder girdle frame");
        const Vec3 x = cross_unit(c7 - l3, z, "shoulder girdle frame");
        out.shoulder_girdle = frame(x, z.cross(x), z, acromion);
    }
    return out;
}

}  // namespace limbgo
