#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace limbgo {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Proper rotation stored as an orthonormal 3x3 matrix with det = +1.
///
/// Products drifting away from orthonormality by more than 1e-9 are pulled
/// back onto SO(3) with a polar decomposition.
class Rotation {
public:
    Rotation() : m_(Mat3::Identity()) {}

    /// Accepts a matrix within 1e-6 of SO(3) and re-orthonormalizes it.
    /// Throws std::invalid_argument for anything further away or improper.
    static Rotation from_matrix(const Mat3& m);

    /// Rotation of `angle` radians about the (not necessarily unit) `axis`.
    static Rotation from_axis_angle(const Vec3& axis, double angle);

    /// Exponential map of a rotation vector (axis * angle).
    static Rotation exp(const Vec3& rotation_vector);

    static Rotation about_x(double angle);
    static Rotation about_y(double angle);
    static Rotation about_z(double angle);

    const Mat3& matrix() const noexcept { return m_; }

    Rotation inverse() const;

    /// Rotation vector in the ball of radius pi.
    Vec3 log() const;

    /// Geodesic angle to another rotation, in [0, pi].
    double angle_to(const Rotation& other) const;

    Vec3 operator*(const Vec3& v) const { return m_ * v; }
    Rotation operator*(const Rotation& rhs) const;

    Vec3 axis_x() const { return m_.col(0); }
    Vec3 axis_y() const { return m_.col(1); }
    Vec3 axis_z() const { return m_.col(2); }

private:
    explicit Rotation(const Mat3& m) : m_(m) {}
    Mat3 m_;
};

/// Nearest orthonormal matrix (polar factor). Flips to det = +1 when needed.
Mat3 orthonormalize(const Mat3& m);

/// Rigid transform mapping segment-local coordinates to the global frame:
/// global = rotation * local + translation (mm).
struct Pose {
    Rotation rotation;
    Vec3 translation = Vec3::Zero();

    static Pose identity() { return {}; }

    Vec3 apply(const Vec3& local) const { return rotation * local + translation; }
    Vec3 apply_inverse(const Vec3& global) const;

    Pose inverse() const;
    Pose operator*(const Pose& rhs) const;
};

Mat3 skew(const Vec3& v);

// ---------------------------------------------------------------------------
// Least-squares rigid registration

struct RigidFit {
    Pose pose;
    double rms_residual = 0.0;  // mm
};

/// Least-squares rigid motion taking `reference` onto `current`:
/// minimizes sum |R x_i + d - y_i|^2 through centroid subtraction, the SVD
/// of the cross-covariance and a sign correction on the smallest singular
/// direction so a reflection is never returned.
///
/// Throws MismatchedLength when sizes differ and DegenerateCluster when
/// fewer than three points are given or the reference cloud is collinear
/// (second singular value below 1e-8 of the first).
RigidFit fit_rigid_transform(std::span<const Vec3> reference, std::span<const Vec3> current);

/// Sum of squared registration errors of `pose` for the given pairs.
double rigid_cost(const Pose& pose, std::span<const Vec3> reference, std::span<const Vec3> current);

// ---------------------------------------------------------------------------
// Euler angles

enum class Axis { x = 0, y = 1, z = 2 };

/// Three rotation axes, applied intrinsically (each about the already
/// rotated frame) or extrinsically (each about the fixed frame).
class EulerSequence {
public:
    /// Throws std::invalid_argument when two consecutive axes coincide.
    EulerSequence(Axis first, Axis second, Axis third, bool intrinsic = true);

    /// Parses labels such as "ZXY" (intrinsic) or "zxy" (extrinsic).
    static EulerSequence parse(const std::string& label);

    /// Default joint convention: intrinsic Z-X-Y, third angle about the
    /// segment's longitudinal Y axis.
    static EulerSequence zxy() { return EulerSequence(Axis::z, Axis::x, Axis::y, true); }

    const std::array<Axis, 3>& axes() const noexcept { return axes_; }
    bool intrinsic() const noexcept { return intrinsic_; }

    /// Uppercase letters for intrinsic sequences, lowercase for extrinsic.
    std::string label() const;

    bool operator==(const EulerSequence&) const = default;

private:
    std::array<Axis, 3> axes_;
    bool intrinsic_;
};

struct EulerAngles {
    Vec3 angles = Vec3::Zero();  // rad, in the order of the sequence
    /// Set when the middle angle sits within 1e-6 rad of a singular value.
    /// The third angle is then 0 and the first carries the combined rotation.
    bool gimbal_lock = false;
};

EulerAngles euler_angles(const Rotation& rotation, const EulerSequence& sequence);

Rotation compose_euler(const Vec3& angles, const EulerSequence& sequence);

/// Partial derivatives of the composed matrix with respect to each angle.
std::array<Mat3, 3> compose_euler_derivatives(const Vec3& angles, const EulerSequence& sequence);

/// Wraps an angle into (-pi, pi].
double wrap_angle(double angle);

// ---------------------------------------------------------------------------
// Sphere fitting

struct SphereFit {
    Vec3 center = Vec3::Zero();  // mm
    double radius = 0.0;         // mm
    double rms_residual = 0.0;   // mm
    int iterations = 0;
};

/// Geometric least-squares sphere: minimizes sum (|p_i - c| - r)^2. An
/// algebraic linear fit seeds Gauss-Newton refinement, which stops once the
/// cost changes by less than 1e-12 and the step is below 1e-9 mm.
///
/// Throws DegenerateSphere for n < 4 or when the smallest singular value of
/// the algebraic design matrix is below 1e-8 of the largest (coplanar data).
SphereFit fit_sphere(std::span<const Vec3> points);

/// sum (|p_i - c| - r)^2
double sphere_cost(const Vec3& center, double radius, std::span<const Vec3> points);

/// sin(pi * x) that is exactly zero at integers.
double sin_pi(double x);

}  // namespace limbgo
