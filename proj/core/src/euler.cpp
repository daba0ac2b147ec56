#include <cctype>
#include <cmath>
#include <stdexcept>

#include "limbgo/geometry.hpp"

namespace limbgo {

namespace {

constexpr double kGimbalNeighborhood = 1e-6;

int index(Axis a) { return static_cast<int>(a); }

Rotation about(Axis a, double angle) {
    switch (a) {
        case Axis::x: return Rotation::about_x(angle);
        case Axis::y: return Rotation::about_y(angle);
        case Axis::z: return Rotation::about_z(angle);
    }
    return Rotation();
}

Vec3 unit(Axis a) { return Vec3::Unit(index(a)); }

// Angle of a matrix that is (close to) a pure rotation about `a`.
double angle_about(Axis a, const Mat3& m) {
    const int i = index(a);
    const int j = (i + 1) % 3;
    const int k = (i + 2) % 3;
    return std::atan2(m(k, j), m(j, j));
}

// Decomposition of R = R_a(alpha) R_b(beta) R_c(gamma), rotations about the moving frame.
EulerAngles decompose_intrinsic(const Mat3& r, const std::array<Axis, 3>& axes) {
    const int i = index(axes[0]);
    const int j = index(axes[1]);
    const bool proper = axes[0] == axes[2];
    const int k = proper ? 3 - i - j : index(axes[2]);
    const double s = (j == (i + 1) % 3) ? 1.0 : -1.0;

    EulerAngles out;
    double beta = 0.0;
    if (proper) {
        const double sin_beta = std::hypot(r(i, j), r(i, k));
        beta = std::atan2(sin_beta, r(i, i));
        out.gimbal_lock = sin_beta < kGimbalNeighborhood;
        if (!out.gimbal_lock) {
            out.angles = Vec3(std::atan2(r(j, i), -s * r(k, i)), beta,
                              std::atan2(r(i, j), s * r(i, k)));
        }
    } else {
        const double cos_beta = std::hypot(r(i, i), r(i, j));
        beta = std::atan2(s * r(i, k), cos_beta);
        out.gimbal_lock = cos_beta < kGimbalNeighborhood;
        if (!out.gimbal_lock) {
            out.angles = Vec3(std::atan2(-s * r(j, k), r(k, k)), beta,
                              std::atan2(-s * r(i, j), r(i, i)));
        }
    }
    if (out.gimbal_lock) {
        // Third angle pinned to zero: R = R_a(alpha) R_b(beta).
        const Mat3 first = r * about(axes[1], beta).matrix().transpose();
        out.angles = Vec3(angle_about(axes[0], first), beta, 0.0);
    }
    return out;
}

}  // namespace

EulerSequence::EulerSequence(Axis first, Axis second, Axis third, bool intrinsic)
    : axes_{first, second, third}, intrinsic_(intrinsic) {
    if (first == second || second == third) {
        throw std::invalid_argument("Euler sequence has repeated consecutive axes");
    }
}

EulerSequence EulerSequence::parse(const std::string& label) {
    if (label.size() != 3) {
        throw std::invalid_argument("Euler sequence label must have 3 letters: '" + label + "'");
    }
    const bool upper = std::isupper(static_cast<unsigned char>(label[0])) != 0;
    std::array<Axis, 3> axes{};
    for (std::size_t n = 0; n < 3; ++n) {
        const char c = label[n];
        if ((std::isupper(static_cast<unsigned char>(c)) != 0) != upper) {
            throw std::invalid_argument("Euler sequence label mixes case: '" + label + "'");
        }
        switch (std::tolower(static_cast<unsigned char>(c))) {
            case 'x': axes[n] = Axis::x; break;
            case 'y': axes[n] = Axis::y; break;
            case 'z': axes[n] = Axis::z; break;
            default: throw std::invalid_argument("unknown axis in Euler sequence '" + label + "'");
        }
    }
    return EulerSequence(axes[0], axes[1], axes[2], upper);
}

std::string EulerSequence::label() const {
    std::string out;
    for (Axis a : axes_) {
        const char c = "xyz"[index(a)];
        out.push_back(intrinsic_ ? static_cast<char>(std::toupper(c)) : c);
    }
    return out;
}

Rotation compose_euler(const Vec3& angles, const EulerSequence& sequence) {
    const auto& ax = sequence.axes();
    if (sequence.intrinsic()) {
        return about(ax[0], angles(0)) * about(ax[1], angles(1)) * about(ax[2], angles(2));
    }
    return about(ax[2], angles(2)) * about(ax[1], angles(1)) * about(ax[0], angles(0));
}

std::array<Mat3, 3> compose_euler_derivatives(const Vec3& angles, const EulerSequence& sequence) {
    const auto& ax = sequence.axes();
    const Mat3 a = about(ax[0], angles(0)).matrix();
    const Mat3 b = about(ax[1], angles(1)).matrix();
    const Mat3 c = about(ax[2], angles(2)).matrix();
    const Mat3 ka = skew(unit(ax[0]));
    const Mat3 kb = skew(unit(ax[1]));
    const Mat3 kc = skew(unit(ax[2]));
    if (sequence.intrinsic()) {
        return {ka * a * b * c, a * kb * b * c, a * b * kc * c};
    }
    return {c * b * ka * a, c * kb * b * a, kc * c * b * a};
}

EulerAngles euler_angles(const Rotation& rotation, const EulerSequence& sequence) {
    const auto& ax = sequence.axes();
    if (sequence.intrinsic()) {
        return decompose_intrinsic(rotation.matrix(), ax);
    }
    // Extrinsic (a, b, c) equals intrinsic (c, b, a) with the angle order reversed.
    EulerAngles rev = decompose_intrinsic(rotation.matrix(), {ax[2], ax[1], ax[0]});
    EulerAngles out;
    out.gimbal_lock = rev.gimbal_lock;
    out.angles = Vec3(rev.angles(2), rev.angles(1), rev.angles(0));
    if (out.gimbal_lock) {
        // Keep the convention: third angle zero, combined rotation on the first.
        const double beta = out.angles(1);
        const Mat3 first = about(ax[1], beta).matrix().transpose() * rotation.matrix();
        out.angles = Vec3(angle_about(ax[0], first), beta, 0.0);
    }
    return out;
}

}  // namespace limbgo
