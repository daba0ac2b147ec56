#include "limbgo/geometry.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/SVD>

#include "limbgo/errors.hpp"

namespace limbgo {

namespace {

constexpr double kOrthonormalDrift = 1e-9;
constexpr double kAcceptableDrift = 1e-6;

double orthonormality_error(const Mat3& m) {
    return (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
}

}  // namespace

Mat3 orthonormalize(const Mat3& m) {
    Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 u = svd.matrixU();
    const Mat3& v = svd.matrixV();
    if ((u * v.transpose()).determinant() < 0.0) {
        u.col(2) = -u.col(2);
    }
    return u * v.transpose();
}

Rotation Rotation::from_matrix(const Mat3& m) {
    if (!m.allFinite()) {
        throw std::invalid_argument("rotation matrix has non-finite entries");
    }
    const double drift = orthonormality_error(m);
    if (drift > kAcceptableDrift || m.determinant() <= 0.0) {
        throw std::invalid_argument("matrix is not a proper rotation");
    }
    return Rotation(drift > kOrthonormalDrift ? orthonormalize(m) : m);
}

Rotation Rotation::from_axis_angle(const Vec3& axis, double angle) {
    const double n = axis.norm();
    if (n == 0.0) {
        return Rotation();
    }
    return Rotation(Eigen::AngleAxisd(angle, axis / n).toRotationMatrix());
}

Rotation Rotation::exp(const Vec3& rotation_vector) {
    const double angle = rotation_vector.norm();
    if (angle < 1e-300) {
        return Rotation();
    }
    return Rotation(Eigen::AngleAxisd(angle, rotation_vector / angle).toRotationMatrix());
}

Rotation Rotation::about_x(double angle) { return from_axis_angle(Vec3::UnitX(), angle); }
Rotation Rotation::about_y(double angle) { return from_axis_angle(Vec3::UnitY(), angle); }
Rotation Rotation::about_z(double angle) { return from_axis_angle(Vec3::UnitZ(), angle); }

Rotation Rotation::inverse() const { return Rotation(m_.transpose()); }

Vec3 Rotation::log() const {
    const Eigen::AngleAxisd aa(Eigen::Quaterniond(m_).normalized());
    return aa.axis() * aa.angle();
}

double Rotation::angle_to(const Rotation& other) const {
    const Eigen::AngleAxisd aa(Eigen::Quaterniond(m_.transpose() * other.m_).normalized());
    return std::abs(aa.angle());
}

Rotation Rotation::operator*(const Rotation& rhs) const {
    Mat3 product = m_ * rhs.m_;
    if (orthonormality_error(product) > kOrthonormalDrift) {
        product = orthonormalize(product);
    }
    return Rotation(product);
}

Vec3 Pose::apply_inverse(const Vec3& global) const {
    return rotation.matrix().transpose() * (global - translation);
}

Pose Pose::inverse() const {
    const Rotation inv = rotation.inverse();
    return {inv, -(inv * translation)};
}

Pose Pose::operator*(const Pose& rhs) const {
    return {rotation * rhs.rotation, rotation * rhs.translation + translation};
}

Mat3 skew(const Vec3& v) {
    Mat3 s;
    s << 0.0, -v.z(), v.y(),
         v.z(), 0.0, -v.x(),
        -v.y(), v.x(), 0.0;
    return s;
}

RigidFit fit_rigid_transform(std::span<const Vec3> reference, std::span<const Vec3> current) {
    if (reference.size() != current.size()) {
        throw MismatchedLength("rigid fit: " + std::to_string(reference.size()) +
                               " reference points vs " + std::to_string(current.size()) +
                               " current points");
    }
    const std::size_t n = reference.size();
    if (n < 3) {
        throw DegenerateCluster("rigid fit needs at least 3 markers, got " + std::to_string(n));
    }

    Vec3 ref_mean = Vec3::Zero();
    Vec3 cur_mean = Vec3::Zero();
    for (std::size_t i = 0; i < n; ++i) {
        ref_mean += reference[i];
        cur_mean += current[i];
    }
    ref_mean /= static_cast<double>(n);
    cur_mean /= static_cast<double>(n);

    Mat3 ref_scatter = Mat3::Zero();
    Mat3 cross = Mat3::Zero();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3 x = reference[i] - ref_mean;
        const Vec3 y = current[i] - cur_mean;
        ref_scatter += x * x.transpose();
        cross += y * x.transpose();
    }

    // Singular values of the centred cloud are square roots of the scatter eigenvalues.
    const Eigen::JacobiSVD<Mat3> ref_svd(ref_scatter);
    const Vec3 sv = ref_svd.singularValues().cwiseMax(0.0).cwiseSqrt();
    if (!(sv(0) > 0.0) || sv(1) < 1e-8 * sv(0)) {
        throw DegenerateCluster("rigid fit reference markers are collinear");
    }

    Eigen::JacobiSVD<Mat3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Mat3& u = svd.matrixU();
    const Mat3& v = svd.matrixV();
    Vec3 signs(1.0, 1.0, (u * v.transpose()).determinant() < 0.0 ? -1.0 : 1.0);
    const Mat3 r = u * signs.asDiagonal() * v.transpose();

    RigidFit fit;
    fit.pose.rotation = Rotation::from_matrix(r);
    fit.pose.translation = cur_mean - fit.pose.rotation * ref_mean;
    fit.rms_residual = std::sqrt(rigid_cost(fit.pose, reference, current) / static_cast<double>(n));
    return fit;
}

double rigid_cost(const Pose& pose, std::span<const Vec3> reference, std::span<const Vec3> current) {
    if (reference.size() != current.size()) {
        throw MismatchedLength("rigid cost: point lists differ in length");
    }
    double cost = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        cost += (pose.apply(reference[i]) - current[i]).squaredNorm();
    }
    return cost;
}

double wrap_angle(double angle) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double wrapped = std::remainder(angle, two_pi);  // [-pi, pi]
    if (wrapped <= -std::numbers::pi) {
        wrapped += two_pi;
    }
    return wrapped;
}

double sin_pi(double x) {
    const double r = std::remainder(x, 2.0);  // [-1, 1]
    if (r == 0.0 || r == 1.0 || r == -1.0) {
        return 0.0;
    }
    return std::sin(std::numbers::pi * r);
}

double sphere_cost(const Vec3& center, double radius, std::span<const Vec3> points) {
    double cost = 0.0;
    for (const Vec3& p : points) {
        const double e = (p - center).norm() - radius;
        cost += e * e;
    }
    return cost;
}

SphereFit fit_sphere(std::span<const Vec3> points) {
    const std::size_t n = points.size();
    if (n < 4) {
        throw DegenerateSphere("sphere fit needs at least 4 points, got " + std::to_string(n));
    }

    // Algebraic seed on centred, scaled data: |q|^2 = 2 c.q + k.
    Vec3 mean = Vec3::Zero();
    for (const Vec3& p : points) {
        mean += p;
    }
    mean /= static_cast<double>(n);
    double scale = 0.0;
    for (const Vec3& p : points) {
        scale += (p - mean).squaredNorm();
    }
    scale = std::sqrt(scale / static_cast<double>(n));
    if (!(scale > 0.0)) {
        throw DegenerateSphere("sphere fit points are coincident");
    }

    Eigen::MatrixXd design(n, 4);
    Eigen::VectorXd rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3 q = (points[i] - mean) / scale;
        design.row(static_cast<Eigen::Index>(i)) << 2.0 * q.transpose(), 1.0;
        rhs(static_cast<Eigen::Index>(i)) = q.squaredNorm();
    }
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv(3) < 1e-8 * sv(0)) {
        throw DegenerateSphere("sphere fit points are coplanar; centre is unobservable");
    }
    const Eigen::Vector4d x = svd.solve(rhs);
    const Vec3 cq = x.head<3>();
    const double r2 = x(3) + cq.squaredNorm();
    if (!(r2 > 0.0)) {
        throw DegenerateSphere("sphere fit algebraic solution has no real radius");
    }

    SphereFit fit;
    fit.center = mean + scale * cq;
    fit.radius = scale * std::sqrt(r2);
    double cost = sphere_cost(fit.center, fit.radius, points);

    // Geometric Gauss-Newton refinement on (c, r).
    Eigen::MatrixXd jac(n, 4);
    Eigen::VectorXd res(n);
    for (int iter = 0; iter < 200; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            const Vec3 d = points[i] - fit.center;
            const double dist = d.norm();
            const auto row = static_cast<Eigen::Index>(i);
            res(row) = dist - fit.radius;
            if (dist > 0.0) {
                jac.row(row) << -(d / dist).transpose(), -1.0;
            } else {
                jac.row(row) << 0.0, 0.0, 0.0, -1.0;
            }
        }
        const Eigen::Vector4d step = jac.colPivHouseholderQr().solve(-res);
        // Rounding level of the cost; a full step that only loses this much
        // is taken, otherwise GN stalls short of the minimizer.
        double noise = 0.0;
        for (Eigen::Index i = 0; i < res.size(); ++i) {
            noise += std::abs(res(i)) * (std::abs(res(i)) + 2.0 * fit.radius);
        }
        noise *= 8.0 * std::numeric_limits<double>::epsilon();

        double t = 1.0;
        bool improved = false;
        double new_cost = cost;
        Vec3 new_center;
        double new_radius = 0.0;
        for (int halving = 0; halving < 40; ++halving, t *= 0.5) {
            new_center = fit.center + t * step.head<3>();
            new_radius = fit.radius + t * step(3);
            new_cost = sphere_cost(new_center, new_radius, points);
            if (new_cost <= cost || (t == 1.0 && new_cost <= cost + noise)) {
                improved = true;
                break;
            }
        }
        fit.iterations = iter + 1;
        if (!improved) {
            break;
        }
        const double change = std::abs(cost - new_cost);
        fit.center = new_center;
        fit.radius = new_radius;
        cost = new_cost;
        // Slow linear convergence on shallow caps can keep the cost flat while
        // the centre still drifts, so the step must be small too.
        if (change < 1e-12 && t * step.norm() < 1e-9) {
            break;
        }
    }

    if (!(fit.radius > 0.0)) {
        throw DegenerateSphere("sphere fit converged to a non-positive radius");
    }
    fit.rms_residual = std::sqrt(cost / static_cast<double>(n));
    return fit;
}

}  // namespace limbgo
