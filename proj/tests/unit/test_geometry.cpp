#include <algorithm>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "frozen.hpp"
#include "instances.hpp"
#include "oracles.hpp"
#include "limbgo/errors.hpp"
#include "limbgo/geometry.hpp"

using namespace limbgo;

namespace {

constexpr double kPi = std::numbers::pi;

double rotation_gap(const Mat3& a, const Mat3& b) {
    return Rotation::from_matrix(a).angle_to(Rotation::from_matrix(b));
}

}  // namespace

TEST(RigidFit, IdenticalSetsGiveIdentity) {
    const std::vector<Vec3> pts{{0, 0, 0}, {40, 0, 0}, {0, 55, 0}, {10, 10, 30}};
    const RigidFit f = fit_rigid_transform(pts, pts);
    EXPECT_LT((f.pose.rotation.matrix() - Mat3::Identity()).norm(), 1e-12);
    EXPECT_LT(f.pose.translation.norm(), 1e-12);
    EXPECT_LT(f.rms_residual, 1e-12);
}

TEST(RigidFit, ExactMotionRecovered) {
    const std::vector<Vec3> ref{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    const Rotation r = Rotation::about_z(kPi / 2);
    const Vec3 t(1, 2, 3);
    std::vector<Vec3> cur;
    for (const auto& p : ref) cur.push_back(r * p + t);
    const RigidFit f = fit_rigid_transform(ref, cur);
    Mat3 expected;
    expected << 0, -1, 0, 1, 0, 0, 0, 0, 1;
    EXPECT_LT((f.pose.rotation.matrix() - expected).norm(), 1e-12);
    EXPECT_LT((f.pose.translation - t).norm(), 1e-12);
    EXPECT_LT(f.rms_residual, 1e-9);
}

TEST(RigidFit, NeverReturnsReflection) {
    // Mirror image of the reference: the best proper rotation is still proper.
    const std::vector<Vec3> ref{{0, 0, 0}, {30, 0, 0}, {0, 40, 0}, {0, 0, 50}};
    std::vector<Vec3> cur;
    for (const auto& p : ref) cur.emplace_back(-p.x(), p.y(), p.z());
    const RigidFit f = fit_rigid_transform(ref, cur);
    EXPECT_NEAR(f.pose.rotation.matrix().determinant(), 1.0, 1e-12);
}

TEST(RigidFit, Errors) {
    const std::vector<Vec3> three{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    const std::vector<Vec3> two{{0, 0, 0}, {1, 0, 0}};
    const std::vector<Vec3> line{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
    EXPECT_THROW(fit_rigid_transform(three, two), MismatchedLength);
    EXPECT_THROW(fit_rigid_transform(two, two), DegenerateCluster);
    EXPECT_THROW(fit_rigid_transform(line, line), DegenerateCluster);
}

TEST(RigidFit, MatchesFrozenOracle) {
    const auto rows = fixtures::read_table(fixtures::data_dir() / "oracles" / "rigid.csv");
    ASSERT_EQ(rows.size(), 100u);
    for (const auto& row : rows) {
        const auto inst = instances::rigid_instance(static_cast<std::uint64_t>(row[0]));
        const RigidFit f = fit_rigid_transform(inst.reference, inst.current);
        Mat3 r;
        for (int i = 0; i < 9; ++i) r(i / 3, i % 3) = row[1 + i];
        const Vec3 t(row[10], row[11], row[12]);
        EXPECT_LT(rotation_gap(f.pose.rotation.matrix(), r), 1e-7) << "instance " << row[0];
        EXPECT_LT((f.pose.translation - t).norm(), 1e-5) << "instance " << row[0];
        EXPECT_NEAR(f.rms_residual, row[13], 1e-3) << "instance " << row[0];
        // The oracle can only be worse or equal.
        EXPECT_LE(rigid_cost(f.pose, inst.reference, inst.current),
                  row[13] * row[13] * static_cast<double>(inst.reference.size()) * (1 + 1e-9) + 1e-12);
    }
}

TEST(RigidFit, MatchesLiveOracleOnSomeInstances) {
    for (std::uint64_t k : {0u, 17u, 63u}) {
        const auto inst = instances::rigid_instance(k);
        const auto o = oracle::rigid_fit(inst.reference, inst.current);
        const RigidFit f = fit_rigid_transform(inst.reference, inst.current);
        EXPECT_LT(rotation_gap(f.pose.rotation.matrix(), o.rotation), 1e-7);
        EXPECT_LT((f.pose.translation - o.translation).norm(), 1e-5);
        EXPECT_NEAR(f.rms_residual, o.rms, 1e-3);
    }
}

TEST(RigidFit, InvariantToRelabeling) {
    std::mt19937_64 rng(11);
    for (int k = 0; k < 20; ++k) {
        auto inst = instances::rigid_instance(200 + k);
        const RigidFit a = fit_rigid_transform(inst.reference, inst.current);
        std::vector<std::size_t> perm(inst.reference.size());
        for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<Vec3> ref, cur;
        for (std::size_t i : perm) {
            ref.push_back(inst.reference[i]);
            cur.push_back(inst.current[i]);
        }
        const RigidFit b = fit_rigid_transform(ref, cur);
        EXPECT_LT(a.pose.rotation.angle_to(b.pose.rotation), 1e-10);
        EXPECT_LT((a.pose.translation - b.pose.translation).norm(), 1e-8);
        EXPECT_NEAR(a.rms_residual, b.rms_residual, 1e-10);
    }
}

TEST(Rotation, ExpLogRoundTrip) {
    std::mt19937_64 rng(3);
    for (int k = 0; k < 500; ++k) {
        const Mat3 m = instances::random_rotation(rng);
        const Rotation r = Rotation::from_matrix(m);
        EXPECT_LT((Rotation::exp(r.log()).matrix() - m).norm(), 1e-9);
        EXPECT_LE(r.log().norm(), kPi + 1e-12);
    }
}

TEST(Rotation, RejectsImproperMatrices) {
    Mat3 reflect = Mat3::Identity();
    reflect(0, 0) = -1;
    EXPECT_THROW(Rotation::from_matrix(reflect), std::invalid_argument);
    EXPECT_THROW(Rotation::from_matrix(2.0 * Mat3::Identity()), std::invalid_argument);
}

TEST(Euler, IdentityIsZero) {
    const EulerAngles e = euler_angles(Rotation(), EulerSequence::zxy());
    EXPECT_LT(e.angles.norm(), 1e-15);
    EXPECT_FALSE(e.gimbal_lock);
}

TEST(Euler, RotationAboutThirdAxis) {
    const EulerAngles e = euler_angles(Rotation::about_y(kPi / 3), EulerSequence::zxy());
    EXPECT_NEAR(e.angles(0), 0.0, 1e-15);
    EXPECT_NEAR(e.angles(1), 0.0, 1e-15);
    EXPECT_NEAR(e.angles(2), kPi / 3, 1e-15);
}

TEST(Euler, RoundTripAllSequences) {
    const std::array<Axis, 3> axes{Axis::x, Axis::y, Axis::z};
    std::mt19937_64 rng(5);
    for (bool intrinsic : {true, false}) {
        for (Axis a : axes) {
            for (Axis b : axes) {
                for (Axis c : axes) {
                    if (a == b || b == c) continue;
                    const EulerSequence seq(a, b, c, intrinsic);
                    for (int k = 0; k < 1000; ++k) {
                        const Mat3 m = instances::random_rotation(rng);
                        const EulerAngles e = euler_angles(Rotation::from_matrix(m), seq);
                        ASSERT_LT((compose_euler(e.angles, seq).matrix() - m).norm(), 1e-9)
                            << seq.label() << " sample " << k;
                    }
                }
            }
        }
    }
}

TEST(Euler, GimbalLockStillRecomposes) {
    const EulerSequence seq = EulerSequence::zxy();
    const Rotation r = compose_euler(Vec3(0.3, kPi / 2, -0.4), seq);
    const EulerAngles e = euler_angles(r, seq);
    EXPECT_TRUE(e.gimbal_lock);
    EXPECT_EQ(e.angles(2), 0.0);
    EXPECT_LT((compose_euler(e.angles, seq).matrix() - r.matrix()).norm(), 1e-9);
}

TEST(Euler, DerivativesMatchFiniteDifferences) {
    const EulerSequence seq = EulerSequence::zxy();
    const Vec3 a(0.4, -0.7, 1.1);
    const auto d = compose_euler_derivatives(a, seq);
    for (int i = 0; i < 3; ++i) {
        Vec3 hp = a, hm = a;
        hp(i) += 1e-6;
        hm(i) -= 1e-6;
        const Mat3 fd = (compose_euler(hp, seq).matrix() - compose_euler(hm, seq).matrix()) / 2e-6;
        EXPECT_LT((fd - d[i]).norm(), 1e-8);
    }
}

TEST(Euler, Labels) {
    EXPECT_EQ(EulerSequence::parse("ZXY"), EulerSequence::zxy());
    EXPECT_EQ(EulerSequence::parse("zxy").label(), "zxy");
    EXPECT_THROW(EulerSequence::parse("ZZY"), std::invalid_argument);
    EXPECT_THROW(EulerSequence::parse("ZxY"), std::invalid_argument);
}

TEST(WrapAngle, Range) {
    EXPECT_DOUBLE_EQ(wrap_angle(kPi), kPi);
    EXPECT_DOUBLE_EQ(wrap_angle(-kPi), kPi);
    EXPECT_NEAR(wrap_angle(3 * kPi / 2), -kPi / 2, 1e-15);
    EXPECT_EQ(wrap_angle(0.25), 0.25);
}

TEST(SinPi, ExactZerosAtIntegers) {
    for (int k = -4; k <= 4; ++k) EXPECT_EQ(sin_pi(k), 0.0);
    EXPECT_EQ(sin_pi(0.5), 1.0);
}

TEST(SphereFit, ExactPoints) {
    const Vec3 c(10, -5, 3);
    std::vector<Vec3> pts;
    for (int i = 0; i < 20; ++i) {
        const double z = -1.0 + 2.0 * (i + 0.5) / 20.0;
        const double phi = i * 2.399963229728653;
        const double s = std::sqrt(1 - z * z);
        pts.push_back(c + 150.0 * Vec3(s * std::cos(phi), s * std::sin(phi), z));
    }
    const SphereFit f = fit_sphere(pts);
    EXPECT_LT((f.center - c).norm(), 1e-6);
    EXPECT_NEAR(f.radius, 150.0, 1e-6);
    EXPECT_LT(f.rms_residual, 1e-9);
}

TEST(SphereFit, CoplanarPointsAreDegenerate) {
    std::vector<Vec3> circle;
    for (int i = 0; i < 12; ++i) circle.emplace_back(80 * std::cos(i * 0.5), 80 * std::sin(i * 0.5), 7.0);
    EXPECT_THROW(fit_sphere(circle), DegenerateSphere);
    EXPECT_THROW(fit_sphere(std::vector<Vec3>(circle.begin(), circle.begin() + 3)), DegenerateSphere);
}

TEST(SphereFit, MatchesFrozenOracle) {
    const auto rows = fixtures::read_table(fixtures::data_dir() / "oracles" / "sphere.csv");
    ASSERT_EQ(rows.size(), 100u);
    for (const auto& row : rows) {
        const auto inst = instances::sphere_instance(static_cast<std::uint64_t>(row[0]));
        const SphereFit f = fit_sphere(inst.points);
        EXPECT_LT((f.center - Vec3(row[1], row[2], row[3])).norm(), 1e-5) << "instance " << row[0];
        EXPECT_NEAR(f.radius, row[4], 1e-5) << "instance " << row[0];
        EXPECT_NEAR(f.rms_residual, row[5], 1e-3) << "instance " << row[0];
    }
}

TEST(SphereFit, MatchesLiveOracleOnSomeInstances) {
    for (std::uint64_t k : {2u, 40u, 99u}) {
        const auto inst = instances::sphere_instance(k);
        const auto o = oracle::sphere_fit(inst.points);
        const SphereFit f = fit_sphere(inst.points);
        EXPECT_LT((f.center - o.center).norm(), 1e-5);
        EXPECT_NEAR(f.radius, o.radius, 1e-5);
        EXPECT_NEAR(f.rms_residual, o.rms, 1e-3);
    }
}

TEST(SphereFit, ResidualInvariantUnderRigidMotion) {
    std::mt19937_64 rng(21);
    for (int k = 0; k < 20; ++k) {
        const auto inst = instances::sphere_instance(300 + k);
        const Mat3 r = instances::random_rotation(rng);
        const Vec3 t(100.0 * k, -50.0, 3.0 * k);
        std::vector<Vec3> moved;
        for (const auto& p : inst.points) moved.push_back(r * p + t);
        const SphereFit a = fit_sphere(inst.points);
        const SphereFit b = fit_sphere(moved);
        EXPECT_NEAR(a.rms_residual, b.rms_residual, 1e-9);
        EXPECT_NEAR(a.radius, b.radius, 1e-9);
        EXPECT_LT((r * a.center + t - b.center).norm(), 1e-9);
    }
}
