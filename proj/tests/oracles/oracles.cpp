#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Geometry>

namespace limbgo::oracle {

namespace {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Vec4 = Eigen::Vector4d;

Mat3 rotation_of(const Vec3& rv) {
    const double a = rv.norm();
    if (a == 0.0) {
        return Mat3::Identity();
    }
    return Eigen::AngleAxisd(a, rv / a).toRotationMatrix();
}

double rigid_cost(const Vec6& x, std::span<const Vec3> ref, std::span<const Vec3> cur) {
    const Mat3 r = rotation_of(x.head<3>());
    double c = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        c += (r * ref[i] + x.tail<3>() - cur[i]).squaredNorm();
    }
    return c;
}

double sphere_cost(const Vec4& x, std::span<const Vec3> pts) {
    double c = 0.0;
    for (const auto& p : pts) {
        const double e = (p - x.head<3>()).norm() - x(3);
        c += e * e;
    }
    return c;
}

// Pattern search on a full 3^N stencil: move to the best neighbour, halve
// the steps when the centre wins.
template <int N, class F>
Eigen::Matrix<double, N, 1> pattern_search(F&& cost, Eigen::Matrix<double, N, 1> x, Eigen::Matrix<double, N, 1> step,
                                           double min_step) {
    double best = cost(x);
    int stencil = 1;
    for (int i = 0; i < N; ++i) stencil *= 3;
    while (step.maxCoeff() > min_step) {
        Eigen::Matrix<double, N, 1> best_x = x;
        for (int code = 0; code < stencil; ++code) {
            Eigen::Matrix<double, N, 1> y = x;
            int c = code;
            for (int i = 0; i < N; ++i, c /= 3) {
                y(i) += (c % 3 - 1) * step(i);
            }
            const double v = cost(y);
            if (v < best) {
                best = v;
                best_x = y;
            }
        }
        if (best_x == x) {
            step *= 0.5;
        } else {
            x = best_x;
        }
    }
    return x;
}

Vec3 mean(std::span<const Vec3> pts) {
    Vec3 m = Vec3::Zero();
    for (const auto& p : pts) m += p;
    return m / static_cast<double>(pts.size());
}

}  // namespace

RigidOracle rigid_fit(std::span<const Vec3> reference, std::span<const Vec3> current, double min_step) {
    const Vec3 mx = mean(reference);
    const Vec3 my = mean(current);
    double extent = 1.0;
    for (const auto& p : current) extent = std::max(extent, (p - my).norm());

    // Coarse sweep of the rotation ball.
    const double pi = std::numbers::pi;
    const int n = 8;
    Vec6 best = Vec6::Zero();
    double best_cost = std::numeric_limits<double>::infinity();
    for (int i = -n; i <= n; ++i) {
        for (int j = -n; j <= n; ++j) {
            for (int k = -n; k <= n; ++k) {
                const Vec3 rv = Vec3(i, j, k) * (pi / n);
                if (rv.norm() > pi) continue;
                Vec6 x;
                x << rv, my - rotation_of(rv) * mx;
                const double c = rigid_cost(x, reference, current);
                if (c < best_cost) {
                    best_cost = c;
                    best = x;
                }
            }
        }
    }
    Vec6 step;
    step << Vec3::Constant(pi / n), Vec3::Constant(extent / 4.0);
    const auto cost = [&](const Vec6& x) { return rigid_cost(x, reference, current); };
    const Vec6 x = pattern_search<6>(cost, best, step, min_step);

    RigidOracle out;
    out.rotation = rotation_of(x.head<3>());
    out.translation = x.tail<3>();
    out.rms = std::sqrt(cost(x) / static_cast<double>(reference.size()));
    return out;
}

SphereOracle sphere_fit(std::span<const Vec3> points, double min_step) {
    Vec3 lo = points.front(), hi = points.front();
    for (const auto& p : points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const Vec3 mid = 0.5 * (lo + hi);
    const double extent = (hi - lo).maxCoeff();
    const int n = 12;
    const double h = 3.0 * extent / n;
    Vec4 best = Vec4::Zero();
    double best_cost = std::numeric_limits<double>::infinity();
    for (int i = -n; i <= n; ++i) {
        for (int j = -n; j <= n; ++j) {
            for (int k = -n; k <= n; ++k) {
                const Vec3 c = mid + h * Vec3(i, j, k);
                double r = 0.0;
                for (const auto& p : points) r += (p - c).norm();
                Vec4 x;
                x << c, r / static_cast<double>(points.size());
                const double v = sphere_cost(x, points);
                if (v < best_cost) {
                    best_cost = v;
                    best = x;
                }
            }
        }
    }
    const auto cost = [&](const Vec4& x) { return sphere_cost(x, points); };
    const Vec4 x = pattern_search<4>(cost, best, Vec4::Constant(h), min_step);
    SphereOracle out;
    out.center = x.head<3>();
    out.radius = x(3);
    out.rms = std::sqrt(cost(x) / static_cast<double>(points.size()));
    return out;
}

ElbowSliceOracle elbow_slice(const KinematicModel& model, const MarkerFrame& frame, const WeightingScheme& weights,
                             const GeneralizedCoordinates& q, double half_range) {
    const JointConstraint& box = model.joint(Joint::elbow).constraint;
    const double lo = box.lower;
    const double hi = box.upper;
    const auto cost = [&](double f, double a) {
        GeneralizedCoordinates x = q;
        x.elbow_angles(0) = f;
        x.elbow_angles(1) = a;
        return go_cost(model, frame, weights, x);
    };

    double f_lo = q.elbow_angles(0) - half_range;
    double f_hi = q.elbow_angles(0) + half_range;
    double a_lo = lo;
    double a_hi = hi;
    ElbowSliceOracle best{q.elbow_angles(0), std::clamp(q.elbow_angles(1), lo, hi),
                          std::numeric_limits<double>::infinity()};
    for (int level = 0; level < 14; ++level) {
        const int nf = level == 0 ? 400 : 20;
        const int na = level == 0 ? 40 : 20;
        for (int i = 0; i <= nf; ++i) {
            const double f = f_lo + (f_hi - f_lo) * i / nf;
            for (int j = 0; j <= na; ++j) {
                const double a = a_lo + (a_hi - a_lo) * j / na;
                const double c = cost(f, a);
                if (c < best.cost) {
                    best = {f, a, c};
                }
            }
        }
        // Next level: two cells around the best point, clipped to the box.
        const double df = 2.0 * (f_hi - f_lo) / nf;
        const double da = 2.0 * (a_hi - a_lo) / na;
        f_lo = best.flexion - df;
        f_hi = best.flexion + df;
        a_lo = std::max(lo, best.abduction - da);
        a_hi = std::min(hi, best.abduction + da);
    }
    return best;
}

}  // namespace limbgo::oracle
