#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "limbgo/geometry.hpp"
#include "limbgo/go_solver.hpp"
#include "limbgo/sim_study.hpp"

using namespace limbgo;

namespace {

std::vector<Vec3> random_points(std::size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-100.0, 100.0);
    std::vector<Vec3> pts(n);
    for (auto& p : pts) p = Vec3(u(rng), u(rng), u(rng));
    return pts;
}

struct Fixture {
    SyntheticSubject subject = make_synthetic_subject();
    KinematicModel model = calibrate_subject(subject).model;
    StudyConfig config;
    SimulatedTrial trial = simulate_trial(config, subject, 1);
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

}  // namespace

static void BM_RigidFit(benchmark::State& state) {
    const auto ref = random_points(static_cast<std::size_t>(state.range(0)), 1);
    const Rotation r = Rotation::exp(Vec3(0.3, -0.2, 0.5));
    std::vector<Vec3> cur;
    for (const auto& p : ref) cur.push_back(r * p + Vec3(10.0, 20.0, 30.0));
    for (auto _ : state) benchmark::DoNotOptimize(fit_rigid_transform(ref, cur));
}
BENCHMARK(BM_RigidFit)->Arg(3)->Arg(6)->Arg(32);

static void BM_SphereFit(benchmark::State& state) {
    std::vector<Vec3> pts;
    for (const auto& d : random_points(static_cast<std::size_t>(state.range(0)), 2)) pts.push_back(200.0 * d.normalized());
    for (auto _ : state) benchmark::DoNotOptimize(fit_sphere(pts));
}
BENCHMARK(BM_SphereFit)->Arg(30)->Arg(300);

static void BM_SegmentalFrame(benchmark::State& state) {
    const auto& f = fixture();
    const auto& frame = f.trial.recording.frames[25];
    for (auto _ : state) benchmark::DoNotOptimize(segmental_fit(f.model, frame));
}
BENCHMARK(BM_SegmentalFrame);

static void BM_GoSolveFrame(benchmark::State& state) {
    const auto& f = fixture();
    const auto& frame = f.trial.recording.frames[25];
    const SegmentalFit seg = segmental_fit(f.model, frame);
    const WeightingScheme w = compute_weights(seg.residuals);
    const GeneralizedCoordinates start = project_to_constraints(f.model, coordinates_from_poses(f.model, seg.poses));
    for (auto _ : state) benchmark::DoNotOptimize(go_solve(f.model, frame, w, start));
}
BENCHMARK(BM_GoSolveFrame);

static void BM_StudyTrial(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state) benchmark::DoNotOptimize(run_trial(f.config, f.subject, f.model, 1));
}
BENCHMARK(BM_StudyTrial)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
