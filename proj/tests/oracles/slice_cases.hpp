#pragma once

// The 20 frames used for the elbow-slice oracle: every fifth frame of trial 1
// of the default shoulder-rotation study.

#include <vector>

#include "limbgo/sim_study.hpp"

namespace limbgo::instances {

struct SliceCase {
    MarkerFrame frame;
    GeneralizedCoordinates truth;
    WeightingScheme weights;
};

struct SliceCases {
    KinematicModel model;
    TrialRecording frames;  // 10 Hz, the frozen frames
    std::vector<SliceCase> cases;
};

inline SliceCases slice_cases() {
    const StudyConfig config;
    const SyntheticSubject subject = make_synthetic_subject(config.subject);
    SliceCases out;
    out.model = calibrate_subject(subject).model;
    const SimulatedTrial trial = simulate_trial(config, subject, 1);
    out.frames.sample_rate = 10.0;
    for (std::size_t k = 0; k < 100; k += 5) {
        SliceCase c;
        c.frame = trial.recording.frames[k];
        c.truth = trial.truth.coordinates[k];
        c.weights = compute_weights(segmental_fit(out.model, c.frame).residuals);
        out.frames.frames.push_back(c.frame);
        out.cases.push_back(std::move(c));
    }
    return out;
}

/// Mask freezing every tangent coordinate but elbow flexion and abduction.
inline std::bitset<GeneralizedCoordinates::kTangentSize> elbow_slice_mask() {
    std::bitset<GeneralizedCoordinates::kTangentSize> m;
    m.set();
    m.reset(GeneralizedCoordinates::kElbowAngles);
    m.reset(GeneralizedCoordinates::kElbowAngles + 1);
    return m;
}

inline constexpr double kSliceHalfRange = 0.35;  // rad, about 20 deg

}  // namespace limbgo::instances
