#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "limbgo/go_solver.hpp"
#include "limbgo/limb_model.hpp"

namespace limbgo {

/// Root mean square. Throws EmptySeries.
double rms(std::span<const double> series);

struct Aggregate {
    double mean = 0.0;
    /// Sample standard deviation (n - 1); absent for a single value.
    std::optional<double> sd;
};

/// Throws EmptySeries for an empty list.
Aggregate aggregate(std::span<const double> values);

/// One reported degree of freedom: an Euler angle of a joint, or its dislocation.
struct DofId {
    Joint joint = Joint::shoulder;
    /// Euler angle index 0..2, or -1 for the dislocation.
    int angle = -1;

    bool is_dislocation() const { return angle < 0; }
    /// "elbow.abduction_adduction", "wrist.dislocation", ...
    std::string label() const;
    /// Unit of raw values: "rad" or "mm".
    std::string_view unit() const { return is_dislocation() ? "mm" : "rad"; }
    /// Unit in human-facing tables: "deg" or "mm".
    std::string_view display_unit() const { return is_dislocation() ? "mm" : "deg"; }

    static DofId parse(std::string_view label);

    auto operator<=>(const DofId&) const = default;
};

/// All twelve DOFs in report order.
std::vector<DofId> all_dofs();

struct DofErrorSeries {
    DofId dof;
    SolveMode mode = SolveMode::go;
    std::vector<double> errors;  // rad (wrapped to (-pi, pi]) or mm
};

/// Per-frame errors of a solved trial against ground-truth angles (zero
/// ground-truth dislocation). Failed frames are skipped.
std::vector<DofErrorSeries> error_series(const TrialSolution& solution,
                                         std::span<const PerJoint<Vec3>> truth_angles);

struct DofModeKey {
    DofId dof;
    SolveMode mode = SolveMode::go;

    auto operator<=>(const DofModeKey&) const = default;
};

/// Literal per-frame constraint checks over the GO-mode output.
struct ConstraintCounts {
    std::size_t go_frames = 0;
    std::size_t elbow_angle_violations = 0;
    std::size_t wrist_angle_violations = 0;
    std::size_t elbow_dislocation_violations = 0;
    std::size_t wrist_dislocation_violations = 0;
    /// Segmental frames whose elbow/wrist bounded angle leaves the laxity interval.
    std::size_t segmental_frames = 0;
    std::size_t segmental_elbow_angle_outside = 0;
    std::size_t segmental_wrist_angle_outside = 0;

    std::size_t go_violations() const {
        return elbow_angle_violations + wrist_angle_violations + elbow_dislocation_violations +
               wrist_dislocation_violations;
    }
    ConstraintCounts& operator+=(const ConstraintCounts& o);
};

struct SolverSummary {
    std::size_t frames = 0;
    std::size_t converged = 0;
    std::size_t failed_frames = 0;
    int max_iterations = 0;
    double total_iterations = 0.0;
    double max_constraint_violation = 0.0;

    SolverSummary& operator+=(const SolverSummary& o);
};

struct TrialResult {
    int trial = 0;  // 1-based
    std::uint64_t seed = 0;
    bool ok = true;
    std::string error;
    std::map<DofModeKey, double> rms;  // rad or mm
    ConstraintCounts constraints;
    SolverSummary solver;
};

struct DofSummary {
    DofModeKey key;
    std::vector<double> values;  // per-trial RMS of successful trials, rad or mm
    Aggregate stats;
};

struct StudyReport {
    std::string movement;
    std::uint64_t master_seed = 0;
    std::string config_json;  // canonical
    std::string config_hash;
    std::vector<SolveMode> modes;
    std::vector<TrialResult> trials;
    std::vector<DofSummary> summary;
    ConstraintCounts constraints;
    SolverSummary solver;
    std::size_t failed_trials = 0;

    const DofSummary& find(const DofId& dof, SolveMode mode) const;
};

/// Aggregates the per-trial values of successful trials into `summary`,
/// and sums the constraint and solver counters.
void finalize_report(StudyReport& report);

struct ExportOptions {
    bool emit_plot_data = false;
};

inline constexpr const char* kSummaryCsv = "summary.csv";
inline constexpr const char* kTrialsCsv = "trials.csv";
inline constexpr const char* kSummaryJson = "summary.json";
inline constexpr const char* kPlotDataJson = "plot_data.json";

/// Writes summary.csv (mean/SD per DOF and mode, degrees and mm),
/// trials.csv (every per-trial RMS, radians and mm, full precision),
/// summary.json (config hash, seeds, constraint and solver counts) and,
/// on request, plot_data.json. Returns the written paths. Throws IoError.
std::vector<std::filesystem::path> export_report(const StudyReport& report, const std::filesystem::path& out_dir,
                                                 const ExportOptions& options = {});

/// Formats the summary table exactly as summary.csv.
std::string summary_csv(const std::vector<DofSummary>& summary);

struct LongFormRow {
    int trial = 0;
    std::uint64_t seed = 0;
    DofModeKey key;
    double rms = 0.0;
};

/// Parses a trials.csv file. Throws ParseError.
std::vector<LongFormRow> read_long_form(const std::filesystem::path& path);

/// Re-aggregates long-form rows into summary rows (report DOF order).
std::vector<DofSummary> summarize_long_form(std::span<const LongFormRow> rows);

}  // namespace limbgo
