#include "limbgo/eval_report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "limbgo/errors.hpp"

namespace limbgo {

namespace {

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string full(double v) { return fmt("%.17g", v); }

double to_display(const DofId& dof, double v) { return dof.is_dislocation() ? v : v * 180.0 / std::numbers::pi; }

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    out << text;
    if (!out) {
        throw IoError("failed writing '" + path.string() + "'");
    }
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

nlohmann::json counts_json(const ConstraintCounts& c) {
    return {{"go_frames", c.go_frames},
            {"elbow_angle_violations", c.elbow_angle_violations},
            {"wrist_angle_violations", c.wrist_angle_violations},
            {"elbow_dislocation_violations", c.elbow_dislocation_violations},
            {"wrist_dislocation_violations", c.wrist_dislocation_violations},
            {"segmental_frames", c.segmental_frames},
            {"segmental_elbow_angle_outside", c.segmental_elbow_angle_outside},
            {"segmental_wrist_angle_outside", c.segmental_wrist_angle_outside}};
}

nlohmann::json solver_json(const SolverSummary& s) {
    return {{"frames", s.frames},
            {"converged", s.converged},
            {"failed_frames", s.failed_frames},
            {"max_iterations", s.max_iterations},
            {"mean_iterations", s.frames > 0 ? s.total_iterations / static_cast<double>(s.frames) : 0.0},
            {"max_constraint_violation", s.max_constraint_violation}};
}

}  // namespace

double rms(std::span<const double> series) {
    if (series.empty()) {
        throw EmptySeries("rms of an empty series");
    }
    double sum = 0.0;
    for (double v : series) {
        sum += v * v;
    }
    return std::sqrt(sum / static_cast<double>(series.size()));
}

Aggregate aggregate(std::span<const double> values) {
    if (values.empty()) {
        throw EmptySeries("aggregate of an empty list");
    }
    Aggregate a;
    double sum = 0.0;
    for (double v : values) {
        sum += v;
    }
    const auto n = static_cast<double>(values.size());
    a.mean = sum / n;
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) {
            ss += (v - a.mean) * (v - a.mean);
        }
        a.sd = std::sqrt(ss / (n - 1.0));
    }
    return a;
}

std::string DofId::label() const {
    std::string out(to_string(joint));
    out += '.';
    out += is_dislocation() ? std::string("dislocation") : std::string(angle_name(joint, angle));
    return out;
}

DofId DofId::parse(std::string_view label) {
    const auto dot = label.find('.');
    if (dot == std::string_view::npos) {
        throw Error("malformed DOF label '" + std::string(label) + "'");
    }
    DofId id;
    id.joint = joint_from_string(label.substr(0, dot));
    const auto rest = label.substr(dot + 1);
    if (rest == "dislocation") {
        id.angle = -1;
        return id;
    }
    for (int i = 0; i < 3; ++i) {
        if (angle_name(id.joint, i) == rest) {
            id.angle = i;
            return id;
        }
    }
    throw Error("unknown DOF '" + std::string(label) + "'");
}

std::vector<DofId> all_dofs() {
    std::vector<DofId> out;
    for (Joint j : kJoints) {
        for (int i = 0; i < 3; ++i) {
            out.push_back({j, i});
        }
        out.push_back({j, -1});
    }
    return out;
}

std::vector<DofErrorSeries> error_series(const TrialSolution& solution,
                                         std::span<const PerJoint<Vec3>> truth_angles) {
    if (truth_angles.size() != solution.frames.size()) {
        throw MismatchedLength("solution and ground truth have different frame counts");
    }
    std::vector<DofErrorSeries> out;
    for (const DofId& dof : all_dofs()) {
        DofErrorSeries s;
        s.dof = dof;
        s.mode = solution.mode;
        const auto j = static_cast<std::size_t>(dof.joint);
        for (std::size_t k = 0; k < solution.frames.size(); ++k) {
            const FrameSolution& f = solution.frames[k];
            if (!f.ok) {
                continue;
            }
            s.errors.push_back(dof.is_dislocation()
                                   ? f.dislocations[j]
                                   : wrap_angle(f.angles[j](dof.angle) - truth_angles[k][j](dof.angle)));
        }
        out.push_back(std::move(s));
    }
    return out;
}

ConstraintCounts& ConstraintCounts::operator+=(const ConstraintCounts& o) {
    go_frames += o.go_frames;
    elbow_angle_violations += o.elbow_angle_violations;
    wrist_angle_violations += o.wrist_angle_violations;
    elbow_dislocation_violations += o.elbow_dislocation_violations;
    wrist_dislocation_violations += o.wrist_dislocation_violations;
    segmental_frames += o.segmental_frames;
    segmental_elbow_angle_outside += o.segmental_elbow_angle_outside;
    segmental_wrist_angle_outside += o.segmental_wrist_angle_outside;
    return *this;
}

SolverSummary& SolverSummary::operator+=(const SolverSummary& o) {
    frames += o.frames;
    converged += o.converged;
    failed_frames += o.failed_frames;
    max_iterations = std::max(max_iterations, o.max_iterations);
    total_iterations += o.total_iterations;
    max_constraint_violation = std::max(max_constraint_violation, o.max_constraint_violation);
    return *this;
}

const DofSummary& StudyReport::find(const DofId& dof, SolveMode mode) const {
    for (const auto& s : summary) {
        if (s.key.dof == dof && s.key.mode == mode) {
            return s;
        }
    }
    throw Error("no summary for " + dof.label() + " in mode " + std::string(to_string(mode)));
}

void finalize_report(StudyReport& report) {
    report.summary.clear();
    report.constraints = {};
    report.solver = {};
    report.failed_trials = 0;
    for (const auto& t : report.trials) {
        if (!t.ok) {
            ++report.failed_trials;
            continue;
        }
        report.constraints += t.constraints;
        report.solver += t.solver;
    }
    for (const DofId& dof : all_dofs()) {
        for (SolveMode mode : {SolveMode::go, SolveMode::segmental}) {
            if (std::find(report.modes.begin(), report.modes.end(), mode) == report.modes.end()) {
                continue;
            }
            DofSummary s;
            s.key = {dof, mode};
            for (const auto& t : report.trials) {
                if (!t.ok) {
                    continue;
                }
                const auto it = t.rms.find(s.key);
                if (it != t.rms.end()) {
                    s.values.push_back(it->second);
                }
            }
            if (s.values.empty()) {
                continue;
            }
            s.stats = aggregate(s.values);
            report.summary.push_back(std::move(s));
        }
    }
}

std::string summary_csv(const std::vector<DofSummary>& summary) {
    std::string out = "dof,mode,unit,n_trials,mean,sd\n";
    for (const auto& s : summary) {
        const DofId& d = s.key.dof;
        out += d.label() + ',' + std::string(to_string(s.key.mode)) + ',' + std::string(d.display_unit()) + ',' +
               std::to_string(s.values.size()) + ',' + fmt("%.6f", to_display(d, s.stats.mean)) + ',' +
               (s.stats.sd ? fmt("%.6f", to_display(d, *s.stats.sd)) : std::string()) + '\n';
    }
    return out;
}

std::vector<std::filesystem::path> export_report(const StudyReport& report, const std::filesystem::path& out_dir,
                                                 const ExportOptions& options) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());
    }
    std::vector<std::filesystem::path> written;

    written.push_back(out_dir / kSummaryCsv);
    write_file(written.back(), summary_csv(report.summary));

    std::string trials = "trial,seed,dof,mode,unit,rms\n";
    for (const auto& t : report.trials) {
        if (!t.ok) {
            continue;
        }
        for (const auto& [key, value] : t.rms) {
            trials += std::to_string(t.trial) + ',' + std::to_string(t.seed) + ',' + key.dof.label() + ',' +
                      std::string(to_string(key.mode)) + ',' + std::string(key.dof.unit()) + ',' + full(value) +
                      '\n';
        }
    }
    written.push_back(out_dir / kTrialsCsv);
    write_file(written.back(), trials);

    nlohmann::json j;
    j["movement"] = report.movement;
    j["master_seed"] = report.master_seed;
    j["config_hash"] = report.config_hash;
    j["config"] = nlohmann::json::parse(report.config_json);
    j["trial_seeds"] = nlohmann::json::array();
    j["failed_trials"] = nlohmann::json::array();
    for (const auto& t : report.trials) {
        j["trial_seeds"].push_back(t.seed);
        if (!t.ok) {
            j["failed_trials"].push_back({{"trial", t.trial}, {"error", t.error}});
        }
    }
    j["constraints"] = counts_json(report.constraints);
    j["solver"] = solver_json(report.solver);
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& s : report.summary) {
        nlohmann::json row = {{"dof", s.key.dof.label()},
                              {"mode", to_string(s.key.mode)},
                              {"unit", s.key.dof.display_unit()},
                              {"n_trials", s.values.size()},
                              {"mean", to_display(s.key.dof, s.stats.mean)}};
        row["sd"] = s.stats.sd ? nlohmann::json(to_display(s.key.dof, *s.stats.sd)) : nlohmann::json(nullptr);
        rows.push_back(std::move(row));
    }
    j["summary"] = std::move(rows);
    written.push_back(out_dir / kSummaryJson);
    write_file(written.back(), j.dump(2) + '\n');

    if (options.emit_plot_data) {
        // Per-trial values grouped for box plots, display units.
        nlohmann::json p = nlohmann::json::object();
        for (const auto& s : report.summary) {
            nlohmann::json values = nlohmann::json::array();
            for (double v : s.values) {
                values.push_back(to_display(s.key.dof, v));
            }
            p[s.key.dof.label()][std::string(to_string(s.key.mode))] = std::move(values);
        }
        written.push_back(out_dir / kPlotDataJson);
        write_file(written.back(), nlohmann::json{{"unit_note", "angles in deg, dislocations in mm"}, {"series", p}}
                                           .dump(2) +
                                       '\n');
    }
    return written;
}

std::vector<LongFormRow> read_long_form(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError(path.string(), 0, "cannot open file");
    }
    std::vector<LongFormRow> rows;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (n == 1) {
            if (line != "trial,seed,dof,mode,unit,rms") {
                throw ParseError(path.string(), n, "unexpected header");
            }
            continue;
        }
        if (line.empty()) {
            continue;
        }
        const auto cells = split(line);
        if (cells.size() != 6) {
            throw ParseError(path.string(), n, "expected 6 fields");
        }
        try {
            LongFormRow r;
            r.trial = std::stoi(cells[0]);
            r.seed = std::stoull(cells[1]);
            r.key.dof = DofId::parse(cells[2]);
            r.key.mode = solve_mode_from_string(cells[3]);
            if (cells[4] != r.key.dof.unit()) {
                throw Error("unit does not match DOF");
            }
            r.rms = std::stod(cells[5]);
            rows.push_back(r);
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception& e) {
            throw ParseError(path.string(), n, e.what());
        }
    }
    if (n == 0) {
        throw ParseError(path.string(), 0, "empty file");
    }
    return rows;
}

std::vector<DofSummary> summarize_long_form(std::span<const LongFormRow> rows) {
    std::map<DofModeKey, std::map<int, double>> grouped;
    for (const auto& r : rows) {
        grouped[r.key][r.trial] = r.rms;
    }
    std::vector<DofSummary> out;
    for (const DofId& dof : all_dofs()) {
        for (SolveMode mode : {SolveMode::go, SolveMode::segmental}) {
            const auto it = grouped.find({dof, mode});
            if (it == grouped.end()) {
                continue;
            }
            DofSummary s;
            s.key = {dof, mode};
            for (const auto& [trial, v] : it->second) {
                s.values.push_back(v);
            }
            s.stats = aggregate(s.values);
            out.push_back(std::move(s));
        }
    }
    return out;
}

}  // namespace limbgo
