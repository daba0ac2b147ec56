#include "limbgo_cli/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "limbgo/errors.hpp"
#include "limbgo/eval_report.hpp"
#include "limbgo/model_io.hpp"
#include "limbgo/sim_study.hpp"
#include "limbgo/trial_io.hpp"

namespace limbgo::cli {

namespace {

enum class Level { quiet = 0, info = 1, debug = 2 };

Level log_level() {
    const char* env = std::getenv("LIMBGO_LOG");
    if (env == nullptr) {
        return Level::info;
    }
    const std::string v(env);
    if (v == "quiet" || v == "error" || v == "0") return Level::quiet;
    if (v == "debug" || v == "2") return Level::debug;
    return Level::info;
}

class Log {
public:
    explicit Log(std::ostream& err) : err_(err), level_(log_level()) {}

    void info(const std::string& msg) const {
        if (level_ >= Level::info) err_ << "limbgo: " << msg << '\n';
    }
    void debug(const std::string& msg) const {
        if (level_ >= Level::debug) err_ << "limbgo[debug]: " << msg << '\n';
    }
    void error(const std::string& msg) const { err_ << "limbgo: error: " << msg << '\n'; }

private:
    std::ostream& err_;
    Level level_;
};

std::string num(double v, const char* spec = "%.6g") {
    char buf[48];
    std::snprintf(buf, sizeof buf, spec, v + 0.0);  // no "-0"
    return buf;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config '" + path + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct StudyFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = "limbgo_out";
    std::optional<int> trials;
    std::string movement;
    std::string mode;
    bool no_measurement_noise = false;
    bool no_artefacts = false;
    bool no_noise = false;
    bool emit_plot_data = false;
    int trial_index = 1;
};

void add_common(CLI::App* cmd, StudyFlags& f) {
    cmd->add_option("--config", f.config, "Study configuration (JSON); built-in defaults otherwise")
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", f.seed, "Master seed (default 1)");
    cmd->add_option("--movement", f.movement, "shoulder-rotation (default) or pro-supination")
        ->check(CLI::IsMember({"shoulder-rotation", "pro-supination"}));
    cmd->add_flag("--no-measurement-noise", f.no_measurement_noise, "Disable Gaussian measurement noise");
    cmd->add_flag("--no-artefacts", f.no_artefacts, "Disable skin-movement artefacts");
    cmd->add_flag("--no-noise", f.no_noise, "Same as --no-measurement-noise --no-artefacts");
}

StudyConfig build_config(const StudyFlags& f) {
    StudyConfig c = f.config.empty() ? StudyConfig{} : study_config_from_json(read_text(f.config));
    if (f.seed) c.master_seed = *f.seed;
    if (f.trials) c.n_trials = *f.trials;
    if (!f.movement.empty()) c.movement = movement_from_string(f.movement);
    if (f.mode == "go") c.modes = {SolveMode::go};
    if (f.mode == "segmental") c.modes = {SolveMode::segmental};
    if (f.mode == "both") c.modes = {SolveMode::go, SolveMode::segmental};
    if (f.no_measurement_noise || f.no_noise) c.measurement_noise = false;
    if (f.no_artefacts || f.no_noise) c.artefacts = false;
    c.validate();
    return c;
}

std::vector<SolveMode> modes_from_flag(const std::string& mode) {
    if (mode == "both") return {SolveMode::go, SolveMode::segmental};
    return {solve_mode_from_string(mode)};
}

int cmd_study(const StudyFlags& f, std::ostream& out, const Log& log) {
    const StudyConfig config = build_config(f);
    log.info("study: " + std::string(to_string(config.movement)) + ", " + std::to_string(config.n_trials) +
             " trials, seed " + std::to_string(config.master_seed));
    const StudyReport report = run_study(config);
    const auto files = export_report(report, f.out, {f.emit_plot_data});
    for (const auto& p : files) {
        log.debug("wrote " + p.string());
    }

    out << "dof,mode,unit,mean,sd\n";
    for (const auto& s : report.summary) {
        const double k = s.key.dof.is_dislocation() ? 1.0 : 180.0 / std::numbers::pi;
        out << s.key.dof.label() << ',' << to_string(s.key.mode) << ',' << s.key.dof.display_unit() << ','
            << num(s.stats.mean * k) << ',' << (s.stats.sd ? num(*s.stats.sd * k) : std::string()) << '\n';
    }
    if (report.failed_trials > 0) {
        log.info(std::to_string(report.failed_trials) + " trial(s) failed; see summary.json");
    }
    const auto& c = report.constraints;
    if (c.go_violations() > 0) {
        log.error("self-check failed: " + std::to_string(c.go_violations()) + " GO constraint violation(s) in " +
                  std::to_string(c.go_frames) + " frames");
        return kSelfCheck;
    }
    log.info("self-check passed: no GO constraint violations in " + std::to_string(c.go_frames) + " frames");
    return kOk;
}

void write_truth(const std::filesystem::path& path, const GroundTruth& truth) {
    std::ofstream o(path, std::ios::binary);
    if (!o) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    o << "time";
    for (const auto& d : all_dofs()) {
        if (!d.is_dislocation()) o << ',' << d.label() << "_deg";
    }
    o << '\n';
    for (std::size_t k = 0; k < truth.angles.size(); ++k) {
        o << num(truth.recording.frames[k].time, "%.17g");
        for (const auto& d : all_dofs()) {
            if (d.is_dislocation()) continue;
            o << ',' << num(truth.angles[k][static_cast<std::size_t>(d.joint)](d.angle) * 180.0 / std::numbers::pi,
                            "%.17g");
        }
        o << '\n';
    }
}

int cmd_simulate(const StudyFlags& f, const Log& log) {
    const StudyConfig config = build_config(f);
    const SyntheticSubject subject = make_synthetic_subject(config.subject);
    const std::filesystem::path dir(f.out);
    std::filesystem::create_directories(dir);

    TrialRecording stat;
    stat.frames.push_back(subject.static_frame);
    write_trial_csv(dir / "static.csv", stat);
    write_trial_csv(dir / "circumduction_shoulder.csv", make_circumduction(subject, Joint::shoulder));
    write_trial_csv(dir / "circumduction_wrist.csv", make_circumduction(subject, Joint::wrist));

    const SimulatedTrial sim = simulate_trial(config, subject, f.trial_index);
    const std::string stem = "trial_" + std::to_string(f.trial_index);
    write_trial_csv(dir / (stem + ".csv"), sim.recording);
    write_truth(dir / (stem + "_truth.csv"), sim.truth);
    log.info("wrote synthetic subject fixtures and " + stem + " (seed " +
             std::to_string(trial_seed(config.master_seed, f.trial_index)) + ") to " + dir.string());
    return kOk;
}

int cmd_calibrate(const std::string& static_csv, const std::string& shoulder_csv, const std::string& wrist_csv,
                  const std::string& out_path, std::ostream& out, const Log& log) {
    const MarkerFrame stat = read_static_csv(static_csv);
    const TrialRecording shoulder = read_trial_csv(shoulder_csv);
    const TrialRecording wrist = read_trial_csv(wrist_csv);
    const CalibrationResult cal = calibrate_with_report(stat, shoulder, wrist);
    save_model(out_path, cal.model);

    out << "joint,marker,center_x_mm,center_y_mm,center_z_mm,radius_mm,rms_mm\n";
    const auto report = [&](const char* joint, const FunctionalCenter& c) {
        for (const auto& s : c.spheres) {
            out << joint << ',' << s.marker << ',' << num(s.fit.center(0)) << ',' << num(s.fit.center(1)) << ','
                << num(s.fit.center(2)) << ',' << num(s.fit.radius) << ',' << num(s.fit.rms_residual) << '\n';
        }
        out << joint << ",combined," << num(c.center(0)) << ',' << num(c.center(1)) << ',' << num(c.center(2))
            << ",,\n";
    };
    report("shoulder", cal.shoulder);
    report("wrist", cal.wrist);
    log.info("wrote model " + out_path);
    return kOk;
}

void check_names(const KinematicModel& model, const TrialRecording& trial) {
    std::set<std::string> known;
    for (const auto& seg : model.segments) {
        for (const auto& m : seg.cluster) known.insert(m.name);
        for (const auto& m : seg.landmarks) known.insert(m.name);
    }
    std::set<std::string> seen;
    for (const auto& f : trial.frames) {
        for (const auto& [name, p] : f.positions) seen.insert(name);
    }
    std::vector<std::string> unknown;
    for (const auto& n : seen) {
        if (!known.contains(n)) unknown.push_back(n);
    }
    std::vector<std::string> absent;
    for (const auto& n : model.tracked_markers()) {
        if (!seen.contains(n)) absent.push_back(n);
    }
    if (unknown.empty() && absent.empty()) {
        return;
    }
    std::string msg = "marker names do not match the model;";
    const auto list = [&](const char* what, const std::vector<std::string>& names) {
        if (names.empty()) return;
        msg += std::string(" ") + what + ":";
        for (const auto& n : names) msg += " " + n;
        msg += ";";
    };
    list("not in model", unknown);
    list("never observed", absent);
    msg.pop_back();
    throw Error(msg);
}

int cmd_solve(const std::string& model_path, const std::string& trial_path, const std::string& mode,
              const std::string& out_path, std::ostream& out, const Log& log) {
    const KinematicModel model = load_model(model_path);
    const TrialRecording trial = read_trial_csv(trial_path);
    check_names(model, trial);

    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path, std::ios::binary);
        if (!file) throw IoError("cannot open '" + out_path + "' for writing");
    }
    std::ostream& o = out_path.empty() ? out : file;
    o << "time,mode,ok";
    for (const auto& d : all_dofs()) {
        o << ',' << d.label() << '_' << d.display_unit();
    }
    o << ",converged,iterations,cost\n";
    std::size_t failed = 0;
    for (SolveMode m : modes_from_flag(mode)) {
        const TrialSolution sol = solve_trial(model, trial, m);
        failed += sol.failed_frames();
        for (const auto& f : sol.frames) {
            o << num(f.time, "%.17g") << ',' << to_string(m) << ',' << (f.ok ? 1 : 0);
            for (const auto& d : all_dofs()) {
                const auto j = static_cast<std::size_t>(d.joint);
                if (!f.ok) {
                    o << ',';
                } else if (d.is_dislocation()) {
                    o << ',' << num(f.dislocations[j], "%.17g");
                } else {
                    o << ',' << num(f.angles[j](d.angle) * 180.0 / std::numbers::pi, "%.17g");
                }
            }
            const bool go = m == SolveMode::go && f.ok;
            o << ',' << (go ? std::to_string(f.diagnostics.converged ? 1 : 0) : std::string()) << ','
              << (go ? std::to_string(f.diagnostics.iterations) : std::string()) << ','
              << (go ? num(f.diagnostics.final_cost, "%.17g") : std::string()) << '\n';
        }
    }
    if (failed > 0) {
        log.info(std::to_string(failed) + " frame(s) could not be solved");
    }
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    const Log log(err);
    CLI::App app{"Upper-limb bone pose estimation from skin markers with joint-constrained global optimisation"};
    app.name(args.empty() ? "limbgo" : args.front());
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Help for every subcommand");

    StudyFlags study_flags;
    auto* study = app.add_subcommand("study", "Run the simulated trial study and write report files");
    add_common(study, study_flags);
    study->add_option("--out", study_flags.out, "Output directory")->capture_default_str();
    study->add_option("--trials", study_flags.trials, "Number of trials (default 30)")->check(CLI::PositiveNumber);
    study->add_option("--mode", study_flags.mode, "go, segmental or both (default both)")
        ->check(CLI::IsMember({"go", "segmental", "both"}));
    study->add_flag("--emit-plot-data", study_flags.emit_plot_data, "Also write plot_data.json");

    StudyFlags sim_flags;
    sim_flags.out = "limbgo_sim";
    auto* simulate = app.add_subcommand("simulate", "Write synthetic-subject calibration fixtures and one trial");
    add_common(simulate, sim_flags);
    simulate->add_option("--out", sim_flags.out, "Output directory")->capture_default_str();
    simulate->add_option("--trial", sim_flags.trial_index, "Trial index (1-based)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    std::string static_csv, shoulder_csv, wrist_csv, model_out = "model.json";
    auto* cal = app.add_subcommand("calibrate", "Build a model from a static and two circumduction trials");
    cal->add_option("--static", static_csv, "Static trial CSV (one frame)")->required()->check(CLI::ExistingFile);
    cal->add_option("--shoulder", shoulder_csv, "Shoulder circumduction CSV")->required()->check(CLI::ExistingFile);
    cal->add_option("--wrist", wrist_csv, "Wrist circumduction CSV")->required()->check(CLI::ExistingFile);
    cal->add_option("--out", model_out, "Model file to write")->capture_default_str();

    std::string model_path, trial_path, solve_mode = "go", solve_out;
    auto* solve = app.add_subcommand("solve", "Solve a recorded trial against a model");
    solve->add_option("--model", model_path, "Model JSON")->required()->check(CLI::ExistingFile);
    solve->add_option("--trial", trial_path, "Trial CSV")->required()->check(CLI::ExistingFile);
    solve->add_option("--mode", solve_mode, "go, segmental or both")
        ->check(CLI::IsMember({"go", "segmental", "both"}))
        ->capture_default_str();
    solve->add_option("--out", solve_out, "Output CSV (stdout when omitted)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) {
        reversed.pop_back();
    }
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        log.error(e.what());
        err << "run with --help for usage\n";
        return kUsage;
    }

    try {
        if (*study) return cmd_study(study_flags, out, log);
        if (*simulate) return cmd_simulate(sim_flags, log);
        if (*cal) return cmd_calibrate(static_csv, shoulder_csv, wrist_csv, model_out, out, log);
        if (*solve) return cmd_solve(model_path, trial_path, solve_mode, solve_out, out, log);
    } catch (const ConfigError& e) {
        log.error(e.what());
        return kUsage;
    } catch (const std::exception& e) {
        log.error(e.what());
        return kData;
    }
    return kUsage;
}

}  // namespace limbgo::cli
