#include <set>

#include <nlohmann/json.hpp>

#include "limbgo/errors.hpp"
#include "limbgo/sim_study.hpp"

namespace limbgo {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) {
        throw ConfigError(where + " must be an object");
    }
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& [key, value] : obj.items()) {
        if (!keys.contains(key)) {
            throw ConfigError("unknown key '" + key + "' in " + where);
        }
    }
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
    if (!obj.contains(key)) {
        return;
    }
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + " has the wrong type");
    }
}

ArtefactDirection direction_from_string(const std::string& s) {
    if (s == "per-axis") return ArtefactDirection::per_axis;
    if (s == "fixed-direction") return ArtefactDirection::fixed_direction;
    throw ConfigError("artefacts.direction must be per-axis or fixed-direction");
}

const char* to_string(ArtefactDirection d) {
    return d == ArtefactDirection::per_axis ? "per-axis" : "fixed-direction";
}

}  // namespace

StudyConfig study_config_from_json(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
    reject_unknown(root, "config",
                   {"movement", "n_trials", "master_seed", "measurement_noise", "artefacts", "modes", "solver",
                    "subject", "threads"});
    StudyConfig c;
    if (root.contains("movement")) {
        std::string m;
        read(root, "movement", m, "config");
        c.movement = movement_from_string(m);
    }
    read(root, "n_trials", c.n_trials, "config");
    read(root, "master_seed", c.master_seed, "config");
    read(root, "threads", c.threads, "config");

    if (root.contains("measurement_noise")) {
        const json& n = root["measurement_noise"];
        reject_unknown(n, "measurement_noise", {"enabled", "sigma_mm", "redraw_per_trial"});
        read(n, "enabled", c.measurement_noise, "measurement_noise");
        read(n, "sigma_mm", c.noise.sigma_mm, "measurement_noise");
        read(n, "redraw_per_trial", c.redraw_measurement_noise, "measurement_noise");
    }
    if (root.contains("artefacts")) {
        const json& a = root["artefacts"];
        reject_unknown(a, "artefacts", {"enabled", "direction", "share_phase_across_axes"});
        read(a, "enabled", c.artefacts, "artefacts");
        if (a.contains("direction")) {
            std::string d;
            read(a, "direction", d, "artefacts");
            c.artefact_direction = direction_from_string(d);
        }
        read(a, "share_phase_across_axes", c.share_artefact_phase, "artefacts");
    }
    if (root.contains("modes")) {
        std::vector<std::string> modes;
        read(root, "modes", modes, "config");
        c.modes.clear();
        for (const auto& m : modes) {
            try {
                c.modes.push_back(solve_mode_from_string(m));
            } catch (const Error& e) {
                throw ConfigError(e.what());
            }
        }
    }
    if (root.contains("solver")) {
        const json& s = root["solver"];
        reject_unknown(s, "solver", {"max_iterations", "gradient_tolerance", "weights", "trunk"});
        read(s, "max_iterations", c.solver.solver.max_iterations, "solver");
        read(s, "gradient_tolerance", c.solver.solver.gradient_tolerance, "solver");
        if (s.contains("weights")) {
            std::string w;
            read(s, "weights", w, "solver");
            if (w == "per-frame") {
                c.solver.weights = WeightUpdate::per_frame;
            } else if (w == "trial-constant") {
                c.solver.weights = WeightUpdate::trial_constant;
            } else {
                throw ConfigError("solver.weights must be per-frame or trial-constant");
            }
        }
        if (s.contains("trunk")) {
            std::string t;
            read(s, "trunk", t, "solver");
            if (t != "optimize" && t != "fixed") {
                throw ConfigError("solver.trunk must be optimize or fixed");
            }
            c.solver.fix_trunk = t == "fixed";
        }
    }
    if (root.contains("subject")) {
        const json& s = root["subject"];
        reject_unknown(s, "subject",
                       {"upper_arm_mm", "forearm_mm", "hand_mm", "shoulder_abduction_deg", "elbow_flexion_deg",
                        "wrist_flexion_deg", "wrist_abduction_deg", "shoulder_rotation_deg"});
        auto& a = c.subject;
        read(s, "upper_arm_mm", a.upper_arm_mm, "subject");
        read(s, "forearm_mm", a.forearm_mm, "subject");
        read(s, "hand_mm", a.hand_mm, "subject");
        read(s, "shoulder_abduction_deg", a.shoulder_abduction_deg, "subject");
        read(s, "elbow_flexion_deg", a.elbow_flexion_deg, "subject");
        read(s, "wrist_flexion_deg", a.wrist_flexion_deg, "subject");
        read(s, "wrist_abduction_deg", a.wrist_abduction_deg, "subject");
        read(s, "shoulder_rotation_deg", a.shoulder_rotation_deg, "subject");
    }
    c.validate();
    return c;
}

// `threads` is left out: it changes scheduling, never results.
std::string to_json(const StudyConfig& c) {
    json modes = json::array();
    for (SolveMode m : c.modes) {
        modes.push_back(std::string(to_string(m)));
    }
    const auto& a = c.subject;
    // nlohmann::json objects are key-sorted, which makes the dump canonical.
    const json j = {
        {"movement", std::string(to_string(c.movement))},
        {"n_trials", c.n_trials},
        {"master_seed", c.master_seed},
        {"measurement_noise",
         {{"enabled", c.measurement_noise},
          {"sigma_mm", c.noise.sigma_mm},
          {"redraw_per_trial", c.redraw_measurement_noise}}},
        {"artefacts",
         {{"enabled", c.artefacts},
          {"direction", to_string(c.artefact_direction)},
          {"share_phase_across_axes", c.share_artefact_phase}}},
        {"modes", modes},
        {"solver",
         {{"max_iterations", c.solver.solver.max_iterations},
          {"gradient_tolerance", c.solver.solver.gradient_tolerance},
          {"weights", c.solver.weights == WeightUpdate::per_frame ? "per-frame" : "trial-constant"},
          {"trunk", c.solver.fix_trunk ? "fixed" : "optimize"}}},
        {"subject",
         {{"upper_arm_mm", a.upper_arm_mm},
          {"forearm_mm", a.forearm_mm},
          {"hand_mm", a.hand_mm},
          {"shoulder_abduction_deg", a.shoulder_abduction_deg},
          {"elbow_flexion_deg", a.elbow_flexion_deg},
          {"wrist_flexion_deg", a.wrist_flexion_deg},
          {"wrist_abduction_deg", a.wrist_abduction_deg},
          {"shoulder_rotation_deg", a.shoulder_rotation_deg}}},
    };
    return j.dump();
}

}  // namespace limbgo
