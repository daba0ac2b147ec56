#include "limbgo/model_io.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "limbgo/errors.hpp"

namespace limbgo {

namespace {

using nlohmann::json;

constexpr int kFormatVersion = 1;

json vec(const Vec3& v) { return json::array({v(0), v(1), v(2)}); }

Vec3 vec(const json& j) {
    if (!j.is_array() || j.size() != 3) {
        throw std::invalid_argument("expected a 3-vector");
    }
    return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

json markers(const std::vector<LocalMarker>& list) {
    json out = json::array();
    for (const auto& m : list) {
        out.push_back({{"name", m.name}, {"local_mm", vec(m.local)}});
    }
    return out;
}

std::vector<LocalMarker> markers(const json& j) {
    std::vector<LocalMarker> out;
    for (const auto& m : j) {
        out.push_back({m.at("name").get<std::string>(), vec(m.at("local_mm"))});
    }
    return out;
}

}  // namespace

std::string model_to_json(const KinematicModel& model) {
    json j;
    j["format"] = "limbgo-model";
    j["version"] = kFormatVersion;
    j["units"] = {{"length", "mm"}, {"angle", "rad"}};
    j["euler_sequence"] = model.sequence.label();
    json segs = json::array();
    for (std::size_t i = 0; i < model.segments.size(); ++i) {
        const auto& s = model.segments[i];
        const Pose& p = model.static_posture[i];
        json rot = json::array();
        for (int r = 0; r < 3; ++r) {
            rot.push_back(json::array({p.rotation.matrix()(r, 0), p.rotation.matrix()(r, 1), p.rotation.matrix()(r, 2)}));
        }
        segs.push_back({{"segment", to_string(s.segment)},
                        {"cluster", markers(s.cluster)},
                        {"landmarks", markers(s.landmarks)},
                        {"static_pose", {{"rotation", rot}, {"translation_mm", vec(p.translation)}}}});
    }
    j["segments"] = segs;
    json joints = json::array();
    for (const auto& d : model.joints) {
        json c = json::object();
        c["bounded_angle"] = d.constraint.bounded_angle ? json(*d.constraint.bounded_angle) : json(nullptr);
        c["lower_rad"] = d.constraint.lower;
        c["upper_rad"] = d.constraint.upper;
        c["max_dislocation_mm"] =
            d.constraint.max_dislocation ? json(*d.constraint.max_dislocation) : json(nullptr);
        joints.push_back({{"joint", to_string(d.joint)},
                          {"proximal", to_string(d.proximal)},
                          {"distal", to_string(d.distal)},
                          {"center_in_proximal_mm", vec(d.center_in_proximal)},
                          {"center_in_distal_mm", vec(d.center_in_distal)},
                          {"constraint", c}});
    }
    j["joints"] = joints;
    return j.dump(2) + '\n';
}

KinematicModel model_from_json(const std::string& text, const std::string& source) {
    try {
        const json j = json::parse(text);
        if (j.at("format").get<std::string>() != "limbgo-model" || j.at("version").get<int>() != kFormatVersion) {
            throw std::invalid_argument("not a version-1 limbgo model");
        }
        const auto& units = j.at("units");
        if (units.at("length") != "mm" || units.at("angle") != "rad") {
            throw std::invalid_argument("unsupported units");
        }
        KinematicModel m;
        m.sequence = EulerSequence::parse(j.at("euler_sequence").get<std::string>());
        const auto& segs = j.at("segments");
        if (segs.size() != m.segments.size()) {
            throw std::invalid_argument("expected 4 segments");
        }
        for (std::size_t i = 0; i < segs.size(); ++i) {
            const auto& s = segs[i];
            auto& out = m.segments[i];
            out.segment = segment_from_string(s.at("segment").get<std::string>());
            if (static_cast<std::size_t>(out.segment) != i) {
                throw std::invalid_argument("segments out of order");
            }
            out.cluster = markers(s.at("cluster"));
            out.landmarks = markers(s.at("landmarks"));
            const auto& pose = s.at("static_pose");
            Mat3 r;
            for (int a = 0; a < 3; ++a) {
                r.row(a) = vec(pose.at("rotation").at(static_cast<std::size_t>(a))).transpose();
            }
            m.static_posture[i] = {Rotation::from_matrix(r), vec(pose.at("translation_mm"))};
        }
        const auto& joints = j.at("joints");
        if (joints.size() != m.joints.size()) {
            throw std::invalid_argument("expected 3 joints");
        }
        for (std::size_t i = 0; i < joints.size(); ++i) {
            const auto& d = joints[i];
            auto& out = m.joints[i];
            out.joint = joint_from_string(d.at("joint").get<std::string>());
            if (static_cast<std::size_t>(out.joint) != i) {
                throw std::invalid_argument("joints out of order");
            }
            out.proximal = segment_from_string(d.at("proximal").get<std::string>());
            out.distal = segment_from_string(d.at("distal").get<std::string>());
            out.center_in_proximal = vec(d.at("center_in_proximal_mm"));
            out.center_in_distal = vec(d.at("center_in_distal_mm"));
            const auto& c = d.at("constraint");
            if (!c.at("bounded_angle").is_null()) {
                const int a = c.at("bounded_angle").get<int>();
                if (a < 0 || a > 2) {
                    throw std::invalid_argument("bounded_angle must be 0, 1 or 2");
                }
                out.constraint.bounded_angle = a;
            }
            out.constraint.lower = c.at("lower_rad").get<double>();
            out.constraint.upper = c.at("upper_rad").get<double>();
            if (!c.at("max_dislocation_mm").is_null()) {
                out.constraint.max_dislocation = c.at("max_dislocation_mm").get<double>();
            }
        }
        return m;
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception& e) {
        throw ParseError(source, 0, std::string("invalid model: ") + e.what());
    }
}

void save_model(const std::filesystem::path& path, const KinematicModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    out << model_to_json(model);
    if (!out) {
        throw IoError("failed writing '" + path.string() + "'");
    }
}

KinematicModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError(path.string(), 0, "cannot open file");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return model_from_json(ss.str(), path.string());
}

bool same_model(const KinematicModel& a, const KinematicModel& b) {
    if (a.sequence.label() != b.sequence.label()) {
        return false;
    }
    for (std::size_t i = 0; i < a.segments.size(); ++i) {
        const auto& s = a.segments[i];
        const auto& t = b.segments[i];
        if (s.segment != t.segment || s.cluster != t.cluster || s.landmarks != t.landmarks ||
            a.static_posture[i].rotation.matrix() != b.static_posture[i].rotation.matrix() ||
            a.static_posture[i].translation != b.static_posture[i].translation) {
            return false;
        }
    }
    for (std::size_t i = 0; i < a.joints.size(); ++i) {
        const auto& p = a.joints[i];
        const auto& q = b.joints[i];
        if (p.joint != q.joint || p.proximal != q.proximal || p.distal != q.distal ||
            p.center_in_proximal != q.center_in_proximal || p.center_in_distal != q.center_in_distal ||
            !(p.constraint == q.constraint)) {
            return false;
        }
    }
    return true;
}

}  // namespace limbgo
