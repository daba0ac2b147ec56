#include "limbgo/trial_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include "limbgo/errors.hpp"

namespace limbgo {

namespace {

constexpr std::string_view kRatePrefix = "# sample_rate_hz=";

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

bool is_missing(std::string_view cell) {
    if (cell.empty()) {
        return true;
    }
    if (cell.size() != 3) {
        return false;
    }
    const auto lower = [](char c) { return static_cast<char>(c | 0x20); };
    return lower(cell[0]) == 'n' && lower(cell[1]) == 'a' && lower(cell[2]) == 'n';
}

double number(std::string_view cell, const std::string& source, std::size_t line, const char* what) {
    double v = 0.0;
    if (!cell.empty() && cell.front() == '+') {
        cell.remove_prefix(1);
    }
    const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || end != cell.data() + cell.size() || !std::isfinite(v)) {
        throw ParseError(source, line, std::string("invalid ") + what + " '" + std::string(cell) + "'");
    }
    return v;
}

std::string full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

TrialRecording parse_trial_csv(std::istream& in, const std::string& source) {
    std::optional<double> rate;
    std::vector<std::string> markers;
    TrialRecording rec;
    std::string raw;
    std::size_t line = 0;
    bool have_header = false;

    while (std::getline(in, raw)) {
        ++line;
        const std::string_view text = trim(raw);
        if (text.empty()) {
            continue;
        }
        if (text.front() == '#') {
            if (text.starts_with(kRatePrefix)) {
                rate = number(trim(text.substr(kRatePrefix.size())), source, line, "sample rate");
                if (!(*rate > 0.0)) {
                    throw ParseError(source, line, "sample rate must be positive");
                }
            }
            continue;
        }
        const auto cells = split(text);
        if (!have_header) {
            if (trim(cells[0]) != "time") {
                throw ParseError(source, line, "header must start with 'time'");
            }
            if ((cells.size() - 1) % 3 != 0) {
                throw ParseError(source, line, "header must list x, y, z columns per marker");
            }
            std::set<std::string> seen;
            for (std::size_t c = 1; c < cells.size(); c += 3) {
                const std::string_view col = trim(cells[c]);
                const auto us = col.rfind('_');
                if (us == std::string_view::npos || us == 0 || col.substr(us) != "_x") {
                    throw ParseError(source, line, "column '" + std::string(col) + "' is not <marker>_x");
                }
                const std::string name(col.substr(0, us));
                if (trim(cells[c + 1]) != name + "_y" || trim(cells[c + 2]) != name + "_z") {
                    throw ParseError(source, line, "columns of marker '" + name + "' must be _x, _y, _z");
                }
                if (!seen.insert(name).second) {
                    throw ParseError(source, line, "duplicate marker '" + name + "'");
                }
                markers.push_back(name);
            }
            have_header = true;
            continue;
        }
        if (cells.size() != 1 + 3 * markers.size()) {
            throw ParseError(source, line,
                             "expected " + std::to_string(1 + 3 * markers.size()) + " fields, found " +
                                 std::to_string(cells.size()));
        }
        MarkerFrame f;
        f.time = number(trim(cells[0]), source, line, "time");
        for (std::size_t m = 0; m < markers.size(); ++m) {
            int missing = 0;
            Vec3 p;
            for (int a = 0; a < 3; ++a) {
                const std::string_view cell = trim(cells[1 + 3 * m + static_cast<std::size_t>(a)]);
                if (is_missing(cell)) {
                    ++missing;
                } else {
                    p(a) = number(cell, source, line, "coordinate");
                }
            }
            if (missing == 3) {
                continue;
            }
            if (missing != 0) {
                throw ParseError(source, line, "marker '" + markers[m] + "' is partially missing");
            }
            f.positions.emplace(markers[m], p);
        }
        rec.frames.push_back(std::move(f));
    }
    if (!have_header) {
        throw ParseError(source, line, "missing header row");
    }
    if (rec.frames.empty()) {
        throw ParseError(source, line, "no data rows");
    }
    if (rate) {
        rec.sample_rate = *rate;
    } else if (rec.frames.size() >= 2) {
        const double dt = rec.frames[1].time - rec.frames[0].time;
        if (!(dt > 0.0)) {
            throw ParseError(source, 0, "cannot infer the sample rate: times do not increase");
        }
        rec.sample_rate = 1.0 / dt;
    }
    try {
        rec.validate();
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        throw ParseError(source, 0, e.what());
    }
    return rec;
}

TrialRecording read_trial_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError(path.string(), 0, "cannot open file");
    }
    return parse_trial_csv(in, path.string());
}

MarkerFrame read_static_csv(const std::filesystem::path& path) {
    TrialRecording rec = read_trial_csv(path);
    if (rec.frames.size() != 1) {
        throw ParseError(path.string(), 0,
                         "a static trial holds exactly one frame, found " + std::to_string(rec.frames.size()));
    }
    return rec.frames.front();
}

std::string trial_csv(const TrialRecording& recording) {
    std::set<std::string> names;
    for (const auto& f : recording.frames) {
        for (const auto& [name, p] : f.positions) {
            names.insert(name);
        }
    }
    std::ostringstream out;
    out << kRatePrefix << full(recording.sample_rate) << '\n' << "time";
    for (const auto& n : names) {
        out << ',' << n << "_x," << n << "_y," << n << "_z";
    }
    out << '\n';
    for (const auto& f : recording.frames) {
        out << full(f.time);
        for (const auto& n : names) {
            const auto it = f.positions.find(n);
            if (it == f.positions.end()) {
                out << ",,,";
                continue;
            }
            for (int a = 0; a < 3; ++a) {
                out << ',' << full(it->second(a));
            }
        }
        out << '\n';
    }
    return out.str();
}

void write_trial_csv(const std::filesystem::path& path, const TrialRecording& recording) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    out << trial_csv(recording);
    if (!out) {
        throw IoError("failed writing '" + path.string() + "'");
    }
}

}  // namespace limbgo
