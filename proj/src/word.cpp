#include "qtoc/word.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "qtoc/errors.hpp"

namespace qtoc {

std::string to_string(ArcKind kind) {
    switch (kind) {
    case ArcKind::X: return "X";
    case ArcKind::Y: return "Y";
    case ArcKind::F0: return "F0";
    case ArcKind::Z: return "Z";
    }
    return "?";
}

ArcKind arc_kind_from_string(const std::string& s) {
    if (s == "X") return ArcKind::X;
    if (s == "Y") return ArcKind::Y;
    if (s == "F0") return ArcKind::F0;
    if (s == "Z") return ArcKind::Z;
    throw ValidationError("unknown arc kind '" + s + "' (expected X, Y, Z or F0)");
}

double bang_control(ArcKind kind) {
    switch (kind) {
    case ArcKind::X: return -1.0;
    case ArcKind::Y: return 1.0;
    case ArcKind::F0: return 0.0;
    case ArcKind::Z: break;
    }
    throw ValidationError("singular arcs have no constant control");
}

ControlWord::ControlWord(std::vector<Arc> arcs) {
    for (Arc& a : arcs) {
        if (!std::isfinite(a.duration) || a.duration < 0.0) {
            throw ValidationError("arc durations must be finite and nonnegative");
        }
        if (a.duration > 0.0) {
            append(a);
        }
    }
}

ControlWord ControlWord::parse(const std::string& text) {
    std::vector<Arc> arcs;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) {
            continue;
        }
        const auto colon = item.find(':');
        if (colon == std::string::npos) {
            throw ValidationError("word item '" + item + "' must be KIND:duration");
        }
        const std::string kind = item.substr(0, colon);
        const std::string dur = item.substr(colon + 1);
        double value = 0.0;
        const auto res = std::from_chars(dur.data(), dur.data() + dur.size(), value);
        if (res.ec != std::errc() || res.ptr != dur.data() + dur.size()) {
            throw ValidationError("invalid duration '" + dur + "' in word item '" + item + "'");
        }
        arcs.push_back({arc_kind_from_string(kind), value, std::nullopt});
    }
    return ControlWord(std::move(arcs));
}

double ControlWord::total_time() const {
    double t = 0.0;
    for (const Arc& a : arcs_) {
        t += a.duration;
    }
    return t;
}

bool ControlWord::has_singular() const {
    for (const Arc& a : arcs_) {
        if (a.kind == ArcKind::Z) {
            return true;
        }
    }
    return false;
}

void ControlWord::append(Arc arc) {
    if (!(arc.duration > 0.0)) {
        return;
    }
    if (!arcs_.empty() && arcs_.back().kind == arc.kind && arcs_.back().line == arc.line) {
        arcs_.back().duration += arc.duration;
        return;
    }
    arcs_.push_back(arc);
}

std::string ControlWord::pattern() const {
    std::string out;
    for (const Arc& a : arcs_) {
        if (!out.empty()) {
            out += '*';
        }
        out += to_string(a.kind);
    }
    return out;
}

std::string ControlWord::composition() const { return reverse_pattern(pattern()); }

std::string reverse_pattern(const std::string& pattern) {
    std::vector<std::string> parts;
    std::stringstream ss(pattern);
    std::string item;
    while (std::getline(ss, item, '*')) {
        parts.push_back(item);
    }
    std::string out;
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
        if (!out.empty()) {
            out += '*';
        }
        out += *it;
    }
    return out;
}

void to_json(nlohmann::json& j, const ControlWord& w) {
    nlohmann::json arcs = nlohmann::json::array();
    for (const Arc& a : w.arcs()) {
        arcs.push_back({{"kind", to_string(a.kind)}, {"duration", a.duration}});
    }
    j = nlohmann::json{{"arcs", arcs}, {"total_time", w.total_time()}};
}

void from_json(const nlohmann::json& j, ControlWord& w) {
    if (!j.contains("arcs") || !j.at("arcs").is_array()) {
        throw ValidationError("ControlWord JSON: missing 'arcs' array");
    }
    std::vector<Arc> arcs;
    for (const auto& item : j.at("arcs")) {
        arcs.push_back({arc_kind_from_string(item.at("kind").get<std::string>()),
                        item.at("duration").get<double>(), std::nullopt});
    }
    w = ControlWord(std::move(arcs));
}

} // namespace qtoc
