#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qtoc/model.hpp"

namespace qtoc {

// X: u = -1, Y: u = +1, F0: u = 0, Z: singular feedback on a C_B line.
enum class ArcKind { X, Y, F0, Z };

std::string to_string(ArcKind kind);
ArcKind arc_kind_from_string(const std::string& s);

// Constant control of a non-singular arc.
double bang_control(ArcKind kind);

struct Arc {
    ArcKind kind = ArcKind::Y;
    double duration = 0.0;
    std::optional<CbLine> line; // Z arcs only; resolved from the start state when absent

    friend bool operator==(const Arc&, const Arc&) = default;
};

// Arcs in chronological order.
class ControlWord {
public:
    ControlWord() = default;
    explicit ControlWord(std::vector<Arc> arcs);

    // "Y:2.0,X:0.5"; zero-duration arcs are dropped.
    static ControlWord parse(const std::string& text);

    const std::vector<Arc>& arcs() const { return arcs_; }
    bool empty() const { return arcs_.empty(); }
    std::size_t size() const { return arcs_.size(); }
    double total_time() const;
    int switch_count() const { return arcs_.empty() ? 0 : static_cast<int>(arcs_.size()) - 1; }
    bool has_singular() const;

    // Appends an arc, merging with the last one when the kind matches.
    void append(Arc arc);

    // Chronological kinds joined by '*', e.g. "Y*X" means Y first.
    std::string pattern() const;
    // Kinds with the last arc written first, the usual composition order.
    std::string composition() const;

    friend bool operator==(const ControlWord&, const ControlWord&) = default;

private:
    std::vector<Arc> arcs_;
};

// Reverses a chronological pattern "A*B*C" to composition order "C*B*A" and back.
std::string reverse_pattern(const std::string& pattern);

void to_json(nlohmann::json& j, const ControlWord& w);
void from_json(const nlohmann::json& j, ControlWord& w);

} // namespace qtoc
