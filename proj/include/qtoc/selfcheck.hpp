#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "qtoc/model.hpp"

namespace qtoc {

struct CheckResult {
    std::string name;
    std::string target; // case tag or "custom"
    bool passed = false;
    double value = 0.0;     // worst observed error, or the measured quantity
    double tolerance = 0.0;
    std::string detail;
};

struct SelfCheckReport {
    std::vector<CheckResult> checks;
    bool passed() const;
};

struct SelfCheckOptions {
    std::uint64_t seed = 20240611;
    int flow_states = 40;    // per control sign
    int purity_words = 20;
    int extremals = 10;
    int clock_states = 1000;
};

// Invariant suite on one parameter set. The Lie dimension is compared with 4
// (unital) or 6 (affine) unless Gamma == gamma_plus.
SelfCheckReport selfcheck(const ModelParams& p, const Vec2& s0, const std::string& target,
                          const SelfCheckOptions& opt = {});
// The suite over the reference cases (a)-(d).
SelfCheckReport selfcheck_reference(const SelfCheckOptions& opt = {});

nlohmann::json to_json(const SelfCheckReport& r);

} // namespace qtoc
