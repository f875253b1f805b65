#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace fpkit {

enum class Verdict { Pass, Fail, Inconclusive };

std::string_view verdict_name(Verdict v);

// Combination order: Fail dominates, then Inconclusive, then Pass.
Verdict combine(Verdict a, Verdict b);

// Structured verdict for one tested condition. Fail verdicts carry a witness
// (point or stamp) in `witnesses`/`note`; pass verdicts carry the estimated
// constants. Composite checks keep their sub-conditions in `items`.
struct ConditionReport {
    std::string id;
    Verdict verdict = Verdict::Inconclusive;
    std::map<std::string, double> witnesses;
    std::string region;
    std::string note;
    std::vector<ConditionReport> items;

    nlohmann::ordered_json to_json() const;
    static ConditionReport from_json(const nlohmann::ordered_json& j);

    ConditionReport& with(std::string key, double value) {
        witnesses[std::move(key)] = value;
        return *this;
    }
};

Verdict verdict_from_name(std::string_view name);

} // namespace fpkit
