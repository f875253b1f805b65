#include "fpkit/report.hpp"

namespace fpkit {

std::string_view verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "pass";
        case Verdict::Fail: return "fail";
        case Verdict::Inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

Verdict combine(Verdict a, Verdict b) {
    if (a == Verdict::Fail || b == Verdict::Fail) return Verdict::Fail;
    if (a == Verdict::Inconclusive || b == Verdict::Inconclusive) return Verdict::Inconclusive;
    return Verdict::Pass;
}

Verdict verdict_from_name(std::string_view name) {
    if (name == "pass") return Verdict::Pass;
    if (name == "fail") return Verdict::Fail;
    return Verdict::Inconclusive;
}

nlohmann::ordered_json ConditionReport::to_json() const {
    nlohmann::ordered_json j;
    j["id"] = id;
    j["verdict"] = std::string(verdict_name(verdict));
    nlohmann::ordered_json w = nlohmann::ordered_json::object();
    for (const auto& [k, v] : witnesses) w[k] = v;
    j["witnesses"] = std::move(w);
    if (!region.empty()) j["region"] = region;
    if (!note.empty()) j["note"] = note;
    if (!items.empty()) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& it : items) arr.push_back(it.to_json());
        j["items"] = std::move(arr);
    }
    return j;
}

ConditionReport ConditionReport::from_json(const nlohmann::ordered_json& j) {
    ConditionReport rep;
    rep.id = j.at("id").get<std::string>();
    rep.verdict = verdict_from_name(j.at("verdict").get<std::string>());
    if (j.contains("witnesses"))
        for (const auto& [k, v] : j.at("witnesses").items()) rep.witnesses[k] = v.get<double>();
    if (j.contains("region")) rep.region = j.at("region").get<std::string>();
    if (j.contains("note")) rep.note = j.at("note").get<std::string>();
    if (j.contains("items"))
        for (const auto& item : j.at("items")) rep.items.push_back(from_json(item));
    return rep;
}

} // namespace fpkit
