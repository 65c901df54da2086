#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace rvisc {

// Outcome of a sampled property check.
struct CheckReport {
    std::string check;
    std::string model;
    long samples = 0;
    double max_violation = 0.0;
    double tolerance = 0.0;
    bool pass = true;
    nlohmann::json details = nlohmann::json::object();

    nlohmann::json to_json() const {
        nlohmann::json j = {{"check", check},
                            {"model", model},
                            {"samples", samples},
                            {"max_violation", max_violation},
                            {"tolerance", tolerance},
                            {"pass", pass}};
        if (!details.empty()) j["details"] = details;
        return j;
    }
};

}  // namespace rvisc
