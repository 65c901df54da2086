#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace rvisc::cli {

// Bad flags, malformed JSON or a config that fails the schema (exit 2).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Kind { Number, Integer, Boolean, String, Object, Array, NumberOrString };
using Schema = std::map<std::string, Kind>;

// Throws UsageError on unknown keys or wrong types. "seed" and "threads" are
// accepted everywhere.
void validate(const nlohmann::json& config, const Schema& schema, const std::string& where);

struct Context {
    // Effective configuration; commands fill in defaults so reports carry it.
    nlohmann::json config = nlohmann::json::object();
    std::filesystem::path out = ".";
    std::uint64_t seed = 1;
};

struct Outcome {
    bool pass = true;
    nlohmann::json results = nlohmann::json::object();
};

std::vector<std::string> command_names();

// Runs one subcommand, writes its CSV files and <command>.json into ctx.out
// and returns the outcome.
Outcome run_command(const std::string& name, Context& ctx);

// Shortest round-trip decimal form.
std::string fmt(double x);

}  // namespace rvisc::cli
