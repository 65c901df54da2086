#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "cli.hpp"
#include "rvisc/errors.hpp"
#include "rvisc/parallel.hpp"

int main(int argc, char** argv) {
    using rvisc::cli::UsageError;
    CLI::App app{"rvisc: curvature checks, jets and a monotone solver on model manifolds"};
    app.require_subcommand(1);
    std::string config_path, out_dir = ".";
    long long seed = -1;
    int threads = 0;
    for (const auto& name : rvisc::cli::command_names()) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed, "random seed (overrides the config)")->check(CLI::NonNegativeNumber);
        sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    rvisc::cli::Context ctx;
    ctx.out = out_dir;
    try {
        if (!config_path.empty()) {
            std::ifstream f(config_path);
            try {
                ctx.config = nlohmann::json::parse(f);
            } catch (const nlohmann::json::parse_error& e) {
                throw UsageError(std::string("malformed JSON in ") + config_path + ": " + e.what());
            }
            if (!ctx.config.is_object()) throw UsageError("config must be a JSON object");
        }
        if (ctx.config.contains("seed")) {
            if (!ctx.config["seed"].is_number_unsigned()) throw UsageError("'seed' must be a nonnegative integer");
            ctx.seed = ctx.config["seed"].get<std::uint64_t>();
        }
        if (seed >= 0) ctx.seed = static_cast<std::uint64_t>(seed);
        if (ctx.config.contains("threads")) {
            if (!ctx.config["threads"].is_number_unsigned()) throw UsageError("'threads' must be a nonnegative integer");
            if (threads == 0) threads = ctx.config["threads"].get<int>();
        }
        if (threads > 0) rvisc::set_thread_count(threads);
        const auto outcome = rvisc::cli::run_command(command, ctx);
        std::cout << command << ": " << (outcome.pass ? "PASS" : "FAIL") << " (" << ctx.out.string() << ")\n";
        return outcome.pass ? 0 : 1;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const rvisc::ArgumentError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
