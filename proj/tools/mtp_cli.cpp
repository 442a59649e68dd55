#include "mtp/app.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Mass transference toolkit"};
    app.set_version_flag("--version", std::string(mtp::kVersion));
    mtp::RunRequest req;
    std::uint64_t seed = 0;
    app.add_option("command", req.command, "Command to run")
        ->required()
        ->check(CLI::IsMember(mtp::command_names()));
    app.add_option("--config", req.config_path, "JSON config file")->required();
    app.add_option("--out", req.out_dir, "Output directory")->capture_default_str();
    auto* seed_opt = app.add_option("--seed", seed, "Override master_seed");
    app.add_option("--set", req.overrides, "KEY=VALUE override on a dotted config path (repeatable)")
        ->allow_extra_args(false);
    app.add_option("--threads", req.threads, "Worker threads; results do not depend on it")->capture_default_str();
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    if (seed_opt->count()) req.seed = seed;
    return mtp::run(req, std::cerr);
}
