#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fedbatch/app/commands.hpp"

using namespace fedbatch;

namespace {

int fail(int code, const std::string& what) {
    std::fprintf(stderr, "fedbatch: %s\n", what.c_str());
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App cli{"Minimal-time feeding synthesis for fed-batch reactors"};
    cli.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    unsigned threads = 1;
    std::optional<long> seed;
    cli.add_option("--config", config_path, "JSON run configuration")->required();
    cli.add_option("--out", out_dir, "output directory");
    cli.add_option("--threads", threads, "worker threads for fields and curve I")->check(CLI::Range(1u, 1024u));
    cli.add_option("--seed", seed, "reserved; every algorithm is deterministic");

    auto* inspect = cli.add_subcommand("inspect", "growth report and mu grid");
    auto* assumptions = cli.add_subcommand("check-assumptions", "assumption reports as one JSON document");
    auto* simulate = cli.add_subcommand("simulate", "closed-loop trajectory and summary");
    auto* field = cli.add_subcommand("field", "backward extremals of the regularized problem");
    auto* curve = cli.add_subcommand("curve-i", "indifference curve between the two arc syntheses");
    auto* report = cli.add_subcommand("report", "field, crossings, regions, curve I and distances");
    for (auto* sub : {inspect, assumptions, simulate, field, curve, report}) sub->fallthrough();

    try {
        cli.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return cli.exit(e);
    } catch (const CLI::ParseError& e) {
        cli.exit(e);
        return 2;
    }

    try {
        const io::RunConfig cfg = io::load_config(config_path);
        app::Outputs out;
        if (inspect->parsed()) {
            out = app::cmd_inspect(cfg);
        } else if (assumptions->parsed()) {
            out = app::cmd_check_assumptions(cfg);
        } else if (simulate->parsed()) {
            out = app::cmd_simulate(cfg);
        } else if (field->parsed()) {
            out = app::cmd_field(cfg, threads);
        } else if (curve->parsed()) {
            out = app::cmd_curve_i(cfg, threads);
        } else {
            out = app::cmd_report(cfg, threads);
        }
        app::write_outputs(out, out_dir);
        for (const auto& f : out.files) std::printf("%s\n", f.first.c_str());
    } catch (const Error& e) {
        return fail(e.exit_code(), e.what());
    } catch (const nlohmann::json::exception& e) {
        return fail(2, std::string("config: ") + e.what());
    } catch (const std::exception& e) {
        return fail(5, e.what());
    }
    return 0;
}
