// Command-line front end: scenario generation, solving, mechanism
// evaluation, equilibrium search and verification.
//
// Exit codes: 0 all checks pass, 2 assertion failure, 3 degeneracy flags
// only, 4 input error.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "cavnet/suite.hpp"

namespace {

constexpr int kInputError = 4;

void write_outputs(const cavnet::SuiteReport& report, const std::string& out_path) {
    std::cout << report.human_table();
    if (out_path.empty()) return;
    std::ofstream out(out_path);
    if (!out) {
        throw cavnet::ParseError("cannot write report file " + out_path);
    }
    out << report.machine.dump(2) << '\n';
    if (!report.trajectory.empty()) {
        const std::filesystem::path csv =
            std::filesystem::path(out_path).replace_extension(".trajectory.csv");
        std::ofstream csv_out(csv);
        csv_out << cavnet::trajectory_csv(report.trajectory);
        std::cout << "trajectory csv: " << csv.string() << '\n';
    }
    std::cout << "machine report: " << out_path << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"travel-time allocation mechanism testbed"};
    app.require_subcommand(1);

    std::string scenario_path, out_path, profile_path;
    double epsilon = 1e-6;

    auto add_common = [&](CLI::App* cmd, bool with_epsilon) {
        cmd->add_option("--scenario", scenario_path, "scenario JSON file")->required();
        cmd->add_option("--out", out_path, "write the machine report here");
        if (with_epsilon) {
            cmd->add_option("--epsilon", epsilon, "equilibrium slack for deviation search");
        }
    };

    CLI::App* solve = app.add_subcommand("solve", "solve the welfare problem and certify it");
    add_common(solve, false);
    CLI::App* mech = app.add_subcommand(
        "mechanism-eval", "evaluate payments and penalties for a message profile");
    add_common(mech, false);
    mech->add_option("--profile", profile_path, "message-profile JSON file")->required();
    CLI::App* find = app.add_subcommand("find-ne", "best-response dynamics to an equilibrium");
    add_common(find, true);
    CLI::App* verify =
        app.add_subcommand("verify", "construct the candidate equilibrium and check every claim");
    add_common(verify, true);
    CLI::App* full = app.add_subcommand("full", "everything: solve, verify, dynamics, sampling");
    add_common(full, true);

    CLI::App* generate = app.add_subcommand("generate", "write a random scenario");
    std::uint64_t seed = 0;
    cavnet::SizeSpec size;
    std::string orientation = "resource_mode", generate_out;
    generate->add_option("--seed", seed, "generator seed")->required();
    generate->add_option("--out", generate_out, "output scenario path")->required();
    generate->add_option("--edges", size.edges, "number of chain edges");
    generate->add_option("--travelers", size.travelers, "number of travelers");
    generate->add_option("--route-len", size.max_route_len, "maximum route length");
    generate->add_option("--orientation", orientation,
                         "paper_literal or resource_mode valuations");
    generate->add_flag("--shared", size.every_edge_shared,
                       "route every traveler over the whole chain");

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate->parsed()) {
            size.orientation = orientation == "paper_literal"
                                   ? cavnet::Orientation::PaperLiteral
                                   : cavnet::Orientation::ResourceMode;
            const cavnet::Scenario scenario = cavnet::generate_random_scenario(seed, size);
            cavnet::save_scenario(scenario, generate_out);
            std::cout << "wrote " << generate_out << " (" << scenario.metadata.name << ")\n";
            return 0;
        }

        const cavnet::Scenario scenario = cavnet::load_scenario(scenario_path);
        cavnet::SuiteOptions options;
        options.epsilon = epsilon;
        std::string suite_name;
        if (solve->parsed()) suite_name = "solve";
        if (mech->parsed()) {
            suite_name = "mechanism-eval";
            options.profile = cavnet::load_profile(scenario, profile_path);
        }
        if (find->parsed()) suite_name = "find-ne";
        if (verify->parsed()) suite_name = "verify";
        if (full->parsed()) suite_name = "full";

        const cavnet::SuiteReport report =
            cavnet::run_suite(scenario, cavnet::parse_suite(suite_name), options);
        write_outputs(report, out_path);
        return report.exit_code();
    } catch (const cavnet::UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kInputError;
    } catch (const cavnet::Error& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kInputError;
    }
}
