#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <string>

#include "cavnet/game.hpp"
#include "cavnet/scenario_io.hpp"

namespace cavnet {

enum class SuiteKind { Solve, MechanismEval, FindNe, Verify, Full };

SuiteKind parse_suite(const std::string& name);  // UsageError on unknown names
std::string to_string(SuiteKind kind);

// One named check. "flagged" marks a claim that is reported but not asserted
// because the scenario is degenerate for it (the candidate equilibrium
// already carries a penalty); "info" is never asserted.
struct AssertionOutcome {
    std::string name;
    std::string status;  // pass | fail | flagged | info
    std::string detail;
};

struct SuiteOptions {
    double epsilon = 1e-6;
    std::optional<MessageProfile> profile;  // mechanism-eval input
    int feasibility_samples = 200;          // random profiles checked by `full`
};

struct SuiteReport {
    std::string scenario_name;
    std::string suite;
    std::vector<AssertionOutcome> assertions;
    std::vector<std::string> flags;
    std::vector<BrTrajectoryPoint> trajectory;  // find-ne / full
    nlohmann::json machine;                     // timing under its own key
    double elapsed_seconds = 0.0;

    // 0 all pass, 2 any failure, 3 degeneracy flags only.
    int exit_code() const;
    std::string human_table() const;
};

// Validates the scenario (InfeasibilityError / AttributeError end up as
// input errors at the CLI) and executes the named suite deterministically:
// identical scenario and seed reproduce the machine report except for the
// timing block.
SuiteReport run_suite(const Scenario& scenario, SuiteKind kind, const SuiteOptions& options = {});

// Plot-ready trajectory dump: sweep,traveler,edge,demanded_time,bid_price,utility.
std::string trajectory_csv(const std::vector<BrTrajectoryPoint>& trajectory);

}  // namespace cavnet
