#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cavnet/network.hpp"

namespace cavnet {

// Where the capacity price nu_e used inside the payment rule comes from.
// The true multiplier depends on private valuations, so the manager either
// plugs in an externally computed certificate or proxies it with the
// average competitor bid.
enum class NuSource { ExternalCertificate, CompetitorProxy };

std::string to_string(NuSource s);

struct MechanismParams {
    double gamma = 1e6;  // fine for over-demanding a monopolized edge
    double delta = 1e6;  // fine for pinning a shared edge at its minimum time
    NuSource nu_source = NuSource::ExternalCertificate;

    bool operator==(const MechanismParams&) const = default;
};

struct SolverConfig {
    double kkt_tol = 1e-6;
    double solution_tol = 1e-6;
    int max_iterations = 100000;
    double grid_step = 0.01;  // brute-force oracle resolution
    int random_starts = 10;
    std::uint64_t seed = 0;
    bool dual_polish = true;  // per-edge dual refinement of the certificate

    bool operator==(const SolverConfig&) const = default;
};

struct ScenarioMetadata {
    std::string name;
    std::uint64_t seed = 0;
    Orientation orientation = Orientation::PaperLiteral;
    double alpha_lo = 1.0;
    double alpha_hi = 10.0;

    bool operator==(const ScenarioMetadata&) const = default;
};

struct Scenario {
    Network network;
    std::vector<Traveler> travelers;  // sorted by id, ids unique
    MechanismParams mechanism;
    SolverConfig solver;
    ScenarioMetadata metadata;

    const Traveler& traveler(int traveler_id) const;  // DomainError if absent

    bool operator==(const Scenario&) const = default;
};

struct EdgeFeasibility {
    double lower_bound_load = 0.0;  // sum over S_e of alpha_i * min_travel_time
    double capacity = 0.0;
    bool feasible = false;  // lower_bound_load <= capacity
};

// Per-scenario diagnosis: no exceptions, everything is a report field.
struct ValidationReport {
    std::map<int, EdgeFeasibility> edge_feasibility;
    std::map<int, Assumption1Report> valuation_checks;  // keyed by traveler
    std::vector<int> alpha_violations;                  // travelers outside [lo, hi]
    bool orientation_consistent = true;
    bool penalty_scale_ok = true;  // gamma, delta >= 1e3 * max sampled |v|
    double max_sampled_valuation = 0.0;

    bool feasible() const;
    bool pass() const;
    std::vector<std::string> failures() const;
};

// Checks that allocating the minimum travel time to every traveler is
// feasible on every edge (the witness point for a nonempty feasible region),
// plus valuation-assumption, alpha-bound, orientation and penalty-scale
// diagnostics.
ValidationReport validate_scenario(const Scenario& scenario);

}  // namespace cavnet
