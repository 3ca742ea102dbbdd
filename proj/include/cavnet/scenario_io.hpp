#pragma once

#include <filesystem>
#include <nlohmann/json_fwd.hpp>

#include "cavnet/mechanism.hpp"

namespace cavnet {

// JSON scenario files with top-level blocks network / travelers / mechanism /
// solver / metadata. The mechanism and solver blocks may be omitted and
// default. Loading validates every structural invariant; save -> load is the
// identity.
nlohmann::json scenario_to_json(const Scenario& scenario);
Scenario scenario_from_json(const nlohmann::json& j);

Scenario load_scenario(const std::filesystem::path& path);
void save_scenario(const Scenario& scenario, const std::filesystem::path& path);

// Message-profile files: one entry per traveler, demands and bids as arrays
// aligned with the traveler's route order in the scenario.
nlohmann::json profile_to_json(const Scenario& scenario, const MessageProfile& profile);
MessageProfile profile_from_json(const Scenario& scenario, const nlohmann::json& j);

MessageProfile load_profile(const Scenario& scenario, const std::filesystem::path& path);
void save_profile(const Scenario& scenario, const MessageProfile& profile,
                  const std::filesystem::path& path);

struct SizeSpec {
    int edges = 1;
    int travelers = 2;
    int max_route_len = 2;
    Orientation orientation = Orientation::ResourceMode;
    bool every_edge_shared = false;  // route assignment covers each edge twice
    double min_time_lo = 0.4, min_time_hi = 0.8;
    double alpha_lo = 1.0, alpha_hi = 2.0;
    double headroom_lo = 1.5, headroom_hi = 2.0;  // capacity multipliers over the floor load
    // When positive, capacities sit exactly on the floor load plus a multiple
    // of this step, so a matching oracle grid can bind them exactly.
    double capacity_grid = 0.0;
};

// Deterministic scenario sampler over a chain network: fixed seed and spec
// reproduce the scenario byte for byte, and the output always validates.
Scenario generate_random_scenario(std::uint64_t seed, const SizeSpec& spec);

// Random complete message profile for a scenario (demands positive, may
// exceed capacity; bids in [0, bid_hi]).
MessageProfile random_profile(const Scenario& scenario, std::uint64_t seed, double bid_hi = 2.0);

}  // namespace cavnet
