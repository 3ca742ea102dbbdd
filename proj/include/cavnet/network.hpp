#pragma once

#include <map>
#include <set>
#include <vector>

#include "cavnet/valuation.hpp"

namespace cavnet {

// Directed road segment. Capacity is in weighted travel-time units; the
// minimum travel time is what an empty road allows.
struct Edge {
    int id = 0;
    int tail = 0;
    int head = 0;
    double capacity = 0.0;
    double min_travel_time = 0.0;

    bool operator==(const Edge&) const = default;
};

struct Network {
    std::set<int> vertices;
    std::vector<Edge> edges;  // sorted by id, ids unique

    bool has_edge(int edge_id) const;
    const Edge& edge(int edge_id) const;  // DomainError if absent

    bool operator==(const Network&) const = default;
};

// Fixed origin-destination path; routes are inputs, never computed.
struct Route {
    int traveler_id = 0;
    std::vector<int> edge_sequence;

    bool operator==(const Route&) const = default;
};

struct Traveler {
    int id = 0;
    int origin = 0;
    int destination = 0;
    Route route;
    double alpha = 1.0;  // reverse value of time, >= 1
    ValuationSpec valuation;

    bool operator==(const Traveler&) const = default;
};

// S_e / R_i competition structure derived from the routes.
struct IndexSets {
    std::map<int, std::set<int>> travelers_on_edge;  // edge id -> S_e (every edge keyed)
    std::map<int, std::set<int>> edges_of_traveler;  // traveler id -> R_i

    const std::set<int>& competitors(int edge_id) const;
    const std::set<int>& route_edges(int traveler_id) const;
};

// Validates endpoints and attribute invariants, rejects duplicate ids.
Network build_network(const std::set<int>& vertices, const std::vector<Edge>& edge_list);

// Checks a route against the network: edges exist, consecutive edges are
// head-to-tail connected, endpoints match the traveler's origin/destination,
// path is nonempty and simple. Throws StructuralError otherwise.
void validate_route(const Network& network, const Traveler& traveler);

IndexSets derive_index_sets(const Network& network, const std::vector<Traveler>& travelers);

}  // namespace cavnet
