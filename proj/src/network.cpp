#include "cavnet/network.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cavnet/errors.hpp"

namespace cavnet {

bool Network::has_edge(int edge_id) const {
    return std::any_of(edges.begin(), edges.end(),
                       [edge_id](const Edge& e) { return e.id == edge_id; });
}

const Edge& Network::edge(int edge_id) const {
    auto it = std::lower_bound(edges.begin(), edges.end(), edge_id,
                               [](const Edge& e, int id) { return e.id < id; });
    if (it == edges.end() || it->id != edge_id) {
        std::ostringstream os;
        os << "unknown edge id " << edge_id;
        throw DomainError(os.str());
    }
    return *it;
}

const std::set<int>& IndexSets::competitors(int edge_id) const {
    auto it = travelers_on_edge.find(edge_id);
    if (it == travelers_on_edge.end()) {
        std::ostringstream os;
        os << "edge " << edge_id << " not present in index sets";
        throw DomainError(os.str());
    }
    return it->second;
}

const std::set<int>& IndexSets::route_edges(int traveler_id) const {
    auto it = edges_of_traveler.find(traveler_id);
    if (it == edges_of_traveler.end()) {
        std::ostringstream os;
        os << "traveler " << traveler_id << " not present in index sets";
        throw DomainError(os.str());
    }
    return it->second;
}

Network build_network(const std::set<int>& vertices, const std::vector<Edge>& edge_list) {
    Network network;
    network.vertices = vertices;
    network.edges = edge_list;
    std::sort(network.edges.begin(), network.edges.end(),
              [](const Edge& a, const Edge& b) { return a.id < b.id; });

    int previous_id = 0;
    bool first = true;
    for (const Edge& e : network.edges) {
        if (!first && e.id == previous_id) {
            std::ostringstream os;
            os << "duplicate edge id " << e.id;
            throw AttributeError(os.str());
        }
        first = false;
        previous_id = e.id;

        if (!(e.capacity > 0.0) || !std::isfinite(e.capacity)) {
            std::ostringstream os;
            os << "edge " << e.id << " capacity must be positive, got " << e.capacity;
            throw AttributeError(os.str());
        }
        if (!(e.min_travel_time >= 0.0) || !std::isfinite(e.min_travel_time)) {
            std::ostringstream os;
            os << "edge " << e.id << " min travel time must be >= 0, got " << e.min_travel_time;
            throw AttributeError(os.str());
        }
        if (!vertices.contains(e.tail) || !vertices.contains(e.head)) {
            std::ostringstream os;
            os << "edge " << e.id << " references a vertex outside the network";
            throw StructuralError(os.str());
        }
    }
    return network;
}

void validate_route(const Network& network, const Traveler& traveler) {
    const auto& seq = traveler.route.edge_sequence;
    if (seq.empty()) {
        std::ostringstream os;
        os << "traveler " << traveler.id << " has an empty route";
        throw StructuralError(os.str());
    }
    std::set<int> seen;
    for (int edge_id : seq) {
        if (!network.has_edge(edge_id)) {
            std::ostringstream os;
            os << "traveler " << traveler.id << " route uses unknown edge " << edge_id;
            throw StructuralError(os.str());
        }
        if (!seen.insert(edge_id).second) {
            std::ostringstream os;
            os << "traveler " << traveler.id << " route repeats edge " << edge_id;
            throw StructuralError(os.str());
        }
    }
    for (std::size_t k = 0; k + 1 < seq.size(); ++k) {
        if (network.edge(seq[k]).head != network.edge(seq[k + 1]).tail) {
            std::ostringstream os;
            os << "traveler " << traveler.id << " route breaks between edges " << seq[k]
               << " and " << seq[k + 1];
            throw StructuralError(os.str());
        }
    }
    if (network.edge(seq.front()).tail != traveler.origin ||
        network.edge(seq.back()).head != traveler.destination) {
        std::ostringstream os;
        os << "traveler " << traveler.id << " route endpoints do not match origin/destination";
        throw StructuralError(os.str());
    }
}

IndexSets derive_index_sets(const Network& network, const std::vector<Traveler>& travelers) {
    IndexSets sets;
    for (const Edge& e : network.edges) {
        sets.travelers_on_edge[e.id];  // edges used by nobody map to an empty set
    }
    for (const Traveler& t : travelers) {
        validate_route(network, t);
        auto& edges = sets.edges_of_traveler[t.id];
        for (int edge_id : t.route.edge_sequence) {
            edges.insert(edge_id);
            sets.travelers_on_edge[edge_id].insert(t.id);
        }
    }
    return sets;
}

}  // namespace cavnet
