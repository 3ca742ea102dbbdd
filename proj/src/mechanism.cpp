#include "cavnet/mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cavnet/errors.hpp"

namespace cavnet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

bool Message::is_opt_out() const {
    if (demanded_times.empty()) return false;
    return std::all_of(demanded_times.begin(), demanded_times.end(),
                       [](const auto& kv) { return kv.second == 0.0; });
}

const Message& MessageProfile::message(int traveler_id) const {
    auto it = messages.find(traveler_id);
    if (it == messages.end()) {
        std::ostringstream os;
        os << "profile has no message for traveler " << traveler_id;
        throw StructuralError(os.str());
    }
    return it->second;
}

void validate_profile(const Scenario& scenario, const IndexSets& sets,
                      const MessageProfile& profile) {
    if (profile.messages.size() != scenario.travelers.size()) {
        throw StructuralError("profile must carry exactly one message per traveler");
    }
    for (const Traveler& t : scenario.travelers) {
        const Message& m = profile.message(t.id);
        const std::set<int>& route = sets.route_edges(t.id);
        auto check_map = [&](const std::map<int, double>& entries, const char* what) {
            if (entries.size() != route.size()) {
                std::ostringstream os;
                os << "traveler " << t.id << " " << what << " does not cover the route";
                throw StructuralError(os.str());
            }
            for (const auto& [edge_id, value] : entries) {
                if (!route.contains(edge_id)) {
                    std::ostringstream os;
                    os << "traveler " << t.id << " " << what << " names edge " << edge_id
                       << " outside the route";
                    throw StructuralError(os.str());
                }
                if (!std::isfinite(value) || value < 0.0) {
                    std::ostringstream os;
                    os << "traveler " << t.id << " " << what << " on edge " << edge_id
                       << " must be finite and >= 0";
                    throw AttributeError(os.str());
                }
            }
        };
        check_map(m.demanded_times, "demanded times");
        check_map(m.bid_prices, "bid prices");
    }
}

double average_price_others(const MessageProfile& profile, const IndexSets& sets,
                            int edge_id, int traveler_id) {
    const std::set<int>& competitors = sets.competitors(edge_id);
    if (!competitors.contains(traveler_id)) {
        std::ostringstream os;
        os << "traveler " << traveler_id << " does not compete on edge " << edge_id;
        throw DomainError(os.str());
    }
    if (competitors.size() < 2) return 0.0;
    double sum = 0.0;
    for (int other : competitors) {
        if (other == traveler_id) continue;
        sum += profile.message(other).bid_prices.at(edge_id);
    }
    return sum / static_cast<double>(competitors.size() - 1);
}

Allocation project_to_feasible(const Scenario& scenario,
                               const std::map<VarKey, double>& demanded_times) {
    const VariableLayout layout = VariableLayout::build(scenario);

    // A traveler opts out when every demand on their route is exactly zero.
    std::map<int, bool> opted_out;
    for (const Traveler& t : scenario.travelers) {
        bool all_zero = !t.route.edge_sequence.empty();
        for (int edge_id : t.route.edge_sequence) {
            auto it = demanded_times.find({t.id, edge_id});
            if (it == demanded_times.end()) {
                std::ostringstream os;
                os << "missing demand for traveler " << t.id << " on edge " << edge_id;
                throw StructuralError(os.str());
            }
            if (!(it->second >= 0.0) || !std::isfinite(it->second)) {
                throw AttributeError("demands must be finite and >= 0");
            }
            all_zero = all_zero && it->second == 0.0;
        }
        opted_out[t.id] = all_zero;
    }

    Eigen::VectorXd theta(layout.size());
    for (const auto& block : layout.edge_blocks()) {
        double participating_lower = 0.0;
        double floored_excess = 0.0;
        for (std::size_t k = 0; k < block.vars.size(); ++k) {
            const VarKey& key = layout.key(block.vars[k]);
            if (opted_out.at(key.traveler)) {
                theta[block.vars[k]] = 0.0;
                continue;
            }
            const double floored = std::max(demanded_times.at(key), block.min_time);
            theta[block.vars[k]] = floored;
            participating_lower += block.alphas[k] * block.min_time;
            floored_excess += block.alphas[k] * (floored - block.min_time);
        }
        if (participating_lower > block.capacity) {
            std::ostringstream os;
            os << "edge " << block.edge << " cannot fit its travelers at minimum travel times";
            throw InfeasibilityError(os.str());
        }
        if (participating_lower + floored_excess <= block.capacity || floored_excess <= 0.0) {
            continue;
        }
        const double scale = (block.capacity - participating_lower) / floored_excess;
        for (std::size_t k = 0; k < block.vars.size(); ++k) {
            const VarKey& key = layout.key(block.vars[k]);
            if (opted_out.at(key.traveler)) continue;
            theta[block.vars[k]] =
                block.min_time + (theta[block.vars[k]] - block.min_time) * scale;
        }
    }
    return Allocation{layout, theta};
}

double edge_payment(const Scenario& scenario, const MessageProfile& profile,
                    int traveler_id, int edge_id, double nu_e) {
    const IndexSets sets = derive_index_sets(scenario.network, scenario.travelers);
    const std::set<int>& competitors = sets.competitors(edge_id);
    if (!competitors.contains(traveler_id)) {
        std::ostringstream os;
        os << "traveler " << traveler_id << " does not compete on edge " << edge_id;
        throw DomainError(os.str());
    }
    if (competitors.size() < 2) return 0.0;

    const Edge& edge = scenario.network.edge(edge_id);
    const double fair_share = edge.capacity / static_cast<double>(competitors.size());
    const double tau_others = average_price_others(profile, sets, edge_id, traveler_id);
    const Message& own = profile.message(traveler_id);
    const double demand = own.demanded_times.at(edge_id);
    const double bid = own.bid_prices.at(edge_id);
    const double alpha = scenario.traveler(traveler_id).alpha;

    double reported_load = 0.0;
    for (int j : competitors) {
        reported_load +=
            scenario.traveler(j).alpha * profile.message(j).demanded_times.at(edge_id);
    }
    const double mismatch = edge.capacity - reported_load;

    return tau_others * (alpha * demand - fair_share) + (bid - nu_e) * (bid - nu_e) +
           tau_others * (bid - tau_others) * (bid - tau_others) * mismatch * mismatch;
}

std::string to_string(PenaltyCase c) {
    switch (c) {
        case PenaltyCase::None: return "none";
        case PenaltyCase::BelowMinimum: return "below-minimum demand";
        case PenaltyCase::OverOnMonopoly: return "over-demand on a monopolized edge (gamma)";
        case PenaltyCase::PinnedOnShared: return "shared edge pinned at the minimum (delta)";
    }
    return "unknown";
}

PenaltyCase penalty_case(const Scenario& scenario, const IndexSets& sets, int traveler_id,
                         const std::map<int, double>& demanded_times) {
    const std::set<int>& route = sets.route_edges(traveler_id);

    bool all_zero = !route.empty();
    for (int edge_id : route) {
        auto it = demanded_times.find(edge_id);
        if (it == demanded_times.end()) {
            std::ostringstream os;
            os << "traveler " << traveler_id << " demand vector misses edge " << edge_id;
            throw StructuralError(os.str());
        }
        all_zero = all_zero && it->second == 0.0;
    }
    if (all_zero) return PenaltyCase::None;  // opt-out message

    bool below_minimum = false, over_on_monopoly = false, pinned_on_shared = false;
    for (int edge_id : route) {
        const double demand = demanded_times.at(edge_id);
        const double min_time = scenario.network.edge(edge_id).min_travel_time;
        const bool shared = sets.competitors(edge_id).size() >= 2;
        if (demand < min_time) below_minimum = true;
        else if (demand > min_time && !shared) over_on_monopoly = true;
        else if (demand == min_time && shared) pinned_on_shared = true;
    }
    if (below_minimum) return PenaltyCase::BelowMinimum;
    if (over_on_monopoly) return PenaltyCase::OverOnMonopoly;
    if (pinned_on_shared) return PenaltyCase::PinnedOnShared;
    return PenaltyCase::None;
}

double penalty(const Scenario& scenario, const IndexSets& sets, int traveler_id,
               const std::map<int, double>& demanded_times) {
    switch (penalty_case(scenario, sets, traveler_id, demanded_times)) {
        case PenaltyCase::BelowMinimum: return kInf;
        case PenaltyCase::OverOnMonopoly: return scenario.mechanism.gamma;
        case PenaltyCase::PinnedOnShared: return scenario.mechanism.delta;
        case PenaltyCase::None: break;
    }
    return 0.0;
}

Outcome outcome(const Scenario& scenario, const MessageProfile& profile,
                const std::map<int, double>& nu) {
    const IndexSets sets = derive_index_sets(scenario.network, scenario.travelers);
    validate_profile(scenario, sets, profile);

    std::map<VarKey, double> demands;
    for (const Traveler& t : scenario.travelers) {
        for (int edge_id : t.route.edge_sequence) {
            demands[{t.id, edge_id}] = profile.message(t.id).demanded_times.at(edge_id);
        }
    }

    Outcome result;
    result.allocation = project_to_feasible(scenario, demands);
    const bool proxy = scenario.mechanism.nu_source == NuSource::CompetitorProxy;
    for (const Traveler& t : scenario.travelers) {
        double total = 0.0;
        for (int edge_id : t.route.edge_sequence) {
            double nu_e = 0.0;
            if (proxy) {
                nu_e = average_price_others(profile, sets, edge_id, t.id);
            } else {
                auto it = nu.find(edge_id);
                if (it == nu.end()) {
                    std::ostringstream os;
                    os << "no capacity price supplied for edge " << edge_id;
                    throw StructuralError(os.str());
                }
                nu_e = it->second;
            }
            const double t_ie = edge_payment(scenario, profile, t.id, edge_id, nu_e);
            result.edge_payments[{t.id, edge_id}] = t_ie;
            total += t_ie;
        }
        const double phi = penalty(scenario, sets, t.id, profile.message(t.id).demanded_times);
        result.penalties[t.id] = phi;
        result.payments[t.id] = total + phi;
    }
    return result;
}

}  // namespace cavnet
