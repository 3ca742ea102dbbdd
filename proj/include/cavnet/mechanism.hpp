#pragma once

#include <map>

#include "cavnet/allocation.hpp"

namespace cavnet {

// A traveler's report: the travel time they demand and the price they bid,
// per edge of their fixed route. A message whose demands are all exactly
// zero opts the traveler out of the allocation entirely (the "not seeking
// to commute" reading of a zero travel time).
struct Message {
    int traveler_id = 0;
    std::map<int, double> demanded_times;  // edge id -> theta~, keys == R_i
    std::map<int, double> bid_prices;      // edge id -> tau,    keys == R_i

    bool is_opt_out() const;

    bool operator==(const Message&) const = default;
};

struct MessageProfile {
    std::map<int, Message> messages;  // exactly one per traveler

    const Message& message(int traveler_id) const;  // StructuralError if absent

    bool operator==(const MessageProfile&) const = default;
};

// Image of the outcome function: the (projected) allocation plus every
// monetary component. Penalties may be +infinity for below-minimum demands.
struct Outcome {
    Allocation allocation;
    std::map<int, double> payments;           // t_i = sum of edge payments + penalty
    std::map<VarKey, double> edge_payments;   // t_i^e
    std::map<int, double> penalties;          // phi_i
};

// Requires exactly one message per traveler, map keys equal to the route's
// edge set, and finite nonnegative entries; throws otherwise.
void validate_profile(const Scenario& scenario, const IndexSets& sets,
                      const MessageProfile& profile);

// Mean bid of the other travelers competing on the edge; 0 when the edge is
// monopolized (the formula's denominator vanishes there). DomainError when
// the traveler does not use the edge.
double average_price_others(const MessageProfile& profile, const IndexSets& sets,
                            int edge_id, int traveler_id);

// Outcome projection: demands inside the constraint set pass through;
// on a violated edge every participating demand is floored at the minimum
// time and the excesses are shrunk by a common factor until the capacity
// holds with equality. Opted-out travelers keep a zero allocation and
// consume no capacity.
Allocation project_to_feasible(const Scenario& scenario,
                               const std::map<VarKey, double>& demanded_times);

// Per-edge toll: the fair-share term priced by the competitors' average bid,
// a quadratic penalty for bidding away from the capacity price nu_e, and a
// price-disagreement penalty weighted by the squared capacity mismatch of
// the reported demands. Monopolized edges pay 0. Evaluated on reported
// (pre-projection) demands.
double edge_payment(const Scenario& scenario, const MessageProfile& profile,
                    int traveler_id, int edge_id, double nu_e);

// Which penalty case a demand vector triggers, in precedence order:
// below-minimum anywhere beats over-demanding a monopolized edge beats
// pinning a shared edge at its minimum. An all-zero demand vector is the
// opt-out message and triggers nothing.
enum class PenaltyCase { None, BelowMinimum, OverOnMonopoly, PinnedOnShared };

std::string to_string(PenaltyCase c);

PenaltyCase penalty_case(const Scenario& scenario, const IndexSets& sets, int traveler_id,
                         const std::map<int, double>& demanded_times);

// Penalty schedule over a traveler's demand vector: +infinity, gamma, delta
// or 0 for the cases above.
double penalty(const Scenario& scenario, const IndexSets& sets, int traveler_id,
               const std::map<int, double>& demanded_times);

// The outcome function g: projected allocation plus payments and penalties.
// nu supplies the capacity price per edge when the mechanism is configured
// for an external certificate; under the competitor proxy the average
// competitor bid is used instead and nu is ignored.
Outcome outcome(const Scenario& scenario, const MessageProfile& profile,
                const std::map<int, double>& nu);

}  // namespace cavnet
