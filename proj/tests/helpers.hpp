#pragma once

#include "cavnet/scenario.hpp"

namespace cavnet::testing {

// Two travelers share one edge (capacity 10, minimum time 1) with
// log-valuations a = 2 and 3: the optimum is theta = (3.8, 6.2) with
// capacity price 5/12, all in closed form.
inline Scenario worked_resource_scenario() {
    Scenario s;
    s.metadata.name = "worked-resource";
    s.metadata.orientation = Orientation::ResourceMode;
    s.network = build_network({1, 2}, {Edge{1, 1, 2, 10.0, 1.0}});

    Traveler t1;
    t1.id = 1;
    t1.origin = 1;
    t1.destination = 2;
    t1.route = Route{1, {1}};
    t1.alpha = 1.0;
    t1.valuation = ValuationSpec{ValuationFamily::LogResource, 2.0};
    Traveler t2 = t1;
    t2.id = 2;
    t2.route.traveler_id = 2;
    t2.valuation.a = 3.0;
    s.travelers = {t1, t2};
    return s;
}

// Same topology with strictly decreasing valuations v = -theta^2: the
// optimum pins both travelers at the minimum time with a zero capacity
// price, the degenerate corner the penalty schedule collides with.
inline Scenario paper_literal_shared_scenario() {
    Scenario s = worked_resource_scenario();
    s.metadata.name = "paper-literal-shared";
    s.metadata.orientation = Orientation::PaperLiteral;
    for (Traveler& t : s.travelers) {
        t.valuation = ValuationSpec{ValuationFamily::NegQuadratic, 1.0, 0.0};
    }
    return s;
}

inline Scenario single_traveler_scenario(Orientation o = Orientation::PaperLiteral) {
    Scenario s;
    s.metadata.name = "single-traveler";
    s.metadata.orientation = o;
    s.network = build_network({1, 2}, {Edge{1, 1, 2, 10.0, 1.0}});
    Traveler t;
    t.id = 1;
    t.origin = 1;
    t.destination = 2;
    t.route = Route{1, {1}};
    t.alpha = 1.0;
    t.valuation = o == Orientation::PaperLiteral
                      ? ValuationSpec{ValuationFamily::NegQuadratic, 1.0, 0.0}
                      : ValuationSpec{ValuationFamily::LogResource, 2.0};
    s.travelers = {t};
    return s;
}

// Chain 1 -> 2 -> 3 -> 4 with routes {1,2}, {2}, {2,3}.
inline Scenario three_traveler_chain() {
    Scenario s;
    s.metadata.name = "three-traveler-chain";
    s.metadata.orientation = Orientation::PaperLiteral;
    s.network = build_network({1, 2, 3, 4}, {Edge{1, 1, 2, 10.0, 1.0},
                                             Edge{2, 2, 3, 12.0, 1.0},
                                             Edge{3, 3, 4, 8.0, 0.5}});
    auto make = [](int id, int origin, int destination, std::vector<int> route) {
        Traveler t;
        t.id = id;
        t.origin = origin;
        t.destination = destination;
        t.route = Route{id, std::move(route)};
        t.alpha = 1.0;
        t.valuation = ValuationSpec{ValuationFamily::NegQuadratic, 1.0, 0.0};
        return t;
    };
    s.travelers = {make(1, 1, 3, {1, 2}), make(2, 2, 3, {2}), make(3, 2, 4, {2, 3})};
    return s;
}

}  // namespace cavnet::testing
