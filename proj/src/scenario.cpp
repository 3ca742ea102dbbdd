#include "cavnet/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cavnet/errors.hpp"

namespace cavnet {

std::string to_string(NuSource s) {
    return s == NuSource::ExternalCertificate ? "external_certificate" : "competitor_proxy";
}

const Traveler& Scenario::traveler(int traveler_id) const {
    auto it = std::lower_bound(travelers.begin(), travelers.end(), traveler_id,
                               [](const Traveler& t, int id) { return t.id < id; });
    if (it == travelers.end() || it->id != traveler_id) {
        std::ostringstream os;
        os << "unknown traveler id " << traveler_id;
        throw DomainError(os.str());
    }
    return *it;
}

bool ValidationReport::feasible() const {
    return std::all_of(edge_feasibility.begin(), edge_feasibility.end(),
                       [](const auto& kv) { return kv.second.feasible; });
}

bool ValidationReport::pass() const {
    if (!feasible() || !orientation_consistent || !penalty_scale_ok) return false;
    if (!alpha_violations.empty()) return false;
    return std::all_of(valuation_checks.begin(), valuation_checks.end(),
                       [](const auto& kv) { return kv.second.pass(); });
}

std::vector<std::string> ValidationReport::failures() const {
    std::vector<std::string> out;
    for (const auto& [edge, f] : edge_feasibility) {
        if (!f.feasible) {
            std::ostringstream os;
            os << "edge " << edge << ": minimum-time load " << f.lower_bound_load
               << " exceeds capacity " << f.capacity;
            out.push_back(os.str());
        }
    }
    for (const auto& [traveler, rep] : valuation_checks) {
        for (const auto& v : rep.violations) {
            std::ostringstream os;
            os << "traveler " << traveler << " valuation: " << v;
            out.push_back(os.str());
        }
    }
    for (int traveler : alpha_violations) {
        std::ostringstream os;
        os << "traveler " << traveler << ": alpha outside configured bounds";
        out.push_back(os.str());
    }
    if (!orientation_consistent) out.emplace_back("mixed valuation orientations");
    if (!penalty_scale_ok) out.emplace_back("gamma/delta not large relative to attainable valuations");
    return out;
}

ValidationReport validate_scenario(const Scenario& scenario) {
    const IndexSets sets = derive_index_sets(scenario.network, scenario.travelers);

    ValidationReport report;
    for (const Edge& e : scenario.network.edges) {
        EdgeFeasibility f;
        f.capacity = e.capacity;
        for (int traveler_id : sets.competitors(e.id)) {
            f.lower_bound_load += scenario.traveler(traveler_id).alpha * e.min_travel_time;
        }
        f.feasible = f.lower_bound_load <= f.capacity;
        report.edge_feasibility[e.id] = f;
    }

    // Monotone families attain their largest magnitude at an endpoint of the
    // per-edge box [min_time, capacity/alpha], so sampling endpoints is exact.
    double max_abs_value = 0.0;
    for (const Traveler& t : scenario.travelers) {
        static constexpr double kGridPoints[] = {0.0, 0.5, 1.0, 2.0, 5.0, 10.0};
        report.valuation_checks[t.id] = check_assumption1(t.valuation, kGridPoints);

        if (t.alpha < scenario.metadata.alpha_lo || t.alpha > scenario.metadata.alpha_hi ||
            t.alpha < 1.0) {
            report.alpha_violations.push_back(t.id);
        }
        if (t.valuation.orientation() != scenario.metadata.orientation) {
            report.orientation_consistent = false;
        }
        for (int edge_id : t.route.edge_sequence) {
            const Edge& e = scenario.network.edge(edge_id);
            const double hi = std::max(e.min_travel_time, e.capacity / t.alpha);
            max_abs_value = std::max(
                max_abs_value, std::abs(eval_valuation(t.valuation, e.min_travel_time)));
            max_abs_value = std::max(max_abs_value, std::abs(eval_valuation(t.valuation, hi)));
        }
    }
    report.max_sampled_valuation = max_abs_value;
    report.penalty_scale_ok = scenario.mechanism.gamma > 0.0 && scenario.mechanism.delta > 0.0 &&
                              scenario.mechanism.gamma >= 1e3 * max_abs_value &&
                              scenario.mechanism.delta >= 1e3 * max_abs_value;
    return report;
}

}  // namespace cavnet
