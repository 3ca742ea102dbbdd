#include "cavnet/scenario_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "cavnet/errors.hpp"
#include "cavnet/random.hpp"

namespace cavnet {

namespace {

using nlohmann::json;

const json& require(const json& j, const char* field, const char* where) {
    auto it = j.find(field);
    if (it == j.end()) {
        std::ostringstream os;
        os << "missing field '" << field << "' in " << where;
        throw ParseError(os.str());
    }
    return *it;
}

Orientation orientation_from_string(const std::string& s) {
    if (s == "paper_literal") return Orientation::PaperLiteral;
    if (s == "resource_mode") return Orientation::ResourceMode;
    throw ParseError("unknown orientation '" + s + "'");
}

ValuationFamily family_from_string(const std::string& s) {
    if (s == "neg_quadratic") return ValuationFamily::NegQuadratic;
    if (s == "neg_exponential") return ValuationFamily::NegExponential;
    if (s == "log_resource") return ValuationFamily::LogResource;
    throw ParseError("unknown valuation family '" + s + "'");
}

NuSource nu_source_from_string(const std::string& s) {
    if (s == "external_certificate") return NuSource::ExternalCertificate;
    if (s == "competitor_proxy") return NuSource::CompetitorProxy;
    throw ParseError("unknown nu_source '" + s + "'");
}

json valuation_to_json(const ValuationSpec& v) {
    json j{{"family", to_string(v.family)},
           {"a", v.a},
           {"orientation", to_string(v.orientation())}};
    if (v.family == ValuationFamily::NegQuadratic) j["b"] = v.b;
    if (v.family == ValuationFamily::NegExponential) j["c"] = v.c;
    return j;
}

ValuationSpec valuation_from_json(const json& j, const char* where) {
    ValuationSpec v;
    v.family = family_from_string(require(j, "family", where).get<std::string>());
    v.a = require(j, "a", where).get<double>();
    if (v.family == ValuationFamily::NegQuadratic) v.b = j.value("b", 0.0);
    if (v.family == ValuationFamily::NegExponential) v.c = j.value("c", 1.0);
    if (j.contains("orientation") &&
        orientation_from_string(j["orientation"].get<std::string>()) != v.orientation()) {
        throw ParseError(std::string("valuation orientation flag contradicts the family in ") +
                         where);
    }
    v.validate();
    return v;
}

}  // namespace

json scenario_to_json(const Scenario& s) {
    json edges = json::array();
    for (const Edge& e : s.network.edges) {
        edges.push_back({{"id", e.id},
                         {"tail", e.tail},
                         {"head", e.head},
                         {"capacity", e.capacity},
                         {"min_travel_time", e.min_travel_time}});
    }
    json travelers = json::array();
    for (const Traveler& t : s.travelers) {
        travelers.push_back({{"id", t.id},
                             {"origin", t.origin},
                             {"destination", t.destination},
                             {"route", t.route.edge_sequence},
                             {"alpha", t.alpha},
                             {"valuation", valuation_to_json(t.valuation)}});
    }
    return json{
        {"metadata",
         {{"name", s.metadata.name},
          {"seed", s.metadata.seed},
          {"orientation", to_string(s.metadata.orientation)},
          {"alpha_bounds", {s.metadata.alpha_lo, s.metadata.alpha_hi}}}},
        {"network", {{"vertices", s.network.vertices}, {"edges", edges}}},
        {"travelers", travelers},
        {"mechanism",
         {{"gamma", s.mechanism.gamma},
          {"delta", s.mechanism.delta},
          {"nu_source", to_string(s.mechanism.nu_source)}}},
        {"solver",
         {{"kkt_tol", s.solver.kkt_tol},
          {"solution_tol", s.solver.solution_tol},
          {"max_iterations", s.solver.max_iterations},
          {"grid_step", s.solver.grid_step},
          {"random_starts", s.solver.random_starts},
          {"seed", s.solver.seed},
          {"dual_polish", s.solver.dual_polish}}}};
}

Scenario scenario_from_json(const json& j) {
    Scenario s;

    const json& metadata = require(j, "metadata", "scenario");
    s.metadata.name = metadata.value("name", "");
    s.metadata.seed = metadata.value("seed", std::uint64_t{0});
    s.metadata.orientation =
        orientation_from_string(require(metadata, "orientation", "metadata").get<std::string>());
    if (metadata.contains("alpha_bounds")) {
        const json& bounds = metadata["alpha_bounds"];
        if (!bounds.is_array() || bounds.size() != 2) {
            throw ParseError("metadata.alpha_bounds must be a [lo, hi] pair");
        }
        s.metadata.alpha_lo = bounds[0].get<double>();
        s.metadata.alpha_hi = bounds[1].get<double>();
    }

    const json& network = require(j, "network", "scenario");
    std::set<int> vertices;
    for (const json& v : require(network, "vertices", "network")) {
        vertices.insert(v.get<int>());
    }
    std::vector<Edge> edges;
    for (const json& je : require(network, "edges", "network")) {
        Edge e;
        e.id = require(je, "id", "edge").get<int>();
        e.tail = require(je, "tail", "edge").get<int>();
        e.head = require(je, "head", "edge").get<int>();
        e.capacity = require(je, "capacity", "edge").get<double>();
        e.min_travel_time = require(je, "min_travel_time", "edge").get<double>();
        edges.push_back(e);
    }
    s.network = build_network(vertices, edges);

    for (const json& jt : require(j, "travelers", "scenario")) {
        Traveler t;
        t.id = require(jt, "id", "traveler").get<int>();
        t.origin = require(jt, "origin", "traveler").get<int>();
        t.destination = require(jt, "destination", "traveler").get<int>();
        t.route.traveler_id = t.id;
        for (const json& e : require(jt, "route", "traveler")) {
            t.route.edge_sequence.push_back(e.get<int>());
        }
        t.alpha = require(jt, "alpha", "traveler").get<double>();
        t.valuation = valuation_from_json(require(jt, "valuation", "traveler"), "valuation");
        s.travelers.push_back(std::move(t));
    }
    std::sort(s.travelers.begin(), s.travelers.end(),
              [](const Traveler& a, const Traveler& b) { return a.id < b.id; });
    for (std::size_t k = 0; k + 1 < s.travelers.size(); ++k) {
        if (s.travelers[k].id == s.travelers[k + 1].id) {
            std::ostringstream os;
            os << "duplicate traveler id " << s.travelers[k].id;
            throw AttributeError(os.str());
        }
    }

    if (j.contains("mechanism")) {
        const json& m = j["mechanism"];
        s.mechanism.gamma = m.value("gamma", 1e6);
        s.mechanism.delta = m.value("delta", 1e6);
        if (m.contains("nu_source")) {
            s.mechanism.nu_source = nu_source_from_string(m["nu_source"].get<std::string>());
        }
    }
    if (j.contains("solver")) {
        const json& c = j["solver"];
        s.solver.kkt_tol = c.value("kkt_tol", 1e-6);
        s.solver.solution_tol = c.value("solution_tol", 1e-6);
        s.solver.max_iterations = c.value("max_iterations", 100000);
        s.solver.grid_step = c.value("grid_step", 0.01);
        s.solver.random_starts = c.value("random_starts", 10);
        s.solver.seed = c.value("seed", std::uint64_t{0});
        s.solver.dual_polish = c.value("dual_polish", true);
    }

    // Surface malformed routes right away.
    derive_index_sets(s.network, s.travelers);
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open scenario file " + path.string());
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError("scenario file " + path.string() + ": " + e.what());
    }
    return scenario_from_json(j);
}

void save_scenario(const Scenario& scenario, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw ParseError("cannot write scenario file " + path.string());
    }
    out << scenario_to_json(scenario).dump(2) << '\n';
}

json profile_to_json(const Scenario& scenario, const MessageProfile& profile) {
    json messages = json::array();
    for (const Traveler& t : scenario.travelers) {
        const Message& m = profile.message(t.id);
        json demanded = json::array(), bids = json::array();
        for (int edge_id : t.route.edge_sequence) {
            demanded.push_back(m.demanded_times.at(edge_id));
            bids.push_back(m.bid_prices.at(edge_id));
        }
        messages.push_back(
            {{"traveler_id", t.id}, {"demanded_times", demanded}, {"bid_prices", bids}});
    }
    return json{{"messages", messages}};
}

MessageProfile profile_from_json(const Scenario& scenario, const json& j) {
    MessageProfile profile;
    for (const json& jm : require(j, "messages", "profile")) {
        Message m;
        m.traveler_id = require(jm, "traveler_id", "message").get<int>();
        const Traveler& t = scenario.traveler(m.traveler_id);
        const json& demanded = require(jm, "demanded_times", "message");
        const json& bids = require(jm, "bid_prices", "message");
        if (demanded.size() != t.route.edge_sequence.size() ||
            bids.size() != t.route.edge_sequence.size()) {
            std::ostringstream os;
            os << "message for traveler " << m.traveler_id
               << " must list one demand and one bid per route edge";
            throw ParseError(os.str());
        }
        for (std::size_t k = 0; k < t.route.edge_sequence.size(); ++k) {
            m.demanded_times[t.route.edge_sequence[k]] = demanded[k].get<double>();
            m.bid_prices[t.route.edge_sequence[k]] = bids[k].get<double>();
        }
        profile.messages[m.traveler_id] = std::move(m);
    }
    const IndexSets sets = derive_index_sets(scenario.network, scenario.travelers);
    validate_profile(scenario, sets, profile);
    return profile;
}

MessageProfile load_profile(const Scenario& scenario, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open profile file " + path.string());
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError("profile file " + path.string() + ": " + e.what());
    }
    return profile_from_json(scenario, j);
}

void save_profile(const Scenario& scenario, const MessageProfile& profile,
                  const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw ParseError("cannot write profile file " + path.string());
    }
    out << profile_to_json(scenario, profile).dump(2) << '\n';
}

Scenario generate_random_scenario(std::uint64_t seed, const SizeSpec& spec) {
    if (spec.edges < 1 || spec.travelers < 0 || spec.max_route_len < 1) {
        throw DomainError("size spec needs >= 1 edge, >= 0 travelers, route length >= 1");
    }
    Rng rng(seed);

    Scenario s;
    s.metadata.seed = seed;
    s.metadata.orientation = spec.orientation;
    s.metadata.alpha_lo = 1.0;
    s.metadata.alpha_hi = 10.0;
    {
        std::ostringstream os;
        os << "random-" << to_string(spec.orientation) << "-e" << spec.edges << "-t"
           << spec.travelers << "-s" << seed;
        s.metadata.name = os.str();
    }

    // Chain topology: vertices 1..E+1, edge k joins k -> k+1.
    std::set<int> vertices;
    std::vector<Edge> edges;
    for (int k = 1; k <= spec.edges; ++k) {
        vertices.insert(k);
        vertices.insert(k + 1);
        Edge e;
        e.id = k;
        e.tail = k;
        e.head = k + 1;
        e.capacity = 1.0;  // rescaled below once routes are known
        e.min_travel_time = rng.uniform(spec.min_time_lo, spec.min_time_hi);
        edges.push_back(e);
    }

    std::vector<std::pair<int, int>> spans;  // [first edge, last edge] per traveler
    for (int i = 0; i < spec.travelers; ++i) {
        if (spec.every_edge_shared) {
            // Everyone rides the whole chain, so each edge carries all
            // travelers; with >= 2 travelers no edge is monopolized.
            spans.emplace_back(1, spec.edges);
        } else {
            const int len = rng.uniform_int(1, std::min(spec.max_route_len, spec.edges));
            const int first = rng.uniform_int(1, spec.edges - len + 1);
            spans.emplace_back(first, first + len - 1);
        }
    }

    for (int i = 0; i < spec.travelers; ++i) {
        Traveler t;
        t.id = i + 1;
        t.origin = spans[static_cast<std::size_t>(i)].first;
        t.destination = spans[static_cast<std::size_t>(i)].second + 1;
        t.route.traveler_id = t.id;
        for (int k = spans[static_cast<std::size_t>(i)].first;
             k <= spans[static_cast<std::size_t>(i)].second; ++k) {
            t.route.edge_sequence.push_back(k);
        }
        t.alpha = rng.uniform(spec.alpha_lo, spec.alpha_hi);
        if (spec.orientation == Orientation::ResourceMode) {
            t.valuation.family = ValuationFamily::LogResource;
            t.valuation.a = rng.uniform(1.5, 4.0);
        } else if (rng.uniform01() < 0.5) {
            t.valuation.family = ValuationFamily::NegQuadratic;
            t.valuation.a = rng.uniform(0.5, 2.0);
            t.valuation.b = rng.uniform(0.0, 1.0);
        } else {
            t.valuation.family = ValuationFamily::NegExponential;
            t.valuation.a = rng.uniform(0.5, 2.0);
            t.valuation.c = rng.uniform(0.2, 0.5);
        }
        s.travelers.push_back(std::move(t));
    }

    // Capacities sized off the minimum-time load so the scenario always
    // validates with headroom.
    for (Edge& e : edges) {
        double floor_load = 0.0;
        for (const Traveler& t : s.travelers) {
            for (int edge_id : t.route.edge_sequence) {
                if (edge_id == e.id) floor_load += t.alpha * e.min_travel_time;
            }
        }
        const double base = floor_load > 0.0 ? floor_load : e.min_travel_time;
        double headroom = base * (rng.uniform(spec.headroom_lo, spec.headroom_hi) - 1.0);
        if (spec.capacity_grid > 0.0) {
            headroom = std::max(1.0, std::round(headroom / spec.capacity_grid)) *
                       spec.capacity_grid;
        }
        e.capacity = base + headroom;
    }
    s.network = build_network(vertices, edges);
    derive_index_sets(s.network, s.travelers);
    return s;
}

MessageProfile random_profile(const Scenario& scenario, std::uint64_t seed, double bid_hi) {
    Rng rng(seed);
    MessageProfile profile;
    for (const Traveler& t : scenario.travelers) {
        Message m;
        m.traveler_id = t.id;
        for (int edge_id : t.route.edge_sequence) {
            const Edge& e = scenario.network.edge(edge_id);
            // Demands range from below the minimum to well beyond capacity so
            // both projection branches get exercised.
            m.demanded_times[edge_id] = rng.uniform(0.5 * e.min_travel_time,
                                                    2.0 * e.capacity / t.alpha);
            m.bid_prices[edge_id] = rng.uniform(0.0, bid_hi);
        }
        profile.messages[t.id] = std::move(m);
    }
    return profile;
}

}  // namespace cavnet
