#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "cavnet/suite.hpp"
#include "helpers.hpp"

using namespace cavnet;
using nlohmann::json;

namespace {

struct TempFile {
    std::filesystem::path path;
    explicit TempFile(const std::string& name)
        : path(std::filesystem::temp_directory_path() / name) {}
    ~TempFile() { std::error_code ec; std::filesystem::remove(path, ec); }
};

}  // namespace

TEST_CASE("scenario json round-trips structurally") {
    const Scenario s = testing::worked_resource_scenario();
    CHECK(scenario_from_json(scenario_to_json(s)) == s);

    const Scenario chain = testing::three_traveler_chain();
    CHECK(scenario_from_json(scenario_to_json(chain)) == chain);
}

TEST_CASE("scenario file save and load is the identity") {
    TempFile file("cavnet-roundtrip.json");
    const Scenario s = testing::worked_resource_scenario();
    save_scenario(s, file.path);
    CHECK(load_scenario(file.path) == s);
}

TEST_CASE("negative capacity is rejected naming the edge") {
    json j = scenario_to_json(testing::worked_resource_scenario());
    j["network"]["edges"][0]["capacity"] = -1.0;
    try {
        scenario_from_json(j);
        FAIL("expected AttributeError");
    } catch (const AttributeError& e) {
        CHECK(std::string(e.what()).find("edge 1") != std::string::npos);
    }
}

TEST_CASE("omitted mechanism and solver blocks default") {
    json j = scenario_to_json(testing::worked_resource_scenario());
    j.erase("mechanism");
    j.erase("solver");
    const Scenario s = scenario_from_json(j);
    CHECK(s.mechanism.gamma == 1e6);
    CHECK(s.mechanism.delta == 1e6);
    CHECK(s.mechanism.nu_source == NuSource::ExternalCertificate);
    CHECK(s.solver.kkt_tol == 1e-6);
    CHECK(s.solver.max_iterations == 100000);
}

TEST_CASE("missing fields raise parse errors with the field name") {
    json j = scenario_to_json(testing::worked_resource_scenario());
    j["travelers"][0].erase("alpha");
    try {
        scenario_from_json(j);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("alpha") != std::string::npos);
    }
}

TEST_CASE("malformed json raises a parse error with file context") {
    TempFile file("cavnet-broken.json");
    std::ofstream(file.path) << "{ this is not json";
    CHECK_THROWS_AS(load_scenario(file.path), ParseError);
    CHECK_THROWS_AS(load_scenario("/nonexistent/file.json"), ParseError);
}

TEST_CASE("duplicate traveler ids are rejected") {
    json j = scenario_to_json(testing::worked_resource_scenario());
    j["travelers"][1]["id"] = 1;
    CHECK_THROWS_AS(scenario_from_json(j), AttributeError);
}

TEST_CASE("generator is deterministic per seed") {
    SizeSpec spec;
    spec.edges = 3;
    spec.travelers = 4;
    const std::string a = scenario_to_json(generate_random_scenario(42, spec)).dump();
    const std::string b = scenario_to_json(generate_random_scenario(42, spec)).dump();
    CHECK(a == b);
    const std::string c = scenario_to_json(generate_random_scenario(43, spec)).dump();
    CHECK(a != c);
}

TEST_CASE("generated scenarios always validate") {
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        SizeSpec spec;
        spec.edges = 1 + static_cast<int>(seed % 4);
        spec.travelers = static_cast<int>(seed % 6);
        spec.max_route_len = 1 + static_cast<int>(seed % 3);
        spec.orientation =
            seed % 2 == 0 ? Orientation::ResourceMode : Orientation::PaperLiteral;
        spec.every_edge_shared = seed % 3 == 0 && spec.travelers >= 2;
        const Scenario s = generate_random_scenario(seed, spec);
        CHECK(validate_scenario(s).pass());
        if (spec.every_edge_shared) {
            const IndexSets sets = derive_index_sets(s.network, s.travelers);
            for (const Edge& e : s.network.edges) {
                CHECK(sets.competitors(e.id).size() == s.travelers.size());
            }
        }
    }
}

TEST_CASE("an empty scenario is valid and solves to zero welfare") {
    SizeSpec spec;
    spec.travelers = 0;
    const Scenario s = generate_random_scenario(7, spec);
    CHECK(validate_scenario(s).pass());
    CHECK(solve_centralized(s, s.solver).welfare == 0.0);
}

TEST_CASE("profile files round-trip against the scenario route order") {
    const Scenario s = testing::three_traveler_chain();
    MessageProfile profile;
    for (const Traveler& t : s.travelers) {
        Message m;
        m.traveler_id = t.id;
        double v = 1.0;
        for (int edge : t.route.edge_sequence) {
            m.demanded_times[edge] = v;
            m.bid_prices[edge] = v / 10.0;
            v += 0.5;
        }
        profile.messages[t.id] = std::move(m);
    }
    TempFile file("cavnet-profile.json");
    save_profile(s, profile, file.path);
    CHECK(load_profile(s, file.path) == profile);
}

TEST_CASE("profile files must cover each route exactly") {
    const Scenario s = testing::three_traveler_chain();
    json j = json{{"messages",
                   {{{"traveler_id", 1}, {"demanded_times", {1.0}}, {"bid_prices", {0.1}}}}}};
    CHECK_THROWS_AS(profile_from_json(s, j), ParseError);  // route has two edges
}

TEST_CASE("suite reports are reproducible modulo timing") {
    SizeSpec spec;
    spec.edges = 1;
    spec.travelers = 2;
    spec.orientation = Orientation::ResourceMode;
    spec.every_edge_shared = true;
    const Scenario s = generate_random_scenario(11, spec);

    auto run_once = [&] {
        SuiteReport report = run_suite(s, SuiteKind::Solve);
        report.machine.erase("timing");
        return report.machine.dump();
    };
    CHECK(run_once() == run_once());
}

TEST_CASE("unknown suite names are a usage error") {
    CHECK_THROWS_AS(parse_suite("everything"), UsageError);
    CHECK(parse_suite("mechanism-eval") == SuiteKind::MechanismEval);
}

TEST_CASE("the shipped fixtures load and describe the worked instances" *
          doctest::skip(!std::filesystem::exists("scenarios/worked_resource.json"))) {
    const Scenario worked = load_scenario("scenarios/worked_resource.json");
    CHECK(worked.travelers.size() == 2);
    CHECK(worked.network.edges.size() == 1);
    CHECK(worked.metadata.orientation == Orientation::ResourceMode);
    const Scenario reference = testing::worked_resource_scenario();
    CHECK(worked.network == reference.network);
    CHECK(worked.travelers == reference.travelers);
    CHECK(worked.mechanism == reference.mechanism);

    const Scenario corner = load_scenario("scenarios/paper_literal_shared.json");
    CHECK(corner.metadata.orientation == Orientation::PaperLiteral);

    const MessageProfile profile =
        load_profile(worked, "scenarios/worked_resource_candidate_profile.json");
    CHECK(profile.message(1).demanded_times.at(1) == 3.8);
}

TEST_CASE("an infeasible scenario never enters a suite") {
    Scenario s = testing::worked_resource_scenario();
    s.network = build_network({1, 2}, {Edge{1, 1, 2, 1.5, 1.0}});
    CHECK_THROWS_AS(run_suite(s, SuiteKind::Solve), InfeasibilityError);
}
