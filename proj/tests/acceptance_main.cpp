// Acceptance suite: runs every contract the artifact makes at desk scale and
// prints one pass/fail line per criterion. Exit status 0 iff all pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <vector>

#include "cavnet/suite.hpp"
#include "helpers.hpp"

using namespace cavnet;

namespace {

struct Criterion {
    int number = 0;
    std::string name;
    bool pass = false;
    std::string detail;
};

std::vector<Criterion> results(14);
std::vector<double> certificate_residuals;  // every converged solve, any criterion

void set(int number, const std::string& name, bool pass, const std::string& detail) {
    results[static_cast<std::size_t>(number)] = {number, name, pass, detail};
}

SolverResult tracked_solve(const Scenario& s, const SolverConfig& config) {
    SolverResult r = solve_centralized(s, config);
    certificate_residuals.push_back(r.certificate.residuals.max());
    return r;
}

std::string fmt(double x) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.3g", x);
    return buffer;
}

// ---------------------------------------------------------------------------
// Scenario families

std::vector<Scenario> oracle_scenarios() {
    // Single- and two-edge instances sized for the 0.01 grid: unit alpha and
    // grid-aligned capacities keep the grid argmax within one cell of the
    // true optimum, which is what the 0.02 distance bound presumes.
    std::vector<Scenario> scenarios;
    for (std::uint64_t k = 0; k < 20; ++k) {
        SizeSpec spec;
        spec.edges = k < 10 ? 1 : 2;
        spec.travelers = 2 + static_cast<int>(k % 2);
        spec.max_route_len = spec.edges;
        spec.orientation = (k / 2) % 2 == 0 ? Orientation::ResourceMode
                                            : Orientation::PaperLiteral;
        spec.alpha_lo = spec.alpha_hi = 1.0;
        spec.capacity_grid = 0.01;
        spec.headroom_lo = 1.5;
        spec.headroom_hi = 2.0;
        scenarios.push_back(generate_random_scenario(1000 + k, spec));
    }
    return scenarios;
}

// Resource-mode instances whose candidate equilibrium is interior (no
// penalty fires): the regime where the equilibrium properties are
// non-trivial. Deterministic seed scan.
std::vector<Scenario> equilibrium_scenarios(std::size_t count) {
    std::vector<Scenario> scenarios;
    for (std::uint64_t seed = 1; scenarios.size() < count && seed < 500; ++seed) {
        SizeSpec spec;
        spec.edges = 1 + static_cast<int>(seed % 2);
        spec.travelers = 2 + static_cast<int>(seed % 2);
        spec.max_route_len = spec.edges;
        spec.orientation = Orientation::ResourceMode;
        spec.every_edge_shared = true;
        spec.headroom_lo = 2.5;
        spec.headroom_hi = 4.0;
        const Scenario s = generate_random_scenario(2000 + seed, spec);
        try {
            const SolverResult solved = tracked_solve(s, s.solver);
            if (construct_candidate_ne(s, solved).degeneracy_flags.empty()) {
                scenarios.push_back(s);
            }
        } catch (const Error&) {
            continue;
        }
    }
    return scenarios;
}

// ---------------------------------------------------------------------------
// Independent fine-grid deviation search for the worked instance (one shared
// edge, two travelers, unit alpha), written directly from the payment and
// penalty definitions.

struct FineGridProblem {
    double a_i = 0.0;       // deviator's log-valuation weight
    double other_demand = 0.0;
    double other_bid = 0.0;
    double nu = 5.0 / 12.0;
    double capacity = 10.0;
    double min_time = 1.0;
    double delta = 1e6;
};

double fine_utility(const FineGridProblem& p, double x, double tau) {
    const double floored_other = std::max(p.other_demand, p.min_time);
    const double excess = (std::max(x, p.min_time) - p.min_time) +
                          (floored_other - p.min_time);
    double theta;
    if (2.0 * p.min_time + excess <= p.capacity) {
        theta = std::max(x, p.min_time);
    } else {
        theta = p.min_time + (std::max(x, p.min_time) - p.min_time) *
                                 (p.capacity - 2.0 * p.min_time) / excess;
    }
    const double value = p.a_i * std::log1p(theta);
    const double mismatch = p.capacity - p.other_demand - x;
    const double toll = p.other_bid * (x - p.capacity / 2.0) +
                        (tau - p.nu) * (tau - p.nu) +
                        p.other_bid * (tau - p.other_bid) * (tau - p.other_bid) *
                            mismatch * mismatch;
    double phi = 0.0;
    if (x < p.min_time) phi = std::numeric_limits<double>::infinity();
    else if (x == p.min_time) phi = p.delta;  // shared edge pinned at the minimum
    return value - toll - phi;
}

double fine_grid_best_gain(const FineGridProblem& p, double current_demand,
                           double current_bid, double step) {
    const double current = fine_utility(p, current_demand, current_bid);
    const double tau_max = 10.0 * p.nu + 1.0;
    double best = -std::numeric_limits<double>::infinity();
    for (double x = p.min_time; x <= p.capacity + 1e-12; x += step) {
        const double floored_other = std::max(p.other_demand, p.min_time);
        const double excess = (x - p.min_time) + (floored_other - p.min_time);
        double theta;
        if (2.0 * p.min_time + excess <= p.capacity) {
            theta = x;
        } else {
            theta = p.min_time +
                    (x - p.min_time) * (p.capacity - 2.0 * p.min_time) / excess;
        }
        const double value = p.a_i * std::log1p(theta);
        const double mismatch = p.capacity - p.other_demand - x;
        const double term1 = p.other_bid * (x - p.capacity / 2.0);
        const double weight = p.other_bid * mismatch * mismatch;
        const double phi = x == p.min_time ? p.delta : 0.0;
        for (double tau = 0.0; tau <= tau_max + 1e-12; tau += step) {
            const double bid_gap = tau - p.other_bid;
            const double u =
                value - term1 - (tau - p.nu) * (tau - p.nu) - weight * bid_gap * bid_gap - phi;
            if (u > best) best = u;
        }
    }
    return best - current;
}

// ---------------------------------------------------------------------------

void run_criterion_1_and_3(std::vector<Scenario>& oracle_family) {
    const auto started = std::chrono::steady_clock::now();
    bool pass = true;
    std::string detail;
    double worst_distance = 0.0;

    oracle_family = oracle_scenarios();
    for (const Scenario& s : oracle_family) {
        SolverConfig config = s.solver;
        config.grid_step = 0.01;
        const SolverResult solved = tracked_solve(s, config);
        const Allocation grid = brute_force_oracle(s, config.grid_step);

        double lipschitz = 0.0;
        for (int flat = 0; flat < grid.layout.size(); ++flat) {
            const VarKey& key = grid.layout.key(flat);
            const ValuationSpec& v = s.traveler(key.traveler).valuation;
            lipschitz = std::max({lipschitz, std::abs(valuation_derivative(v, 0.0)),
                                  std::abs(valuation_derivative(v, grid.theta[flat] + 1.0))});
        }
        const double slack =
            lipschitz * config.grid_step * static_cast<double>(grid.layout.size());
        if (solved.welfare < social_welfare(s, grid) - slack) {
            pass = false;
            detail = s.metadata.name + ": solver below grid welfare";
        }
        const double distance = (solved.allocation.theta - grid.theta).lpNorm<Eigen::Infinity>();
        worst_distance = std::max(worst_distance, distance);
        if (distance > 0.02) {
            pass = false;
            detail = s.metadata.name + ": grid distance " + fmt(distance);
        }
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (elapsed > 60.0) {
        pass = false;
        detail = "runtime " + fmt(elapsed) + " s";
    }
    if (pass) {
        detail = "20 scenarios, worst grid distance " + fmt(worst_distance) + ", " +
                 fmt(elapsed) + " s";
    }
    set(1, "solver matches the exhaustive grid oracle", pass, detail);

    // Criterion 3: ten seeded starts per scenario agree on the optimum.
    bool unique = true;
    double worst_spread = 0.0;
    std::vector<Scenario> uniqueness_family(oracle_family.begin(), oracle_family.begin() + 6);
    uniqueness_family.push_back(cavnet::testing::worked_resource_scenario());
    for (const Scenario& s : uniqueness_family) {
        const std::vector<SolverResult> runs = solve_multi_start(s, s.solver);
        for (const SolverResult& r : runs) {
            certificate_residuals.push_back(r.certificate.residuals.max());
            const double spread = runs.front().allocation.layout.size() == 0
                                      ? 0.0
                                      : (r.allocation.theta - runs.front().allocation.theta)
                                            .lpNorm<Eigen::Infinity>();
            worst_spread = std::max(worst_spread, spread);
            unique = unique && spread <= 1e-6;
        }
    }
    set(3, "optimum is unique across 10 random starts", unique,
        "worst spread " + fmt(worst_spread));
}

void run_criterion_4() {
    const Scenario s = cavnet::testing::worked_resource_scenario();
    const SolverResult r = tracked_solve(s, s.solver);
    const double e1 = std::abs(r.allocation.at(1, 1) - 3.8);
    const double e2 = std::abs(r.allocation.at(2, 1) - 6.2);
    const double en = std::abs(r.certificate.nu.at(1) - 5.0 / 12.0);
    set(4, "closed-form optimum (3.8, 6.2, nu = 5/12) reproduced",
        e1 <= 1e-5 && e2 <= 1e-5 && en <= 1e-5,
        "errors " + fmt(e1) + ", " + fmt(e2) + ", " + fmt(en));
}

void run_criterion_5() {
    bool pass = true;
    double worst = 0.0;
    int checked = 0;
    for (std::uint64_t k = 0; k < 10; ++k) {
        SizeSpec spec;
        spec.edges = 1 + static_cast<int>(k % 3);
        spec.travelers = 2 + static_cast<int>(k % 3);
        spec.max_route_len = 2;
        spec.orientation = k % 2 == 0 ? Orientation::ResourceMode
                                      : Orientation::PaperLiteral;
        const Scenario s = generate_random_scenario(3000 + k, spec);
        const SolverResult solved = tracked_solve(s, s.solver);
        for (int round = 0; round < 1000; ++round) {
            const MessageProfile profile =
                random_profile(s, 3000 + k * 1009 + static_cast<unsigned>(round));
            const Outcome out = outcome(s, profile, solved.certificate.nu);
            const double violation =
                outcome_feasibility_violation(profile, out.allocation);
            worst = std::max(worst, violation);
            pass = pass && violation <= 1e-9;
            ++checked;
        }
    }
    set(5, "every outcome allocation is feasible off equilibrium", pass,
        std::to_string(checked) + " profiles, worst violation " + fmt(worst));
}

void run_criteria_6_to_10(const std::vector<Scenario>& family) {
    bool budget_pass = true, ir_pass = true, price_pass = true, penalty_pass = true,
         implementation_pass = true;
    double worst_budget = 0.0, worst_price = 0.0, worst_impl = 0.0, worst_refund_gap = 0.0;
    int verified = 0;

    for (const Scenario& s : family) {
        const SolverResult solved = tracked_solve(s, s.solver);
        const CandidateNe candidate = construct_candidate_ne(s, solved);

        // Criterion 6 applies to every constructed candidate.
        const PropertyReport at_candidate =
            verify_properties(s, candidate.profile, solved);
        worst_budget = std::max(worst_budget, at_candidate.budget_residual);
        budget_pass = budget_pass && at_candidate.budget_residual <= 1e-8;

        // Criteria 7-10 apply to profiles that verify as epsilon-equilibria:
        // the candidate and the best-response limit.
        std::vector<MessageProfile> equilibria;
        DeviationSearchConfig search;
        const NEReport candidate_check =
            verify_ne(s, candidate.profile, solved.certificate.nu, search);
        if (candidate_check.is_epsilon_ne) equilibria.push_back(candidate.profile);

        MessageProfile start;
        for (const Traveler& t : s.travelers) {
            Message m;
            m.traveler_id = t.id;
            for (int edge : t.route.edge_sequence) {
                const Edge& e = s.network.edge(edge);
                m.demanded_times[edge] = e.min_travel_time + 0.5;
                m.bid_prices[edge] = 0.0;
            }
            start.messages[t.id] = std::move(m);
        }
        const BrResult br = best_response_dynamics(s, start, solved.certificate.nu, search);
        if (br.status == BrStatus::Converged) {
            const NEReport br_check =
                verify_ne(s, br.final_profile, solved.certificate.nu, search);
            if (br_check.is_epsilon_ne) equilibria.push_back(br.final_profile);
        }

        const IndexSets sets = derive_index_sets(s.network, s.travelers);
        for (const MessageProfile& profile : equilibria) {
            ++verified;
            const PropertyReport report = verify_properties(s, profile, solved);
            ir_pass = ir_pass && report.ir_violations.empty();
            worst_price = std::max(worst_price, report.price_alignment_residual);
            price_pass = price_pass && report.price_alignment_residual <= 1e-4;
            for (const auto& [traveler, phi] : report.penalty_at_profile) {
                penalty_pass = penalty_pass && phi == 0.0;
            }
            worst_impl = std::max(worst_impl, report.implementation_distance);
            implementation_pass = implementation_pass && report.implementation_distance <= 1e-4;

            // The participation deviation must match its closed form.
            for (const Traveler& t : s.travelers) {
                MessageProfile deviated = profile;
                Message opt_out;
                opt_out.traveler_id = t.id;
                double expected = 0.0;
                for (int edge : t.route.edge_sequence) {
                    opt_out.demanded_times[edge] = 0.0;
                    opt_out.bid_prices[edge] = solved.certificate.nu.at(edge);
                    expected += solved.certificate.nu.at(edge) *
                                s.network.edge(edge).capacity /
                                static_cast<double>(sets.competitors(edge).size());
                }
                deviated.messages[t.id] = std::move(opt_out);
                const double u =
                    utility(s, outcome(s, deviated, solved.certificate.nu), t.id);
                worst_refund_gap = std::max(worst_refund_gap, std::abs(u - expected));
                ir_pass = ir_pass && u >= -1e-9 && std::abs(u - expected) <= 1e-8;
            }
        }
    }

    const std::string population = std::to_string(verified) + " verified equilibria over " +
                                   std::to_string(family.size()) + " scenarios";
    set(6, "budget balances at every constructed candidate", budget_pass,
        "worst |sum of payments| " + fmt(worst_budget));
    set(7, "individual rationality and the fair-share refund", ir_pass && verified > 0,
        population + ", worst refund gap " + fmt(worst_refund_gap));
    set(8, "bids align with the capacity price at equilibrium", price_pass && verified > 0,
        "worst |bid - nu*| " + fmt(worst_price));
    set(9, "penalties vanish at equilibrium", penalty_pass && verified > 0, population);
    set(10, "equilibria implement the welfare optimum", implementation_pass && verified > 0,
        "worst allocation distance " + fmt(worst_impl));
}

void run_criterion_11() {
    const Scenario s = cavnet::testing::worked_resource_scenario();
    const SolverResult solved = tracked_solve(s, s.solver);
    const CandidateNe candidate = construct_candidate_ne(s, solved);

    DeviationSearchConfig search;
    const NEReport mine = verify_ne(s, candidate.profile, solved.certificate.nu, search);

    // Independent exhaustive search at step 1e-3, per traveler.
    FineGridProblem p1{2.0, candidate.profile.message(2).demanded_times.at(1),
                       candidate.profile.message(2).bid_prices.at(1)};
    FineGridProblem p2{3.0, candidate.profile.message(1).demanded_times.at(1),
                       candidate.profile.message(1).bid_prices.at(1)};
    const double fine_gain = std::max(
        fine_grid_best_gain(p1, candidate.profile.message(1).demanded_times.at(1),
                            candidate.profile.message(1).bid_prices.at(1), 1e-3),
        fine_grid_best_gain(p2, candidate.profile.message(2).demanded_times.at(1),
                            candidate.profile.message(2).bid_prices.at(1), 1e-3));
    const double agreement = std::abs(std::max(0.0, fine_gain) - mine.worst_deviation.gain);

    MessageProfile perturbed = candidate.profile;
    perturbed.messages[1].bid_prices[1] = candidate.profile.message(1).bid_prices.at(1) + 1.0 / 12.0;
    const NEReport perturbed_mine = verify_ne(s, perturbed, solved.certificate.nu, search);
    FineGridProblem p2_perturbed{3.0, perturbed.message(1).demanded_times.at(1),
                                 perturbed.message(1).bid_prices.at(1)};
    FineGridProblem p1_same{2.0, perturbed.message(2).demanded_times.at(1),
                            perturbed.message(2).bid_prices.at(1)};
    const double perturbed_fine = std::max(
        fine_grid_best_gain(p1_same, perturbed.message(1).demanded_times.at(1),
                            perturbed.message(1).bid_prices.at(1), 1e-3),
        fine_grid_best_gain(p2_perturbed, perturbed.message(2).demanded_times.at(1),
                            perturbed.message(2).bid_prices.at(1), 1e-3));

    const bool pass = mine.is_epsilon_ne && fine_gain <= 1e-6 && agreement <= 1e-5 &&
                      !perturbed_mine.is_epsilon_ne &&
                      perturbed_mine.worst_deviation.gain >= 0.006 && perturbed_fine >= 0.006;
    set(11, "deviation search agrees with the exhaustive fine grid", pass,
        "candidate gains " + fmt(mine.worst_deviation.gain) + " / " + fmt(fine_gain) +
            ", perturbed " + fmt(perturbed_mine.worst_deviation.gain) + " / " +
            fmt(perturbed_fine));
}

void run_criterion_12() {
    const Scenario s = cavnet::testing::paper_literal_shared_scenario();
    const SuiteReport report = run_suite(s, SuiteKind::Verify);
    bool no_hard_failure = true;
    for (const AssertionOutcome& a : report.assertions) {
        no_hard_failure = no_hard_failure && a.status != "fail";
    }
    const bool flagged = !report.flags.empty() && report.exit_code() == 3;
    set(12, "degenerate corner instance is flagged, not failed", flagged && no_hard_failure,
        std::to_string(report.flags.size()) + " flags, exit code " +
            std::to_string(report.exit_code()));
}

void run_criterion_13() {
    SizeSpec spec;
    spec.edges = 2;
    spec.travelers = 2;
    spec.max_route_len = 2;
    spec.orientation = Orientation::ResourceMode;
    spec.every_edge_shared = true;
    spec.headroom_lo = 2.5;
    spec.headroom_hi = 4.0;

    auto report_once = [&] {
        const Scenario s = generate_random_scenario(777, spec);
        SuiteReport report = run_suite(s, SuiteKind::Full);
        report.machine.erase("timing");
        return report.machine.dump();
    };
    const std::string a = report_once();
    const std::string b = report_once();
    set(13, "identical inputs reproduce byte-identical reports", a == b,
        std::to_string(a.size()) + " bytes compared");
}

}  // namespace

int main() {
    std::vector<Scenario> oracle_family;
    run_criterion_1_and_3(oracle_family);
    run_criterion_4();
    run_criterion_5();
    run_criteria_6_to_10(equilibrium_scenarios(10));
    run_criterion_11();
    run_criterion_12();
    run_criterion_13();

    // Criterion 2 audits every certificate produced above.
    double worst_residual = 0.0;
    for (double r : certificate_residuals) worst_residual = std::max(worst_residual, r);
    set(2, "every converged solve carries a valid KKT certificate",
        !certificate_residuals.empty() && worst_residual <= 1e-6,
        std::to_string(certificate_residuals.size()) + " certificates, worst residual " +
            fmt(worst_residual));

    bool all_pass = true;
    for (int k = 1; k <= 13; ++k) {
        const Criterion& c = results[static_cast<std::size_t>(k)];
        std::printf("[%s] %2d. %s (%s)\n", c.pass ? "PASS" : "FAIL", k, c.name.c_str(),
                    c.detail.c_str());
        all_pass = all_pass && c.pass;
    }
    std::printf("%s\n", all_pass ? "acceptance: all 13 criteria pass"
                                 : "acceptance: FAILURES PRESENT");
    return all_pass ? 0 : 1;
}
