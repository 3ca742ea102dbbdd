#include "cavnet/suite.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace cavnet {

namespace {

using nlohmann::json;

json residuals_to_json(const KKTResiduals& r) {
    return json{{"stationarity", r.stationarity},
                {"complementary_slackness_lower", r.complementary_slackness_lower},
                {"complementary_slackness_capacity", r.complementary_slackness_capacity},
                {"dual_feasibility", r.dual_feasibility},
                {"primal_feasibility", r.primal_feasibility},
                {"max", r.max()}};
}

json allocation_to_json(const Allocation& a) {
    json vars = json::array();
    for (int flat = 0; flat < a.layout.size(); ++flat) {
        const VarKey& key = a.layout.key(flat);
        vars.push_back(
            {{"traveler", key.traveler}, {"edge", key.edge}, {"theta", a.theta[flat]}});
    }
    return vars;
}

json solver_to_json(const SolverResult& r) {
    json nu = json::object();
    for (const auto& [edge, value] : r.certificate.nu) {
        nu[std::to_string(edge)] = value;
    }
    json lambda = json::array();
    for (const auto& [key, value] : r.certificate.lambda) {
        lambda.push_back({{"traveler", key.traveler}, {"edge", key.edge}, {"lambda", value}});
    }
    return json{{"allocation", allocation_to_json(r.allocation)},
                {"nu", nu},
                {"lambda", lambda},
                {"welfare", r.welfare},
                {"iterations", r.iterations},
                {"converged", r.converged},
                {"residuals", residuals_to_json(r.certificate.residuals)}};
}

json sanitize(double x) {
    // JSON has no infinity literal; penalties may carry the sentinel.
    if (std::isinf(x)) return json(x > 0 ? "inf" : "-inf");
    return json(x);
}

json outcome_to_json(const Scenario& scenario, const Outcome& out) {
    json payments = json::object(), penalties = json::object(), utilities = json::object();
    for (const auto& [traveler, value] : out.payments) {
        payments[std::to_string(traveler)] = sanitize(value);
    }
    for (const auto& [traveler, value] : out.penalties) {
        penalties[std::to_string(traveler)] = sanitize(value);
    }
    for (const Traveler& t : scenario.travelers) {
        utilities[std::to_string(t.id)] = sanitize(utility(scenario, out, t.id));
    }
    json edge_payments = json::array();
    for (const auto& [key, value] : out.edge_payments) {
        edge_payments.push_back(
            {{"traveler", key.traveler}, {"edge", key.edge}, {"payment", value}});
    }
    return json{{"allocation", allocation_to_json(out.allocation)},
                {"payments", payments},
                {"edge_payments", edge_payments},
                {"penalties", penalties},
                {"utilities", utilities}};
}

json profile_summary(const Scenario& scenario, const MessageProfile& profile) {
    return profile_to_json(scenario, profile);
}

struct SuiteBuilder {
    SuiteReport& report;
    bool degenerate = false;  // candidate equilibrium carries penalties

    void pass(const std::string& name, const std::string& detail = "") {
        report.assertions.push_back({name, "pass", detail});
    }
    void fail(const std::string& name, const std::string& detail) {
        report.assertions.push_back({name, "fail", detail});
    }
    void info(const std::string& name, const std::string& detail) {
        report.assertions.push_back({name, "info", detail});
    }
    // Asserted normally; demoted to "flagged" on degenerate instances where
    // the claim is documented as inconsistent rather than failed.
    void check(bool ok, const std::string& name, const std::string& detail) {
        if (ok) {
            pass(name, detail);
        } else if (degenerate) {
            report.assertions.push_back({name, "flagged", detail});
        } else {
            fail(name, detail);
        }
    }
    void require(bool ok, const std::string& name, const std::string& detail) {
        ok ? pass(name, detail) : fail(name, detail);
    }
};

std::string format_double(double x) {
    std::ostringstream os;
    os << std::setprecision(10) << x;
    return os.str();
}

// Shared solve stage: multi-start uniqueness, certificates, oracle check.
SolverResult solve_stage(const Scenario& scenario, SuiteBuilder& b, json& machine) {
    std::vector<SolverResult> runs;
    try {
        runs = solve_multi_start(scenario, scenario.solver);
    } catch (const NonconvergenceError& e) {
        b.require(false, "solver-converged", e.what());
        runs.push_back(e.best);
    }
    const SolverResult& primary = runs.front();
    machine["solver"] = solver_to_json(primary);

    if (primary.converged) {
        b.pass("solver-converged",
               "residual " + format_double(primary.certificate.residuals.max()));
    }
    bool certified = true;
    for (const SolverResult& r : runs) {
        certified = certified && r.certificate.valid(scenario.solver.kkt_tol);
    }
    b.require(certified, "kkt-certificate",
              "all starts within " + format_double(scenario.solver.kkt_tol));

    double spread = 0.0;
    for (const SolverResult& r : runs) {
        if (r.allocation.layout.size() != primary.allocation.layout.size()) continue;
        if (r.allocation.layout.size() > 0) {
            spread = std::max(spread, (r.allocation.theta - primary.allocation.theta)
                                          .lpNorm<Eigen::Infinity>());
        }
    }
    b.require(spread <= scenario.solver.solution_tol, "unique-optimum",
              "starts " + std::to_string(runs.size()) + ", spread " + format_double(spread));
    machine["solver"]["start_spread"] = spread;

    b.require(primary.allocation.feasibility_violation() <= 1e-9, "allocation-feasible",
              "violation " + format_double(primary.allocation.feasibility_violation()));

    if (primary.allocation.layout.size() > 0 && primary.allocation.layout.size() <= 6) {
        const Allocation grid_opt = brute_force_oracle(scenario, scenario.solver.grid_step);
        const double oracle_welfare = social_welfare(scenario, grid_opt);
        double lipschitz = 0.0;
        for (int flat = 0; flat < primary.allocation.layout.size(); ++flat) {
            const VarKey& key = primary.allocation.layout.key(flat);
            const ValuationSpec& spec = scenario.traveler(key.traveler).valuation;
            lipschitz = std::max({lipschitz,
                                  std::abs(valuation_derivative(spec, 0.0)),
                                  std::abs(valuation_derivative(
                                      spec, primary.allocation.theta[flat] + 1.0))});
        }
        const double slack = lipschitz * scenario.solver.grid_step *
                             static_cast<double>(primary.allocation.layout.size());
        b.require(primary.welfare >= oracle_welfare - slack, "oracle-dominance",
                  "solver " + format_double(primary.welfare) + " vs grid " +
                      format_double(oracle_welfare) + " (slack " + format_double(slack) + ")");
        const double distance =
            (primary.allocation.theta - grid_opt.theta).lpNorm<Eigen::Infinity>();
        // The per-coordinate bound presumes the binding face contains grid
        // points: unit weights and capacities aligned to the demand grid.
        // Otherwise the grid argmax may wander along the face and the
        // distance is reported without being asserted.
        bool grid_aligned = true;
        for (const auto& block : primary.allocation.layout.edge_blocks()) {
            double floor_load = 0.0;
            for (std::size_t k = 0; k < block.vars.size(); ++k) {
                grid_aligned = grid_aligned && block.alphas[k] == 1.0;
                floor_load += block.alphas[k] * block.min_time;
            }
            const double steps = (block.capacity - floor_load) / scenario.solver.grid_step;
            grid_aligned = grid_aligned && std::abs(steps - std::round(steps)) <= 1e-9;
        }
        if (grid_aligned) {
            b.require(distance <= 2.0 * scenario.solver.grid_step, "oracle-distance",
                      "per-coordinate distance " + format_double(distance));
        } else {
            b.info("oracle-distance",
                   "per-coordinate distance " + format_double(distance) +
                       " (not asserted: capacity off the demand grid)");
        }
        machine["oracle"] = {{"welfare", oracle_welfare},
                             {"distance", distance},
                             {"grid_step", scenario.solver.grid_step}};
    } else if (primary.allocation.layout.size() > 6) {
        b.info("oracle-dominance", "skipped: dimension above the oracle guard");
    }
    return primary;
}

void verify_stage(const Scenario& scenario, const SolverResult& solved, SuiteBuilder& b,
                  json& machine, const SuiteOptions& options) {
    const CandidateNe candidate = construct_candidate_ne(scenario, solved);
    b.degenerate = !candidate.degeneracy_flags.empty();
    for (const std::string& flag : candidate.degeneracy_flags) {
        b.report.flags.push_back(flag);
    }

    DeviationSearchConfig search;
    search.epsilon_ne = options.epsilon;
    const NEReport ne = verify_ne(scenario, candidate.profile, solved.certificate.nu, search);
    machine["ne"] = {{"is_epsilon_ne", ne.is_epsilon_ne},
                     {"epsilon", ne.epsilon},
                     {"worst_gain", ne.worst_deviation.gain},
                     {"worst_traveler", ne.worst_deviation.traveler},
                     {"profile", profile_summary(scenario, candidate.profile)}};
    b.check(ne.is_epsilon_ne, "candidate-is-epsilon-ne",
            "worst deviation gain " + format_double(ne.worst_deviation.gain));

    const PropertyReport properties = verify_properties(scenario, candidate.profile, solved);
    for (const std::string& flag : properties.degeneracy_flags) {
        b.report.flags.push_back(flag);
    }
    json penalties = json::object();
    for (const auto& [traveler, phi] : properties.penalty_at_profile) {
        penalties[std::to_string(traveler)] = sanitize(phi);
    }
    machine["properties"] = {
        {"budget_residual", sanitize(properties.budget_residual)},
        {"ir_violations", properties.ir_violations.size()},
        {"feasibility_ok", properties.feasibility_ok},
        {"implementation_distance", properties.implementation_distance},
        {"price_alignment_residual", properties.price_alignment_residual},
        {"penalties", penalties},
        {"flags", properties.degeneracy_flags}};

    b.check(properties.budget_residual <= 1e-8, "budget-balance",
            "|sum of payments| = " + format_double(properties.budget_residual));
    b.check(properties.ir_violations.empty(), "individual-rationality",
            std::to_string(properties.ir_violations.size()) + " travelers below 0");
    b.require(properties.feasibility_ok, "outcome-feasible", "");
    b.check(properties.implementation_distance <= 1e-4, "strong-implementation",
            "distance to welfare optimum " + format_double(properties.implementation_distance));
    b.check(properties.price_alignment_residual <= 1e-4, "price-alignment",
            "max |bid - capacity price| = " + format_double(properties.price_alignment_residual));
    bool zero_penalties = true;
    for (const auto& [traveler, phi] : properties.penalty_at_profile) {
        zero_penalties = zero_penalties && phi == 0.0;
    }
    b.check(zero_penalties, "zero-penalty-at-candidate", "");

    // The participation deviation: zero demand priced at the capacity
    // certificate must be worth exactly the fair-share refund.
    double worst_gap = 0.0;
    bool participation_ok = true;
    const IndexSets sets = derive_index_sets(scenario.network, scenario.travelers);
    for (const Traveler& t : scenario.travelers) {
        MessageProfile deviated = candidate.profile;
        Message opt_out;
        opt_out.traveler_id = t.id;
        double expected = 0.0;
        for (int edge_id : t.route.edge_sequence) {
            opt_out.demanded_times[edge_id] = 0.0;
            opt_out.bid_prices[edge_id] = solved.certificate.nu.at(edge_id);
            const Edge& e = scenario.network.edge(edge_id);
            expected += solved.certificate.nu.at(edge_id) * e.capacity /
                        static_cast<double>(sets.competitors(edge_id).size());
        }
        deviated.messages[t.id] = opt_out;
        const Outcome out = outcome(scenario, deviated, solved.certificate.nu);
        const double u = utility(scenario, out, t.id);
        worst_gap = std::max(worst_gap, std::abs(u - expected));
        participation_ok = participation_ok && u >= -1e-9;
    }
    b.check(participation_ok && worst_gap <= 1e-8, "no-participation-utility",
            "max |u - fair-share refund| = " + format_double(worst_gap));
}

void find_ne_stage(const Scenario& scenario, const SolverResult& solved, SuiteBuilder& b,
                   json& machine, const SuiteOptions& options, SuiteReport& report) {
    // Neutral start: a quarter of the per-edge headroom, zero bids.
    MessageProfile initial;
    for (const Traveler& t : scenario.travelers) {
        Message m;
        m.traveler_id = t.id;
        for (int edge_id : t.route.edge_sequence) {
            const Edge& e = scenario.network.edge(edge_id);
            const double hi = e.capacity / t.alpha;
            m.demanded_times[edge_id] =
                e.min_travel_time + 0.25 * std::max(0.0, hi - e.min_travel_time);
            m.bid_prices[edge_id] = 0.0;
        }
        initial.messages[t.id] = std::move(m);
    }

    DeviationSearchConfig search;
    search.epsilon_ne = options.epsilon;
    const BrResult br =
        best_response_dynamics(scenario, initial, solved.certificate.nu, search);
    report.trajectory = br.trajectory;
    machine["best_response"] = {{"status", to_string(br.status)},
                                {"sweeps", br.sweeps},
                                {"final_profile", profile_summary(scenario, br.final_profile)}};
    b.info("br-status", to_string(br.status) + " after " + std::to_string(br.sweeps) + " sweeps");

    const NEReport ne = verify_ne(scenario, br.final_profile, solved.certificate.nu, search);
    machine["best_response"]["worst_gain"] = ne.worst_deviation.gain;
    b.check(br.status == BrStatus::Converged && ne.is_epsilon_ne, "br-reaches-epsilon-ne",
            "status " + to_string(br.status) + ", residual gain " +
                format_double(ne.worst_deviation.gain));

    if (br.status == BrStatus::Converged && ne.is_epsilon_ne) {
        double distance = 0.0;
        for (const Traveler& t : scenario.travelers) {
            for (int edge_id : t.route.edge_sequence) {
                distance = std::max(distance,
                                    std::abs(br.final_profile.message(t.id).demanded_times.at(
                                                 edge_id) -
                                             solved.allocation.at(t.id, edge_id)));
            }
        }
        b.check(distance <= 1e-4, "br-implements-optimum",
                "demand distance to welfare optimum " + format_double(distance));
        machine["best_response"]["distance_to_optimum"] = distance;
    }
}

}  // namespace

SuiteKind parse_suite(const std::string& name) {
    if (name == "solve") return SuiteKind::Solve;
    if (name == "mechanism-eval") return SuiteKind::MechanismEval;
    if (name == "find-ne") return SuiteKind::FindNe;
    if (name == "verify") return SuiteKind::Verify;
    if (name == "full") return SuiteKind::Full;
    throw UsageError("unknown suite '" + name +
                     "' (expected solve | mechanism-eval | find-ne | verify | full)");
}

std::string to_string(SuiteKind kind) {
    switch (kind) {
        case SuiteKind::Solve: return "solve";
        case SuiteKind::MechanismEval: return "mechanism-eval";
        case SuiteKind::FindNe: return "find-ne";
        case SuiteKind::Verify: return "verify";
        case SuiteKind::Full: return "full";
    }
    return "unknown";
}

int SuiteReport::exit_code() const {
    for (const AssertionOutcome& a : assertions) {
        if (a.status == "fail") return 2;
    }
    if (!flags.empty()) return 3;
    for (const AssertionOutcome& a : assertions) {
        if (a.status == "flagged") return 3;
    }
    return 0;
}

std::string SuiteReport::human_table() const {
    std::ostringstream os;
    os << "scenario: " << scenario_name << "\nsuite:    " << suite << "\n\n";
    os << std::left << std::setw(34) << "check" << std::setw(10) << "status"
       << "detail\n";
    os << std::string(78, '-') << '\n';
    for (const AssertionOutcome& a : assertions) {
        os << std::left << std::setw(34) << a.name << std::setw(10) << a.status << a.detail
           << '\n';
    }
    if (!flags.empty()) {
        os << "\ndegeneracy flags:\n";
        for (const std::string& f : flags) {
            os << "  - " << f << '\n';
        }
    }
    os << "\nexit code: " << exit_code() << '\n';
    return os.str();
}

std::string trajectory_csv(const std::vector<BrTrajectoryPoint>& trajectory) {
    std::ostringstream os;
    os << "sweep,traveler,edge,demanded_time,bid_price,utility\n";
    os << std::setprecision(17);
    for (const BrTrajectoryPoint& p : trajectory) {
        for (const auto& [edge, demand] : p.demanded_times) {
            os << p.sweep << ',' << p.traveler << ',' << edge << ',' << demand << ','
               << p.bid_prices.at(edge) << ',' << p.utility << '\n';
        }
    }
    return os.str();
}

SuiteReport run_suite(const Scenario& scenario, SuiteKind kind, const SuiteOptions& options) {
    const auto started = std::chrono::steady_clock::now();

    const ValidationReport validation = validate_scenario(scenario);
    if (!validation.feasible()) {
        std::string detail = "scenario infeasible:";
        for (const std::string& f : validation.failures()) detail += " " + f + ";";
        throw InfeasibilityError(detail);
    }
    if (!validation.pass()) {
        std::string detail = "scenario invalid:";
        for (const std::string& f : validation.failures()) detail += " " + f + ";";
        throw AttributeError(detail);
    }

    SuiteReport report;
    report.scenario_name = scenario.metadata.name;
    report.suite = to_string(kind);
    report.machine = json{{"scenario", scenario.metadata.name}, {"suite", report.suite}};
    SuiteBuilder b{report};

    switch (kind) {
        case SuiteKind::Solve: {
            solve_stage(scenario, b, report.machine);
            break;
        }
        case SuiteKind::MechanismEval: {
            if (!options.profile) {
                throw UsageError("mechanism-eval needs a message-profile file");
            }
            const SolverResult solved = solve_stage(scenario, b, report.machine);
            const Outcome out = outcome(scenario, *options.profile, solved.certificate.nu);
            report.machine["outcome"] = outcome_to_json(scenario, out);
            const double violation =
                outcome_feasibility_violation(*options.profile, out.allocation);
            b.require(violation <= 1e-9, "outcome-feasible",
                      "violation " + format_double(violation));
            for (const auto& [traveler, phi] : out.penalties) {
                if (phi != 0.0) {
                    b.info("penalty", "traveler " + std::to_string(traveler) + " pays " +
                                          (std::isinf(phi) ? "infinity" : format_double(phi)));
                }
            }
            break;
        }
        case SuiteKind::FindNe: {
            const SolverResult solved = solve_stage(scenario, b, report.machine);
            const CandidateNe candidate = construct_candidate_ne(scenario, solved);
            b.degenerate = !candidate.degeneracy_flags.empty();
            for (const std::string& flag : candidate.degeneracy_flags) {
                report.flags.push_back(flag);
            }
            find_ne_stage(scenario, solved, b, report.machine, options, report);
            break;
        }
        case SuiteKind::Verify: {
            const SolverResult solved = solve_stage(scenario, b, report.machine);
            verify_stage(scenario, solved, b, report.machine, options);
            break;
        }
        case SuiteKind::Full: {
            const SolverResult solved = solve_stage(scenario, b, report.machine);
            verify_stage(scenario, solved, b, report.machine, options);
            find_ne_stage(scenario, solved, b, report.machine, options, report);

            double worst = 0.0;
            for (int k = 0; k < options.feasibility_samples; ++k) {
                const MessageProfile sample = random_profile(
                    scenario, scenario.metadata.seed * 1000003ULL + static_cast<unsigned>(k));
                const Outcome out = outcome(scenario, sample, solved.certificate.nu);
                worst = std::max(
                    worst, outcome_feasibility_violation(sample, out.allocation));
            }
            b.require(worst <= 1e-9, "feasibility-off-equilibrium",
                      std::to_string(options.feasibility_samples) +
                          " random profiles, worst violation " + format_double(worst));
            report.machine["feasibility_sampling"] = {
                {"samples", options.feasibility_samples}, {"worst_violation", worst}};
            break;
        }
    }

    json assertions = json::array();
    for (const AssertionOutcome& a : report.assertions) {
        assertions.push_back({{"name", a.name}, {"status", a.status}, {"detail", a.detail}});
    }
    report.machine["assertions"] = assertions;
    report.machine["flags"] = report.flags;
    report.machine["exit_code"] = report.exit_code();

    report.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    report.machine["timing"] = {{"elapsed_seconds", report.elapsed_seconds}};
    return report;
}

}  // namespace cavnet
