#include "cavnet/game.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

namespace cavnet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Everything needed to price one traveler's report on one edge while the
// other messages stay fixed. Mirrors the arithmetic of project_to_feasible
// and edge_payment without rebuilding maps per candidate.
struct EdgeCtx {
    int edge = 0;
    double capacity = 0.0;
    double min_time = 0.0;
    double fair_share = 0.0;
    double alpha = 0.0;
    double tau_others = 0.0;           // competitors' average bid
    double nu = 0.0;                   // capacity price used in the bid penalty
    double others_reported_load = 0.0; // sum of alpha_j * demand_j, j != i
    double participating_lower = 0.0;  // floors of i plus participating others
    double others_floored_excess = 0.0;
    double theta_hi = 0.0;             // search box top, capacity / alpha
    bool shared = false;
    const ValuationSpec* spec = nullptr;
};

std::vector<EdgeCtx> build_contexts(const Scenario& scenario, const IndexSets& sets,
                                    const MessageProfile& profile, int traveler_id,
                                    const std::map<int, double>& nu) {
    const Traveler& me = scenario.traveler(traveler_id);
    const bool proxy = scenario.mechanism.nu_source == NuSource::CompetitorProxy;

    std::vector<EdgeCtx> contexts;
    contexts.reserve(me.route.edge_sequence.size());
    for (int edge_id : me.route.edge_sequence) {
        const Edge& edge = scenario.network.edge(edge_id);
        const std::set<int>& competitors = sets.competitors(edge_id);

        EdgeCtx ctx;
        ctx.edge = edge_id;
        ctx.capacity = edge.capacity;
        ctx.min_time = edge.min_travel_time;
        ctx.fair_share = edge.capacity / static_cast<double>(competitors.size());
        ctx.alpha = me.alpha;
        ctx.shared = competitors.size() >= 2;
        ctx.theta_hi = edge.capacity / me.alpha;
        ctx.spec = &me.valuation;
        ctx.tau_others = average_price_others(profile, sets, edge_id, traveler_id);
        if (proxy) {
            ctx.nu = ctx.tau_others;
        } else {
            auto it = nu.find(edge_id);
            if (it == nu.end()) {
                std::ostringstream os;
                os << "no capacity price supplied for edge " << edge_id;
                throw StructuralError(os.str());
            }
            ctx.nu = it->second;
        }

        ctx.participating_lower = me.alpha * ctx.min_time;
        for (int j : competitors) {
            if (j == traveler_id) continue;
            const Message& m = profile.message(j);
            const double alpha_j = scenario.traveler(j).alpha;
            ctx.others_reported_load += alpha_j * m.demanded_times.at(edge_id);
            if (!m.is_opt_out()) {
                ctx.participating_lower += alpha_j * ctx.min_time;
                ctx.others_floored_excess +=
                    alpha_j * (std::max(m.demanded_times.at(edge_id), ctx.min_time) -
                               ctx.min_time);
            }
        }
        contexts.push_back(ctx);
    }
    return contexts;
}

// Travel time the projection hands the deviator for a reported demand x >= 0
// (the deviator is assumed to participate; x below the minimum is floored).
double allocated_time(const EdgeCtx& c, double x) {
    const double floored = std::max(x, c.min_time);
    const double excess = c.alpha * (floored - c.min_time);
    const double total = c.participating_lower + c.others_floored_excess + excess;
    if (total <= c.capacity) return floored;
    return c.min_time + (floored - c.min_time) * (c.capacity - c.participating_lower) /
                            (c.others_floored_excess + excess);
}

double toll(const EdgeCtx& c, double x, double tau) {
    if (!c.shared) return 0.0;
    const double mismatch = c.capacity - c.others_reported_load - c.alpha * x;
    const double bid_gap = tau - c.tau_others;
    return c.tau_others * (c.alpha * x - c.fair_share) + (tau - c.nu) * (tau - c.nu) +
           c.tau_others * bid_gap * bid_gap * mismatch * mismatch;
}

// Per-edge payoff contribution, penalties excluded.
double edge_payoff(const EdgeCtx& c, double x, double tau) {
    return eval_valuation(*c.spec, allocated_time(c, x)) - toll(c, x, tau);
}

// Full utility of an arbitrary message against the fixed others, matching
// the public outcome()/utility() composition.
double eval_message(const std::vector<EdgeCtx>& contexts, const Message& message,
                    double gamma, double delta) {
    if (message.is_opt_out()) {
        double u = 0.0;  // v(0) = 0, no penalty
        for (const EdgeCtx& c : contexts) {
            u -= toll(c, 0.0, message.bid_prices.at(c.edge));
        }
        return u;
    }
    double u = 0.0;
    bool below = false, over_on_monopoly = false, pinned_on_shared = false;
    for (const EdgeCtx& c : contexts) {
        const double x = message.demanded_times.at(c.edge);
        const double tau = message.bid_prices.at(c.edge);
        if (x < c.min_time) below = true;
        else if (x > c.min_time && !c.shared) over_on_monopoly = true;
        else if (x == c.min_time && c.shared) pinned_on_shared = true;
        u += edge_payoff(c, x, tau);
    }
    if (below) return -kInf;
    if (over_on_monopoly) return u - gamma;
    if (pinned_on_shared) return u - delta;
    return u;
}

// Golden-section maximization of a unimodal-on-the-bracket payoff.
template <typename F>
std::pair<double, double> golden_max(const F& f, double lo, double hi) {
    constexpr double kRatio = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - kRatio * (b - a), x2 = a + kRatio * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 80 && b - a > 0.0; ++it) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kRatio * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kRatio * (b - a);
            f1 = f(x1);
        }
    }
    return f1 >= f2 ? std::make_pair(x1, f1) : std::make_pair(x2, f2);
}

struct EdgeChoice {
    double payoff = -kInf;
    double demand = 0.0;
    double bid = 0.0;
};

// Best (demand, bid) on one edge with the demand held in one penalty class:
// pinned exactly at the minimum time, or strictly above it.
EdgeChoice best_in_class(const EdgeCtx& c, bool pinned, const DeviationSearchConfig& config,
                         double tau_max, double current_demand, double current_bid) {
    const double nudge = 1e-12 * (1.0 + c.min_time);

    std::vector<double> demand_grid;
    if (pinned) {
        demand_grid.push_back(c.min_time);
    } else {
        for (double x = c.min_time + config.theta_grid_step; x <= c.theta_hi + 1e-12;
             x += config.theta_grid_step) {
            demand_grid.push_back(std::min(x, c.theta_hi));
        }
        if (current_demand > c.min_time) demand_grid.push_back(current_demand);
        if (demand_grid.empty()) demand_grid.push_back(c.min_time + nudge);
    }

    auto best_bid_candidates = [&](double x) {
        std::vector<double> taus;
        for (double t = 0.0; t <= tau_max + 1e-12; t += config.tau_grid_step) {
            taus.push_back(std::min(t, tau_max));
        }
        // Stationary point of the bid terms, a strictly convex quadratic.
        const double mismatch = c.capacity - c.others_reported_load - c.alpha * x;
        const double weight = c.tau_others * mismatch * mismatch;
        taus.push_back(std::clamp((c.nu + weight * c.tau_others) / (1.0 + weight), 0.0, tau_max));
        taus.push_back(std::clamp(c.nu, 0.0, tau_max));
        taus.push_back(std::clamp(current_bid, 0.0, tau_max));
        return taus;
    };

    EdgeChoice best;
    for (double x : demand_grid) {
        for (double tau : best_bid_candidates(x)) {
            const double w = edge_payoff(c, x, tau);
            if (w > best.payoff) best = {w, x, tau};
        }
    }

    // Local refinement: a few coordinate sweeps around the best grid point.
    for (int cycle = 0; cycle < 3; ++cycle) {
        if (!pinned) {
            const double lo = std::max(c.min_time + nudge, best.demand - config.theta_grid_step);
            const double hi = std::min(c.theta_hi, best.demand + config.theta_grid_step);
            if (hi > lo) {
                auto [x, w] = golden_max(
                    [&](double x_probe) { return edge_payoff(c, x_probe, best.bid); }, lo, hi);
                if (w > best.payoff) {
                    best.payoff = w;
                    best.demand = x;
                }
            }
        }
        const double lo = std::max(0.0, best.bid - config.tau_grid_step);
        const double hi = std::min(tau_max, best.bid + config.tau_grid_step);
        if (hi > lo) {
            auto [tau, w] = golden_max(
                [&](double tau_probe) { return edge_payoff(c, best.demand, tau_probe); }, lo, hi);
            if (w > best.payoff) {
                best.payoff = w;
                best.bid = tau;
            }
        }
    }
    return best;
}

Deviation best_deviation(const Scenario& scenario, const IndexSets& sets,
                         const MessageProfile& profile, int traveler_id,
                         const std::map<int, double>& nu,
                         const DeviationSearchConfig& config) {
    const std::vector<EdgeCtx> contexts = build_contexts(scenario, sets, profile, traveler_id, nu);
    const Message& current = profile.message(traveler_id);
    const double gamma = scenario.mechanism.gamma;
    const double delta = scenario.mechanism.delta;
    const double current_utility = eval_message(contexts, current, gamma, delta);

    double tau_max = 0.0;
    for (const EdgeCtx& c : contexts) {
        tau_max = std::max({tau_max, c.nu, c.tau_others});
    }
    tau_max = 10.0 * tau_max + 1.0;

    // Per edge, the best report within each penalty class of the demand.
    std::vector<std::array<EdgeChoice, 2>> choices;  // [0] strictly above, [1] pinned
    choices.reserve(contexts.size());
    for (const EdgeCtx& c : contexts) {
        const double cur_x = current.demanded_times.at(c.edge);
        const double cur_tau = current.bid_prices.at(c.edge);
        choices.push_back({best_in_class(c, false, config, tau_max, cur_x, cur_tau),
                           best_in_class(c, true, config, tau_max, cur_x, cur_tau)});
    }

    // Penalties are existential over the route, so only the class pattern
    // matters: combine the per-edge optima over all 2^|route| patterns.
    const std::size_t n_edges = contexts.size();
    Message best_message;
    best_message.traveler_id = traveler_id;
    double best_utility = -kInf;
    for (std::size_t mask = 0; mask < (std::size_t{1} << n_edges); ++mask) {
        double total = 0.0;
        bool over_on_monopoly = false, pinned_on_shared = false;
        for (std::size_t k = 0; k < n_edges; ++k) {
            const bool pinned = (mask >> k) & 1;
            total += choices[k][pinned ? 1 : 0].payoff;
            if (pinned && contexts[k].shared) pinned_on_shared = true;
            if (!pinned && !contexts[k].shared) over_on_monopoly = true;
        }
        if (over_on_monopoly) total -= gamma;
        else if (pinned_on_shared) total -= delta;
        if (total > best_utility) {
            best_utility = total;
            best_message.demanded_times.clear();
            best_message.bid_prices.clear();
            for (std::size_t k = 0; k < n_edges; ++k) {
                const EdgeChoice& pick = choices[k][(mask >> k) & 1];
                best_message.demanded_times[contexts[k].edge] = pick.demand;
                best_message.bid_prices[contexts[k].edge] = pick.bid;
            }
        }
    }

    if (current_utility >= best_utility) {
        return Deviation{traveler_id, current, 0.0};
    }
    return Deviation{traveler_id, best_message, best_utility - current_utility};
}

}  // namespace

void DeviationSearchConfig::validate() const {
    if (!(theta_grid_step > 0.0) || !(tau_grid_step > 0.0) || !(local_refine_tol > 0.0) ||
        !(epsilon_ne > 0.0)) {
        throw AttributeError("deviation search parameters must be positive");
    }
    if (epsilon_ne < local_refine_tol) {
        throw AttributeError("epsilon_ne must be >= local_refine_tol");
    }
}

double utility(const Scenario& scenario, const Outcome& outcome_value, int traveler_id) {
    const Traveler& t = scenario.traveler(traveler_id);
    double value = 0.0;
    for (int edge_id : t.route.edge_sequence) {
        value += eval_valuation(t.valuation, outcome_value.allocation.at(t.id, edge_id));
    }
    const double payment = outcome_value.payments.at(traveler_id);
    if (std::isinf(payment)) return -kInf;
    return value - payment;
}

CandidateNe construct_candidate_ne(const Scenario& scenario, const SolverResult& solved) {
    if (!solved.converged) {
        throw DomainError("candidate construction requires a converged solver result");
    }
    const IndexSets sets = derive_index_sets(scenario.network, scenario.travelers);

    CandidateNe candidate;
    for (const Traveler& t : scenario.travelers) {
        Message m;
        m.traveler_id = t.id;
        for (int edge_id : t.route.edge_sequence) {
            m.demanded_times[edge_id] = solved.allocation.at(t.id, edge_id);
            m.bid_prices[edge_id] = solved.certificate.nu.at(edge_id);
        }
        candidate.profile.messages[t.id] = std::move(m);
    }
    for (const Traveler& t : scenario.travelers) {
        const PenaltyCase c = penalty_case(scenario, sets, t.id,
                                           candidate.profile.message(t.id).demanded_times);
        if (c != PenaltyCase::None) {
            std::ostringstream os;
            os << "traveler " << t.id << ": " << to_string(c) << " at the candidate equilibrium";
            candidate.degeneracy_flags.push_back(os.str());
        }
    }
    return candidate;
}

NEReport verify_ne(const Scenario& scenario, const MessageProfile& profile,
                   const std::map<int, double>& nu, const DeviationSearchConfig& config) {
    config.validate();
    const IndexSets sets = derive_index_sets(scenario.network, scenario.travelers);
    validate_profile(scenario, sets, profile);

    NEReport report;
    report.epsilon = config.epsilon_ne;
    report.profile = profile;
    report.worst_deviation.gain = 0.0;
    bool have_worst = false;
    for (const Traveler& t : scenario.travelers) {
        const Deviation d = best_deviation(scenario, sets, profile, t.id, nu, config);
        report.gain_by_traveler[t.id] = d.gain;
        if (!have_worst || d.gain > report.worst_deviation.gain) {
            report.worst_deviation = d;
            have_worst = true;
        }
    }
    report.is_epsilon_ne = report.worst_deviation.gain <= config.epsilon_ne;
    return report;
}

std::string to_string(BrStatus s) {
    switch (s) {
        case BrStatus::Converged: return "converged";
        case BrStatus::Cycled: return "cycled";
        case BrStatus::Capped: return "capped";
    }
    return "unknown";
}

BrResult best_response_dynamics(const Scenario& scenario, const MessageProfile& initial,
                                const std::map<int, double>& nu,
                                const DeviationSearchConfig& config) {
    config.validate();
    const IndexSets sets = derive_index_sets(scenario.network, scenario.travelers);
    validate_profile(scenario, sets, initial);

    BrResult result;
    result.final_profile = initial;

    auto flatten = [&](const MessageProfile& p) {
        std::vector<double> flat;
        for (const auto& [id, m] : p.messages) {
            for (const auto& [edge, x] : m.demanded_times) flat.push_back(x);
            for (const auto& [edge, tau] : m.bid_prices) flat.push_back(tau);
        }
        return flat;
    };
    std::vector<std::vector<double>> history;
    history.push_back(flatten(result.final_profile));

    for (int sweep = 1; sweep <= config.br_max_sweeps; ++sweep) {
        result.sweeps = sweep;
        MessageProfile staged = result.final_profile;
        double max_change = 0.0;
        for (const Traveler& t : scenario.travelers) {
            const MessageProfile& respond_to =
                config.simultaneous_updates ? result.final_profile
                                            : staged;  // round-robin sees earlier updates
            const Deviation d = best_deviation(scenario, sets, respond_to, t.id, nu, config);
            Message next = d.gain > 0.0 ? d.message : respond_to.message(t.id);
            const Message& previous = result.final_profile.message(t.id);
            for (const auto& [edge, x] : next.demanded_times) {
                max_change = std::max(max_change, std::abs(x - previous.demanded_times.at(edge)));
            }
            for (const auto& [edge, tau] : next.bid_prices) {
                max_change = std::max(max_change, std::abs(tau - previous.bid_prices.at(edge)));
            }

            MessageProfile with_next = respond_to;
            with_next.messages[t.id] = next;
            std::vector<EdgeCtx> ctx = build_contexts(scenario, sets, with_next, t.id, nu);
            BrTrajectoryPoint point;
            point.sweep = sweep;
            point.traveler = t.id;
            point.demanded_times = next.demanded_times;
            point.bid_prices = next.bid_prices;
            point.utility =
                eval_message(ctx, next, scenario.mechanism.gamma, scenario.mechanism.delta);
            result.trajectory.push_back(std::move(point));

            staged.messages[t.id] = std::move(next);
        }
        result.final_profile = std::move(staged);

        if (max_change <= config.local_refine_tol) {
            result.status = BrStatus::Converged;
            return result;
        }
        const std::vector<double> snapshot = flatten(result.final_profile);
        for (const auto& past : history) {
            double distance = 0.0;
            for (std::size_t k = 0; k < snapshot.size(); ++k) {
                distance = std::max(distance, std::abs(snapshot[k] - past[k]));
            }
            if (distance <= 1e-9) {
                result.status = BrStatus::Cycled;
                return result;
            }
        }
        history.push_back(snapshot);
    }
    result.status = BrStatus::Capped;
    return result;
}

double outcome_feasibility_violation(const MessageProfile& profile,
                                     const Allocation& allocation) {
    double worst = 0.0;
    for (const auto& block : allocation.layout.edge_blocks()) {
        double load = 0.0;
        for (std::size_t k = 0; k < block.vars.size(); ++k) {
            const VarKey& key = allocation.layout.key(block.vars[k]);
            const double theta = allocation.theta[block.vars[k]];
            load += block.alphas[k] * theta;
            if (!profile.message(key.traveler).is_opt_out()) {
                worst = std::max(worst, block.min_time - theta);
            }
        }
        worst = std::max(worst, load - block.capacity);
    }
    return worst;
}

PropertyReport verify_properties(const Scenario& scenario, const MessageProfile& profile,
                                 const SolverResult& solved) {
    const Outcome out = outcome(scenario, profile, solved.certificate.nu);

    PropertyReport report;
    double payment_sum = 0.0;
    for (const auto& [traveler_id, payment] : out.payments) {
        payment_sum += payment;
    }
    report.budget_residual = std::abs(payment_sum);

    for (const Traveler& t : scenario.travelers) {
        const double u = utility(scenario, out, t.id);
        if (u < -1e-9) report.ir_violations.emplace_back(t.id, u);
    }

    report.feasibility_ok =
        outcome_feasibility_violation(profile, out.allocation) <= 1e-9;

    report.implementation_distance = 0.0;
    for (int flat = 0; flat < out.allocation.layout.size(); ++flat) {
        const VarKey& key = out.allocation.layout.key(flat);
        report.implementation_distance =
            std::max(report.implementation_distance,
                     std::abs(out.allocation.theta[flat] -
                              solved.allocation.at(key.traveler, key.edge)));
    }

    report.price_alignment_residual = 0.0;
    for (const Traveler& t : scenario.travelers) {
        for (int edge_id : t.route.edge_sequence) {
            report.price_alignment_residual =
                std::max(report.price_alignment_residual,
                         std::abs(profile.message(t.id).bid_prices.at(edge_id) -
                                  solved.certificate.nu.at(edge_id)));
        }
    }

    report.penalty_at_profile = out.penalties;
    const IndexSets sets = derive_index_sets(scenario.network, scenario.travelers);
    for (const Traveler& t : scenario.travelers) {
        const PenaltyCase c =
            penalty_case(scenario, sets, t.id, profile.message(t.id).demanded_times);
        if (c != PenaltyCase::None) {
            std::ostringstream os;
            os << "traveler " << t.id << ": " << to_string(c) << " at this profile";
            report.degeneracy_flags.push_back(os.str());
        }
    }
    bool any_positive_price = false;
    for (const auto& [edge_id, nu_e] : solved.certificate.nu) {
        any_positive_price = any_positive_price || nu_e > 0.0;
    }
    if (!any_positive_price && !solved.certificate.nu.empty()) {
        report.degeneracy_flags.push_back(
            "all capacity prices are zero (lower-bound optimum); "
            "price-dependent properties are vacuous");
    }
    return report;
}

}  // namespace cavnet
