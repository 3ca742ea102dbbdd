#pragma once

#include <string>
#include <vector>

#include "cavnet/mechanism.hpp"
#include "cavnet/solver.hpp"

namespace cavnet {

struct DeviationSearchConfig {
    double theta_grid_step = 0.05;
    double tau_grid_step = 0.05;
    double local_refine_tol = 1e-7;  // also the best-response stopping tolerance
    double epsilon_ne = 1e-6;
    int br_max_sweeps = 100;
    bool simultaneous_updates = false;

    void validate() const;  // AttributeError unless positive and epsilon_ne >= refine tol
};

// u_i = route valuation of the allocated times minus the total payment.
// Payments carrying the +infinity penalty sentinel yield -infinity.
double utility(const Scenario& scenario, const Outcome& outcome_value, int traveler_id);

// The existence construction: demand the welfare optimum, bid the capacity
// price. Flags name every traveler whose candidate message already incurs a
// penalty (the schedule and the construction disagree at lower-bound optima).
struct CandidateNe {
    MessageProfile profile;
    std::vector<std::string> degeneracy_flags;
};

CandidateNe construct_candidate_ne(const Scenario& scenario, const SolverResult& solved);

struct Deviation {
    int traveler = 0;
    Message message;
    double gain = 0.0;
};

struct NEReport {
    bool is_epsilon_ne = false;
    double epsilon = 0.0;
    Deviation worst_deviation;            // largest unilateral improvement found
    std::map<int, double> gain_by_traveler;
    MessageProfile profile;
};

// Numerical equilibrium check: per traveler, searches unilateral deviations
// over a per-edge grid in (demand, bid) within [min_time, capacity/alpha] x
// [0, tau_max] and refines the best point locally. The box and the grid are
// a completeness caveat, not a proof; the participation (opt-out) deviation
// is checked separately by verify_properties.
NEReport verify_ne(const Scenario& scenario, const MessageProfile& profile,
                   const std::map<int, double>& nu, const DeviationSearchConfig& config);

enum class BrStatus { Converged, Cycled, Capped };

std::string to_string(BrStatus s);

struct BrTrajectoryPoint {
    int sweep = 0;
    int traveler = 0;
    std::map<int, double> demanded_times;
    std::map<int, double> bid_prices;
    double utility = 0.0;
};

struct BrResult {
    BrStatus status = BrStatus::Capped;
    MessageProfile final_profile;
    int sweeps = 0;
    std::vector<BrTrajectoryPoint> trajectory;
};

// Round-robin best-response iteration in traveler id order (simultaneous
// updates behind the config switch). Convergence is empirical: the dynamics
// may cycle and the result says so rather than asserting.
BrResult best_response_dynamics(const Scenario& scenario, const MessageProfile& initial,
                                const std::map<int, double>& nu,
                                const DeviationSearchConfig& config);

// Machine check of the mechanism's claimed properties at a profile, against
// the welfare optimum and certificate in `solved`.
struct PropertyReport {
    double budget_residual = 0.0;                      // |sum of payments|
    std::vector<std::pair<int, double>> ir_violations; // travelers with u < -1e-9
    bool feasibility_ok = false;
    double implementation_distance = 0.0;   // ||theta(profile) - theta*||_inf
    double price_alignment_residual = 0.0;  // max |tau_i^e - nu_e*|
    std::map<int, double> penalty_at_profile;
    std::vector<std::string> degeneracy_flags;
};

PropertyReport verify_properties(const Scenario& scenario, const MessageProfile& profile,
                                 const SolverResult& solved);

// Constraint violation of an outcome's allocation, ignoring the lower bounds
// of opted-out travelers (they hold a zero allocation by construction).
double outcome_feasibility_violation(const MessageProfile& profile,
                                     const Allocation& allocation);

}  // namespace cavnet
