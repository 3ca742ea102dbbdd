#pragma once

#include <map>
#include <optional>

#include "cavnet/allocation.hpp"
#include "cavnet/errors.hpp"

namespace cavnet {

// Infinity norms of the optimality conditions for the welfare program:
// a zero vector certifies an exact KKT point.
struct KKTResiduals {
    double stationarity = 0.0;
    double complementary_slackness_lower = 0.0;
    double complementary_slackness_capacity = 0.0;
    double dual_feasibility = 0.0;
    double primal_feasibility = 0.0;

    double max() const;
};

struct KKTCertificate {
    std::map<VarKey, double> lambda;  // lower-bound multipliers
    std::map<int, double> nu;         // capacity multipliers, keyed by edge
    KKTResiduals residuals;

    bool valid(double tol) const { return residuals.max() <= tol; }
};

struct SolverResult {
    Allocation allocation;
    KKTCertificate certificate;
    double welfare = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Iteration cap reached without a certificate at tolerance; carries the
// best iterate found.
struct NonconvergenceError : Error {
    SolverResult best;
    NonconvergenceError(const std::string& what, SolverResult best_result)
        : Error(what), best(std::move(best_result)) {}
};

// Maximizes total commute satisfaction subject to per-edge minimum times and
// capacities. Projected gradient ascent with exact per-edge projection; the
// certificate multipliers are recovered by per-edge dual refinement.
// Throws InfeasibilityError when the minimum-time point violates a capacity,
// NonconvergenceError past the iteration cap.
SolverResult solve_centralized(const Scenario& scenario, const SolverConfig& config,
                               std::optional<Eigen::VectorXd> start = std::nullopt);

// Runs config.random_starts solves from seeded random interior points
// (plus the default start) and returns all results.
std::vector<SolverResult> solve_multi_start(const Scenario& scenario, const SolverConfig& config);

// Residuals of an arbitrary primal/dual candidate. The multiplier maps must
// cover every route variable (lambda) and every used edge (nu); missing
// entries are a StructuralError.
KKTResiduals kkt_residuals(const Scenario& scenario, const Allocation& allocation,
                           const std::map<VarKey, double>& lambda,
                           const std::map<int, double>& nu);

double social_welfare(const Scenario& scenario, const Allocation& allocation);

// Exhaustive enumeration of the feasible grid {min_time, min_time + step, ...}
// per variable, edge block by edge block; ties broken by lexicographic grid
// index. Tractability guard: at most 6 decision variables in total.
Allocation brute_force_oracle(const Scenario& scenario, double grid_step);

}  // namespace cavnet
