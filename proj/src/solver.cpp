#include "cavnet/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cavnet/random.hpp"

namespace cavnet {

namespace {

double block_load(const VariableLayout::EdgeBlock& block, const Eigen::VectorXd& theta) {
    double load = 0.0;
    for (std::size_t k = 0; k < block.vars.size(); ++k) {
        load += block.alphas[k] * theta[block.vars[k]];
    }
    return load;
}

// Euclidean projection of one edge block onto {x >= l, sum alpha*x <= c}:
// bisection on the capacity multiplier m, with x(m) = max(l, y - m*alpha).
void project_block(const VariableLayout::EdgeBlock& block, Eigen::VectorXd& y) {
    const auto n = block.vars.size();
    double load = 0.0;
    double m_hi = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        double& v = y[block.vars[k]];
        v = std::max(v, block.min_time);
        load += block.alphas[k] * v;
        m_hi = std::max(m_hi, (v - block.min_time) / block.alphas[k]);
    }
    if (load <= block.capacity) return;

    auto load_at = [&](double m) {
        double total = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            total += block.alphas[k] *
                     std::max(block.min_time, y[block.vars[k]] - m * block.alphas[k]);
        }
        return total;
    };
    double lo = 0.0, hi = m_hi;
    for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        (load_at(mid) > block.capacity ? lo : hi) = mid;
    }
    const double m = hi;
    for (std::size_t k = 0; k < n; ++k) {
        double& v = y[block.vars[k]];
        v = std::max(block.min_time, v - m * block.alphas[k]);
    }
}

void project_feasible(const VariableLayout& layout, Eigen::VectorXd& y) {
    for (const auto& block : layout.edge_blocks()) {
        project_block(block, y);
    }
}

Eigen::VectorXd welfare_gradient(const Scenario& scenario, const VariableLayout& layout,
                                 const Eigen::VectorXd& theta) {
    Eigen::VectorXd g(layout.size());
    for (int flat = 0; flat < layout.size(); ++flat) {
        const VarKey& key = layout.key(flat);
        g[flat] = valuation_derivative(scenario.traveler(key.traveler).valuation, theta[flat]);
    }
    return g;
}

double welfare_at(const Scenario& scenario, const VariableLayout& layout,
                  const Eigen::VectorXd& theta) {
    double total = 0.0;
    for (int flat = 0; flat < layout.size(); ++flat) {
        const VarKey& key = layout.key(flat);
        total += eval_valuation(scenario.traveler(key.traveler).valuation, theta[flat]);
    }
    return total;
}

// Upper curvature bound of the separable objective over the feasible box;
// sets the initial gradient step.
double curvature_bound(const Scenario& scenario, const VariableLayout& layout) {
    double worst = 1e-6;
    for (const auto& block : layout.edge_blocks()) {
        double lower_load = 0.0;
        for (std::size_t k = 0; k < block.vars.size(); ++k) {
            lower_load += block.alphas[k] * block.min_time;
        }
        for (std::size_t k = 0; k < block.vars.size(); ++k) {
            const VarKey& key = layout.key(block.vars[k]);
            const ValuationSpec& spec = scenario.traveler(key.traveler).valuation;
            const double theta_max =
                block.min_time +
                std::max(0.0, block.capacity - lower_load) / block.alphas[k];
            double kappa = 0.0;
            switch (spec.family) {
                case ValuationFamily::NegQuadratic:
                    kappa = 2.0 * spec.a;
                    break;
                case ValuationFamily::NegExponential:
                    kappa = spec.a * spec.c * spec.c * std::exp(spec.c * theta_max);
                    break;
                case ValuationFamily::LogResource:
                    kappa = spec.a / ((1.0 + block.min_time) * (1.0 + block.min_time));
                    break;
            }
            worst = std::max(worst, kappa);
        }
    }
    return worst;
}

void check_feasible_region(const VariableLayout& layout) {
    for (const auto& block : layout.edge_blocks()) {
        double lower_load = 0.0;
        for (std::size_t k = 0; k < block.vars.size(); ++k) {
            lower_load += block.alphas[k] * block.min_time;
        }
        if (lower_load > block.capacity) {
            std::ostringstream os;
            os << "infeasible scenario: edge " << block.edge << " needs load " << lower_load
               << " at minimum travel times but has capacity " << block.capacity;
            throw InfeasibilityError(os.str());
        }
    }
}

// Recovers (nu, lambda) from a primal point: nu is zero on slack edges and
// the least-squares fit of v'/alpha over interior variables otherwise;
// lambda is clamped from stationarity.
KKTCertificate extract_certificate(const Scenario& scenario, const VariableLayout& layout,
                                   const Eigen::VectorXd& theta) {
    KKTCertificate cert;
    const Eigen::VectorXd grad = welfare_gradient(scenario, layout, theta);
    for (const auto& block : layout.edge_blocks()) {
        const double slack = block.capacity - block_load(block, theta);
        double nu_e = 0.0;
        if (slack <= 1e-7 * std::max(1.0, block.capacity)) {
            double sum = 0.0;
            int interior = 0;
            double corner_floor = 0.0;
            for (std::size_t k = 0; k < block.vars.size(); ++k) {
                const int flat = block.vars[k];
                const double price = grad[flat] / block.alphas[k];
                if (theta[flat] - block.min_time > 1e-7 * (1.0 + block.min_time)) {
                    sum += price;
                    ++interior;
                } else {
                    corner_floor = std::max(corner_floor, price);
                }
            }
            nu_e = interior > 0 ? std::max(0.0, sum / interior) : std::max(0.0, corner_floor);
        }
        cert.nu[block.edge] = nu_e;
        for (std::size_t k = 0; k < block.vars.size(); ++k) {
            const int flat = block.vars[k];
            cert.lambda[layout.key(flat)] =
                std::max(0.0, block.alphas[k] * nu_e - grad[flat]);
        }
    }
    return cert;
}

// Exact per-edge dual solve: bisection on nu_e so that the stationarity-
// consistent primal point meets the capacity (or nu_e = 0 on slack edges).
void dual_polish(const Scenario& scenario, const VariableLayout& layout,
                 Eigen::VectorXd& theta) {
    for (const auto& block : layout.edge_blocks()) {
        const auto n = block.vars.size();
        std::vector<const ValuationSpec*> specs(n);
        for (std::size_t k = 0; k < n; ++k) {
            specs[k] = &scenario.traveler(layout.key(block.vars[k]).traveler).valuation;
        }
        auto primal_at = [&](double nu, std::size_t k) {
            const double unconstrained = inverse_marginal(*specs[k], block.alphas[k] * nu);
            return std::max(block.min_time, unconstrained);
        };
        auto load_at = [&](double nu) {
            double total = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                const double x = primal_at(nu, k);
                if (std::isinf(x)) return std::numeric_limits<double>::infinity();
                total += block.alphas[k] * x;
            }
            return total;
        };

        double nu = 0.0;
        if (load_at(0.0) > block.capacity) {
            double hi = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                hi = std::max(hi, valuation_derivative(*specs[k], block.min_time) /
                                      block.alphas[k]);
            }
            double lo = 0.0;
            for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (mid == lo || mid == hi) break;
                (load_at(mid) > block.capacity ? lo : hi) = mid;
            }
            nu = hi;
        }
        for (std::size_t k = 0; k < n; ++k) {
            theta[block.vars[k]] = primal_at(nu, k);
        }
    }
}

SolverResult assemble_result(const Scenario& scenario, const VariableLayout& layout,
                             const Eigen::VectorXd& theta, int iterations, double kkt_tol) {
    SolverResult result;
    result.allocation = Allocation{layout, theta};
    result.certificate = extract_certificate(scenario, layout, theta);
    result.certificate.residuals = kkt_residuals(scenario, result.allocation,
                                                 result.certificate.lambda,
                                                 result.certificate.nu);
    result.welfare = welfare_at(scenario, layout, theta);
    result.iterations = iterations;
    result.converged = result.certificate.valid(kkt_tol);
    return result;
}

}  // namespace

double KKTResiduals::max() const {
    return std::max({stationarity, complementary_slackness_lower,
                     complementary_slackness_capacity, dual_feasibility, primal_feasibility});
}

SolverResult solve_centralized(const Scenario& scenario, const SolverConfig& config,
                               std::optional<Eigen::VectorXd> start) {
    const VariableLayout layout = VariableLayout::build(scenario);
    check_feasible_region(layout);

    if (layout.size() == 0) {
        SolverResult empty;
        empty.allocation = Allocation{layout, Eigen::VectorXd(0)};
        empty.converged = true;
        return empty;
    }

    Eigen::VectorXd theta = start.value_or(layout.lower_bounds());
    if (theta.size() != layout.size()) {
        throw DomainError("solver start point has the wrong dimension");
    }
    project_feasible(layout, theta);

    double step = 1.0 / curvature_bound(scenario, layout);
    double value = welfare_at(scenario, layout, theta);
    int iterations = 0;
    bool stalled = false;

    while (iterations < config.max_iterations && !stalled) {
        ++iterations;
        const Eigen::VectorXd grad = welfare_gradient(scenario, layout, theta);

        // Armijo backtracking along the projected-gradient path.
        Eigen::VectorXd candidate;
        double candidate_value = value;
        bool accepted = false;
        for (int shrink = 0; shrink < 60; ++shrink) {
            candidate = theta + step * grad;
            project_feasible(layout, candidate);
            candidate_value = welfare_at(scenario, layout, candidate);
            const double model_gain = grad.dot(candidate - theta);
            if (candidate_value >= value + 1e-4 * model_gain && candidate_value >= value) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            stalled = true;
            break;
        }
        const double move = (candidate - theta).lpNorm<Eigen::Infinity>();
        theta = std::move(candidate);
        value = candidate_value;
        step *= 1.2;

        if (move <= 1e-13 * (1.0 + theta.lpNorm<Eigen::Infinity>())) {
            stalled = true;
        } else if (iterations % 16 == 0) {
            const KKTCertificate probe = extract_certificate(scenario, layout, theta);
            const KKTResiduals res = kkt_residuals(scenario, Allocation{layout, theta},
                                                   probe.lambda, probe.nu);
            if (res.max() <= 1e-2 * config.kkt_tol) break;
        }
    }

    if (config.dual_polish) {
        dual_polish(scenario, layout, theta);
    }
    SolverResult result = assemble_result(scenario, layout, theta, iterations, config.kkt_tol);
    if (!result.converged) {
        std::ostringstream os;
        os << "no KKT certificate at tolerance " << config.kkt_tol << " after "
           << iterations << " iterations (residual " << result.certificate.residuals.max()
           << ")";
        throw NonconvergenceError(os.str(), std::move(result));
    }
    return result;
}

std::vector<SolverResult> solve_multi_start(const Scenario& scenario, const SolverConfig& config) {
    const VariableLayout layout = VariableLayout::build(scenario);
    std::vector<SolverResult> results;
    results.push_back(solve_centralized(scenario, config));

    Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    for (int s = 1; s < config.random_starts; ++s) {
        Eigen::VectorXd start(layout.size());
        for (const auto& block : layout.edge_blocks()) {
            for (std::size_t k = 0; k < block.vars.size(); ++k) {
                const double reach =
                    std::max(0.0, block.capacity / block.alphas[k] - block.min_time);
                start[block.vars[k]] = block.min_time + rng.uniform(0.0, reach);
            }
        }
        results.push_back(solve_centralized(scenario, config, start));
    }
    return results;
}

KKTResiduals kkt_residuals(const Scenario& scenario, const Allocation& allocation,
                           const std::map<VarKey, double>& lambda,
                           const std::map<int, double>& nu) {
    const VariableLayout& layout = allocation.layout;
    KKTResiduals res;
    res.primal_feasibility = allocation.feasibility_violation();

    for (const auto& block : layout.edge_blocks()) {
        auto nu_it = nu.find(block.edge);
        if (nu_it == nu.end()) {
            std::ostringstream os;
            os << "missing capacity multiplier for edge " << block.edge;
            throw StructuralError(os.str());
        }
        const double nu_e = nu_it->second;
        res.dual_feasibility = std::max(res.dual_feasibility, -nu_e);
        res.complementary_slackness_capacity =
            std::max(res.complementary_slackness_capacity,
                     std::abs(nu_e * (block_load(block, allocation.theta) - block.capacity)));

        for (std::size_t k = 0; k < block.vars.size(); ++k) {
            const int flat = block.vars[k];
            const VarKey& key = layout.key(flat);
            auto lambda_it = lambda.find(key);
            if (lambda_it == lambda.end()) {
                std::ostringstream os;
                os << "missing lower-bound multiplier for traveler " << key.traveler
                   << " on edge " << key.edge;
                throw StructuralError(os.str());
            }
            const double lambda_ie = lambda_it->second;
            const double grad = valuation_derivative(
                scenario.traveler(key.traveler).valuation, allocation.theta[flat]);
            res.stationarity = std::max(
                res.stationarity, std::abs(grad + lambda_ie - block.alphas[k] * nu_e));
            res.complementary_slackness_lower =
                std::max(res.complementary_slackness_lower,
                         std::abs(lambda_ie * (allocation.theta[flat] - block.min_time)));
            res.dual_feasibility = std::max(res.dual_feasibility, -lambda_ie);
        }
    }
    return res;
}

double social_welfare(const Scenario& scenario, const Allocation& allocation) {
    return welfare_at(scenario, allocation.layout, allocation.theta);
}

Allocation brute_force_oracle(const Scenario& scenario, double grid_step) {
    if (!(grid_step > 0.0)) {
        throw DomainError("oracle grid step must be positive");
    }
    const VariableLayout layout = VariableLayout::build(scenario);
    if (layout.size() > 6) {
        std::ostringstream os;
        os << "oracle supports at most 6 decision variables, scenario has " << layout.size();
        throw OracleScopeError(os.str());
    }
    check_feasible_region(layout);

    Eigen::VectorXd best(layout.size());

    // The objective and the constraints both decompose per edge, so each
    // block is enumerated independently; within a block the first optimum in
    // lexicographic grid order wins.
    for (const auto& block : layout.edge_blocks()) {
        const auto n = block.vars.size();
        const double cap_tol = 1e-9 * std::max(1.0, block.capacity);

        std::vector<std::vector<double>> values(n);  // v_i at each grid point
        std::vector<std::vector<double>> points(n);
        for (std::size_t k = 0; k < n; ++k) {
            double others_min = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j != k) others_min += block.alphas[j] * block.min_time;
            }
            const double reach = block.capacity - others_min;
            const ValuationSpec& spec =
                scenario.traveler(layout.key(block.vars[k]).traveler).valuation;
            for (int t = 0;; ++t) {
                const double x = block.min_time + t * grid_step;
                if (block.alphas[k] * x > reach + cap_tol) break;
                points[k].push_back(x);
                values[k].push_back(eval_valuation(spec, x));
            }
        }

        // Capacity still owed to variables below a given depth.
        std::vector<double> suffix_min_load(n + 1, 0.0);
        for (std::size_t k = n; k-- > 0;) {
            suffix_min_load[k] = suffix_min_load[k + 1] + block.alphas[k] * block.min_time;
        }

        std::vector<std::size_t> index(n, 0), best_index(n, 0);
        double best_value = -std::numeric_limits<double>::infinity();
        auto enumerate = [&](auto&& self, std::size_t depth, double load, double value) -> void {
            if (depth == n) {
                if (value > best_value) {
                    best_value = value;
                    best_index = index;
                }
                return;
            }
            const double budget = block.capacity + cap_tol - load - suffix_min_load[depth + 1];
            for (std::size_t t = 0; t < points[depth].size(); ++t) {
                const double consumed = block.alphas[depth] * points[depth][t];
                if (consumed > budget) break;
                index[depth] = t;
                self(self, depth + 1, load + consumed, value + values[depth][t]);
            }
        };
        enumerate(enumerate, 0, 0.0, 0.0);

        for (std::size_t k = 0; k < n; ++k) {
            best[block.vars[k]] = points[k][best_index[k]];
        }
    }
    return Allocation{layout, best};
}

}  // namespace cavnet
