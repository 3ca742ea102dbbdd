#pragma once

#include <Eigen/Dense>
#include <compare>
#include <map>
#include <vector>

#include "cavnet/scenario.hpp"

namespace cavnet {

// One decision variable of the allocation problem: traveler i's travel time
// on edge e of their route.
struct VarKey {
    int traveler = 0;
    int edge = 0;

    auto operator<=>(const VarKey&) const = default;
};

// Flattening of the (traveler, edge) variables into a dense vector, grouped
// per edge so the capacity constraints decompose block by block.
class VariableLayout {
public:
    struct EdgeBlock {
        int edge = 0;
        double capacity = 0.0;
        double min_time = 0.0;
        std::vector<int> vars;      // flat indices of this edge's variables
        std::vector<double> alphas; // aligned with vars
    };

    static VariableLayout build(const Scenario& scenario);

    int size() const { return static_cast<int>(keys_.size()); }
    const std::vector<VarKey>& keys() const { return keys_; }
    const VarKey& key(int flat) const { return keys_[static_cast<std::size_t>(flat)]; }
    int index(const VarKey& k) const;  // StructuralError if absent
    bool contains(const VarKey& k) const { return index_.contains(k); }
    const std::vector<EdgeBlock>& edge_blocks() const { return blocks_; }

    // Per-variable lower bound (the edge's minimum travel time).
    const Eigen::VectorXd& lower_bounds() const { return lower_; }

    bool operator==(const VariableLayout& other) const {
        return keys_ == other.keys_;
    }

private:
    std::vector<VarKey> keys_;  // travelers in id order, edges in route order
    std::map<VarKey, int> index_;
    std::vector<EdgeBlock> blocks_;  // ascending edge id, only edges with competitors
    Eigen::VectorXd lower_;
};

// Immutable travel-time assignment over a layout's variables.
struct Allocation {
    VariableLayout layout;
    Eigen::VectorXd theta;

    double at(int traveler, int edge) const { return theta[layout.index({traveler, edge})]; }

    // Per-traveler route totals, theta_i = sum over the route's edges.
    std::map<int, double> per_traveler_totals() const;

    // Max violation of the lower-bound and capacity constraints (0 when feasible).
    double feasibility_violation() const;
};

}  // namespace cavnet
