#include "cavnet/allocation.hpp"

#include <sstream>

#include "cavnet/errors.hpp"

namespace cavnet {

VariableLayout VariableLayout::build(const Scenario& scenario) {
    VariableLayout layout;
    for (const Traveler& t : scenario.travelers) {
        for (int edge_id : t.route.edge_sequence) {
            const VarKey key{t.id, edge_id};
            layout.index_[key] = static_cast<int>(layout.keys_.size());
            layout.keys_.push_back(key);
        }
    }

    std::map<int, EdgeBlock> blocks;
    for (int flat = 0; flat < layout.size(); ++flat) {
        const VarKey& key = layout.keys_[static_cast<std::size_t>(flat)];
        auto [it, inserted] = blocks.try_emplace(key.edge);
        if (inserted) {
            const Edge& e = scenario.network.edge(key.edge);
            it->second.edge = e.id;
            it->second.capacity = e.capacity;
            it->second.min_time = e.min_travel_time;
        }
        it->second.vars.push_back(flat);
        it->second.alphas.push_back(scenario.traveler(key.traveler).alpha);
    }
    layout.blocks_.reserve(blocks.size());
    for (auto& [edge_id, block] : blocks) {
        layout.blocks_.push_back(std::move(block));
    }

    layout.lower_.resize(layout.size());
    for (const EdgeBlock& block : layout.blocks_) {
        for (int flat : block.vars) {
            layout.lower_[flat] = block.min_time;
        }
    }
    return layout;
}

int VariableLayout::index(const VarKey& k) const {
    auto it = index_.find(k);
    if (it == index_.end()) {
        std::ostringstream os;
        os << "no variable for traveler " << k.traveler << " on edge " << k.edge;
        throw StructuralError(os.str());
    }
    return it->second;
}

std::map<int, double> Allocation::per_traveler_totals() const {
    std::map<int, double> totals;
    for (int flat = 0; flat < layout.size(); ++flat) {
        totals[layout.key(flat).traveler] += theta[flat];
    }
    return totals;
}

double Allocation::feasibility_violation() const {
    double worst = 0.0;
    if (layout.size() > 0) {
        worst = (layout.lower_bounds() - theta).cwiseMax(0.0).maxCoeff();
    }
    for (const auto& block : layout.edge_blocks()) {
        double load = 0.0;
        for (std::size_t k = 0; k < block.vars.size(); ++k) {
            load += block.alphas[k] * theta[block.vars[k]];
        }
        worst = std::max(worst, load - block.capacity);
    }
    return worst;
}

}  // namespace cavnet
