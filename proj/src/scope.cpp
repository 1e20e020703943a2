#include "vrn/scope.hpp"

#include <algorithm>
#include <ostream>
#include <queue>

namespace vrn {

Scope::Scope(EntityId source, std::uint32_t max_hops, std::vector<ScopeNode> nodes)
    : source_(source), max_hops_(max_hops), nodes_(std::move(nodes)) {
    index_.reserve(nodes_.size());
    for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
        index_.emplace(nodes_[i].entity, i);
        total_parent_edges_ += nodes_[i].parents.size();
    }
}

std::optional<std::uint32_t> Scope::position(EntityId e) const {
    auto it = index_.find(e);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

Scope compute_scope(const KnowledgeGraph& g, EntityId source, std::uint32_t max_hops) {
    constexpr std::uint32_t kUnseen = UINT32_MAX;
    std::vector<std::uint32_t> dist(g.num_entities(), kUnseen);
    if (source >= g.num_entities())
        throw Error("unknown entity id " + std::to_string(source));

    dist[source] = 0;
    std::vector<EntityId> frontier{source};
    std::vector<EntityId> reached{source};
    for (std::uint32_t hop = 0; hop < max_hops && !frontier.empty(); ++hop) {
        std::vector<EntityId> next;
        for (EntityId e : frontier) {
            for (const NeighborEdge& n : g.neighbors(e)) {
                if (dist[n.entity] == kUnseen) {
                    dist[n.entity] = hop + 1;
                    next.push_back(n.entity);
                    reached.push_back(n.entity);
                }
            }
        }
        frontier = std::move(next);
    }

    std::sort(reached.begin(), reached.end(), [&](EntityId a, EntityId b) {
        if (dist[a] != dist[b]) return dist[a] < dist[b];
        return a < b;
    });

    std::unordered_map<EntityId, std::uint32_t> pos;
    pos.reserve(reached.size());
    for (std::uint32_t i = 0; i < reached.size(); ++i) pos.emplace(reached[i], i);

    std::vector<ScopeNode> nodes;
    nodes.reserve(reached.size());
    for (EntityId e : reached) {
        ScopeNode node{e, dist[e], {}};
        if (node.hop > 0) {
            for (const NeighborEdge& n : g.neighbors(e)) {
                if (dist[n.entity] != kUnseen && dist[n.entity] + 1 == node.hop) {
                    // n.dir is relative to e (the child); a Forward edge of
                    // the child runs child -> parent, i.e. Backward along
                    // the parent -> child traversal.
                    EdgeDir parent_dir =
                        n.dir == EdgeDir::Forward ? EdgeDir::Backward : EdgeDir::Forward;
                    node.parents.push_back({pos.at(n.entity), n.relation, parent_dir});
                }
            }
            // neighbors() is sorted by entity id, which matches position
            // order within the previous hop; sort anyway for the full
            // (entity, relation, dir) key.
            std::sort(node.parents.begin(), node.parents.end(),
                      [&](const ParentEdge& a, const ParentEdge& b) {
                          if (a.parent_pos != b.parent_pos) return a.parent_pos < b.parent_pos;
                          if (a.relation != b.relation) return a.relation < b.relation;
                          return a.dir < b.dir;
                      });
        }
        nodes.push_back(std::move(node));
    }
    return Scope(source, max_hops, std::move(nodes));
}

void dump_scope(const Scope& s, const KnowledgeGraph& g, std::ostream& out) {
    for (const ScopeNode& n : s.nodes()) {
        out << n.hop << '\t' << g.entity(n.entity).name << '\t' << n.parents.size()
            << "\n";
    }
}

}  // namespace vrn
