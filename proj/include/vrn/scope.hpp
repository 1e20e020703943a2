#pragma once
// T-hop scope of an entity: all entities within T undirected hops, ordered
// by (hop, entity id), each non-source node carrying its parent edges from
// the previous hop. Lateral (equal-hop) and backward edges are excluded, so
// the parent structure is a DAG and one pass in node order suffices for
// propagation.

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "vrn/kg.hpp"

namespace vrn {

// dir is the original triple orientation along the parent -> child
// traversal: Forward means (parent, relation, child) is in the graph.
struct ParentEdge {
    std::uint32_t parent_pos;  // index into Scope::nodes()
    RelationId relation;
    EdgeDir dir;
};

struct ScopeNode {
    EntityId entity;
    std::uint32_t hop;
    std::vector<ParentEdge> parents;  // empty iff hop == 0
};

class Scope {
public:
    Scope(EntityId source, std::uint32_t max_hops, std::vector<ScopeNode> nodes);

    EntityId source() const { return source_; }
    std::uint32_t max_hops() const { return max_hops_; }
    std::size_t size() const { return nodes_.size(); }
    const ScopeNode& node(std::size_t pos) const { return nodes_[pos]; }
    const std::vector<ScopeNode>& nodes() const { return nodes_; }

    bool contains(EntityId e) const { return index_.count(e) > 0; }
    std::optional<std::uint32_t> position(EntityId e) const;
    std::size_t total_parent_edges() const { return total_parent_edges_; }

private:
    EntityId source_;
    std::uint32_t max_hops_;
    std::vector<ScopeNode> nodes_;
    std::unordered_map<EntityId, std::uint32_t> index_;
    std::size_t total_parent_edges_ = 0;
};

Scope compute_scope(const KnowledgeGraph& g, EntityId source, std::uint32_t max_hops);

// One node per line: `hop<TAB>entity_name<TAB>parent_count`.
void dump_scope(const Scope& s, const KnowledgeGraph& g, std::ostream& out);

}  // namespace vrn
