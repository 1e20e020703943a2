#pragma once
// Knowledge graph store: entities with tokenized names, typed directed
// triples, and a precomputed undirected neighbor index. Immutable after
// load; safe for concurrent reads.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "vrn/common.hpp"

namespace vrn {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

enum class EdgeDir : std::uint8_t { Forward = 0, Backward = 1 };

struct Triple {
    EntityId subject;
    RelationId relation;
    EntityId object;

    bool operator==(const Triple&) const = default;
};

// Edge incident to some entity e: `entity` is the other endpoint.
// Forward means the underlying triple is (e, relation, entity);
// Backward means it is (entity, relation, e).
struct NeighborEdge {
    EntityId entity;
    RelationId relation;
    EdgeDir dir;

    bool operator==(const NeighborEdge&) const = default;
};

// Token -> dense index map with UNK reserved at index 0.
class Vocabulary {
public:
    static constexpr std::uint32_t kUnk = 0;

    Vocabulary();
    std::uint32_t add(const std::string& token);          // get or create
    std::uint32_t lookup(const std::string& token) const; // kUnk if absent
    std::vector<std::uint32_t> map(std::span<const std::string> tokens) const;
    std::size_t size() const { return tokens_.size(); }
    const std::string& token(std::uint32_t id) const { return tokens_.at(id); }

    bool operator==(const Vocabulary& o) const { return tokens_ == o.tokens_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, std::uint32_t> index_;
};

// Indices assigned in stream order; UNK always present.
Vocabulary build_vocab(const std::vector<std::vector<std::string>>& token_streams);

struct GraphOptions {
    bool allow_self_loops = false;
};

class KnowledgeGraph {
public:
    struct Entity {
        std::string name;                      // canonical, as loaded
        std::vector<std::string> name_tokens;  // tokenize(name)
    };

    // Ids are assigned in first-appearance order. Returns existing id for
    // a known name.
    EntityId add_entity(const std::string& name);
    RelationId add_relation(const std::string& name);
    // Endpoints must already exist. Rejects exact duplicates and
    // (by default) self-loops.
    void add_triple(EntityId s, RelationId r, EntityId o);

    // Call once after the last add_triple; builds the neighbor index.
    void finalize();
    bool finalized() const { return finalized_; }

    std::size_t num_entities() const { return entities_.size(); }
    std::size_t num_relations() const { return relations_.size(); }
    std::size_t num_triples() const { return triples_.size(); }

    const Entity& entity(EntityId e) const;
    const std::string& relation_name(RelationId r) const;
    const std::vector<Triple>& triples() const { return triples_; }

    std::optional<EntityId> find_entity(const std::string& name) const;
    std::optional<RelationId> find_relation(const std::string& name) const;

    // All edges incident to e, both directions, sorted by
    // (entity, relation, dir). Requires finalize().
    std::span<const NeighborEdge> neighbors(EntityId e) const;
    std::span<const std::pair<EntityId, RelationId>> out_edges(EntityId e) const;
    std::span<const std::pair<EntityId, RelationId>> in_edges(EntityId e) const;

    GraphOptions& options() { return options_; }

    bool operator==(const KnowledgeGraph& o) const;

private:
    void check_entity(EntityId e) const;

    GraphOptions options_;
    std::vector<Entity> entities_;
    std::vector<std::string> relations_;
    std::unordered_map<std::string, EntityId> entity_by_name_;
    std::unordered_map<std::string, RelationId> relation_by_name_;
    std::vector<Triple> triples_;
    std::unordered_map<std::uint64_t, std::vector<Triple>> triple_index_;
    std::vector<std::vector<std::pair<EntityId, RelationId>>> out_adj_;
    std::vector<std::vector<std::pair<EntityId, RelationId>>> in_adj_;
    std::vector<std::vector<NeighborEdge>> nbrs_;
    bool finalized_ = false;
};

// Triples file: `subject<TAB>relation<TAB>object` per line, UTF-8, no
// header. The optional entity list pre-registers one entity name per line
// and closes the entity universe: triples referencing unlisted names are
// rejected as dangling.
KnowledgeGraph load_graph(std::istream& triples_source,
                          std::istream* names_source = nullptr,
                          GraphOptions options = {});

void write_graph(const KnowledgeGraph& g, std::ostream& triples_out,
                 std::ostream& names_out);

}  // namespace vrn
