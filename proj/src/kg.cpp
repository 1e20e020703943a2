#include "vrn/kg.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

namespace vrn {

namespace {

std::uint64_t pair_key(EntityId s, EntityId o) {
    return (static_cast<std::uint64_t>(s) << 32) | o;
}

}  // namespace

Vocabulary::Vocabulary() {
    tokens_.push_back("<unk>");
    index_.emplace("<unk>", kUnk);
}

std::uint32_t Vocabulary::add(const std::string& token) {
    auto it = index_.find(token);
    if (it != index_.end()) return it->second;
    std::uint32_t id = static_cast<std::uint32_t>(tokens_.size());
    tokens_.push_back(token);
    index_.emplace(token, id);
    return id;
}

std::uint32_t Vocabulary::lookup(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnk : it->second;
}

std::vector<std::uint32_t> Vocabulary::map(std::span<const std::string> tokens) const {
    std::vector<std::uint32_t> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(lookup(t));
    return out;
}

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& token_streams) {
    Vocabulary v;
    for (const auto& stream : token_streams)
        for (const auto& tok : stream) v.add(tok);
    return v;
}

EntityId KnowledgeGraph::add_entity(const std::string& name) {
    auto it = entity_by_name_.find(name);
    if (it != entity_by_name_.end()) return it->second;
    EntityId id = static_cast<EntityId>(entities_.size());
    entities_.push_back({name, tokenize(name)});
    entity_by_name_.emplace(name, id);
    finalized_ = false;
    return id;
}

RelationId KnowledgeGraph::add_relation(const std::string& name) {
    auto it = relation_by_name_.find(name);
    if (it != relation_by_name_.end()) return it->second;
    RelationId id = static_cast<RelationId>(relations_.size());
    relations_.push_back(name);
    relation_by_name_.emplace(name, id);
    return id;
}

void KnowledgeGraph::add_triple(EntityId s, RelationId r, EntityId o) {
    check_entity(s);
    check_entity(o);
    if (r >= relations_.size()) throw Error("unknown relation id");
    if (s == o && !options_.allow_self_loops)
        throw Error("self-loop rejected: " + entities_[s].name);
    auto& bucket = triple_index_[pair_key(s, o)];
    for (const Triple& t : bucket) {
        if (t.relation == r)
            throw Error("duplicate triple: " + entities_[s].name + " " +
                        relations_[r] + " " + entities_[o].name);
    }
    Triple t{s, r, o};
    bucket.push_back(t);
    triples_.push_back(t);
    finalized_ = false;
}

void KnowledgeGraph::finalize() {
    out_adj_.assign(entities_.size(), {});
    in_adj_.assign(entities_.size(), {});
    nbrs_.assign(entities_.size(), {});
    for (const Triple& t : triples_) {
        out_adj_[t.subject].emplace_back(t.object, t.relation);
        in_adj_[t.object].emplace_back(t.subject, t.relation);
        nbrs_[t.subject].push_back({t.object, t.relation, EdgeDir::Forward});
        nbrs_[t.object].push_back({t.subject, t.relation, EdgeDir::Backward});
    }
    auto by_pair = [](const auto& a, const auto& b) { return a < b; };
    for (auto& v : out_adj_) std::sort(v.begin(), v.end(), by_pair);
    for (auto& v : in_adj_) std::sort(v.begin(), v.end(), by_pair);
    for (auto& v : nbrs_) {
        std::sort(v.begin(), v.end(), [](const NeighborEdge& a, const NeighborEdge& b) {
            if (a.entity != b.entity) return a.entity < b.entity;
            if (a.relation != b.relation) return a.relation < b.relation;
            return a.dir < b.dir;
        });
    }
    finalized_ = true;
}

const KnowledgeGraph::Entity& KnowledgeGraph::entity(EntityId e) const {
    check_entity(e);
    return entities_[e];
}

const std::string& KnowledgeGraph::relation_name(RelationId r) const {
    if (r >= relations_.size()) throw Error("unknown relation id");
    return relations_[r];
}

std::optional<EntityId> KnowledgeGraph::find_entity(const std::string& name) const {
    auto it = entity_by_name_.find(name);
    if (it == entity_by_name_.end()) return std::nullopt;
    return it->second;
}

std::optional<RelationId> KnowledgeGraph::find_relation(const std::string& name) const {
    auto it = relation_by_name_.find(name);
    if (it == relation_by_name_.end()) return std::nullopt;
    return it->second;
}

std::span<const NeighborEdge> KnowledgeGraph::neighbors(EntityId e) const {
    check_entity(e);
    if (!finalized_) throw Error("graph not finalized");
    return nbrs_[e];
}

std::span<const std::pair<EntityId, RelationId>> KnowledgeGraph::out_edges(EntityId e) const {
    check_entity(e);
    if (!finalized_) throw Error("graph not finalized");
    return out_adj_[e];
}

std::span<const std::pair<EntityId, RelationId>> KnowledgeGraph::in_edges(EntityId e) const {
    check_entity(e);
    if (!finalized_) throw Error("graph not finalized");
    return in_adj_[e];
}

bool KnowledgeGraph::operator==(const KnowledgeGraph& o) const {
    if (entities_.size() != o.entities_.size()) return false;
    for (std::size_t i = 0; i < entities_.size(); ++i) {
        if (entities_[i].name != o.entities_[i].name) return false;
    }
    return relations_ == o.relations_ && triples_ == o.triples_;
}

void KnowledgeGraph::check_entity(EntityId e) const {
    if (e >= entities_.size()) throw Error("unknown entity id " + std::to_string(e));
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return fields;
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

}  // namespace

KnowledgeGraph load_graph(std::istream& triples_source, std::istream* names_source,
                          GraphOptions options) {
    KnowledgeGraph g;
    g.options() = options;

    bool closed_universe = false;
    if (names_source != nullptr) {
        closed_universe = true;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(*names_source, line)) {
            ++line_no;
            line = strip_cr(line);
            if (line.empty()) continue;
            g.add_entity(line);
        }
    }

    std::string line;
    std::size_t line_no = 0;
    std::size_t loaded = 0;
    while (std::getline(triples_source, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        auto fields = split_tabs(line);
        if (fields.size() != 3 || fields[0].empty() || fields[1].empty() || fields[2].empty())
            throw Error("malformed triple at line " + std::to_string(line_no));
        EntityId s, o;
        if (closed_universe) {
            auto sid = g.find_entity(fields[0]);
            auto oid = g.find_entity(fields[2]);
            if (!sid) throw Error("dangling entity reference '" + fields[0] +
                                  "' at line " + std::to_string(line_no));
            if (!oid) throw Error("dangling entity reference '" + fields[2] +
                                  "' at line " + std::to_string(line_no));
            s = *sid;
            o = *oid;
        } else {
            s = g.add_entity(fields[0]);
            o = g.add_entity(fields[2]);
        }
        RelationId r = g.add_relation(fields[1]);
        try {
            g.add_triple(s, r, o);
        } catch (const Error& e) {
            throw Error(std::string(e.what()) + " at line " + std::to_string(line_no));
        }
        ++loaded;
    }
    if (loaded == 0) throw Error("empty graph");
    g.finalize();
    return g;
}

void write_graph(const KnowledgeGraph& g, std::ostream& triples_out,
                 std::ostream& names_out) {
    for (std::size_t i = 0; i < g.num_entities(); ++i)
        names_out << g.entity(static_cast<EntityId>(i)).name << "\n";
    for (const Triple& t : g.triples()) {
        triples_out << g.entity(t.subject).name << '\t' << g.relation_name(t.relation)
                    << '\t' << g.entity(t.object).name << "\n";
    }
}

}  // namespace vrn
