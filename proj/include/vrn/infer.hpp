#pragma once
// Inference: pick the top-k topic candidates by recognition score, embed
// each candidate's scope, and return the best-scoring answer. Also exposes
// the reasoning-path walk used for inspection.

#include <cstdint>
#include <span>
#include <vector>

#include "vrn/model.hpp"

namespace vrn {

struct InferenceConfig {
    std::uint32_t beam = 1;
    std::uint32_t hops = 1;
    // Rank (y, a) pairs by log P1 + log P2 instead of log P2 alone.
    bool joint_score = false;
};

struct CandidateRow {
    EntityId topic;
    double log_p1;
    EntityId best_answer;
    double log_p2;
};

struct AnswerResult {
    EntityId answer;
    EntityId topic;
    double score;  // log P2 of the chosen pair (log P1 + log P2 under joint_score)
    std::vector<CandidateRow> candidates;
};

AnswerResult answer(const VrnModel& m, std::span<const std::uint32_t> tokens,
                    const InferenceConfig& cfg);

struct PathEdge {
    EntityId from;
    RelationId relation;
    EdgeDir dir;  // Forward: triple (from, relation, to) is in the graph
    EntityId to;
};

// Walk from the answer back to the topic entity, at each node taking the
// parent edge whose message best matches the question embedding; returned
// in topic -> answer order.
std::vector<PathEdge> inspect_path(const VrnModel& m,
                                   std::span<const std::uint32_t> tokens, EntityId topic,
                                   EntityId answer, std::uint32_t hops);

std::string format_path(const std::vector<PathEdge>& path, const KnowledgeGraph& g);

}  // namespace vrn
