#include "vrn/infer.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace vrn {

AnswerResult answer(const VrnModel& m, std::span<const std::uint32_t> tokens,
                    const InferenceConfig& cfg) {
    if (cfg.beam < 1) throw Error("beam width must be >= 1");
    const auto& theta = m.recognition_reasoning();
    Distribution topic = m.topic_distribution(theta, tokens);

    std::vector<EntityId> order(topic.support.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](EntityId a, EntityId b) {
        if (topic.log_probs[a] != topic.log_probs[b])
            return topic.log_probs[a] > topic.log_probs[b];
        return a < b;
    });
    std::size_t k = std::min<std::size_t>(cfg.beam, order.size());

    AnswerResult result{};
    bool have_best = false;
    double best_rank = 0.0, best_p1 = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        EntityId y = order[c];
        Scope scope = compute_scope(m.kg(), y, cfg.hops);
        NodeEmbeddings emb = m.forward_propagate(theta, scope);
        Distribution ans = m.answer_distribution(theta, tokens, scope, emb);

        std::uint32_t best_pos = 0;
        for (std::uint32_t pos = 1; pos < ans.support.size(); ++pos) {
            if (ans.log_probs[pos] > ans.log_probs[best_pos] ||
                (ans.log_probs[pos] == ans.log_probs[best_pos] &&
                 ans.support[pos] < ans.support[best_pos]))
                best_pos = pos;
        }
        double log_p1 = topic.log_probs[y];
        double log_p2 = ans.log_probs[best_pos];
        result.candidates.push_back({y, log_p1, ans.support[best_pos], log_p2});

        double rank = cfg.joint_score ? log_p1 + log_p2 : log_p2;
        bool better = !have_best || rank > best_rank ||
                      (rank == best_rank && log_p1 > best_p1) ||
                      (rank == best_rank && log_p1 == best_p1 &&
                       (ans.support[best_pos] < result.answer ||
                        (ans.support[best_pos] == result.answer && y < result.topic)));
        if (better) {
            have_best = true;
            best_rank = rank;
            best_p1 = log_p1;
            result.answer = ans.support[best_pos];
            result.topic = y;
            result.score = rank;
        }
    }
    return result;
}

std::vector<PathEdge> inspect_path(const VrnModel& m,
                                   std::span<const std::uint32_t> tokens, EntityId topic,
                                   EntityId answer, std::uint32_t hops) {
    const auto& theta = m.recognition_reasoning();
    Scope scope = compute_scope(m.kg(), topic, hops);
    auto a_pos = scope.position(answer);
    if (!a_pos) throw Error("answer not in the topic entity's scope");
    NodeEmbeddings emb = m.forward_propagate(theta, scope);
    std::vector<double> f_qt = m.embed_question(theta.qt_tokens, tokens);

    std::vector<PathEdge> reversed;
    std::uint32_t cur = *a_pos;
    while (scope.node(cur).hop > 0) {
        const ScopeNode& node = scope.node(cur);
        const ParentEdge* best = nullptr;
        double best_score = 0.0;
        for (const ParentEdge& edge : node.parents) {
            double score = dot(f_qt, propagation_edge_message(m, theta, edge, emb));
            bool better =
                best == nullptr || score > best_score ||
                (score == best_score &&
                 scope.node(edge.parent_pos).entity < scope.node(best->parent_pos).entity);
            if (better) {
                best = &edge;
                best_score = score;
            }
        }
        reversed.push_back({scope.node(best->parent_pos).entity, best->relation,
                            best->dir, node.entity});
        cur = best->parent_pos;
    }
    return {reversed.rbegin(), reversed.rend()};
}

std::string format_path(const std::vector<PathEdge>& path, const KnowledgeGraph& g) {
    std::ostringstream os;
    for (std::size_t i = 0; i < path.size(); ++i) {
        const PathEdge& e = path[i];
        if (i == 0) os << g.entity(e.from).name;
        os << " -[" << g.relation_name(e.relation) << ","
           << (e.dir == EdgeDir::Forward ? "fwd" : "bwd") << "]-> "
           << g.entity(e.to).name;
    }
    return os.str();
}

}  // namespace vrn
