#pragma once
// Model parameters and the differentiable kernels built on them:
//   - topic recognition: softmax over all entities of W_y . f_ent(q)
//   - reasoning-graph propagation: per-node embeddings over a scope,
//     computed in one pass by averaging ReLU(V [g_parent; e_rel]) over
//     parent edges, with the source fixed at zero
//   - answer likelihood: softmax over scope nodes of f_qt(q) . g(node)
//   - variational posterior over the answer's scope, combining a
//     recognition term and an inverse propagation term
// plus exact analytic gradients for the negative-log-likelihood of each.
//
// Recognition and reasoning keep separate token tables; the posterior
// either owns an independent copy of every block or aliases them when
// parameter sharing is enabled. Entity weights come from the mean of
// name-token rows (name-bow mode) or a free per-entity table.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "vrn/common.hpp"
#include "vrn/kg.hpp"
#include "vrn/rng.hpp"
#include "vrn/scope.hpp"

namespace vrn {

struct ModelConfig {
    std::uint32_t dim = 64;
    bool name_bow = true;              // else: free per-entity weight rows
    bool share_posterior = false;      // posterior aliases recognition/reasoning blocks
    bool directional_relations = false;  // one-hot width 2|R| (forward/backward)
    double init_range = 0.08;      // uniform in [-range, range]
    double prop_init_range = -1.0;  // range for the propagation matrix; <0 follows init_range
};

// Discrete distribution over entities with a fixed support order.
struct Distribution {
    std::vector<EntityId> support;
    std::vector<double> log_probs;
    std::vector<double> probs;

    std::optional<std::uint32_t> position_of(EntityId e) const;
    std::uint32_t sample(Rng& rng) const;  // inverse CDF over support order
};

// Per-node scope embeddings plus everything the backward pass needs:
// pre-activations per parent edge and visit counters.
struct NodeEmbeddings {
    std::size_t dim = 0;
    std::vector<double> g;            // size() * dim, node-major
    std::vector<double> preact;       // total_parent_edges() * dim
    std::vector<std::size_t> edge_offset;  // per node, start into preact
    std::uint64_t nodes_visited = 0;
    std::uint64_t edges_visited = 0;

    std::span<const double> node(std::size_t pos) const {
        return {g.data() + pos * dim, dim};
    }
};

class VrnModel {
public:
    // Indices into params() for one side of the model. free_w is used in
    // free mode, name_tokens in name-bow mode; the unused one is kNone.
    struct Side {
        std::size_t ent_tokens = kNone;
        std::size_t name_tokens = kNone;
        std::size_t free_w = kNone;
        std::size_t qt_tokens = kNone;
        std::size_t prop_v = kNone;
    };
    static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

    VrnModel(const KnowledgeGraph& kg, const Vocabulary& vocab, ModelConfig cfg,
             std::uint64_t seed);

    const KnowledgeGraph& kg() const { return *kg_; }
    const Vocabulary& vocab() const { return *vocab_; }
    const ModelConfig& config() const { return cfg_; }
    std::uint32_t dim() const { return cfg_.dim; }
    std::uint32_t rel_onehot_width() const;

    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    const Side& recognition_reasoning() const { return theta_; }
    const Side& posterior() const { return psi_; }

    // Mean of the token-table rows of `tokens` (counted with multiplicity).
    std::vector<double> embed_question(std::size_t table_idx,
                                       std::span<const std::uint32_t> tokens) const;
    // Classification weight for one entity on the given side.
    std::vector<double> entity_weight(const Side& side, EntityId e) const;

    // Softmax over every entity of W_y . f_ent(q). Support is 0..|V|-1 in
    // entity-id order.
    Distribution topic_distribution(const Side& side,
                                    std::span<const std::uint32_t> tokens) const;

    // One pass in node order; source embedding is exactly zero.
    NodeEmbeddings forward_propagate(const Side& side, const Scope& scope) const;

    // Softmax over scope nodes of f_qt(q) . g(node). Support follows scope
    // node order.
    Distribution answer_distribution(const Side& side,
                                     std::span<const std::uint32_t> tokens,
                                     const Scope& scope,
                                     const NodeEmbeddings& emb) const;

    // Posterior over scope(answer, max_hops): softmax of
    // W~_y . f~_ent(q) + f~_qt(q) . g~(node). Also returns the scope and
    // inverse embeddings so callers can reuse them.
    struct PosteriorResult {
        Scope scope;
        NodeEmbeddings emb;
        Distribution dist;
    };
    PosteriorResult posterior_distribution(std::span<const std::uint32_t> tokens,
                                           EntityId answer,
                                           std::uint32_t max_hops) const;
    // Same, over an existing scope/embedding pair.
    Distribution posterior_over(std::span<const std::uint32_t> tokens,
                                const Scope& scope,
                                const NodeEmbeddings& emb) const;

    // Gradient accumulators for -log p[target], each scaled by `scale` and
    // added into `grads`. All return the unscaled loss value.
    double accum_topic_nll(const Side& side, std::span<const std::uint32_t> tokens,
                           EntityId target, double scale, GradientSet& grads) const;
    double accum_answer_nll(const Side& side, std::span<const std::uint32_t> tokens,
                            const Scope& scope, const NodeEmbeddings& emb,
                            std::uint32_t target_pos, double scale,
                            GradientSet& grads) const;
    double accum_posterior_nll(std::span<const std::uint32_t> tokens,
                               const Scope& scope, const NodeEmbeddings& emb,
                               std::uint32_t target_pos, double scale,
                               GradientSet& grads) const;

private:
    std::vector<double> propagation_message(const Side& side, const ParentEdge& edge,
                                            const NodeEmbeddings& emb) const;
    void backprop_scope(const Side& side, const Scope& scope, const NodeEmbeddings& emb,
                        std::vector<double>& node_adjoint, double scale,
                        GradientSet& grads) const;
    void accum_entity_weight_grad(const Side& side, EntityId e,
                                  std::span<const double> adj, double scale,
                                  GradientSet& grads) const;
    void accum_embed_grad(std::size_t table_idx, std::span<const std::uint32_t> tokens,
                          std::span<const double> adj, double scale,
                          GradientSet& grads) const;

    friend std::vector<double> propagation_edge_message(const VrnModel&, const VrnModel::Side&,
                                                        const ParentEdge&, const NodeEmbeddings&);

    const KnowledgeGraph* kg_;
    const Vocabulary* vocab_;
    ModelConfig cfg_;
    ParamStore params_;
    Side theta_;
    Side psi_;
};

// Message ReLU(V [g_parent; e_rel]) that `edge` contributes to its child;
// used by path inspection.
std::vector<double> propagation_edge_message(const VrnModel& m, const VrnModel::Side& side,
                                             const ParentEdge& edge,
                                             const NodeEmbeddings& emb);

Distribution softmax_distribution(std::vector<EntityId> support,
                                  std::vector<double> logits);

}  // namespace vrn
