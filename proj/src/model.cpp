#include "vrn/model.hpp"

#include <algorithm>
#include <cmath>

namespace vrn {

namespace {

void fill_uniform(Matrix& m, Rng& rng, double range) {
    for (double& v : m.data) v = rng.uniform(-range, range);
}

}  // namespace

std::optional<std::uint32_t> Distribution::position_of(EntityId e) const {
    for (std::uint32_t i = 0; i < support.size(); ++i)
        if (support[i] == e) return i;
    return std::nullopt;
}

std::uint32_t Distribution::sample(Rng& rng) const {
    double u = rng.u01();
    double acc = 0.0;
    for (std::uint32_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return i;
    }
    return static_cast<std::uint32_t>(probs.size() - 1);
}

Distribution softmax_distribution(std::vector<EntityId> support,
                                  std::vector<double> logits) {
    Distribution d;
    d.support = std::move(support);
    double lse = log_sum_exp(logits);
    d.log_probs.resize(logits.size());
    d.probs.resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        d.log_probs[i] = logits[i] - lse;
        d.probs[i] = std::exp(d.log_probs[i]);
    }
    return d;
}

VrnModel::VrnModel(const KnowledgeGraph& kg, const Vocabulary& vocab, ModelConfig cfg,
                   std::uint64_t seed)
    : kg_(&kg), vocab_(&vocab), cfg_(cfg) {
    if (!kg.finalized()) throw Error("graph not finalized");
    const std::size_t n_tok = vocab.size();
    const std::size_t n_ent = kg.num_entities();
    const std::size_t d = cfg_.dim;
    const std::size_t v_cols = d + rel_onehot_width();

    auto add_side = [&](const std::string& prefix) {
        Side s;
        s.ent_tokens = params_.add(prefix + ".ent_tokens", n_tok, d);
        if (cfg_.name_bow)
            s.name_tokens = params_.add(prefix + ".name_tokens", n_tok, d);
        else
            s.free_w = params_.add(prefix + ".free_w", n_ent, d);
        s.qt_tokens = params_.add(prefix + ".qt_tokens", n_tok, d);
        s.prop_v = params_.add(prefix + ".prop_v", d, v_cols);
        return s;
    };
    theta_ = add_side("theta");
    psi_ = cfg_.share_posterior ? theta_ : add_side("psi");

    double prop_range = cfg_.prop_init_range < 0.0 ? cfg_.init_range : cfg_.prop_init_range;
    for (std::size_t i = 0; i < params_.count(); ++i) {
        Rng rng = make_rng(seed, "init/" + params_.name(i));
        bool is_prop = i == theta_.prop_v || i == psi_.prop_v;
        fill_uniform(params_.block(i), rng, is_prop ? prop_range : cfg_.init_range);
    }
}

std::uint32_t VrnModel::rel_onehot_width() const {
    std::uint32_t n_rel = static_cast<std::uint32_t>(kg_->num_relations());
    return cfg_.directional_relations ? 2 * n_rel : n_rel;
}

std::vector<double> VrnModel::embed_question(std::size_t table_idx,
                                             std::span<const std::uint32_t> tokens) const {
    if (tokens.empty()) throw Error("empty token list");
    const Matrix& table = params_.block(table_idx);
    std::vector<double> out(table.cols, 0.0);
    for (std::uint32_t t : tokens) axpy(1.0, table.row_span(t), out);
    double inv = 1.0 / static_cast<double>(tokens.size());
    for (double& v : out) v *= inv;
    return out;
}

std::vector<double> VrnModel::entity_weight(const Side& side, EntityId e) const {
    if (!cfg_.name_bow) {
        const Matrix& w = params_.block(side.free_w);
        return {w.row(e), w.row(e) + w.cols};
    }
    const auto& name_tokens = kg_->entity(e).name_tokens;
    if (name_tokens.empty())
        throw Error("entity with empty name in name-bow mode: id " + std::to_string(e));
    const Matrix& table = params_.block(side.name_tokens);
    std::vector<double> out(table.cols, 0.0);
    for (const std::string& tok : name_tokens)
        axpy(1.0, table.row_span(vocab_->lookup(tok)), out);
    double inv = 1.0 / static_cast<double>(name_tokens.size());
    for (double& v : out) v *= inv;
    return out;
}

Distribution VrnModel::topic_distribution(const Side& side,
                                          std::span<const std::uint32_t> tokens) const {
    std::vector<double> f = embed_question(side.ent_tokens, tokens);
    const std::size_t n = kg_->num_entities();
    std::vector<EntityId> support(n);
    std::vector<double> logits(n);
    for (std::size_t e = 0; e < n; ++e) {
        support[e] = static_cast<EntityId>(e);
        logits[e] = dot(entity_weight(side, static_cast<EntityId>(e)), f);
    }
    return softmax_distribution(std::move(support), std::move(logits));
}

NodeEmbeddings VrnModel::forward_propagate(const Side& side, const Scope& scope) const {
    const std::size_t d = cfg_.dim;
    const Matrix& v = params_.block(side.prop_v);
    if (v.rows != d || v.cols != d + rel_onehot_width())
        throw Error("propagation matrix shape mismatch");

    NodeEmbeddings emb;
    emb.dim = d;
    emb.g.assign(scope.size() * d, 0.0);
    emb.preact.assign(scope.total_parent_edges() * d, 0.0);
    emb.edge_offset.resize(scope.size());

    std::size_t edge_cursor = 0;
    for (std::size_t pos = 0; pos < scope.size(); ++pos) {
        emb.edge_offset[pos] = edge_cursor;
        const ScopeNode& node = scope.node(pos);
        ++emb.nodes_visited;
        if (node.parents.empty()) continue;  // source stays zero

        double* g_out = emb.g.data() + pos * d;
        for (const ParentEdge& edge : node.parents) {
            ++emb.edges_visited;
            const double* g_parent = emb.g.data() + edge.parent_pos * d;
            double* u = emb.preact.data() + edge_cursor * d;
            std::size_t rel_col = d + edge.relation;
            if (cfg_.directional_relations && edge.dir == EdgeDir::Backward)
                rel_col += kg_->num_relations();
            for (std::size_t i = 0; i < d; ++i) {
                const double* vrow = v.row(i);
                double acc = vrow[rel_col];
                for (std::size_t j = 0; j < d; ++j) acc += vrow[j] * g_parent[j];
                u[i] = acc;
                if (acc > 0.0) g_out[i] += acc;
            }
            ++edge_cursor;
        }
        double inv = 1.0 / static_cast<double>(node.parents.size());
        for (std::size_t i = 0; i < d; ++i) g_out[i] *= inv;
    }
    return emb;
}

Distribution VrnModel::answer_distribution(const Side& side,
                                           std::span<const std::uint32_t> tokens,
                                           const Scope& scope,
                                           const NodeEmbeddings& emb) const {
    std::vector<double> f = embed_question(side.qt_tokens, tokens);
    std::vector<EntityId> support(scope.size());
    std::vector<double> logits(scope.size());
    for (std::size_t pos = 0; pos < scope.size(); ++pos) {
        support[pos] = scope.node(pos).entity;
        logits[pos] = dot(f, emb.node(pos));
    }
    return softmax_distribution(std::move(support), std::move(logits));
}

Distribution VrnModel::posterior_over(std::span<const std::uint32_t> tokens,
                                      const Scope& scope,
                                      const NodeEmbeddings& emb) const {
    std::vector<double> f_ent = embed_question(psi_.ent_tokens, tokens);
    std::vector<double> f_qt = embed_question(psi_.qt_tokens, tokens);
    std::vector<EntityId> support(scope.size());
    std::vector<double> logits(scope.size());
    for (std::size_t pos = 0; pos < scope.size(); ++pos) {
        EntityId y = scope.node(pos).entity;
        support[pos] = y;
        logits[pos] = dot(entity_weight(psi_, y), f_ent) + dot(f_qt, emb.node(pos));
    }
    return softmax_distribution(std::move(support), std::move(logits));
}

VrnModel::PosteriorResult VrnModel::posterior_distribution(
    std::span<const std::uint32_t> tokens, EntityId answer,
    std::uint32_t max_hops) const {
    Scope scope = compute_scope(*kg_, answer, max_hops);
    NodeEmbeddings emb = forward_propagate(psi_, scope);
    Distribution dist = posterior_over(tokens, scope, emb);
    return {std::move(scope), std::move(emb), std::move(dist)};
}

void VrnModel::accum_embed_grad(std::size_t table_idx,
                                std::span<const std::uint32_t> tokens,
                                std::span<const double> adj, double scale,
                                GradientSet& grads) const {
    Matrix& g = grads.block(table_idx);
    double s = scale / static_cast<double>(tokens.size());
    for (std::uint32_t t : tokens) axpy(s, adj, g.row_span(t));
}

void VrnModel::accum_entity_weight_grad(const Side& side, EntityId e,
                                        std::span<const double> adj, double scale,
                                        GradientSet& grads) const {
    if (!cfg_.name_bow) {
        axpy(scale, adj, grads.block(side.free_w).row_span(e));
        return;
    }
    const auto& name_tokens = kg_->entity(e).name_tokens;
    Matrix& g = grads.block(side.name_tokens);
    double s = scale / static_cast<double>(name_tokens.size());
    for (const std::string& tok : name_tokens)
        axpy(s, adj, g.row_span(vocab_->lookup(tok)));
}

double VrnModel::accum_topic_nll(const Side& side, std::span<const std::uint32_t> tokens,
                                 EntityId target, double scale,
                                 GradientSet& grads) const {
    const std::size_t n = kg_->num_entities();
    const std::size_t d = cfg_.dim;
    if (target >= n) throw Error("topic target out of range");
    std::vector<double> f = embed_question(side.ent_tokens, tokens);

    Matrix weights(n, d);
    std::vector<double> logits(n);
    for (std::size_t e = 0; e < n; ++e) {
        std::vector<double> w = entity_weight(side, static_cast<EntityId>(e));
        std::copy(w.begin(), w.end(), weights.row(e));
        logits[e] = dot(w, f);
    }
    double lse = log_sum_exp(logits);
    double loss = lse - logits[target];

    std::vector<double> f_adjoint(d, 0.0);
    for (std::size_t e = 0; e < n; ++e) {
        double dz = std::exp(logits[e] - lse) - (e == target ? 1.0 : 0.0);
        accum_entity_weight_grad(side, static_cast<EntityId>(e), f, dz * scale, grads);
        axpy(dz, weights.row_span(e), f_adjoint);
    }
    accum_embed_grad(side.ent_tokens, tokens, f_adjoint, scale, grads);
    return loss;
}

double VrnModel::accum_answer_nll(const Side& side, std::span<const std::uint32_t> tokens,
                                  const Scope& scope, const NodeEmbeddings& emb,
                                  std::uint32_t target_pos, double scale,
                                  GradientSet& grads) const {
    const std::size_t d = cfg_.dim;
    if (target_pos >= scope.size()) throw Error("answer target outside scope");
    std::vector<double> f = embed_question(side.qt_tokens, tokens);

    std::vector<double> logits(scope.size());
    for (std::size_t pos = 0; pos < scope.size(); ++pos)
        logits[pos] = dot(f, emb.node(pos));
    double lse = log_sum_exp(logits);
    double loss = lse - logits[target_pos];

    std::vector<double> f_adjoint(d, 0.0);
    std::vector<double> node_adjoint(scope.size() * d, 0.0);
    for (std::size_t pos = 0; pos < scope.size(); ++pos) {
        double dz = std::exp(logits[pos] - lse) - (pos == target_pos ? 1.0 : 0.0);
        axpy(dz, emb.node(pos), f_adjoint);
        axpy(dz, f, {node_adjoint.data() + pos * d, d});
    }
    accum_embed_grad(side.qt_tokens, tokens, f_adjoint, scale, grads);
    backprop_scope(side, scope, emb, node_adjoint, scale, grads);
    return loss;
}

double VrnModel::accum_posterior_nll(std::span<const std::uint32_t> tokens,
                                     const Scope& scope, const NodeEmbeddings& emb,
                                     std::uint32_t target_pos, double scale,
                                     GradientSet& grads) const {
    const std::size_t d = cfg_.dim;
    if (target_pos >= scope.size()) throw Error("posterior target outside scope");
    std::vector<double> f_ent = embed_question(psi_.ent_tokens, tokens);
    std::vector<double> f_qt = embed_question(psi_.qt_tokens, tokens);

    Matrix weights(scope.size(), d);
    std::vector<double> logits(scope.size());
    for (std::size_t pos = 0; pos < scope.size(); ++pos) {
        std::vector<double> w = entity_weight(psi_, scope.node(pos).entity);
        std::copy(w.begin(), w.end(), weights.row(pos));
        logits[pos] = dot(w, f_ent) + dot(f_qt, emb.node(pos));
    }
    double lse = log_sum_exp(logits);
    double loss = lse - logits[target_pos];

    std::vector<double> f_ent_adjoint(d, 0.0);
    std::vector<double> f_qt_adjoint(d, 0.0);
    std::vector<double> node_adjoint(scope.size() * d, 0.0);
    for (std::size_t pos = 0; pos < scope.size(); ++pos) {
        double dz = std::exp(logits[pos] - lse) - (pos == target_pos ? 1.0 : 0.0);
        accum_entity_weight_grad(psi_, scope.node(pos).entity, f_ent, dz * scale, grads);
        axpy(dz, weights.row_span(pos), f_ent_adjoint);
        axpy(dz, emb.node(pos), f_qt_adjoint);
        axpy(dz, f_qt, {node_adjoint.data() + pos * d, d});
    }
    accum_embed_grad(psi_.ent_tokens, tokens, f_ent_adjoint, scale, grads);
    accum_embed_grad(psi_.qt_tokens, tokens, f_qt_adjoint, scale, grads);
    backprop_scope(psi_, scope, emb, node_adjoint, scale, grads);
    return loss;
}

// Reverse pass over the parent DAG. node_adjoint holds dL/dg per node on
// entry for softmax consumers and is extended with propagated terms as we
// walk nodes in reverse order (children before parents).
void VrnModel::backprop_scope(const Side& side, const Scope& scope,
                              const NodeEmbeddings& emb,
                              std::vector<double>& node_adjoint, double scale,
                              GradientSet& grads) const {
    const std::size_t d = cfg_.dim;
    const Matrix& v = params_.block(side.prop_v);
    Matrix& v_grad = grads.block(side.prop_v);

    std::vector<double> du(d);
    for (std::size_t pos = scope.size(); pos-- > 0;) {
        const ScopeNode& node = scope.node(pos);
        if (node.parents.empty()) continue;
        const double* ga = node_adjoint.data() + pos * d;
        double inv = 1.0 / static_cast<double>(node.parents.size());
        std::size_t edge_cursor = emb.edge_offset[pos];
        for (const ParentEdge& edge : node.parents) {
            const double* u = emb.preact.data() + edge_cursor * d;
            const double* g_parent = emb.g.data() + edge.parent_pos * d;
            double* parent_adjoint = node_adjoint.data() + edge.parent_pos * d;
            std::size_t rel_col = d + edge.relation;
            if (cfg_.directional_relations && edge.dir == EdgeDir::Backward)
                rel_col += kg_->num_relations();
            for (std::size_t i = 0; i < d; ++i)
                du[i] = u[i] > 0.0 ? ga[i] * inv : 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                if (du[i] == 0.0) continue;
                double* vg_row = v_grad.row(i);
                const double* v_row = v.row(i);
                double scaled = du[i] * scale;
                for (std::size_t j = 0; j < d; ++j) {
                    vg_row[j] += scaled * g_parent[j];
                    parent_adjoint[j] += du[i] * v_row[j];
                }
                vg_row[rel_col] += scaled;
            }
            ++edge_cursor;
        }
    }
}

std::vector<double> propagation_edge_message(const VrnModel& m, const VrnModel::Side& side,
                                             const ParentEdge& edge,
                                             const NodeEmbeddings& emb) {
    const std::size_t d = m.dim();
    const Matrix& v = m.params().block(side.prop_v);
    std::span<const double> g_parent = emb.node(edge.parent_pos);
    std::size_t rel_col = d + edge.relation;
    if (m.config().directional_relations && edge.dir == EdgeDir::Backward)
        rel_col += m.kg().num_relations();
    std::vector<double> msg(d);
    for (std::size_t i = 0; i < d; ++i) {
        const double* vrow = v.row(i);
        double acc = vrow[rel_col];
        for (std::size_t j = 0; j < d; ++j) acc += vrow[j] * g_parent[j];
        msg[i] = acc > 0.0 ? acc : 0.0;
    }
    return msg;
}

}  // namespace vrn
