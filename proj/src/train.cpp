#include "vrn/train.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace vrn {

void LearningSignalState::update(std::span<const double> batch) {
    if (batch.empty()) throw Error("normalize_signal: empty batch");
    double mean = 0.0;
    for (double a : batch) mean += a;
    mean /= static_cast<double>(batch.size());
    double var = 0.0;
    for (double a : batch) var += (a - mean) * (a - mean);
    var /= static_cast<double>(batch.size());
    double std_dev = std::sqrt(var);
    mu = decay * mu + (1.0 - decay) * mean;
    sigma = decay * sigma + (1.0 - decay) * std_dev;
    sigma = std::max(sigma, sigma_floor);
}

std::vector<double> normalize_signal(LearningSignalState& state,
                                     std::span<const double> batch) {
    state.update(batch);
    std::vector<double> out(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) out[i] = state.normalize(batch[i]);
    return out;
}

BaselineNet::BaselineNet(std::size_t n_entities, std::size_t vocab_size,
                         std::size_t hidden, std::uint64_t seed, double init_range)
    : n_entities_(n_entities), vocab_size_(vocab_size), hidden_(hidden) {
    w1_ = params_.add("baseline.w1", hidden, n_entities + vocab_size);
    b1_ = params_.add("baseline.b1", 1, hidden);
    w2_ = params_.add("baseline.w2", 1, hidden);
    b2_ = params_.add("baseline.b2", 1, 1);
    for (std::size_t i = 0; i < params_.count(); ++i) {
        Rng rng = make_rng(seed, "init/" + params_.name(i));
        for (double& v : params_.block(i).data) v = rng.uniform(-init_range, init_range);
    }
}

std::vector<std::pair<std::uint32_t, double>> BaselineNet::count_tokens(
    std::span<const std::uint32_t> tokens) const {
    std::map<std::uint32_t, double> counts;
    for (std::uint32_t t : tokens) counts[t] += 1.0;
    return {counts.begin(), counts.end()};
}

double BaselineNet::forward(EntityId answer,
                            const std::vector<std::pair<std::uint32_t, double>>& counts,
                            std::vector<double>* hidden_out) const {
    if (answer >= n_entities_) throw Error("baseline: answer id out of range");
    const Matrix& w1 = params_.block(w1_);
    const Matrix& b1 = params_.block(b1_);
    const Matrix& w2 = params_.block(w2_);
    std::vector<double> h(hidden_);
    for (std::size_t i = 0; i < hidden_; ++i) {
        double acc = b1.data[i] + w1.at(i, answer);
        for (const auto& [tok, c] : counts) acc += c * w1.at(i, n_entities_ + tok);
        h[i] = std::tanh(acc);
    }
    double out = params_.block(b2_).data[0];
    for (std::size_t i = 0; i < hidden_; ++i) out += w2.data[i] * h[i];
    if (hidden_out) *hidden_out = std::move(h);
    return out;
}

double BaselineNet::predict(EntityId answer, std::span<const std::uint32_t> tokens) const {
    return forward(answer, count_tokens(tokens), nullptr);
}

double BaselineNet::accum_sq_loss(EntityId answer, std::span<const std::uint32_t> tokens,
                                  double target, double scale,
                                  GradientSet& grads) const {
    auto counts = count_tokens(tokens);
    std::vector<double> h;
    double pred = forward(answer, counts, &h);
    double residual = pred - target;
    double loss = residual * residual;

    const Matrix& w2 = params_.block(w2_);
    double d_out = 2.0 * residual * scale;
    grads.block(b2_).data[0] += d_out;
    Matrix& gw2 = grads.block(w2_);
    Matrix& gw1 = grads.block(w1_);
    Matrix& gb1 = grads.block(b1_);
    for (std::size_t i = 0; i < hidden_; ++i) {
        gw2.data[i] += d_out * h[i];
        double dh = d_out * w2.data[i] * (1.0 - h[i] * h[i]);
        gb1.data[i] += dh;
        gw1.at(i, answer) += dh;
        for (const auto& [tok, c] : counts) gw1.at(i, n_entities_ + tok) += dh * c;
    }
    return loss;
}

double BaselineNet::fit_step(EntityId answer, std::span<const std::uint32_t> tokens,
                             double target, double lr) {
    double pred = predict(answer, tokens);
    GradientSet grads(params_);
    accum_sq_loss(answer, tokens, target, 1.0, grads);
    sgd_step(params_, grads, lr, "baseline fit");
    return pred;
}

double learning_signal(const VrnModel& m, std::span<const std::uint32_t> tokens,
                       EntityId answer, EntityId y, std::uint32_t hops) {
    Distribution topic = m.topic_distribution(m.recognition_reasoning(), tokens);
    double log_p1 = topic.log_probs[y];

    Scope scope_y = compute_scope(m.kg(), y, hops);
    auto a_pos = scope_y.position(answer);
    if (!a_pos) throw Error("learning_signal: answer outside candidate scope");
    NodeEmbeddings emb = m.forward_propagate(m.recognition_reasoning(), scope_y);
    Distribution ans = m.answer_distribution(m.recognition_reasoning(), tokens, scope_y, emb);
    double log_p2 = ans.log_probs[*a_pos];

    auto post = m.posterior_distribution(tokens, answer, hops);
    auto y_pos = post.scope.position(y);
    if (!y_pos) throw Error("learning_signal: y outside posterior scope");
    double log_q = post.dist.log_probs[*y_pos];
    return log_p1 + log_p2 - log_q;
}

InstanceEnumeration enumerate_instance(const VrnModel& m,
                                       std::span<const std::uint32_t> tokens,
                                       EntityId answer, std::uint32_t hops) {
    auto post = m.posterior_distribution(tokens, answer, hops);
    InstanceEnumeration inst{std::move(post.scope), std::move(post.emb),
                             std::move(post.dist), {}, {}};

    Distribution topic = m.topic_distribution(m.recognition_reasoning(), tokens);
    inst.log_p1.resize(inst.scope.size());
    inst.log_p2.resize(inst.scope.size());
    for (std::size_t pos = 0; pos < inst.scope.size(); ++pos) {
        EntityId y = inst.scope.node(pos).entity;
        inst.log_p1[pos] = topic.log_probs[y];
        Scope scope_y = compute_scope(m.kg(), y, hops);
        auto a_pos = scope_y.position(answer);
        if (!a_pos) throw Error("scope symmetry violated");
        NodeEmbeddings emb = m.forward_propagate(m.recognition_reasoning(), scope_y);
        Distribution ans =
            m.answer_distribution(m.recognition_reasoning(), tokens, scope_y, emb);
        inst.log_p2[pos] = ans.log_probs[*a_pos];
    }
    return inst;
}

double elbo_with(const InstanceEnumeration& inst, const Distribution& q) {
    if (q.support.size() != inst.scope.size()) throw Error("elbo: support mismatch");
    double acc = 0.0;
    for (std::size_t pos = 0; pos < q.support.size(); ++pos) {
        if (q.probs[pos] == 0.0) continue;
        acc += q.probs[pos] * (inst.log_p1[pos] + inst.log_p2[pos] - q.log_probs[pos]);
    }
    return acc;
}

double elbo(const VrnModel& m, std::span<const std::uint32_t> tokens, EntityId answer,
            std::uint32_t hops) {
    InstanceEnumeration inst = enumerate_instance(m, tokens, answer, hops);
    return elbo_with(inst, inst.q);
}

double marginal_loglik(const VrnModel& m, std::span<const std::uint32_t> tokens,
                       EntityId answer, std::uint32_t hops) {
    InstanceEnumeration inst = enumerate_instance(m, tokens, answer, hops);
    if (inst.scope.size() == 0) throw Error("answer unreachable");
    std::vector<double> terms(inst.scope.size());
    for (std::size_t pos = 0; pos < terms.size(); ++pos)
        terms[pos] = inst.log_p1[pos] + inst.log_p2[pos];
    return log_sum_exp(terms);
}

Distribution exact_posterior(const InstanceEnumeration& inst) {
    std::vector<EntityId> support;
    std::vector<double> logits;
    support.reserve(inst.scope.size());
    logits.reserve(inst.scope.size());
    for (std::size_t pos = 0; pos < inst.scope.size(); ++pos) {
        support.push_back(inst.scope.node(pos).entity);
        logits.push_back(inst.log_p1[pos] + inst.log_p2[pos]);
    }
    return softmax_distribution(std::move(support), std::move(logits));
}

namespace {

EntityId pick_gold(const QAItem& item, Rng& rng) {
    if (item.answers.empty()) throw Error("item with empty answer set");
    if (item.answers.size() == 1) return item.answers[0];
    return item.answers[rng.index(item.answers.size())];
}

}  // namespace

StepDiagnostics reinforce_step(VrnModel& m, BaselineNet& baseline,
                               LearningSignalState& state,
                               std::span<const QAItem> batch, const TrainConfig& cfg,
                               Rng& rng, GradientSet& scratch) {
    StepDiagnostics diag;
    scratch.zero();
    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    const double inv_samples = 1.0 / static_cast<double>(cfg.samples);
    const auto& theta = m.recognition_reasoning();
    std::size_t total_samples = 0;

    for (const QAItem& item : batch) {
        std::vector<std::uint32_t> tokens = m.vocab().map(item.tokens);
        EntityId gold = pick_gold(item, rng);

        Scope scope_a = compute_scope(m.kg(), gold, cfg.hops);
        NodeEmbeddings emb_a = m.forward_propagate(m.posterior(), scope_a);
        Distribution q = m.posterior_over(tokens, scope_a, emb_a);
        Distribution topic = m.topic_distribution(theta, tokens);

        // Duplicate draws share one forward/backward pass each.
        std::map<std::uint32_t, std::uint32_t> sample_counts;
        for (std::uint32_t j = 0; j < cfg.samples; ++j) ++sample_counts[q.sample(rng)];

        struct Candidate {
            std::uint32_t pos;
            std::uint32_t count;
            Scope scope;
            NodeEmbeddings emb;
            std::uint32_t answer_pos;
            double signal;
        };
        std::vector<Candidate> cands;
        cands.reserve(sample_counts.size());
        std::vector<double> signal_batch;
        signal_batch.reserve(cfg.samples);
        for (const auto& [pos, count] : sample_counts) {
            EntityId y = scope_a.node(pos).entity;
            Scope scope_y = compute_scope(m.kg(), y, cfg.hops);
            auto a_pos = scope_y.position(gold);
            if (!a_pos) throw Error("scope symmetry violated");
            NodeEmbeddings emb_y = m.forward_propagate(theta, scope_y);
            Distribution ans = m.answer_distribution(theta, tokens, scope_y, emb_y);
            double a_signal =
                topic.log_probs[y] + ans.log_probs[*a_pos] - q.log_probs[pos];
            cands.push_back(
                {pos, count, std::move(scope_y), std::move(emb_y), *a_pos, a_signal});
        }
        for (const Candidate& c : cands)
            for (std::uint32_t j = 0; j < c.count; ++j) signal_batch.push_back(c.signal);

        state.update(signal_batch);
        double normalized_mean = 0.0;
        for (double a : signal_batch) {
            diag.mean_signal += a;
            normalized_mean += state.normalize(a);
        }
        normalized_mean *= inv_samples;
        total_samples += signal_batch.size();

        double b_pred = baseline.predict(gold, tokens);
        baseline.fit_step(gold, tokens, normalized_mean, cfg.baseline_lr);
        diag.loss_baseline += (b_pred - normalized_mean) * (b_pred - normalized_mean);

        for (const Candidate& c : cands) {
            double count_scale = static_cast<double>(c.count) * inv_samples * inv_batch;
            diag.loss_theta1 += static_cast<double>(c.count) * inv_samples *
                                m.accum_topic_nll(theta, tokens,
                                                  scope_a.node(c.pos).entity,
                                                  count_scale, scratch);
            diag.loss_theta2 += static_cast<double>(c.count) * inv_samples *
                                m.accum_answer_nll(theta, tokens, c.scope, c.emb,
                                                   c.answer_pos, count_scale, scratch);
            double weight = state.normalize(c.signal) - b_pred;
            double psi_nll = m.accum_posterior_nll(tokens, scope_a, emb_a, c.pos,
                                                   weight * count_scale, scratch);
            diag.loss_psi += static_cast<double>(c.count) * inv_samples * weight * psi_nll;
        }
    }

    sgd_step(m.params(), scratch, cfg.lr, "reinforce step");
    diag.loss_theta1 *= inv_batch;
    diag.loss_theta2 *= inv_batch;
    diag.loss_psi *= inv_batch;
    diag.loss_baseline *= inv_batch;
    diag.mean_signal /= static_cast<double>(total_samples);
    return diag;
}

PretrainStats pretrain(VrnModel& m, std::span<const QAItem> labeled,
                       const TrainConfig& cfg,
                       const std::function<void(std::size_t, const PretrainStats&)>&
                           epoch_callback) {
    if (labeled.empty()) throw Error("pretrain: no labeled items");
    for (const QAItem& item : labeled) {
        if (!item.topic) throw Error("pretrain: unlabeled item");
        if (*item.topic >= m.kg().num_entities())
            throw Error("pretrain: topic entity absent from graph");
    }

    const auto& theta = m.recognition_reasoning();
    const auto& psi = m.posterior();
    const bool shared = m.config().share_posterior;
    GradientSet grads(m.params());
    Rng order_rng = make_rng(cfg.seed, "pretrain/order");
    Rng gold_rng = make_rng(cfg.seed, "pretrain/gold");

    std::vector<std::size_t> order(labeled.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    PretrainStats total;
    for (std::uint32_t epoch = 0; epoch < cfg.pretrain_epochs; ++epoch) {
        order_rng.shuffle(order);
        PretrainStats stats;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
            std::size_t end = std::min(order.size(), start + cfg.batch);
            grads.zero();
            double inv = 1.0 / static_cast<double>(end - start);
            for (std::size_t k = start; k < end; ++k) {
                const QAItem& item = labeled[order[k]];
                std::vector<std::uint32_t> tokens = m.vocab().map(item.tokens);
                EntityId y = *item.topic;
                stats.loss_recognition +=
                    m.accum_topic_nll(theta, tokens, y, inv, grads);
                if (!shared) m.accum_topic_nll(psi, tokens, y, inv, grads);

                EntityId gold = pick_gold(item, gold_rng);
                Scope scope_y = compute_scope(m.kg(), y, cfg.hops);
                auto a_pos = scope_y.position(gold);
                if (!a_pos)
                    throw Error("pretrain: answer '" + m.kg().entity(gold).name +
                                "' outside the " + std::to_string(cfg.hops) +
                                "-hop scope of its topic");
                NodeEmbeddings emb = m.forward_propagate(theta, scope_y);
                stats.loss_answer +=
                    m.accum_answer_nll(theta, tokens, scope_y, emb, *a_pos, inv, grads);
            }
            sgd_step(m.params(), grads, cfg.lr, "pretrain step");
            ++stats.steps;
        }
        stats.loss_recognition /= static_cast<double>(labeled.size());
        stats.loss_answer /= static_cast<double>(labeled.size());
        if (epoch_callback) epoch_callback(epoch, stats);
        total.loss_recognition = stats.loss_recognition;
        total.loss_answer = stats.loss_answer;
        total.steps += stats.steps;
    }
    return total;
}

}  // namespace vrn
