#include "vrn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace vrn {

namespace {

// Runs fn(i) for i in [0, n) across `workers` threads, chunked.
void parallel_for(std::size_t n, std::size_t workers,
                  const std::function<void(std::size_t)>& fn) {
    if (workers <= 1 || n < 2 * workers) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> threads;
    std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        std::size_t begin = w * chunk;
        std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        threads.emplace_back([begin, end, &fn] {
            for (std::size_t i = begin; i < end; ++i) fn(i);
        });
    }
    for (auto& t : threads) t.join();
}

}  // namespace

double hits_at_1(const std::function<EntityId(const QAItem&)>& predict,
                 std::span<const QAItem> items, std::size_t workers) {
    if (items.empty()) throw Error("hits_at_1: empty dataset");
    std::vector<char> hit(items.size(), 0);
    parallel_for(items.size(), workers, [&](std::size_t i) {
        EntityId pred = predict(items[i]);
        hit[i] = std::binary_search(items[i].answers.begin(), items[i].answers.end(),
                                    pred)
                     ? 1
                     : 0;
    });
    std::size_t correct = 0;
    for (char h : hit) correct += h;
    return static_cast<double>(correct) / static_cast<double>(items.size());
}

double entity_accuracy(const VrnModel& m, std::span<const QAItem> items,
                       std::size_t workers) {
    if (items.empty()) throw Error("entity_accuracy: empty dataset");
    std::vector<char> hit(items.size(), 0);
    parallel_for(items.size(), workers, [&](std::size_t i) {
        const QAItem& item = items[i];
        if (!item.topic) throw Error("entity_accuracy: unlabeled item");
        std::vector<std::uint32_t> tokens = m.vocab().map(item.tokens);
        Distribution d = m.topic_distribution(m.recognition_reasoning(), tokens);
        std::size_t best = 0;
        for (std::size_t e = 1; e < d.log_probs.size(); ++e)
            if (d.log_probs[e] > d.log_probs[best]) best = e;
        hit[i] = best == *item.topic ? 1 : 0;
    });
    std::size_t correct = 0;
    for (char h : hit) correct += h;
    return static_cast<double>(correct) / static_cast<double>(items.size());
}

SupervisedEmbedding::SupervisedEmbedding(const KnowledgeGraph& kg,
                                         const Vocabulary& vocab, SupEmbConfig cfg)
    : kg_(&kg), vocab_(&vocab), cfg_(cfg) {
    tokens_ = params_.add("supemb.tokens", vocab.size(), cfg.dim);
    entities_ = params_.add("supemb.entities", kg.num_entities(), cfg.dim);
    for (std::size_t i = 0; i < params_.count(); ++i) {
        Rng rng = make_rng(cfg.seed, "init/" + params_.name(i));
        for (double& v : params_.block(i).data) v = rng.uniform(-cfg.init_range, cfg.init_range);
    }
}

EntityId SupervisedEmbedding::predict(std::span<const std::uint32_t> tokens) const {
    const Matrix& tok = params_.block(tokens_);
    const Matrix& ent = params_.block(entities_);
    std::vector<double> f(tok.cols, 0.0);
    for (std::uint32_t t : tokens) axpy(1.0, tok.row_span(t), f);
    double inv = 1.0 / static_cast<double>(std::max<std::size_t>(1, tokens.size()));
    for (double& v : f) v *= inv;

    EntityId best = 0;
    double best_score = dot(ent.row_span(0), f);
    for (EntityId e = 1; e < ent.rows; ++e) {
        double s = dot(ent.row_span(e), f);
        if (s > best_score) {
            best_score = s;
            best = e;
        }
    }
    return best;
}

EntityId SupervisedEmbedding::predict_item(const QAItem& item) const {
    return predict(vocab_->map(item.tokens));
}

void SupervisedEmbedding::train(std::span<const QAItem> items) {
    if (items.empty()) throw Error("supervised embedding: empty training set");
    Rng order_rng = make_rng(cfg_.seed, "supemb/order");
    Rng gold_rng = make_rng(cfg_.seed, "supemb/gold");
    GradientSet grads(params_);
    const Matrix& tok = params_.block(tokens_);
    const Matrix& ent = params_.block(entities_);
    const std::size_t n_ent = ent.rows;
    const std::size_t d = cfg_.dim;

    std::vector<std::size_t> order(items.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::uint32_t epoch = 0; epoch < cfg_.epochs; ++epoch) {
        order_rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += cfg_.batch) {
            std::size_t end = std::min(order.size(), start + cfg_.batch);
            grads.zero();
            double inv = 1.0 / static_cast<double>(end - start);
            for (std::size_t k = start; k < end; ++k) {
                const QAItem& item = items[order[k]];
                std::vector<std::uint32_t> toks = vocab_->map(item.tokens);
                EntityId gold = item.answers.size() == 1
                                    ? item.answers[0]
                                    : item.answers[gold_rng.index(item.answers.size())];

                std::vector<double> f(d, 0.0);
                for (std::uint32_t t : toks) axpy(1.0, tok.row_span(t), f);
                double tok_inv = 1.0 / static_cast<double>(toks.size());
                for (double& v : f) v *= tok_inv;

                std::vector<double> logits(n_ent);
                for (std::size_t e = 0; e < n_ent; ++e)
                    logits[e] = dot(ent.row_span(e), f);
                double lse = log_sum_exp(logits);

                std::vector<double> f_adjoint(d, 0.0);
                for (std::size_t e = 0; e < n_ent; ++e) {
                    double dz = std::exp(logits[e] - lse) - (e == gold ? 1.0 : 0.0);
                    axpy(dz * inv, f, grads.block(entities_).row_span(e));
                    axpy(dz, ent.row_span(e), f_adjoint);
                }
                for (std::uint32_t t : toks)
                    axpy(inv * tok_inv, f_adjoint, grads.block(tokens_).row_span(t));
            }
            sgd_step(params_, grads, cfg_.lr, "supervised embedding step");
        }
    }
}

}  // namespace vrn
