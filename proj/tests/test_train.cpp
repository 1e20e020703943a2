#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "vrn/oracle.hpp"
#include "vrn/train.hpp"

using namespace vrn;

namespace {

struct Setup {
    KnowledgeGraph g;
    Vocabulary vocab;
    std::vector<std::uint32_t> tokens;
};

Setup make_setup(std::uint64_t seed = 3) {
    Setup s{test_util::diamond_graph(), {}, {}};
    s.vocab = test_util::diamond_vocab(s.g);
    s.tokens = test_util::diamond_tokens(s.vocab);
    (void)seed;
    return s;
}

KnowledgeGraph one_entity_graph() {
    KnowledgeGraph g;
    g.options().allow_self_loops = true;
    g.add_entity("lonely");
    g.add_relation("r");
    g.finalize();
    return g;
}

}  // namespace

TEST_CASE("learning signal state") {
    SUBCASE("constant batch at the current mean normalizes to zero") {
        LearningSignalState st;
        st.mu = 2.0;
        st.sigma = 0.7;
        auto out = normalize_signal(st, std::vector<double>{2.0, 2.0, 2.0});
        CHECK(st.mu == doctest::Approx(2.0));
        for (double v : out) CHECK(v == doctest::Approx(0.0));
    }
    SUBCASE("decay zero adopts the batch statistics exactly") {
        LearningSignalState st;
        st.decay = 0.0;
        auto out = normalize_signal(st, std::vector<double>{1.0, 3.0});
        CHECK(st.mu == doctest::Approx(2.0));
        CHECK(st.sigma == doctest::Approx(1.0));
        CHECK(out[0] == doctest::Approx(-1.0));
        CHECK(out[1] == doctest::Approx(1.0));
    }
    SUBCASE("two hand-worked steps at decay 0.9") {
        LearningSignalState st;  // mu 0, sigma 1
        st.decay = 0.9;
        normalize_signal(st, std::vector<double>{2.0, 4.0});  // mean 3, std 1
        CHECK(st.mu == doctest::Approx(0.3).epsilon(1e-12));
        CHECK(st.sigma == doctest::Approx(1.0).epsilon(1e-12));
        auto out = normalize_signal(st, std::vector<double>{1.0});  // mean 1, std 0
        // mu = 0.9*0.3 + 0.1*1 = 0.37; sigma = 0.9*1.0 = 0.9
        CHECK(st.mu == doctest::Approx(0.37).epsilon(1e-12));
        CHECK(st.sigma == doctest::Approx(0.9).epsilon(1e-12));
        CHECK(out[0] == doctest::Approx((1.0 - 0.37) / 0.9).epsilon(1e-12));
    }
    SUBCASE("sigma never goes below the floor") {
        LearningSignalState st;
        st.decay = 0.0;
        st.sigma_floor = 1e-4;
        normalize_signal(st, std::vector<double>{5.0, 5.0});
        CHECK(st.sigma == doctest::Approx(1e-4));
    }
}

TEST_CASE("baseline net") {
    Setup s = make_setup();
    SUBCASE("zero-initialized net predicts zero") {
        BaselineNet b(s.g.num_entities(), s.vocab.size(), 8, 3);
        for (std::size_t i = 0; i < b.params().count(); ++i) b.params().block(i).zero();
        CHECK(b.predict(2, s.tokens) == doctest::Approx(0.0));
    }
    SUBCASE("repeated fitting converges toward the target") {
        BaselineNet b(s.g.num_entities(), s.vocab.size(), 8, 3);
        double target = 0.8;
        double first = std::abs(b.predict(2, s.tokens) - target);
        for (int step = 0; step < 400; ++step) b.fit_step(2, s.tokens, target, 0.05);
        double last = std::abs(b.predict(2, s.tokens) - target);
        CHECK(last < 0.05);
        CHECK(last < first);
    }
}

TEST_CASE("learning signal") {
    SUBCASE("one-entity graph gives exactly zero") {
        KnowledgeGraph g = one_entity_graph();
        Vocabulary vocab = build_vocab({{"lonely", "q"}});
        VrnModel m(g, vocab, test_util::small_model_config(4), 3);
        auto toks = vocab.map(std::vector<std::string>{"q"});
        CHECK(learning_signal(m, toks, 0, 0, 2) == doctest::Approx(0.0));
    }
    SUBCASE("pure function: two evaluations agree exactly") {
        Setup s = make_setup();
        VrnModel m(s.g, s.vocab, test_util::small_model_config(4), 5);
        double a1 = learning_signal(m, s.tokens, 3, 0, 2);
        double a2 = learning_signal(m, s.tokens, 3, 0, 2);
        CHECK(a1 == a2);
    }
    SUBCASE("expectation under the exact posterior equals the marginal") {
        Setup s = make_setup();
        VrnModel m(s.g, s.vocab, test_util::small_model_config(4), 5);
        InstanceEnumeration inst = enumerate_instance(m, s.tokens, 3, 2);
        Distribution post = exact_posterior(inst);
        // E_post[log P1 + log P2 - log post] enumerated
        double expectation = 0.0;
        for (std::size_t i = 0; i < post.probs.size(); ++i)
            expectation +=
                post.probs[i] * (inst.log_p1[i] + inst.log_p2[i] - post.log_probs[i]);
        double marginal = marginal_loglik(m, s.tokens, 3, 2);
        CHECK(expectation == doctest::Approx(marginal).epsilon(1e-12));
    }
}

TEST_CASE("elbo and marginal log-likelihood") {
    SUBCASE("one-entity graph gives zero for both") {
        KnowledgeGraph g = one_entity_graph();
        Vocabulary vocab = build_vocab({{"lonely", "q"}});
        VrnModel m(g, vocab, test_util::small_model_config(4), 3);
        auto toks = vocab.map(std::vector<std::string>{"q"});
        CHECK(elbo(m, toks, 0, 1) == doctest::Approx(0.0));
        CHECK(marginal_loglik(m, toks, 0, 1) == doctest::Approx(0.0));
    }
    SUBCASE("marginal is a log-probability: always <= 0") {
        Setup s = make_setup();
        for (int draw = 0; draw < 50; ++draw) {
            VrnModel m(s.g, s.vocab, test_util::small_model_config(4), 1000 + draw);
            for (EntityId a = 0; a < s.g.num_entities(); ++a)
                CHECK(marginal_loglik(m, s.tokens, a, 2) <= 1e-12);
        }
    }
    SUBCASE("marginal matches a direct probability-domain summation") {
        Setup s = make_setup();
        VrnModel m(s.g, s.vocab, test_util::small_model_config(4), 123);
        EntityId a = 3;
        std::uint32_t hops = 2;
        // Direct route: sum_y exp(log p1) * exp(log p2) over all entities,
        // zero when the answer is outside scope(y, hops).
        Distribution topic = m.topic_distribution(m.recognition_reasoning(), s.tokens);
        double total = 0.0;
        for (EntityId y = 0; y < s.g.num_entities(); ++y) {
            Scope sy = compute_scope(s.g, y, hops);
            auto pos = sy.position(a);
            if (!pos) continue;
            NodeEmbeddings emb = m.forward_propagate(m.recognition_reasoning(), sy);
            Distribution ans =
                m.answer_distribution(m.recognition_reasoning(), s.tokens, sy, emb);
            total += topic.probs[y] * ans.probs[*pos];
        }
        CHECK(marginal_loglik(m, s.tokens, a, hops) ==
              doctest::Approx(std::log(total)).epsilon(1e-12));
    }
    SUBCASE("elbo lower-bounds the marginal and is tight at the posterior") {
        oracle::SuiteResult r = oracle::suite_elbo_bound(7);
        INFO(r.detail);
        CHECK(r.pass);
    }
}

TEST_CASE("reinforce step") {
    Setup s = make_setup();
    SUBCASE("zero learning rate leaves parameters unchanged") {
        VrnModel m(s.g, s.vocab, test_util::small_model_config(4), 5);
        BaselineNet b(s.g.num_entities(), s.vocab.size(), 8, 6);
        LearningSignalState st;
        TrainConfig cfg;
        cfg.lr = 0.0;
        cfg.baseline_lr = 0.0;
        cfg.samples = 4;
        cfg.hops = 2;
        std::vector<Matrix> before;
        for (std::size_t i = 0; i < m.params().count(); ++i)
            before.push_back(m.params().block(i));
        QAItem item;
        item.tokens = {"who", "made", "beta"};
        item.answers = {3};
        GradientSet scratch(m.params());
        Rng rng = make_rng(5, "step");
        reinforce_step(m, b, st, std::vector<QAItem>{item}, cfg, rng, scratch);
        for (std::size_t i = 0; i < m.params().count(); ++i)
            CHECK(m.params().block(i) == before[i]);
    }
    SUBCASE("subtracting a constant leaves the enumerated gradient unchanged") {
        VrnModel m(s.g, s.vocab, test_util::small_model_config(4), 5);
        InstanceEnumeration inst = enumerate_instance(m, s.tokens, 3, 2);
        std::size_t n = inst.scope.size();
        // grad log Q per candidate
        std::vector<GradientSet> v;
        for (std::size_t y = 0; y < n; ++y) {
            GradientSet nll(m.params());
            m.accum_posterior_nll(s.tokens, inst.scope, inst.emb,
                                  static_cast<std::uint32_t>(y), 1.0, nll);
            GradientSet lg(m.params());
            lg.add_scaled(nll, -1.0);
            v.push_back(std::move(lg));
        }
        auto enumerate_weighted = [&](double shift) {
            GradientSet total(m.params());
            for (std::size_t y = 0; y < n; ++y) {
                double signal = inst.log_p1[y] + inst.log_p2[y] - inst.q.log_probs[y];
                total.add_scaled(v[y], inst.q.probs[y] * (signal - shift));
            }
            return total;
        };
        GradientSet g0 = enumerate_weighted(0.0);
        GradientSet g1 = enumerate_weighted(123.456);
        for (std::size_t b = 0; b < g0.blocks.size(); ++b)
            for (std::size_t i = 0; i < g0.blocks[b].data.size(); ++i)
                CHECK(g0.blocks[b].data[i] ==
                      doctest::Approx(g1.blocks[b].data[i]).epsilon(1e-9));
    }
    SUBCASE("Monte Carlo estimator is unbiased against enumeration") {
        oracle::SuiteResult r = oracle::suite_reinforce_unbiased(7);
        INFO(r.detail);
        CHECK(r.pass);
    }
}

TEST_CASE("enumerated ascent step never decreases the elbo for small rates") {
    Setup s = make_setup();
    VrnModel m(s.g, s.vocab, test_util::small_model_config(4), 41);
    EntityId a = 3;
    std::uint32_t hops = 2;

    InstanceEnumeration inst = enumerate_instance(m, s.tokens, a, hops);
    Distribution post = exact_posterior(inst);
    double before = elbo_with(inst, post);

    // Enumerated gradient of E_post[log P1 + log P2] w.r.t. theta, with the
    // posterior held fixed.
    GradientSet grads(m.params());
    const auto& theta = m.recognition_reasoning();
    for (std::size_t y = 0; y < inst.scope.size(); ++y) {
        EntityId ye = inst.scope.node(y).entity;
        m.accum_topic_nll(theta, s.tokens, ye, post.probs[y], grads);
        Scope sy = compute_scope(s.g, ye, hops);
        NodeEmbeddings emb = m.forward_propagate(theta, sy);
        m.accum_answer_nll(theta, s.tokens, sy, emb, *sy.position(a), post.probs[y],
                           grads);
    }

    double eta = 0.1;
    bool improved = false;
    for (int halving = 0; halving < 20 && !improved; ++halving, eta *= 0.5) {
        sgd_step(m.params(), grads, eta, "ascent test");
        InstanceEnumeration after_inst = enumerate_instance(m, s.tokens, a, hops);
        double after = elbo_with(after_inst, post);
        if (after >= before - 1e-12) improved = true;
        // undo
        GradientSet negated(m.params());
        negated.add_scaled(grads, -1.0);
        sgd_step(m.params(), negated, eta, "ascent undo");
    }
    CHECK(improved);
}

TEST_CASE("pretrain") {
    Setup s = make_setup();
    SUBCASE("degenerate single question reaches near-certainty") {
        VrnModel m(s.g, s.vocab, test_util::small_model_config(8), 5);
        QAItem item;
        item.tokens = {"who", "made", "beta"};
        item.topic = 0;
        item.answers = {3};
        TrainConfig cfg;
        cfg.lr = 1.0;
        cfg.pretrain_epochs = 200;
        cfg.hops = 2;
        cfg.batch = 1;
        pretrain(m, std::vector<QAItem>{item}, cfg);
        Distribution d = m.topic_distribution(m.recognition_reasoning(),
                                              s.vocab.map(item.tokens));
        CHECK(d.probs[0] > 0.95);
    }
    SUBCASE("same seed gives bitwise-identical parameters") {
        std::vector<QAItem> items;
        for (EntityId topic : {0u, 1u, 2u}) {
            QAItem item;
            item.tokens = {"who", "made", s.g.entity(topic).name_tokens[0]};
            item.topic = topic;
            item.answers = {3};
            items.push_back(item);
        }
        TrainConfig cfg;
        cfg.lr = 0.5;
        cfg.pretrain_epochs = 5;
        cfg.hops = 2;
        VrnModel m1(s.g, s.vocab, test_util::small_model_config(4), 5);
        VrnModel m2(s.g, s.vocab, test_util::small_model_config(4), 5);
        pretrain(m1, items, cfg);
        pretrain(m2, items, cfg);
        for (std::size_t i = 0; i < m1.params().count(); ++i)
            CHECK(m1.params().block(i) == m2.params().block(i));
    }
    SUBCASE("unlabeled item is rejected") {
        VrnModel m(s.g, s.vocab, test_util::small_model_config(4), 5);
        QAItem item;
        item.tokens = {"who"};
        item.answers = {3};
        TrainConfig cfg;
        CHECK_THROWS_AS(pretrain(m, std::vector<QAItem>{item}, cfg), Error);
    }
}
