#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "vrn/model.hpp"
#include "vrn/oracle.hpp"

using namespace vrn;

namespace {

void set_row(Matrix& m, std::size_t r, std::initializer_list<double> vals) {
    std::size_t c = 0;
    for (double v : vals) m.at(r, c++) = v;
}

}  // namespace

TEST_CASE("embed_question averages token rows") {
    KnowledgeGraph g = test_util::diamond_graph();
    Vocabulary vocab = test_util::diamond_vocab(g);
    VrnModel m(g, vocab, test_util::small_model_config(2), 3);
    Matrix& table = m.params().block(m.recognition_reasoning().ent_tokens);
    std::uint32_t t1 = vocab.lookup("who");
    std::uint32_t t2 = vocab.lookup("made");
    set_row(table, t1, {1.0, 3.0});
    set_row(table, t2, {2.0, 5.0});

    SUBCASE("single token returns its row") {
        auto f = m.embed_question(m.recognition_reasoning().ent_tokens,
                                  std::vector<std::uint32_t>{t1});
        CHECK(f == std::vector<double>{1.0, 3.0});
    }
    SUBCASE("repeated token is idempotent under the mean") {
        auto f = m.embed_question(m.recognition_reasoning().ent_tokens,
                                  std::vector<std::uint32_t>{t1, t1});
        CHECK(f == std::vector<double>{1.0, 3.0});
    }
    SUBCASE("two tokens give the arithmetic mean") {
        auto f = m.embed_question(m.recognition_reasoning().ent_tokens,
                                  std::vector<std::uint32_t>{t1, t2});
        CHECK(f == std::vector<double>{1.5, 4.0});
    }
    SUBCASE("empty token list is an error") {
        CHECK_THROWS_AS(m.embed_question(m.recognition_reasoning().ent_tokens,
                                         std::vector<std::uint32_t>{}),
                        Error);
    }
}

TEST_CASE("entity_weight in name-bow mode averages name token rows") {
    KnowledgeGraph g;
    g.add_entity("amber falls");  // two tokens
    g.add_entity("solo");
    g.add_relation("r");
    g.add_triple(0, 0, 1);
    g.finalize();
    Vocabulary vocab = build_vocab({{"amber", "falls", "solo"}});
    VrnModel m(g, vocab, test_util::small_model_config(2), 3);
    Matrix& names = m.params().block(m.recognition_reasoning().name_tokens);
    set_row(names, vocab.lookup("amber"), {2.0, 0.0});
    set_row(names, vocab.lookup("falls"), {0.0, 4.0});
    auto w = m.entity_weight(m.recognition_reasoning(), 0);
    CHECK(w == std::vector<double>{1.0, 2.0});
}

TEST_CASE("entity_weight in free mode returns the exact row") {
    KnowledgeGraph g = test_util::diamond_graph();
    Vocabulary vocab = test_util::diamond_vocab(g);
    ModelConfig cfg = test_util::small_model_config(2);
    cfg.name_bow = false;
    VrnModel m(g, vocab, cfg, 3);
    Matrix& w = m.params().block(m.recognition_reasoning().free_w);
    set_row(w, 4, {7.0, -1.0});
    CHECK(m.entity_weight(m.recognition_reasoning(), 4) ==
          std::vector<double>{7.0, -1.0});
}

TEST_CASE("entities with identical names get identical weights and logits") {
    KnowledgeGraph g;
    g.options().allow_self_loops = false;
    g.add_entity("twin name");
    g.add_entity("other");
    g.add_entity("twin name ");  // same tokens after tokenize
    g.add_relation("r");
    g.add_triple(0, 0, 1);
    g.add_triple(2, 0, 1);
    g.finalize();
    Vocabulary vocab = build_vocab({{"twin", "name", "other", "q"}});
    VrnModel m(g, vocab, test_util::small_model_config(4), 9);
    auto toks = vocab.map(std::vector<std::string>{"q", "twin"});
    Distribution d = m.topic_distribution(m.recognition_reasoning(), toks);
    CHECK(d.log_probs[0] == doctest::Approx(d.log_probs[2]).epsilon(1e-12));
}

TEST_CASE("topic distribution") {
    KnowledgeGraph g = test_util::diamond_graph();
    Vocabulary vocab = test_util::diamond_vocab(g);
    VrnModel m(g, vocab, test_util::small_model_config(2), 3);
    auto toks = test_util::diamond_tokens(vocab);

    SUBCASE("identical weights give the uniform distribution") {
        Matrix& names = m.params().block(m.recognition_reasoning().name_tokens);
        for (std::size_t r = 0; r < names.rows; ++r) set_row(names, r, {0.5, 0.25});
        Distribution d = m.topic_distribution(m.recognition_reasoning(), toks);
        for (double p : d.probs) CHECK(p == doctest::Approx(1.0 / 6).epsilon(1e-12));
    }
    SUBCASE("probabilities sum to one") {
        Distribution d = m.topic_distribution(m.recognition_reasoning(), toks);
        double sum = 0.0;
        for (double p : d.probs) sum += p;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        for (std::size_t i = 0; i < d.probs.size(); ++i)
            CHECK(std::exp(d.log_probs[i]) == doctest::Approx(d.probs[i]).epsilon(1e-9));
    }
}

TEST_CASE("softmax with hand logits matches the scalar oracle") {
    std::vector<double> logits{1.0, 0.0, 0.0};
    Distribution d = softmax_distribution({0, 1, 2}, std::vector<double>(logits));
    auto ref = oracle::softmax_naive(logits);
    double e = std::exp(1.0);
    CHECK(ref[0] == doctest::Approx(e / (e + 2)).epsilon(1e-12));
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(d.probs[i] == doctest::Approx(ref[i]).epsilon(1e-12));
}

TEST_CASE("forward propagation") {
    SUBCASE("source embedding is exactly zero") {
        KnowledgeGraph g = test_util::diamond_graph();
        Vocabulary vocab = test_util::diamond_vocab(g);
        VrnModel m(g, vocab, test_util::small_model_config(4), 3);
        Scope s = compute_scope(g, 0, 2);
        NodeEmbeddings emb = m.forward_propagate(m.recognition_reasoning(), s);
        for (double v : emb.node(0)) CHECK(v == 0.0);
    }

    SUBCASE("single edge with an all-ones matrix gives the relation column") {
        KnowledgeGraph g;
        g.add_entity("y");
        g.add_entity("a");
        g.add_relation("r");
        g.add_triple(0, 0, 1);
        g.finalize();
        Vocabulary vocab = build_vocab({{"q"}});
        VrnModel m(g, vocab, test_util::small_model_config(2), 3);
        Matrix& v = m.params().block(m.recognition_reasoning().prop_v);
        for (double& x : v.data) x = 1.0;  // 2 x 3 all ones
        Scope s = compute_scope(g, 0, 1);
        NodeEmbeddings emb = m.forward_propagate(m.recognition_reasoning(), s);
        // message = relu(V [0,0,1]) = (1,1)
        CHECK(emb.node(1)[0] == doctest::Approx(1.0));
        CHECK(emb.node(1)[1] == doctest::Approx(1.0));
    }

    SUBCASE("two parents with identical messages average to the message") {
        KnowledgeGraph g;
        auto y = g.add_entity("y");
        auto p1 = g.add_entity("p1");
        auto p2 = g.add_entity("p2");
        auto a = g.add_entity("a");
        auto r = g.add_relation("r");
        g.add_triple(y, r, p1);
        g.add_triple(y, r, p2);
        g.add_triple(p1, r, a);
        g.add_triple(p2, r, a);
        g.finalize();
        Vocabulary vocab = build_vocab({{"q"}});
        VrnModel m(g, vocab, test_util::small_model_config(4), 5);
        Scope s = compute_scope(g, y, 2);
        NodeEmbeddings emb = m.forward_propagate(m.recognition_reasoning(), s);
        // p1 and p2 both carry relu(V[:,rel]) and feed a through the same
        // relation, so a's average equals the single-edge message.
        auto pa = s.position(a);
        auto pp = s.position(p1);
        REQUIRE(pa.has_value());
        std::vector<double> expected = propagation_edge_message(
            m, m.recognition_reasoning(),
            ParentEdge{*pp, r, EdgeDir::Forward}, emb);
        for (std::size_t i = 0; i < 4; ++i)
            CHECK(emb.node(*pa)[i] == doctest::Approx(expected[i]).epsilon(1e-12));
    }

    SUBCASE("visit counters cover each node and edge exactly once") {
        KnowledgeGraph g = oracle::random_graph(91, 80, 3.0, 2);
        Vocabulary vocab = build_vocab({{"q"}});
        VrnModel m(g, vocab, test_util::small_model_config(4), 5);
        Scope s = compute_scope(g, 0, 3);
        NodeEmbeddings emb = m.forward_propagate(m.recognition_reasoning(), s);
        CHECK(emb.nodes_visited == s.size());
        CHECK(emb.edges_visited == s.total_parent_edges());
    }

    SUBCASE("embeddings are nonnegative after ReLU averaging") {
        KnowledgeGraph g = oracle::random_graph(13, 60, 3.0, 2);
        Vocabulary vocab = build_vocab({{"q"}});
        VrnModel m(g, vocab, test_util::small_model_config(8), 21);
        Scope s = compute_scope(g, 0, 3);
        NodeEmbeddings emb = m.forward_propagate(m.recognition_reasoning(), s);
        for (double v : emb.g) CHECK(v >= 0.0);
    }
}

TEST_CASE("propagation depends only on the parent DAG, not entity ids") {
    // Same structure built in two different entity orders.
    auto build = [](bool reversed) {
        KnowledgeGraph g;
        std::vector<std::string> names = {"hub", "left", "right", "far"};
        if (reversed) names = {"hub", "right", "left", "far"};
        for (const auto& n : names) g.add_entity(n);
        auto r0 = g.add_relation("r0");
        auto r1 = g.add_relation("r1");
        auto id = [&](const std::string& n) { return *g.find_entity(n); };
        g.add_triple(id("hub"), r0, id("left"));
        g.add_triple(id("hub"), r1, id("right"));
        g.add_triple(id("left"), r0, id("far"));
        g.add_triple(id("right"), r1, id("far"));
        g.finalize();
        return g;
    };
    KnowledgeGraph g1 = build(false);
    KnowledgeGraph g2 = build(true);
    Vocabulary vocab = build_vocab({{"hub", "left", "right", "far", "q"}});
    VrnModel m1(g1, vocab, test_util::small_model_config(4), 7);
    VrnModel m2(g2, vocab, test_util::small_model_config(4), 7);
    // Same parameters on both models.
    m2.params().block(m2.recognition_reasoning().prop_v) =
        m1.params().block(m1.recognition_reasoning().prop_v);

    Scope s1 = compute_scope(g1, *g1.find_entity("hub"), 2);
    Scope s2 = compute_scope(g2, *g2.find_entity("hub"), 2);
    NodeEmbeddings e1 = m1.forward_propagate(m1.recognition_reasoning(), s1);
    NodeEmbeddings e2 = m2.forward_propagate(m2.recognition_reasoning(), s2);
    for (const std::string& name : {"hub", "left", "right", "far"}) {
        auto p1 = s1.position(*g1.find_entity(name));
        auto p2 = s2.position(*g2.find_entity(name));
        REQUIRE(p1.has_value());
        REQUIRE(p2.has_value());
        for (std::size_t i = 0; i < 4; ++i)
            CHECK(e1.node(*p1)[i] == doctest::Approx(e2.node(*p2)[i]).epsilon(1e-12));
    }
}

TEST_CASE("answer distribution") {
    KnowledgeGraph g = test_util::diamond_graph();
    Vocabulary vocab = test_util::diamond_vocab(g);
    VrnModel m(g, vocab, test_util::small_model_config(4), 3);
    auto toks = test_util::diamond_tokens(vocab);
    const auto& side = m.recognition_reasoning();

    SUBCASE("zero question embedding gives uniform over the scope") {
        m.params().block(side.qt_tokens).zero();
        Scope s = compute_scope(g, 0, 2);
        NodeEmbeddings emb = m.forward_propagate(side, s);
        Distribution d = m.answer_distribution(side, toks, s, emb);
        for (double p : d.probs)
            CHECK(p == doctest::Approx(1.0 / static_cast<double>(s.size())).epsilon(1e-12));
    }
    SUBCASE("singleton scope puts probability one on the source") {
        Scope s = compute_scope(g, 5, 0);
        NodeEmbeddings emb = m.forward_propagate(side, s);
        Distribution d = m.answer_distribution(side, toks, s, emb);
        REQUIRE(d.probs.size() == 1);
        CHECK(d.probs[0] == doctest::Approx(1.0));
        CHECK(d.support[0] == 5);
    }
    SUBCASE("logits match a scalar recomputation") {
        Scope s = compute_scope(g, 0, 2);
        NodeEmbeddings emb = m.forward_propagate(side, s);
        Distribution d = m.answer_distribution(side, toks, s, emb);
        std::vector<double> f = m.embed_question(side.qt_tokens, toks);
        std::vector<double> logits(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            double z = 0.0;
            for (std::size_t k = 0; k < f.size(); ++k) z += f[k] * emb.node(i)[k];
            logits[i] = z;
        }
        auto ref = oracle::softmax_naive(logits);
        for (std::size_t i = 0; i < s.size(); ++i)
            CHECK(d.probs[i] == doctest::Approx(ref[i]).epsilon(1e-9));
    }
}

TEST_CASE("posterior distribution") {
    KnowledgeGraph g = test_util::diamond_graph();
    Vocabulary vocab = test_util::diamond_vocab(g);
    auto toks = test_util::diamond_tokens(vocab);

    SUBCASE("all-zero posterior parameters give uniform over the answer scope") {
        VrnModel m(g, vocab, test_util::small_model_config(4), 3);
        for (std::size_t b : {m.posterior().ent_tokens, m.posterior().name_tokens,
                              m.posterior().qt_tokens, m.posterior().prop_v})
            m.params().block(b).zero();
        auto post = m.posterior_distribution(toks, 3, 2);
        for (double p : post.dist.probs)
            CHECK(p ==
                  doctest::Approx(1.0 / static_cast<double>(post.scope.size())).epsilon(1e-12));
    }
    SUBCASE("support always contains the answer at hop zero") {
        VrnModel m(g, vocab, test_util::small_model_config(4), 11);
        for (EntityId a = 0; a < g.num_entities(); ++a) {
            auto post = m.posterior_distribution(toks, a, 2);
            CHECK(post.dist.support[0] == a);
            CHECK(post.scope.node(0).hop == 0);
        }
    }
    SUBCASE("logits match an independent scalar recomputation") {
        VrnModel m(g, vocab, test_util::small_model_config(4), 19);
        auto post = m.posterior_distribution(toks, 3, 2);
        std::vector<double> f_ent = m.embed_question(m.posterior().ent_tokens, toks);
        std::vector<double> f_qt = m.embed_question(m.posterior().qt_tokens, toks);
        std::vector<double> logits;
        for (std::size_t i = 0; i < post.scope.size(); ++i) {
            auto w = m.entity_weight(m.posterior(), post.scope.node(i).entity);
            double z = 0.0;
            for (std::size_t k = 0; k < w.size(); ++k)
                z += w[k] * f_ent[k] + f_qt[k] * post.emb.node(i)[k];
            logits.push_back(z);
        }
        auto ref = oracle::softmax_naive(logits);
        for (std::size_t i = 0; i < logits.size(); ++i)
            CHECK(post.dist.probs[i] == doctest::Approx(ref[i]).epsilon(1e-9));
    }
}

TEST_CASE("shared posterior aliases the recognition blocks") {
    KnowledgeGraph g = test_util::diamond_graph();
    Vocabulary vocab = test_util::diamond_vocab(g);
    ModelConfig cfg = test_util::small_model_config(4);
    cfg.share_posterior = true;
    VrnModel m(g, vocab, cfg, 3);
    CHECK(m.posterior().ent_tokens == m.recognition_reasoning().ent_tokens);
    CHECK(m.posterior().prop_v == m.recognition_reasoning().prop_v);
    CHECK(m.params().count() == 4);
}
