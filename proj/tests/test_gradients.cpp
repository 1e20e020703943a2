#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "vrn/oracle.hpp"
#include "vrn/train.hpp"

using namespace vrn;

TEST_CASE("log-softmax gradient w.r.t. its own logit at uniform is 1 - 1/n") {
    // Free-weight mode with all-zero weights gives uniform logits; the
    // target row's gradient along f is then -(1 - 1/n) * f.
    KnowledgeGraph g = test_util::diamond_graph();
    Vocabulary vocab = test_util::diamond_vocab(g);
    ModelConfig cfg = test_util::small_model_config(2);
    cfg.name_bow = false;
    VrnModel m(g, vocab, cfg, 3);
    const auto& side = m.recognition_reasoning();
    m.params().block(side.free_w).zero();
    Matrix& tokens = m.params().block(side.ent_tokens);
    tokens.zero();
    std::uint32_t tok = vocab.lookup("who");
    tokens.at(tok, 0) = 1.0;  // f = (1, 0)

    GradientSet grads(m.params());
    EntityId target = 2;
    m.accum_topic_nll(side, std::vector<std::uint32_t>{tok}, target, 1.0, grads);
    double n = static_cast<double>(g.num_entities());
    // dL/dz_target = 1/n - 1, and dz/dW[target][0] = f[0] = 1
    CHECK(grads.block(side.free_w).at(target, 0) ==
          doctest::Approx(1.0 / n - 1.0).epsilon(1e-12));
    // non-target rows get +1/n
    CHECK(grads.block(side.free_w).at(0, 0) == doctest::Approx(1.0 / n).epsilon(1e-12));
}

TEST_CASE("analytic gradients match central finite differences") {
    oracle::SuiteResult r = oracle::suite_gradient_check(7);
    INFO(r.detail);
    CHECK(r.pass);
}

TEST_CASE("directional derivative matches the gradient dot direction") {
    KnowledgeGraph g = test_util::diamond_graph();
    Vocabulary vocab = test_util::diamond_vocab(g);
    VrnModel m(g, vocab, test_util::small_model_config(4), 7);
    auto toks = test_util::diamond_tokens(vocab);
    EntityId answer = 3;

    GradientSet grads(m.params());
    auto post = m.posterior_distribution(toks, answer, 2);
    m.accum_posterior_nll(toks, post.scope, post.emb, 1, 1.0, grads);

    // Random direction over all parameters.
    Rng rng = make_rng(99, "direction");
    GradientSet dir(m.params());
    for (Matrix& b : dir.blocks)
        for (double& v : b.data) v = rng.uniform(-1.0, 1.0);

    double expected = 0.0;
    for (std::size_t b = 0; b < dir.blocks.size(); ++b)
        expected += dot({grads.blocks[b].data.data(), grads.blocks[b].data.size()},
                        {dir.blocks[b].data.data(), dir.blocks[b].data.size()});

    const double h = 1e-6;
    auto loss_at = [&](double t) {
        for (std::size_t b = 0; b < dir.blocks.size(); ++b)
            axpy(t, {dir.blocks[b].data.data(), dir.blocks[b].data.size()},
                 {m.params().block(b).data.data(), m.params().block(b).data.size()});
        auto p = m.posterior_distribution(toks, answer, 2);
        double loss = -p.dist.log_probs[1];
        for (std::size_t b = 0; b < dir.blocks.size(); ++b)
            axpy(-t, {dir.blocks[b].data.data(), dir.blocks[b].data.size()},
                 {m.params().block(b).data.data(), m.params().block(b).data.size()});
        return loss;
    };
    double numeric = (loss_at(h) - loss_at(-h)) / (2.0 * h);
    CHECK(numeric == doctest::Approx(expected).epsilon(1e-5));
}

TEST_CASE("untouched parameter blocks get exactly zero gradient") {
    KnowledgeGraph g = test_util::diamond_graph();
    Vocabulary vocab = test_util::diamond_vocab(g);
    VrnModel m(g, vocab, test_util::small_model_config(4), 7);
    auto toks = test_util::diamond_tokens(vocab);

    GradientSet grads(m.params());
    m.accum_topic_nll(m.recognition_reasoning(), toks, 2, 1.0, grads);
    // The recognition loss cannot touch reasoning or posterior blocks.
    for (std::size_t b :
         {m.recognition_reasoning().qt_tokens, m.recognition_reasoning().prop_v,
          m.posterior().ent_tokens, m.posterior().name_tokens, m.posterior().qt_tokens,
          m.posterior().prop_v}) {
        for (double v : grads.block(b).data) CHECK(v == 0.0);
    }
}

TEST_CASE("non-finite gradients abort the step with diagnostics") {
    KnowledgeGraph g = test_util::diamond_graph();
    Vocabulary vocab = test_util::diamond_vocab(g);
    VrnModel m(g, vocab, test_util::small_model_config(4), 7);
    GradientSet grads(m.params());
    grads.block(1).data[3] = std::nan("");
    CHECK_THROWS_AS(sgd_step(m.params(), grads, 0.1, "test step"), Error);
}
