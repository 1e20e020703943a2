#include "vrn/oracle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <sstream>

#include "vrn/scope.hpp"

namespace vrn::oracle {

BfsScope bfs_scope(const KnowledgeGraph& g, EntityId source, std::uint32_t max_hops) {
    // Undirected adjacency straight from the triple list.
    std::map<EntityId, std::vector<std::tuple<EntityId, RelationId, int>>> adj;
    for (const Triple& t : g.triples()) {
        adj[t.subject].push_back({t.object, t.relation, 0});
        adj[t.object].push_back({t.subject, t.relation, 1});
    }

    BfsScope out;
    out.dist[source] = 0;
    std::deque<EntityId> queue{source};
    while (!queue.empty()) {
        EntityId e = queue.front();
        queue.pop_front();
        std::uint32_t d = out.dist[e];
        if (d == max_hops) continue;
        auto it = adj.find(e);
        if (it == adj.end()) continue;
        for (const auto& [other, rel, back] : it->second) {
            (void)rel;
            (void)back;
            if (!out.dist.count(other)) {
                out.dist[other] = d + 1;
                queue.push_back(other);
            }
        }
    }
    for (const auto& [e, d] : out.dist) {
        if (d == 0) continue;
        auto it = adj.find(e);
        for (const auto& [other, rel, back] : it->second) {
            auto od = out.dist.find(other);
            if (od != out.dist.end() && od->second + 1 == d) {
                // `back` is relative to e; the stored dir is relative to the
                // parent -> child traversal.
                out.parents[e].insert({other, rel, back == 0 ? 1 : 0});
            }
        }
    }
    return out;
}

std::vector<EntityId> scan_path(const KnowledgeGraph& g, EntityId topic,
                                const std::vector<datagen::PathStep>& path) {
    std::set<EntityId> frontier{topic};
    for (const datagen::PathStep& step : path) {
        std::set<EntityId> next;
        for (const Triple& t : g.triples()) {
            if (g.relation_name(t.relation) != step.relation) continue;
            if (step.forward && frontier.count(t.subject)) next.insert(t.object);
            if (!step.forward && frontier.count(t.object)) next.insert(t.subject);
        }
        frontier = std::move(next);
    }
    frontier.erase(topic);
    return {frontier.begin(), frontier.end()};
}

std::vector<double> softmax_naive(std::span<const double> logits) {
    double total = 0.0;
    for (double z : logits) total += std::exp(z);
    std::vector<double> out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) out[i] = std::exp(logits[i]) / total;
    return out;
}

FdReport finite_difference_check(ParamStore& params, const GradientSet& analytic,
                                 const std::function<double()>& loss, double step,
                                 double denom_floor) {
    FdReport report;
    for (std::size_t b = 0; b < params.count(); ++b) {
        Matrix& block = params.block(b);
        for (std::size_t i = 0; i < block.data.size(); ++i) {
            double saved = block.data[i];
            block.data[i] = saved + step;
            double up = loss();
            block.data[i] = saved - step;
            double down = loss();
            block.data[i] = saved;
            double numeric = (up - down) / (2.0 * step);
            double a = analytic.blocks[b].data[i];
            double denom = std::max({std::abs(a), std::abs(numeric), denom_floor});
            double rel = std::abs(a - numeric) / denom;
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst_block = params.name(b);
                report.worst_offset = i;
                report.analytic = a;
                report.numeric = numeric;
            }
        }
    }
    return report;
}

KnowledgeGraph random_graph(std::uint64_t seed, std::size_t max_nodes,
                            double avg_degree, std::size_t n_relations) {
    Rng rng = make_rng(seed, "random_graph");
    std::size_t n = 2 + rng.index(std::max<std::size_t>(1, max_nodes - 1));
    KnowledgeGraph g;
    for (std::size_t i = 0; i < n; ++i) g.add_entity("e" + std::to_string(i));

    std::size_t target = std::max<std::size_t>(
        1, static_cast<std::size_t>(static_cast<double>(n) * avg_degree / 2.0));
    std::set<std::tuple<std::size_t, EntityId, EntityId>> seen;
    std::size_t attempts = 0;
    while (seen.size() < target && attempts < target * 20) {
        ++attempts;
        EntityId s = static_cast<EntityId>(rng.index(n));
        EntityId o = static_cast<EntityId>(rng.index(n));
        if (s == o) continue;
        std::size_t rel_tag = rng.index(n_relations);
        if (!seen.insert({rel_tag, s, o}).second) continue;
        // register relations at first use; ids then match a reload
        g.add_triple(s, g.add_relation("r" + std::to_string(rel_tag)), o);
    }
    if (g.num_triples() == 0) g.add_triple(0, g.add_relation("r0"), 1);
    g.finalize();
    return g;
}

namespace {

// Small fixture shared by the gradient / ELBO / estimator suites.
struct Toy {
    KnowledgeGraph kg;
    Vocabulary vocab;
    std::vector<std::uint32_t> tokens;
};

Toy make_toy() {
    Toy toy;
    auto& g = toy.kg;
    EntityId a = g.add_entity("alpha beta");
    EntityId b = g.add_entity("gamma");
    EntityId c = g.add_entity("delta beta");
    EntityId d = g.add_entity("epsilon");
    EntityId e = g.add_entity("zeta eta");
    EntityId f = g.add_entity("theta");
    RelationId r0 = g.add_relation("r0");
    RelationId r1 = g.add_relation("r1");
    g.add_triple(a, r0, b);
    g.add_triple(a, r1, c);
    g.add_triple(b, r0, d);
    g.add_triple(c, r0, d);
    g.add_triple(c, r1, e);
    g.add_triple(e, r1, f);
    g.add_triple(a, r0, e);
    g.finalize();

    std::vector<std::vector<std::string>> streams;
    for (EntityId i = 0; i < g.num_entities(); ++i)
        streams.push_back(g.entity(i).name_tokens);
    streams.push_back({"who", "made", "thing", "which"});
    toy.vocab = build_vocab(streams);
    toy.tokens = toy.vocab.map(std::vector<std::string>{"who", "made", "beta", "thing"});
    return toy;
}

ModelConfig toy_model_config() {
    ModelConfig cfg;
    cfg.dim = 4;
    cfg.init_range = 0.3;  // keeps ReLU pre-activations away from the kink
    return cfg;
}

std::string format_double(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

}  // namespace

SuiteResult suite_scope_bfs(std::uint64_t seed) {
    SuiteResult result{"scope-vs-bfs", true, ""};
    Rng rng = make_rng(seed, "suite/scope");
    for (int trial = 0; trial < 100 && result.pass; ++trial) {
        KnowledgeGraph g = random_graph(derive_seed(seed, "g" + std::to_string(trial)),
                                        200, 3.0, 3);
        EntityId src = static_cast<EntityId>(rng.index(g.num_entities()));
        std::uint32_t hops = 1 + static_cast<std::uint32_t>(rng.index(3));
        Scope scope = compute_scope(g, src, hops);
        BfsScope ref = bfs_scope(g, src, hops);

        if (scope.size() != ref.dist.size()) {
            result.pass = false;
            result.detail = "node count mismatch";
            break;
        }
        std::size_t ref_edges = 0;
        for (const auto& [e, ps] : ref.parents) ref_edges += ps.size();
        if (scope.total_parent_edges() != ref_edges) {
            result.pass = false;
            result.detail = "parent edge count mismatch";
            break;
        }
        for (const ScopeNode& node : scope.nodes()) {
            auto it = ref.dist.find(node.entity);
            if (it == ref.dist.end() || it->second != node.hop) {
                result.pass = false;
                result.detail = "hop mismatch";
                break;
            }
            std::set<std::tuple<EntityId, RelationId, int>> got;
            for (const ParentEdge& p : node.parents)
                got.insert({scope.node(p.parent_pos).entity, p.relation,
                            p.dir == EdgeDir::Forward ? 0 : 1});
            auto want = ref.parents.find(node.entity);
            if (node.hop == 0) {
                if (!got.empty()) {
                    result.pass = false;
                    result.detail = "source has parents";
                }
            } else if (want == ref.parents.end() || want->second != got) {
                result.pass = false;
                result.detail = "parent set mismatch for entity " +
                                std::to_string(node.entity);
            }
            if (!result.pass) break;
        }
    }

    // Symmetry: y in scope_T(a) iff a in scope_T(y).
    if (result.pass) {
        KnowledgeGraph g = random_graph(derive_seed(seed, "sym"), 120, 3.0, 2);
        for (int probe = 0; probe < 10000; ++probe) {
            EntityId y = static_cast<EntityId>(rng.index(g.num_entities()));
            EntityId a = static_cast<EntityId>(rng.index(g.num_entities()));
            std::uint32_t hops = 1 + static_cast<std::uint32_t>(rng.index(3));
            bool fwd = compute_scope(g, y, hops).contains(a);
            bool bwd = compute_scope(g, a, hops).contains(y);
            if (fwd != bwd) {
                result.pass = false;
                result.detail = "symmetry violated";
                break;
            }
        }
    }
    if (result.pass) result.detail = "100 graphs exact, 10^4 symmetry probes";
    return result;
}

SuiteResult suite_gradient_check(std::uint64_t seed) {
    SuiteResult result{"gradient-vs-finite-difference", true, ""};
    Toy toy = make_toy();
    VrnModel model(toy.kg, toy.vocab, toy_model_config(), derive_seed(seed, "grad"));
    const auto& theta = model.recognition_reasoning();
    const double step = 1e-5;
    const double tolerance = 1e-4;
    double worst = 0.0;

    auto check = [&](const char* what, const GradientSet& analytic,
                     const std::function<double()>& loss) {
        FdReport fd = finite_difference_check(model.params(), analytic, loss, step);
        worst = std::max(worst, fd.max_rel_error);
        if (fd.max_rel_error >= tolerance) {
            result.pass = false;
            result.detail = std::string(what) + ": rel error " +
                            format_double(fd.max_rel_error) + " at " + fd.worst_block;
        }
    };

    {  // recognition nll
        EntityId target = 2;
        GradientSet g(model.params());
        model.accum_topic_nll(theta, toy.tokens, target, 1.0, g);
        check("topic", g, [&] {
            return -model.topic_distribution(theta, toy.tokens).log_probs[target];
        });
    }
    {  // answer nll through the propagation
        Scope scope = compute_scope(toy.kg, 0, 2);
        std::uint32_t target_pos = static_cast<std::uint32_t>(scope.size() - 1);
        NodeEmbeddings emb = model.forward_propagate(theta, scope);
        GradientSet g(model.params());
        model.accum_answer_nll(theta, toy.tokens, scope, emb, target_pos, 1.0, g);
        check("answer", g, [&] {
            NodeEmbeddings e2 = model.forward_propagate(theta, scope);
            return -model.answer_distribution(theta, toy.tokens, scope, e2)
                        .log_probs[target_pos];
        });
    }
    {  // posterior nll
        EntityId answer = 3;
        auto post = model.posterior_distribution(toy.tokens, answer, 2);
        std::uint32_t target_pos = 0;
        GradientSet g(model.params());
        model.accum_posterior_nll(toy.tokens, post.scope, post.emb, target_pos, 1.0, g);
        check("posterior", g, [&] {
            auto p = model.posterior_distribution(toy.tokens, answer, 2);
            return -p.dist.log_probs[target_pos];
        });
    }
    {  // baseline square loss
        BaselineNet baseline(toy.kg.num_entities(), toy.vocab.size(), 6,
                             derive_seed(seed, "baseline"), 0.3);
        double target = 0.7;
        GradientSet g(baseline.params());
        baseline.accum_sq_loss(3, toy.tokens, target, 1.0, g);
        FdReport fd = finite_difference_check(
            baseline.params(), g,
            [&] {
                double r = baseline.predict(3, toy.tokens) - target;
                return r * r;
            },
            step);
        worst = std::max(worst, fd.max_rel_error);
        if (fd.max_rel_error >= tolerance) {
            result.pass = false;
            result.detail = "baseline: rel error " + format_double(fd.max_rel_error);
        }
    }
    if (result.pass)
        result.detail = "max rel error " + format_double(worst) + " over all families";
    return result;
}

SuiteResult suite_elbo_bound(std::uint64_t seed) {
    SuiteResult result{"elbo-bound", true, ""};
    Toy toy = make_toy();
    Rng rng = make_rng(seed, "suite/elbo");
    double worst_gap = -1e300;
    double worst_tight = 0.0;
    for (int draw = 0; draw < 1000; ++draw) {
        VrnModel model(toy.kg, toy.vocab, toy_model_config(),
                       derive_seed(seed, "elbo" + std::to_string(draw)));
        EntityId answer = static_cast<EntityId>(rng.index(toy.kg.num_entities()));
        std::uint32_t hops = 1 + static_cast<std::uint32_t>(rng.index(2));

        InstanceEnumeration inst = enumerate_instance(model, toy.tokens, answer, hops);
        double bound = elbo_with(inst, inst.q);
        double marginal = marginal_loglik(model, toy.tokens, answer, hops);
        worst_gap = std::max(worst_gap, bound - marginal);
        if (bound > marginal + 1e-9) {
            result.pass = false;
            result.detail = "bound violated by " + format_double(bound - marginal);
            break;
        }
        double tight = std::abs(elbo_with(inst, exact_posterior(inst)) - marginal);
        worst_tight = std::max(worst_tight, tight);
        if (tight > 1e-9) {
            result.pass = false;
            result.detail = "posterior tightness off by " + format_double(tight);
            break;
        }
    }
    if (result.pass)
        result.detail = "1000 draws; worst slack " + format_double(-worst_gap) +
                        ", worst tightness " + format_double(worst_tight);
    return result;
}

SuiteResult suite_reinforce_unbiased(std::uint64_t seed) {
    SuiteResult result{"reinforce-unbiased", true, ""};
    Toy toy = make_toy();
    VrnModel model(toy.kg, toy.vocab, toy_model_config(), derive_seed(seed, "mc"));
    EntityId answer = 3;
    std::uint32_t hops = 2;
    InstanceEnumeration inst = enumerate_instance(model, toy.tokens, answer, hops);
    std::size_t n = inst.scope.size();
    if (n > 10) {
        return {result.name, false, "toy scope larger than 10 entities"};
    }

    LearningSignalState state;
    state.mu = 0.1;
    state.sigma = 1.3;
    const double baseline_value = 0.25;

    // Per-candidate score-function term v_y * s_y, where v_y is the
    // gradient of log Q at y.
    std::vector<GradientSet> v(n, GradientSet(model.params()));
    std::vector<double> s(n);
    for (std::size_t y = 0; y < n; ++y) {
        GradientSet nll(model.params());
        model.accum_posterior_nll(toy.tokens, inst.scope, inst.emb,
                                  static_cast<std::uint32_t>(y), 1.0, nll);
        v[y].add_scaled(nll, -1.0);  // grad log Q = -grad nll
        double a_signal = inst.log_p1[y] + inst.log_p2[y] - inst.q.log_probs[y];
        s[y] = state.normalize(a_signal) - baseline_value;
    }

    // Enumerated identity: sum_y Q(y) grad log Q(y) = 0.
    GradientSet identity(model.params());
    GradientSet exact(model.params());
    for (std::size_t y = 0; y < n; ++y) {
        identity.add_scaled(v[y], inst.q.probs[y]);
        exact.add_scaled(v[y], inst.q.probs[y] * s[y]);
    }
    double identity_max = 0.0;
    for (const Matrix& b : identity.blocks)
        for (double x : b.data) identity_max = std::max(identity_max, std::abs(x));
    if (identity_max > 1e-9) {
        return {result.name, false,
                "score identity off by " + format_double(identity_max)};
    }

    // Monte Carlo over 10^5 draws, pooled by candidate.
    const std::size_t n_samples = 100000;
    Rng rng = make_rng(seed, "suite/mc");
    std::vector<std::size_t> counts(n, 0);
    for (std::size_t i = 0; i < n_samples; ++i) ++counts[inst.q.sample(rng)];

    std::size_t violations = 0;
    double worst_sigmas = 0.0;
    for (std::size_t b = 0; b < exact.blocks.size() && result.pass; ++b) {
        for (std::size_t i = 0; i < exact.blocks[b].data.size(); ++i) {
            double mean = 0.0;
            for (std::size_t y = 0; y < n; ++y)
                mean += static_cast<double>(counts[y]) * v[y].blocks[b].data[i] * s[y];
            mean /= static_cast<double>(n_samples);
            double var = 0.0;
            for (std::size_t y = 0; y < n; ++y) {
                double diff = v[y].blocks[b].data[i] * s[y] - mean;
                var += static_cast<double>(counts[y]) * diff * diff;
            }
            var /= static_cast<double>(n_samples - 1);
            double se = std::sqrt(var / static_cast<double>(n_samples));
            double err = std::abs(mean - exact.blocks[b].data[i]);
            if (se < 1e-12) {
                if (err > 1e-9) ++violations;
            } else {
                worst_sigmas = std::max(worst_sigmas, err / se);
                if (err > 3.0 * se) ++violations;
            }
        }
    }
    if (violations > 0) {
        result.pass = false;
        result.detail = std::to_string(violations) + " components beyond 3 SE (worst " +
                        format_double(worst_sigmas) + ")";
    } else {
        result.detail = "identity max " + format_double(identity_max) + "; worst z " +
                        format_double(worst_sigmas);
    }
    return result;
}

SuiteResult suite_dataset_oracle(std::uint64_t seed) {
    SuiteResult result{"dataset-oracle", true, ""};
    datagen::KGGenConfig kg_cfg;
    kg_cfg.movies = 24;
    kg_cfg.actors = 26;
    kg_cfg.directors = 12;
    kg_cfg.writers = 12;
    kg_cfg.genres = 8;
    kg_cfg.languages = 6;
    kg_cfg.years = 15;
    kg_cfg.seed = derive_seed(seed, "dataset");
    KnowledgeGraph g = datagen::generate_kg(kg_cfg);

    std::vector<std::string> names;
    for (EntityId e = 0; e < g.num_entities(); ++e) names.push_back(g.entity(e).name);

    for (std::uint32_t hop = 1; hop <= 3 && result.pass; ++hop) {
        datagen::QuestionGenConfig q_cfg;
        q_cfg.hop = hop;
        q_cfg.count = 150;
        q_cfg.label_fraction = 1.0;
        q_cfg.seed = derive_seed(seed, "q" + std::to_string(hop));
        std::vector<QAItem> items = datagen::generate_questions(g, q_cfg);
        for (const QAItem& item : items) {
            std::vector<EntityId> ref =
                scan_path(g, *item.topic, datagen::question_type(item.type_id).path);
            if (ref != item.answers) {
                result.pass = false;
                result.detail = "answer set mismatch vs triple scan";
                break;
            }
            datagen::LabelResult lr = datagen::label_entities(item.text, names);
            if (lr.spans.size() != 1 || lr.matched_names[0] != *item.topic ||
                static_cast<std::int32_t>(lr.spans[0].first) != item.span_begin) {
                result.pass = false;
                result.detail = "label round trip failed: " + item.text;
                break;
            }
        }
    }

    // Coverage: one question from every registered path type.
    if (result.pass) {
        for (const datagen::QuestionType& t : datagen::question_types()) {
            datagen::QuestionGenConfig q_cfg;
            q_cfg.hop = t.hops;
            q_cfg.count = 1;
            q_cfg.type_ids = {t.id};
            q_cfg.seed = derive_seed(seed, "cover" + std::to_string(t.id));
            std::vector<QAItem> one = datagen::generate_questions(g, q_cfg);
            if (one.size() != 1 || one[0].type_id != t.id) {
                result.pass = false;
                result.detail = "type not instantiable: " + t.name;
                break;
            }
        }
    }
    if (result.pass) {
        std::size_t two_hop = 0, three_hop = 0;
        for (const datagen::QuestionType& t : datagen::question_types()) {
            if (t.hops == 2) ++two_hop;
            if (t.hops == 3) ++three_hop;
        }
        if (two_hop != 21 || three_hop != 15) {
            result.pass = false;
            result.detail = "registry has " + std::to_string(two_hop) + " two-hop and " +
                            std::to_string(three_hop) + " three-hop types";
        }
    }
    if (result.pass) result.detail = "450 items checked; all 45 types instantiated";
    return result;
}

SuiteResult suite_propagation_linearity(std::uint64_t seed) {
    SuiteResult result{"propagation-linearity", true, ""};
    auto layered = [&](std::size_t bipartite_edges, std::uint64_t s) {
        KnowledgeGraph g;
        const std::size_t l1 = 50, l2 = 200;
        EntityId src = g.add_entity("s");
        for (std::size_t i = 0; i < l1; ++i) g.add_entity("a" + std::to_string(i));
        for (std::size_t i = 0; i < l2; ++i) g.add_entity("b" + std::to_string(i));
        RelationId r0 = g.add_relation("r0");
        RelationId r1 = g.add_relation("r1");
        for (std::size_t i = 0; i < l1; ++i)
            g.add_triple(src, r0, static_cast<EntityId>(1 + i));
        std::vector<std::size_t> pairs(l1 * l2);
        for (std::size_t i = 0; i < pairs.size(); ++i) pairs[i] = i;
        Rng rng = make_rng(s, "layered");
        rng.shuffle(pairs);
        for (std::size_t k = 0; k < bipartite_edges && k < pairs.size(); ++k) {
            EntityId a = static_cast<EntityId>(1 + pairs[k] / l2);
            EntityId b = static_cast<EntityId>(1 + l1 + pairs[k] % l2);
            g.add_triple(a, r1, b);
        }
        g.finalize();
        return g;
    };

    const std::size_t base_edges = 4000;
    KnowledgeGraph g1 = layered(base_edges, derive_seed(seed, "lin1"));
    KnowledgeGraph g2 = layered(2 * base_edges, derive_seed(seed, "lin2"));
    Vocabulary vocab = build_vocab({{"q"}});
    ModelConfig cfg;
    cfg.dim = 64;
    VrnModel m1(g1, vocab, cfg, seed);
    VrnModel m2(g2, vocab, cfg, seed);
    const auto& side1 = m1.recognition_reasoning();
    const auto& side2 = m2.recognition_reasoning();

    auto time_propagate = [](const VrnModel& m, const VrnModel::Side& side,
                             const Scope& scope) {
        auto start = std::chrono::steady_clock::now();
        for (int rep = 0; rep < 3; ++rep) {
            NodeEmbeddings emb = m.forward_propagate(side, scope);
            if (emb.g.empty()) throw Error("empty embedding");
        }
        auto end = std::chrono::steady_clock::now();
        return std::chrono::duration<double>(end - start).count();
    };
    auto time_scope = [](const KnowledgeGraph& g) {
        auto start = std::chrono::steady_clock::now();
        for (int rep = 0; rep < 3; ++rep) {
            Scope s = compute_scope(g, 0, 2);
            if (s.size() == 0) throw Error("empty scope");
        }
        auto end = std::chrono::steady_clock::now();
        return std::chrono::duration<double>(end - start).count();
    };

    Scope s1 = compute_scope(g1, 0, 2);
    Scope s2 = compute_scope(g2, 0, 2);
    if (s1.size() != s2.size()) {
        return {result.name, false, "node counts differ between graphs"};
    }

    std::vector<double> prop_ratios, scope_ratios;
    // Warm-up.
    time_propagate(m1, side1, s1);
    time_propagate(m2, side2, s2);
    for (int trial = 0; trial < 5; ++trial) {
        double t1 = time_propagate(m1, side1, s1);
        double t2 = time_propagate(m2, side2, s2);
        prop_ratios.push_back(t2 / t1);
        double c1 = time_scope(g1);
        double c2 = time_scope(g2);
        scope_ratios.push_back(c2 / c1);
    }
    std::sort(prop_ratios.begin(), prop_ratios.end());
    std::sort(scope_ratios.begin(), scope_ratios.end());
    double prop_median = prop_ratios[2];
    double scope_median = scope_ratios[2];
    if (prop_median > 2.5) {
        result.pass = false;
        result.detail = "propagation ratio " + format_double(prop_median);
    } else if (scope_median > 2.5) {
        result.pass = false;
        result.detail = "scope ratio " + format_double(scope_median);
    } else {
        result.detail = "2x edges -> propagate x" + format_double(prop_median) +
                        ", scope x" + format_double(scope_median);
    }
    return result;
}

std::vector<SuiteResult> run_all_suites(std::uint64_t seed) {
    return {suite_scope_bfs(seed),      suite_gradient_check(seed),
            suite_elbo_bound(seed),     suite_reinforce_unbiased(seed),
            suite_dataset_oracle(seed), suite_propagation_linearity(seed)};
}

}  // namespace vrn::oracle
