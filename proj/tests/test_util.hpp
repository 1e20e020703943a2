#pragma once
// Shared fixtures for the unit tests.

#include <sstream>
#include <string>
#include <vector>

#include "vrn/kg.hpp"
#include "vrn/model.hpp"

namespace test_util {

// Six entities, two relations, a diamond plus a tail:
//   a -r0-> b, a -r1-> c, b -r0-> d, c -r0-> d, c -r1-> e, e -r1-> f, a -r0-> e
inline vrn::KnowledgeGraph diamond_graph() {
    vrn::KnowledgeGraph g;
    auto a = g.add_entity("alpha beta");
    auto b = g.add_entity("gamma");
    auto c = g.add_entity("delta beta");
    auto d = g.add_entity("epsilon");
    auto e = g.add_entity("zeta eta");
    auto f = g.add_entity("theta");
    auto r0 = g.add_relation("r0");
    auto r1 = g.add_relation("r1");
    g.add_triple(a, r0, b);
    g.add_triple(a, r1, c);
    g.add_triple(b, r0, d);
    g.add_triple(c, r0, d);
    g.add_triple(c, r1, e);
    g.add_triple(e, r1, f);
    g.add_triple(a, r0, e);
    g.finalize();
    return g;
}

inline vrn::Vocabulary diamond_vocab(const vrn::KnowledgeGraph& g) {
    std::vector<std::vector<std::string>> streams;
    for (vrn::EntityId e = 0; e < g.num_entities(); ++e)
        streams.push_back(g.entity(e).name_tokens);
    streams.push_back({"who", "made", "thing", "which"});
    return vrn::build_vocab(streams);
}

inline std::vector<std::uint32_t> diamond_tokens(const vrn::Vocabulary& v) {
    return v.map(std::vector<std::string>{"who", "made", "beta", "thing"});
}

inline vrn::ModelConfig small_model_config(std::uint32_t dim = 4) {
    vrn::ModelConfig cfg;
    cfg.dim = dim;
    cfg.init_range = 0.3;
    return cfg;
}

}  // namespace test_util
