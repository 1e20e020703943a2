#pragma once
// Independent reference implementations used to check the main code paths:
// a plain BFS over raw triples for scopes, set-scan path execution for the
// generator, naive softmax, central finite differences for gradients, and
// full enumeration for the score-function estimator. Property suites built
// from these back both the test binaries and the `oracle-check` CLI
// subcommand.

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "vrn/datagen.hpp"
#include "vrn/kg.hpp"
#include "vrn/model.hpp"
#include "vrn/train.hpp"

namespace vrn::oracle {

// BFS over adjacency rebuilt from the raw triple list (no reuse of the
// graph's neighbor index).
struct BfsScope {
    std::map<EntityId, std::uint32_t> dist;  // entities with dist <= T
    // parent edges per non-source entity: (parent, relation, dir) with dir
    // = 0 when the triple runs parent -> child.
    std::map<EntityId, std::set<std::tuple<EntityId, RelationId, int>>> parents;
};
BfsScope bfs_scope(const KnowledgeGraph& g, EntityId source, std::uint32_t max_hops);

// Relation-path execution by scanning the triple list per step; topic
// excluded from the result.
std::vector<EntityId> scan_path(const KnowledgeGraph& g, EntityId topic,
                                const std::vector<datagen::PathStep>& path);

std::vector<double> softmax_naive(std::span<const double> logits);

struct FdReport {
    double max_rel_error = 0.0;
    std::string worst_block;
    std::size_t worst_offset = 0;
    double analytic = 0.0;
    double numeric = 0.0;
};
// Central differences of `loss` w.r.t. every element of `params`, compared
// against `analytic` elementwise. Relative error uses
// |a - n| / max(|a|, |n|, denom_floor).
FdReport finite_difference_check(ParamStore& params, const GradientSet& analytic,
                                 const std::function<double()>& loss, double step,
                                 double denom_floor = 1e-6);

// Random multigraph for property tests: entities "e0".."eN", relations
// "r0".."rK". Guaranteed nonempty and free of duplicate triples.
KnowledgeGraph random_graph(std::uint64_t seed, std::size_t max_nodes,
                            double avg_degree = 3.0, std::size_t n_relations = 3);

struct SuiteResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

SuiteResult suite_scope_bfs(std::uint64_t seed);           // membership/hops/parents + symmetry
SuiteResult suite_gradient_check(std::uint64_t seed);      // four loss families vs FD
SuiteResult suite_elbo_bound(std::uint64_t seed);          // bound + tightness at the posterior
SuiteResult suite_reinforce_unbiased(std::uint64_t seed);  // MC vs enumerated gradient
SuiteResult suite_dataset_oracle(std::uint64_t seed);      // answers/labels/coverage
SuiteResult suite_propagation_linearity(std::uint64_t seed);

std::vector<SuiteResult> run_all_suites(std::uint64_t seed);

}  // namespace vrn::oracle
