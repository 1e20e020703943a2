#pragma once
// Evaluation metrics and the supervised-embedding baseline: score(q, a) =
// mean-BOW(q) . row(a) over all entities, trained with softmax
// cross-entropy.

#include <cstdint>
#include <functional>
#include <span>

#include "vrn/model.hpp"
#include "vrn/qa.hpp"

namespace vrn {

struct Metrics {
    double hits_at_1 = 0.0;
    double entity_accuracy = 0.0;
    std::size_t count = 0;
};

// Fraction of items whose predicted entity is in the gold answer set.
// `workers` > 1 evaluates items in parallel.
double hits_at_1(const std::function<EntityId(const QAItem&)>& predict,
                 std::span<const QAItem> items, std::size_t workers = 1);

// Fraction of labeled items whose recognition argmax equals the label.
double entity_accuracy(const VrnModel& m, std::span<const QAItem> items,
                       std::size_t workers = 1);

struct SupEmbConfig {
    std::uint32_t dim = 64;
    std::uint32_t epochs = 30;
    std::uint32_t batch = 16;
    double lr = 0.1;
    double init_range = 0.08;
    std::uint64_t seed = 1;
};

class SupervisedEmbedding {
public:
    SupervisedEmbedding(const KnowledgeGraph& kg, const Vocabulary& vocab,
                        SupEmbConfig cfg);

    void train(std::span<const QAItem> items);
    EntityId predict(std::span<const std::uint32_t> tokens) const;
    EntityId predict_item(const QAItem& item) const;

    ParamStore& params() { return params_; }

private:
    const KnowledgeGraph* kg_;
    const Vocabulary* vocab_;
    SupEmbConfig cfg_;
    ParamStore params_;
    std::size_t tokens_, entities_;
};

}  // namespace vrn
