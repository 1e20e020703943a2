#pragma once
// End-to-end training: supervised pretraining from the labeled slice,
// the joint loop (sample topic candidates from the posterior, score them,
// normalize the learning signal, fit the baseline, apply REINFORCE and
// likelihood gradients), plus the exact enumeration quantities (ELBO,
// marginal log-likelihood, exact posterior) used for evaluation and
// checks.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "vrn/model.hpp"
#include "vrn/qa.hpp"

namespace vrn {

// Moving statistics of the learning signal. sigma is floored so
// normalization never divides by a vanishing scale.
struct LearningSignalState {
    double mu = 0.0;
    double sigma = 1.0;
    double decay = 0.9;
    double sigma_floor = 1e-4;

    // EMA toward the batch mean / population std, then floor.
    void update(std::span<const double> batch);
    double normalize(double a) const { return (a - mu) / sigma; }
};

// normalized = (a - mu~) / sigma~ for each entry, using the post-update
// state.
std::vector<double> normalize_signal(LearningSignalState& state,
                                     std::span<const double> batch);

// Two affine layers with tanh between. Input is the concatenation of a
// one-hot answer entity and the question's token count vector; both are
// consumed sparsely.
class BaselineNet {
public:
    BaselineNet(std::size_t n_entities, std::size_t vocab_size, std::size_t hidden,
                std::uint64_t seed, double init_range = 0.08);

    double predict(EntityId answer, std::span<const std::uint32_t> tokens) const;
    // One SGD step on (predict - target)^2; returns the pre-update
    // prediction.
    double fit_step(EntityId answer, std::span<const std::uint32_t> tokens,
                    double target, double lr);
    // Gradient of the square loss into `grads` (shape mirror of params()).
    double accum_sq_loss(EntityId answer, std::span<const std::uint32_t> tokens,
                         double target, double scale, GradientSet& grads) const;

    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

private:
    std::vector<std::pair<std::uint32_t, double>> count_tokens(
        std::span<const std::uint32_t> tokens) const;
    double forward(EntityId answer,
                   const std::vector<std::pair<std::uint32_t, double>>& counts,
                   std::vector<double>* hidden_out) const;

    std::size_t n_entities_;
    std::size_t vocab_size_;
    std::size_t hidden_;
    ParamStore params_;
    std::size_t w1_, b1_, w2_, b2_;
};

struct TrainConfig {
    double lr = 0.05;
    double baseline_lr = 0.002;  // the shared step size is tuned for the
                                // embedding tables; the baseline fit keeps
                                // its own
    std::uint32_t samples = 8;   // posterior samples per instance
    std::uint32_t batch = 16;
    std::uint32_t epochs = 10;           // joint epochs
    std::uint32_t pretrain_epochs = 10;
    std::uint32_t hops = 1;
    double label_fraction = 0.05;
    std::uint64_t seed = 1;
    double decay = 0.9;
    double sigma_floor = 1e-4;
    std::uint32_t baseline_hidden = 64;
    std::uint32_t checkpoint_every = 0;  // steps; 0 = only final
    std::uint32_t probe_every = 25;      // steps between probe evaluations
    std::uint32_t probe_size = 64;       // probe items for ELBO / accuracy
};

// log P1(y|q) + log P2(a|y,q) - log Q(y|q,a). Requires y in
// scope(a, hops); a is then in scope(y, hops) by symmetry.
double learning_signal(const VrnModel& m, std::span<const std::uint32_t> tokens,
                       EntityId answer, EntityId y, std::uint32_t hops);

// Per-candidate terms over scope(answer, hops): the posterior, and
// log P1 / log P2 for every node. Everything downstream (ELBO, marginal,
// exact posterior, enumerated gradients) reads from this.
struct InstanceEnumeration {
    Scope scope;
    NodeEmbeddings emb;       // posterior-side embeddings on scope
    Distribution q;           // posterior over scope nodes
    std::vector<double> log_p1;  // per scope node
    std::vector<double> log_p2;  // per scope node
};
InstanceEnumeration enumerate_instance(const VrnModel& m,
                                       std::span<const std::uint32_t> tokens,
                                       EntityId answer, std::uint32_t hops);

double elbo(const VrnModel& m, std::span<const std::uint32_t> tokens, EntityId answer,
            std::uint32_t hops);
// Same expectation with an explicit distribution over the scope nodes
// (support must match scope node order).
double elbo_with(const InstanceEnumeration& inst, const Distribution& q);

// log sum_y P1(y|q) P2(a|y,q); terms with a outside scope(y, hops) are
// zero.
double marginal_loglik(const VrnModel& m, std::span<const std::uint32_t> tokens,
                       EntityId answer, std::uint32_t hops);

// P(y|q,a) over scope nodes, by enumeration.
Distribution exact_posterior(const InstanceEnumeration& inst);

struct StepDiagnostics {
    double loss_theta1 = 0.0;
    double loss_theta2 = 0.0;
    double loss_psi = 0.0;       // REINFORCE surrogate
    double loss_baseline = 0.0;
    double mean_signal = 0.0;    // Monte Carlo ELBO estimate
};

// One optimization step over a batch of (question, answer) instances.
// Items supply tokens and answers; one gold answer is drawn per item.
StepDiagnostics reinforce_step(VrnModel& m, BaselineNet& baseline,
                               LearningSignalState& state,
                               std::span<const QAItem> batch, const TrainConfig& cfg,
                               Rng& rng, GradientSet& scratch);

// Supervised phase on labeled items: recognition cross-entropy for both
// the recognition side and the posterior's recognition part, and answer
// cross-entropy through the labeled topic's scope.
struct PretrainStats {
    double loss_recognition = 0.0;
    double loss_answer = 0.0;
    std::size_t steps = 0;
};
PretrainStats pretrain(VrnModel& m, std::span<const QAItem> labeled,
                       const TrainConfig& cfg,
                       const std::function<void(std::size_t, const PretrainStats&)>&
                           epoch_callback = nullptr);

}  // namespace vrn
