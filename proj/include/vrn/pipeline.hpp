#pragma once
// Experiment orchestration: build a dataset (graph + vocabulary + splits),
// run the two training phases, evaluate, and move everything through the
// on-disk layout the CLI uses. The acceptance suite drives these same
// functions in-process.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "vrn/datagen.hpp"
#include "vrn/eval.hpp"
#include "vrn/infer.hpp"
#include "vrn/model.hpp"
#include "vrn/train.hpp"

namespace vrn::pipeline {

struct DataConfig {
    datagen::KGGenConfig kg;
    std::uint32_t hops = 1;
    std::size_t n_train = 2000;
    std::size_t n_validation = 300;
    std::size_t n_test = 500;
    double label_fraction = 1.0;  // applied to the train split only
    std::size_t max_answers = 50;
    datagen::NoiseConfig noise;  // zero probabilities = off
    std::uint64_t seed = 1;
};

struct Dataset {
    KnowledgeGraph kg;
    Vocabulary vocab;  // entity name tokens, then template words
    std::vector<QAItem> train;
    std::vector<QAItem> validation;  // fully labeled, for probes/metrics
    std::vector<QAItem> test;        // fully labeled
    datagen::OverlapReport validation_overlap;
    datagen::OverlapReport test_overlap;
};

Dataset build_dataset(const DataConfig& cfg);

// Vocabulary used everywhere: entity name tokens in entity-id order, then
// the static template vocabulary.
Vocabulary dataset_vocabulary(const KnowledgeGraph& kg);

struct TrainLogRow {
    std::string phase;  // "pretrain" or "joint"
    std::uint64_t step = 0;
    double loss_theta1 = 0.0;
    double loss_theta2 = 0.0;
    double loss_psi = 0.0;
    double loss_baseline = 0.0;
    double loss_total = 0.0;
    double mean_signal = 0.0;
    double elbo_probe = 0.0;
    double entity_accuracy_probe = 0.0;
};

struct TrainedVrn {
    std::unique_ptr<VrnModel> model;
    std::unique_ptr<BaselineNet> baseline;
    LearningSignalState signal;
    std::uint64_t steps = 0;
    std::vector<TrainLogRow> log;
};

// Pretrain on labeled train items, then run `cfg.epochs` joint epochs over
// the full train split. checkpoint_dir, when nonempty, receives periodic
// checkpoint_<step>.bin files.
TrainedVrn train_vrn(const Dataset& data, const TrainConfig& cfg,
                     const ModelConfig& model_cfg,
                     const std::string& checkpoint_dir = "");

struct EvalRow {
    std::string dataset;
    std::uint32_t hop = 1;
    std::string regime;
    double hits_at_1 = 0.0;
    double entity_accuracy = 0.0;
};

double vrn_hits_at_1(const VrnModel& model, std::span<const QAItem> items,
                     const InferenceConfig& cfg, std::size_t workers = 1);

void write_trainlog(const std::vector<TrainLogRow>& rows, const std::string& path);
void append_metrics(const std::vector<EvalRow>& rows, const std::string& path);

// On-disk dataset layout under a directory:
//   kg.tsv, entities.txt, vocab.txt,
//   qa_{train,valid,test}_<hop>hop.txt (+ qa_types_* sidecars)
void save_dataset(const Dataset& data, const std::string& dir);
Dataset load_dataset(const std::string& dir, std::uint32_t hop);

void save_vocab(const Vocabulary& vocab, const std::string& path);
Vocabulary load_vocab(const std::string& path);

}  // namespace vrn::pipeline
