#pragma once
// Run configuration: one flat key=value file, '#' comments, unknown keys
// rejected by name. CLI flags override file values.

#include <cstdint>
#include <string>

#include "vrn/datagen.hpp"
#include "vrn/infer.hpp"
#include "vrn/model.hpp"
#include "vrn/pipeline.hpp"
#include "vrn/train.hpp"

namespace vrn {

// Configuration problems exit with status 2 at the CLI.
class ConfigError : public Error {
public:
    using Error::Error;
};

struct RunConfig {
    std::uint64_t seed = 1;
    std::uint32_t hops = 1;
    std::size_t workers = 1;

    datagen::KGGenConfig kg;
    datagen::NoiseConfig noise;
    std::size_t n_train = 2000;
    std::size_t n_validation = 300;
    std::size_t n_test = 500;
    double label_fraction = 1.0;
    std::size_t max_answers = 50;

    ModelConfig model;
    TrainConfig train;
    InferenceConfig infer;
    SupEmbConfig supemb;

    // Derived views with shared fields (seed, hops, ...) filled in.
    pipeline::DataConfig data_config() const;
    TrainConfig train_config() const;
    InferenceConfig infer_config() const;
    SupEmbConfig supemb_config() const;
};

// Parses `path` into cfg. Throws Error("unknown config key: <key>") on an
// unrecognized key and on malformed values.
void apply_config_file(RunConfig& cfg, const std::string& path);
void apply_config_entry(RunConfig& cfg, const std::string& key,
                        const std::string& value);
void validate(const RunConfig& cfg);

}  // namespace vrn
