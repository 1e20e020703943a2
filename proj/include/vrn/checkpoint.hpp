#pragma once
// Checkpoint file: versioned header (shapes, mode flags, signal state,
// step counter) followed by named parameter blocks as little-endian
// 64-bit floats. Round-trips are byte-identical.

#include <cstdint>
#include <iosfwd>
#include <string>

#include "vrn/model.hpp"
#include "vrn/train.hpp"

namespace vrn {

struct Checkpoint {
    std::uint32_t format_version = 1;
    ModelConfig model_config;
    std::uint32_t num_relations = 0;
    std::uint64_t num_entities = 0;
    std::uint64_t vocab_size = 0;
    std::uint64_t step = 0;
    std::uint32_t baseline_hidden = 0;  // 0: no baseline blocks stored
    LearningSignalState signal;
};

void save_checkpoint(std::ostream& out, const Checkpoint& header,
                     const ParamStore& model_params,
                     const ParamStore* baseline_params);

// Loads the header and fills pre-shaped stores; block names and shapes
// must match exactly. baseline_params may be null to skip baseline blocks.
Checkpoint load_checkpoint(std::istream& in, ParamStore& model_params,
                           ParamStore* baseline_params);

// Header only, for sizing the model before a full load.
Checkpoint read_checkpoint_header(const std::string& path);

void save_checkpoint_file(const std::string& path, const Checkpoint& header,
                          const ParamStore& model_params,
                          const ParamStore* baseline_params);
Checkpoint load_checkpoint_file(const std::string& path, ParamStore& model_params,
                                ParamStore* baseline_params);

}  // namespace vrn
