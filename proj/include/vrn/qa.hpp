#pragma once
// Question-answer items and their on-disk format:
//   `question text with [entity] brackets<TAB>answer1|answer2|...`
// Unlabeled items carry no brackets. A sidecar file lists one question-type
// id per line.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vrn/kg.hpp"

namespace vrn {

struct QAItem {
    std::string text;                 // surface form without brackets
    std::vector<std::string> tokens;  // tokenize(text)
    std::optional<EntityId> topic;    // present iff labeled
    std::vector<EntityId> answers;    // nonempty, sorted, unique
    std::uint32_t hop = 1;
    std::uint32_t type_id = 0;
    // Token span of the topic mention. Populated by the generator (also
    // for unlabeled items, so noise can preserve entity tokens) and by the
    // parser when brackets are present; begin = -1 when unknown.
    std::int32_t span_begin = -1;
    std::int32_t span_len = 0;
};

void write_qa_file(const std::vector<QAItem>& items, const KnowledgeGraph& g,
                   std::ostream& qa_out, std::ostream& types_out);

std::vector<QAItem> read_qa_file(std::istream& qa_in, std::istream* types_in,
                                 const KnowledgeGraph& g, std::uint32_t default_hop);

// Hop count for a question-type id (generator's registry).
std::uint32_t question_type_hops(std::uint32_t type_id);

}  // namespace vrn
