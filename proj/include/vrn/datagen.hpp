#pragma once
// Synthetic movie-domain data: a generated knowledge graph over seven
// entity classes with six relation types, and templated 1/2/3-hop question
// sets with greedy entity labeling, controllable label fraction, and
// rule-based token noise. Everything is deterministic given the seed.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vrn/kg.hpp"
#include "vrn/qa.hpp"
#include "vrn/rng.hpp"

namespace vrn::datagen {

inline constexpr const char* kRelStarred = "starred_actors";
inline constexpr const char* kRelDirected = "directed_by";
inline constexpr const char* kRelWritten = "written_by";
inline constexpr const char* kRelGenre = "has_genre";
inline constexpr const char* kRelYear = "release_year";
inline constexpr const char* kRelLanguage = "in_language";

struct KGGenConfig {
    std::uint32_t movies = 60;
    std::uint32_t actors = 90;
    std::uint32_t directors = 35;
    std::uint32_t writers = 35;
    std::uint32_t genres = 14;
    std::uint32_t languages = 9;
    std::uint32_t years = 40;
    // Mean out-edges per movie and relation at density 1; release_year is
    // always exactly one edge per movie.
    double edge_density = 1.0;
    double starred_mean = 3.0;
    double directed_mean = 1.2;
    double written_mean = 1.5;
    double genre_mean = 1.5;
    double language_mean = 1.1;
    std::uint32_t name_token_pool = 400;
    std::uint64_t seed = 1;
};

struct NoiseConfig {
    double synonym_prob = 0.0;
    double drop_prob = 0.0;
    std::uint64_t seed = 1;
};

struct PathStep {
    std::string relation;
    bool forward;  // follow subject -> object
};

struct QuestionType {
    std::uint32_t id;
    std::string name;
    std::uint32_t hops;
    std::vector<PathStep> path;
    std::vector<std::string> patterns;  // 10 surface forms, '@' = entity slot
};

// Fixed registry: ids 0-8 one-hop, 9-29 two-hop, 30-44 three-hop.
const std::vector<QuestionType>& question_types();
const QuestionType& question_type(std::uint32_t id);
// All words used by surface patterns and the synonym table; disjoint from
// generated entity name tokens.
const std::vector<std::string>& template_vocabulary();

KnowledgeGraph generate_kg(const KGGenConfig& cfg);

// Entities reachable by executing `path` from `topic`, topic excluded.
std::vector<EntityId> execute_path(const KnowledgeGraph& g, EntityId topic,
                                   const std::vector<PathStep>& path);

struct LabelResult {
    std::string text;  // tokens re-joined, matched spans in square brackets
    std::vector<std::pair<std::size_t, std::size_t>> spans;  // token (begin, len)
    std::vector<std::size_t> matched_names;                  // index into `names`
    bool ambiguous = false;                                  // spans.size() > 1
};
// Greedy left-to-right longest match of entity names over the token stream.
LabelResult label_entities(const std::string& text,
                           std::span<const std::string> names);

struct QuestionGenConfig {
    std::uint32_t hop = 1;
    std::size_t count = 1000;
    double label_fraction = 1.0;
    std::size_t max_answers = 50;
    std::uint64_t seed = 1;
    std::vector<std::uint32_t> type_ids;  // empty = all types of this hop
};

// Items come out fully formed; exactly ceil(label_fraction * count) carry
// a topic label. Questions whose labeling round-trip is ambiguous are
// regenerated.
std::vector<QAItem> generate_questions(const KnowledgeGraph& g,
                                       const QuestionGenConfig& cfg);

// Removes topic labels from all but ceil(fraction * n) items, chosen by
// seeded sampling.
void strip_labels(std::vector<QAItem>& items, double fraction, std::uint64_t seed);

QAItem apply_noise(const QAItem& item, const NoiseConfig& cfg);

struct DatasetSplit {
    std::vector<QAItem> train;
    std::vector<QAItem> validation;
    std::vector<QAItem> test;
};

// ratios = (train, validation, test), must sum to 1. Validation and test
// take floor(ratio * n) items each; the remainder goes to train.
DatasetSplit split(std::vector<QAItem> items, const std::array<double, 3>& ratios,
                   std::uint64_t seed);

// Fractions of evaluation questions whose topic entity (or (topic, answer)
// pair) never occurs in the training slice. Requires labeled items.
struct OverlapReport {
    double new_entity_fraction = 0.0;
    double new_pair_fraction = 0.0;
};
OverlapReport overlap_report(std::span<const QAItem> train,
                             std::span<const QAItem> eval_items);

}  // namespace vrn::datagen
