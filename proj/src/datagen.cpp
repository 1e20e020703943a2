#include "vrn/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace vrn::datagen {

namespace {

enum Role { kActor = 0, kDirector = 1, kWriter = 2 };
enum Final { kFActor = 0, kFDirector = 1, kFWriter = 2, kFGenre = 3, kFLanguage = 4, kFYear = 5 };

const char* role_relation(int role) {
    switch (role) {
        case kActor: return kRelStarred;
        case kDirector: return kRelDirected;
        default: return kRelWritten;
    }
}

const char* final_relation(int f) {
    switch (f) {
        case kFActor: return kRelStarred;
        case kFDirector: return kRelDirected;
        case kFWriter: return kRelWritten;
        case kFGenre: return kRelGenre;
        case kFLanguage: return kRelLanguage;
        default: return kRelYear;
    }
}

const char* role_word(int role) {
    switch (role) {
        case kActor: return "actor";
        case kDirector: return "director";
        default: return "writer";
    }
}

const char* final_word(int f) {
    switch (f) {
        case kFActor: return "actor";
        case kFDirector: return "director";
        case kFWriter: return "writer";
        case kFGenre: return "genre";
        case kFLanguage: return "language";
        default: return "year";
    }
}

using Bank = std::array<std::string, 10>;

// Question heads asking about a set of movies %D%.
Bank plural_head(int f) {
    switch (f) {
        case kFActor:
            return {"who acted in %D%",
                    "who starred in %D%",
                    "which actors appear in %D%",
                    "who are the actors in %D%",
                    "name the actors of %D%",
                    "who appeared in %D%",
                    "who performed in %D%",
                    "which people starred in %D%",
                    "who was in the cast of %D%",
                    "list the actors in %D%"};
        case kFDirector:
            return {"who directed %D%",
                    "who was the director of %D%",
                    "which directors made %D%",
                    "who are the directors of %D%",
                    "name the directors of %D%",
                    "which people directed %D%",
                    "who helmed %D%",
                    "which director worked on %D%",
                    "who directed the films among %D%",
                    "list the directors of %D%"};
        case kFWriter:
            return {"who wrote %D%",
                    "who was the writer of %D%",
                    "which writers wrote %D%",
                    "who are the screenwriters of %D%",
                    "name the writers of %D%",
                    "which people wrote %D%",
                    "who penned %D%",
                    "which screenwriter worked on %D%",
                    "who did the screenplay for %D%",
                    "list the writers of %D%"};
        case kFGenre:
            return {"what are the genres of %D%",
                    "what types are %D%",
                    "which genres do %D% belong to",
                    "what kind of films are %D%",
                    "name the genres of %D%",
                    "what genres are %D%",
                    "which categories fit %D%",
                    "what sort of movies are %D%",
                    "list the genres of %D%",
                    "what genre labels describe %D%"};
        case kFLanguage:
            return {"what are the main languages in %D%",
                    "what languages are %D% in",
                    "which languages are spoken in %D%",
                    "what are the primary languages in %D%",
                    "what are the languages of %D%",
                    "which languages do %D% use",
                    "name the languages of %D%",
                    "what languages were %D% filmed in",
                    "list the languages of %D%",
                    "in what languages are %D%"};
        default:
            return {"when did %D% release",
                    "when were %D% released",
                    "what years did %D% come out",
                    "in which years were %D% released",
                    "what are the release years of %D%",
                    "when did %D% come out",
                    "which years did %D% release in",
                    "name the release years of %D%",
                    "list the release years of %D%",
                    "what year did %D% release"};
    }
}

// Questions about a single movie '@'.
Bank single_head(int f) {
    switch (f) {
        case kFActor:
            return {"who acted in @",
                    "who starred in @",
                    "which actors appear in @",
                    "who are the actors in @",
                    "name the actors of @",
                    "who appeared in @",
                    "who performed in @",
                    "which people starred in @",
                    "who was in the cast of @",
                    "list the actors in @"};
        case kFDirector:
            return {"who directed @",
                    "who was the director of @",
                    "which director made @",
                    "who is the director of @",
                    "name the director of @",
                    "which person directed @",
                    "who helmed @",
                    "which director worked on @",
                    "who directed the film @",
                    "list the directors of @"};
        case kFWriter:
            return {"who wrote @",
                    "who was the writer of @",
                    "which writer wrote @",
                    "who is the screenwriter of @",
                    "name the writer of @",
                    "which person wrote @",
                    "who penned @",
                    "which screenwriter worked on @",
                    "who did the screenplay for @",
                    "list the writers of @"};
        case kFGenre:
            return {"what are the genres of @",
                    "what type is @",
                    "which genres does @ belong to",
                    "what kind of film is @",
                    "name the genres of @",
                    "what genre is @",
                    "which categories fit @",
                    "what sort of movie is @",
                    "list the genres of @",
                    "what genre labels describe @"};
        case kFLanguage:
            return {"what are the main languages in @",
                    "what language is @ in",
                    "which languages are spoken in @",
                    "what is the primary language of @",
                    "what are the languages of @",
                    "which language does @ use",
                    "name the languages of @",
                    "what language was @ filmed in",
                    "list the languages of @",
                    "in what language is @"};
        default:
            return {"when did @ release",
                    "when was @ released",
                    "what year did @ come out",
                    "in which year was @ released",
                    "what is the release year of @",
                    "when did @ come out",
                    "which year did @ release in",
                    "name the release year of @",
                    "list the release years of @",
                    "what year did @ release"};
    }
}

// One-hop person-to-movie questions.
Bank person_to_movie(int role) {
    switch (role) {
        case kActor:
            return {"what movies did @ act in",
                    "which films did @ star in",
                    "what films did @ appear in",
                    "which movies star @",
                    "what movies feature @",
                    "which films was @ in",
                    "name the movies of @",
                    "what films starred @",
                    "which movies did @ perform in",
                    "list the films starring @"};
        case kDirector:
            return {"what movies did @ direct",
                    "which films did @ direct",
                    "what films were directed by @",
                    "which movies were directed by @",
                    "what movies has @ directed",
                    "which films did @ make",
                    "name the movies directed by @",
                    "what films did @ helm",
                    "which movies come from director @",
                    "list the films directed by @"};
        default:
            return {"what movies did @ write",
                    "which films did @ write",
                    "what films were written by @",
                    "which movies were written by @",
                    "what movies has @ written",
                    "which films did @ pen",
                    "name the movies written by @",
                    "what films did @ script",
                    "which movies come from writer @",
                    "list the films written by @"};
    }
}

// Movie-set descriptions for person topics (two-hop middles).
Bank person_movies_descr(int role) {
    switch (role) {
        case kActor:
            return {"the movies acted by @",
                    "the films starring @",
                    "the movies @ starred in",
                    "the films @ acted in",
                    "the movies @ appeared in",
                    "movies starring @",
                    "films acted by @",
                    "the films in which @ appeared",
                    "the movies that @ starred in",
                    "the films @ performed in"};
        case kDirector:
            return {"the movies directed by @",
                    "the films @ directed",
                    "the movies that @ directed",
                    "films directed by @",
                    "the films of director @",
                    "the movies @ made",
                    "the films helmed by @",
                    "movies directed by @",
                    "the movies from director @",
                    "the films that @ directed"};
        default:
            return {"the movies written by @",
                    "the films @ wrote",
                    "the movies that @ wrote",
                    "films written by @",
                    "the films of writer @",
                    "the movies penned by @",
                    "the films scripted by @",
                    "movies written by @",
                    "the movies from writer @",
                    "the films that @ wrote"};
    }
}

// Movie-set descriptions for movie topics (three-hop middles).
Bank shared_role_descr(int role) {
    switch (role) {
        case kActor:
            return {"the movies that share actors with @",
                    "the films starred by actors in @",
                    "the films that share the same actors with @",
                    "the movies starring the actors of @",
                    "the films acted by the actors of @",
                    "movies that have common actors with @",
                    "the other movies of the actors in @",
                    "the films featuring actors from @",
                    "the movies with the same actors as @",
                    "films sharing actors with @"};
        case kDirector:
            return {"the movies that share directors with @",
                    "the films made by the director of @",
                    "the films that share the same director with @",
                    "the movies directed by the director of @",
                    "the films from the director of @",
                    "movies that have the same director as @",
                    "the other movies of the director of @",
                    "the films whose director also directed @",
                    "the movies with the same director as @",
                    "films sharing directors with @"};
        default:
            return {"the movies that share writers with @",
                    "the films written by the writer of @",
                    "the films that share the same writer with @",
                    "the movies penned by the writer of @",
                    "the films from the writer of @",
                    "movies that have the same writer as @",
                    "the other movies of the writer of @",
                    "the films whose writer also wrote @",
                    "the movies with the same writer as @",
                    "films sharing writers with @"};
    }
}

// Movie-to-role-to-movie full sentences.
Bank shared_role_question(int role) {
    switch (role) {
        case kActor:
            return {"the actor of @ also starred in which films",
                    "which movies share actors with @",
                    "what films have the same actors as @",
                    "which films share the same actors with @",
                    "what other movies star the actors of @",
                    "the actors of @ appeared in which other movies",
                    "which movies did the actors of @ also act in",
                    "what films feature the actors of @",
                    "which other films star actors from @",
                    "what movies have actors in common with @"};
        case kDirector:
            return {"which films share the same director of @",
                    "which movies share directors with @",
                    "what films have the same director as @",
                    "the director of @ also directed which films",
                    "what other movies did the director of @ make",
                    "which movies did the director of @ also direct",
                    "what films come from the director of @",
                    "which other films were directed by the director of @",
                    "what movies have directors in common with @",
                    "which films were made by the same director as @"};
        default:
            return {"which movies have the same screenwriter of @",
                    "which films share writers with @",
                    "what films have the same writer as @",
                    "the writer of @ also wrote which films",
                    "what other movies did the writer of @ write",
                    "which movies did the writer of @ also write",
                    "what films come from the writer of @",
                    "which other films were written by the writer of @",
                    "what movies have writers in common with @",
                    "which films were penned by the same writer as @"};
    }
}

std::string substitute(const std::string& pattern, const std::string& key,
                       const std::string& value) {
    std::string out = pattern;
    std::size_t pos = out.find(key);
    if (pos == std::string::npos) throw Error("pattern missing placeholder: " + pattern);
    out.replace(pos, key.size(), value);
    return out;
}

std::vector<QuestionType> build_registry() {
    std::vector<QuestionType> types;
    auto add = [&](std::string name, std::uint32_t hops, std::vector<PathStep> path,
                   Bank patterns) {
        QuestionType t;
        t.id = static_cast<std::uint32_t>(types.size());
        t.name = std::move(name);
        t.hops = hops;
        t.path = std::move(path);
        t.patterns.assign(patterns.begin(), patterns.end());
        types.push_back(std::move(t));
    };

    // One-hop: movie to each attribute, then person to movie.
    for (int f = 0; f < 6; ++f) {
        add(std::string("movie_to_") + final_word(f), 1,
            {{final_relation(f), true}}, single_head(f));
    }
    for (int role = 0; role < 3; ++role) {
        add(std::string(role_word(role)) + "_to_movie", 1,
            {{role_relation(role), false}}, person_to_movie(role));
    }

    // Two-hop: person to movie to attribute.
    for (int role = 0; role < 3; ++role) {
        Bank descr = person_movies_descr(role);
        for (int f = 0; f < 6; ++f) {
            Bank heads = plural_head(f);
            Bank patterns;
            for (int i = 0; i < 10; ++i)
                patterns[i] = substitute(heads[i], "%D%", descr[i]);
            add(std::string(role_word(role)) + "_to_movie_to_" + final_word(f), 2,
                {{role_relation(role), false}, {final_relation(f), true}}, patterns);
        }
    }
    // Two-hop: movie to person to movie.
    for (int role = 0; role < 3; ++role) {
        add(std::string("movie_to_") + role_word(role) + "_to_movie", 2,
            {{role_relation(role), true}, {role_relation(role), false}},
            shared_role_question(role));
    }

    // Three-hop: movie to person to movie to attribute, with the final
    // attribute differing from the shared role.
    for (int role = 0; role < 3; ++role) {
        Bank descr = shared_role_descr(role);
        for (int f = 0; f < 6; ++f) {
            if (f == role) continue;
            Bank heads = plural_head(f);
            Bank patterns;
            for (int i = 0; i < 10; ++i)
                patterns[i] = substitute(heads[i], "%D%", descr[i]);
            add(std::string("movie_to_") + role_word(role) + "_to_movie_to_" +
                    final_word(f),
                3,
                {{role_relation(role), true},
                 {role_relation(role), false},
                 {final_relation(f), true}},
                patterns);
        }
    }
    return types;
}

const std::map<std::string, std::string>& synonym_table() {
    static const std::map<std::string, std::string> table = {
        {"movies", "films"},       {"films", "movies"},
        {"movie", "film"},         {"film", "movie"},
        {"acted", "starred"},      {"starred", "acted"},
        {"wrote", "penned"},       {"directed", "helmed"},
        {"actors", "performers"},  {"directors", "filmmakers"},
        {"writers", "screenwriters"}, {"genres", "categories"},
        {"genre", "category"},     {"languages", "tongues"},
        {"language", "tongue"},    {"released", "premiered"},
        {"name", "state"},         {"list", "enumerate"},
        {"appear", "show"},        {"appeared", "showed"},
    };
    return table;
}

}  // namespace

const std::vector<QuestionType>& question_types() {
    static const std::vector<QuestionType> registry = build_registry();
    return registry;
}

const QuestionType& question_type(std::uint32_t id) {
    const auto& types = question_types();
    if (id >= types.size()) throw Error("unknown question type id " + std::to_string(id));
    return types[id];
}

const std::vector<std::string>& template_vocabulary() {
    static const std::vector<std::string> words = [] {
        std::set<std::string> seen;
        for (const QuestionType& t : question_types()) {
            for (const std::string& p : t.patterns)
                for (const std::string& tok : tokenize(p)) seen.insert(tok);
        }
        for (const auto& [k, v] : synonym_table()) {
            seen.insert(k);
            seen.insert(v);
        }
        return std::vector<std::string>(seen.begin(), seen.end());
    }();
    return words;
}

KnowledgeGraph generate_kg(const KGGenConfig& cfg) {
    if (cfg.movies < 1 || cfg.actors < 1 || cfg.directors < 1 || cfg.writers < 1 ||
        cfg.genres < 1 || cfg.languages < 1 || cfg.years < 1)
        throw Error("generate_kg: every entity class count must be >= 1");
    if (cfg.edge_density <= 0.0) throw Error("generate_kg: edge density must be > 0");

    static const std::vector<std::string> syllables = [] {
        std::vector<std::string> out;
        for (const char* c : {"b", "d", "f", "g", "k", "l", "m", "n", "p",
                              "r", "s", "t", "v", "z"})
            for (const char* v : {"a", "e", "i", "o", "u"})
                out.push_back(std::string(c) + v);
        return out;
    }();

    Rng token_rng = make_rng(cfg.seed, "kg/tokens");
    std::unordered_set<std::string> blocked(template_vocabulary().begin(),
                                            template_vocabulary().end());
    std::vector<std::string> token_pool;
    std::unordered_set<std::string> token_seen;
    while (token_pool.size() < cfg.name_token_pool) {
        std::size_t n_syll = 2 + token_rng.index(2);
        std::string tok;
        for (std::size_t i = 0; i < n_syll; ++i)
            tok += syllables[token_rng.index(syllables.size())];
        if (blocked.count(tok) || token_seen.count(tok)) continue;
        token_seen.insert(tok);
        token_pool.push_back(tok);
    }

    Rng name_rng = make_rng(cfg.seed, "kg/names");
    std::unordered_set<std::string> used_names;
    auto fresh_name = [&]() {
        for (int tries = 0; tries < 1000; ++tries) {
            std::size_t n_tok = 2 + name_rng.index(2);
            std::string name;
            for (std::size_t i = 0; i < n_tok; ++i) {
                if (i) name.push_back(' ');
                name += token_pool[name_rng.index(token_pool.size())];
            }
            if (used_names.insert(name).second) return name;
        }
        throw Error("generate_kg: name pool exhausted");
    };

    KnowledgeGraph g;
    struct Range {
        EntityId begin = 0;
        std::uint32_t size = 0;
    };
    auto add_class = [&](std::uint32_t count, bool year_class) {
        Range r{static_cast<EntityId>(g.num_entities()), count};
        for (std::uint32_t i = 0; i < count; ++i) {
            if (year_class)
                g.add_entity(std::to_string(1950 + i));
            else
                g.add_entity(fresh_name());
        }
        return r;
    };
    Range movies = add_class(cfg.movies, false);
    Range actors = add_class(cfg.actors, false);
    Range directors = add_class(cfg.directors, false);
    Range writers = add_class(cfg.writers, false);
    Range genres = add_class(cfg.genres, false);
    Range languages = add_class(cfg.languages, false);
    Range years = add_class(cfg.years, true);

    RelationId r_starred = g.add_relation(kRelStarred);
    RelationId r_directed = g.add_relation(kRelDirected);
    RelationId r_written = g.add_relation(kRelWritten);
    RelationId r_genre = g.add_relation(kRelGenre);
    RelationId r_year = g.add_relation(kRelYear);
    RelationId r_language = g.add_relation(kRelLanguage);

    Rng edge_rng = make_rng(cfg.seed, "kg/edges");
    auto connect = [&](EntityId movie, RelationId rel, const Range& pool, double mean,
                       bool exactly_one) {
        std::size_t count = 1;
        if (!exactly_one) {
            count = std::max<std::size_t>(
                1, std::min<std::size_t>(pool.size,
                                         edge_rng.poisson(mean * cfg.edge_density)));
        }
        for (std::size_t idx : edge_rng.sample_without_replacement(pool.size, count))
            g.add_triple(movie, rel, pool.begin + static_cast<EntityId>(idx));
    };
    for (std::uint32_t i = 0; i < movies.size; ++i) {
        EntityId m = movies.begin + i;
        connect(m, r_starred, actors, cfg.starred_mean, false);
        connect(m, r_directed, directors, cfg.directed_mean, false);
        connect(m, r_written, writers, cfg.written_mean, false);
        connect(m, r_genre, genres, cfg.genre_mean, false);
        connect(m, r_year, years, 1.0, true);
        connect(m, r_language, languages, cfg.language_mean, false);
    }
    g.finalize();
    return g;
}

std::vector<EntityId> execute_path(const KnowledgeGraph& g, EntityId topic,
                                   const std::vector<PathStep>& path) {
    std::set<EntityId> frontier{topic};
    for (const PathStep& step : path) {
        auto rel = g.find_relation(step.relation);
        if (!rel) return {};
        std::set<EntityId> next;
        for (EntityId e : frontier) {
            if (step.forward) {
                for (const auto& [o, r] : g.out_edges(e))
                    if (r == *rel) next.insert(o);
            } else {
                for (const auto& [s, r] : g.in_edges(e))
                    if (r == *rel) next.insert(s);
            }
        }
        frontier = std::move(next);
    }
    frontier.erase(topic);
    return {frontier.begin(), frontier.end()};
}

LabelResult label_entities(const std::string& text,
                           std::span<const std::string> names) {
    std::vector<std::string> toks = tokenize(text);

    // first token -> (token count, name index), longest first
    std::unordered_map<std::string, std::vector<std::pair<std::size_t, std::size_t>>>
        by_first;
    std::vector<std::vector<std::string>> name_tokens(names.size());
    for (std::size_t i = 0; i < names.size(); ++i) {
        name_tokens[i] = tokenize(names[i]);
        if (!name_tokens[i].empty())
            by_first[name_tokens[i][0]].push_back({name_tokens[i].size(), i});
    }
    for (auto& [tok, cands] : by_first) {
        std::sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
    }

    LabelResult result;
    std::size_t i = 0;
    while (i < toks.size()) {
        std::size_t advance = 1;
        auto it = by_first.find(toks[i]);
        if (it != by_first.end()) {
            for (const auto& [len, name_idx] : it->second) {
                if (i + len > toks.size()) continue;
                bool match = true;
                for (std::size_t k = 1; k < len && match; ++k)
                    match = toks[i + k] == name_tokens[name_idx][k];
                if (match) {
                    result.spans.push_back({i, len});
                    result.matched_names.push_back(name_idx);
                    advance = len;
                    break;
                }
            }
        }
        i += advance;
    }
    result.ambiguous = result.spans.size() > 1;

    std::string out;
    std::size_t span_idx = 0;
    for (std::size_t t = 0; t < toks.size(); ++t) {
        if (t) out.push_back(' ');
        bool open = span_idx < result.spans.size() && result.spans[span_idx].first == t;
        if (open) out.push_back('[');
        out += toks[t];
        if (span_idx < result.spans.size() &&
            result.spans[span_idx].first + result.spans[span_idx].second == t + 1) {
            out.push_back(']');
            ++span_idx;
        }
    }
    result.text = std::move(out);
    return result;
}

std::vector<QAItem> generate_questions(const KnowledgeGraph& g,
                                       const QuestionGenConfig& cfg) {
    std::vector<const QuestionType*> types;
    for (const QuestionType& t : question_types()) {
        if (t.hops != cfg.hop) continue;
        if (!cfg.type_ids.empty() &&
            std::find(cfg.type_ids.begin(), cfg.type_ids.end(), t.id) ==
                cfg.type_ids.end())
            continue;
        types.push_back(&t);
    }
    if (types.empty()) throw Error("no question types enabled for hop " +
                                   std::to_string(cfg.hop));

    // Eligibility: at least one edge matching the first path step.
    std::vector<std::vector<EntityId>> eligible(types.size());
    for (std::size_t t = 0; t < types.size(); ++t) {
        const PathStep& first = types[t]->path.front();
        auto rel = g.find_relation(first.relation);
        if (!rel) throw Error("relation missing from graph: " + first.relation);
        for (EntityId e = 0; e < g.num_entities(); ++e) {
            auto edges = first.forward ? g.out_edges(e) : g.in_edges(e);
            for (const auto& [other, r] : edges) {
                if (r == *rel) {
                    eligible[t].push_back(e);
                    break;
                }
            }
        }
        if (eligible[t].empty())
            throw Error("no eligible topic entity for template " + types[t]->name);
    }

    std::vector<std::string> names;
    names.reserve(g.num_entities());
    for (EntityId e = 0; e < g.num_entities(); ++e) names.push_back(g.entity(e).name);

    Rng rng = make_rng(cfg.seed, "questions/" + std::to_string(cfg.hop));
    std::vector<QAItem> items;
    items.reserve(cfg.count);
    for (std::size_t n = 0; n < cfg.count; ++n) {
        bool done = false;
        for (int tries = 0; tries < 500 && !done; ++tries) {
            std::size_t t = rng.index(types.size());
            EntityId topic = eligible[t][rng.index(eligible[t].size())];
            std::vector<EntityId> answers = execute_path(g, topic, types[t]->path);
            if (answers.empty() || answers.size() > cfg.max_answers) continue;

            const std::string& pattern =
                types[t]->patterns[rng.index(types[t]->patterns.size())];
            std::string text = substitute(pattern, "@", g.entity(topic).name);
            LabelResult lr = label_entities(text, names);
            if (lr.spans.size() != 1 || lr.matched_names[0] != topic) continue;

            QAItem item;
            item.tokens = tokenize(text);
            item.text = join_tokens(item.tokens);
            item.topic = topic;
            item.answers = std::move(answers);
            item.hop = cfg.hop;
            item.type_id = types[t]->id;
            item.span_begin = static_cast<std::int32_t>(lr.spans[0].first);
            item.span_len = static_cast<std::int32_t>(lr.spans[0].second);
            items.push_back(std::move(item));
            done = true;
        }
        if (!done) throw Error("question generation stalled; graph too sparse");
    }
    strip_labels(items, cfg.label_fraction, derive_seed(cfg.seed, "labels"));
    return items;
}

void strip_labels(std::vector<QAItem>& items, double fraction, std::uint64_t seed) {
    if (fraction < 0.0 || fraction > 1.0)
        throw Error("label fraction must be in [0, 1]");
    std::size_t keep = static_cast<std::size_t>(
        std::ceil(fraction * static_cast<double>(items.size())));
    keep = std::min(keep, items.size());
    Rng rng(derive_seed(seed, "strip"));
    std::vector<std::size_t> chosen = rng.sample_without_replacement(items.size(), keep);
    std::vector<bool> keep_mask(items.size(), false);
    for (std::size_t i : chosen) keep_mask[i] = true;
    for (std::size_t i = 0; i < items.size(); ++i)
        if (!keep_mask[i]) items[i].topic.reset();
}

QAItem apply_noise(const QAItem& item, const NoiseConfig& cfg) {
    if (cfg.synonym_prob < 0 || cfg.synonym_prob > 1 || cfg.drop_prob < 0 ||
        cfg.drop_prob > 1)
        throw Error("noise probabilities must be in [0, 1]");
    Rng rng(derive_seed(cfg.seed, item.text));
    const auto& synonyms = synonym_table();

    QAItem out = item;
    out.tokens.clear();
    std::int32_t new_begin = -1;
    for (std::size_t i = 0; i < item.tokens.size(); ++i) {
        bool in_span = item.span_begin >= 0 &&
                       static_cast<std::int32_t>(i) >= item.span_begin &&
                       static_cast<std::int32_t>(i) < item.span_begin + item.span_len;
        if (in_span) {
            if (static_cast<std::int32_t>(i) == item.span_begin)
                new_begin = static_cast<std::int32_t>(out.tokens.size());
            out.tokens.push_back(item.tokens[i]);
            continue;
        }
        if (rng.u01() < cfg.drop_prob) continue;
        auto it = synonyms.find(item.tokens[i]);
        if (it != synonyms.end() && rng.u01() < cfg.synonym_prob)
            out.tokens.push_back(it->second);
        else
            out.tokens.push_back(item.tokens[i]);
    }
    if (out.tokens.empty()) return item;
    out.span_begin = item.span_begin >= 0 ? new_begin : -1;
    out.text = join_tokens(out.tokens);
    return out;
}

DatasetSplit split(std::vector<QAItem> items, const std::array<double, 3>& ratios,
                   std::uint64_t seed) {
    double sum = ratios[0] + ratios[1] + ratios[2];
    if (ratios[0] < 0 || ratios[1] < 0 || ratios[2] < 0 || std::abs(sum - 1.0) > 1e-9)
        throw Error("split ratios must be nonnegative and sum to 1");
    Rng rng = make_rng(seed, "split");
    rng.shuffle(items);
    std::size_t n = items.size();
    std::size_t n_val = static_cast<std::size_t>(ratios[1] * static_cast<double>(n));
    std::size_t n_test = static_cast<std::size_t>(ratios[2] * static_cast<double>(n));
    std::size_t n_train = n - n_val - n_test;

    DatasetSplit out;
    out.train.assign(items.begin(), items.begin() + n_train);
    out.validation.assign(items.begin() + n_train, items.begin() + n_train + n_val);
    out.test.assign(items.begin() + n_train + n_val, items.end());
    return out;
}

OverlapReport overlap_report(std::span<const QAItem> train,
                             std::span<const QAItem> eval_items) {
    std::set<EntityId> topics;
    std::set<std::pair<EntityId, EntityId>> pairs;
    for (const QAItem& item : train) {
        if (!item.topic) throw Error("overlap report requires labeled items");
        topics.insert(*item.topic);
        for (EntityId a : item.answers) pairs.insert({*item.topic, a});
    }
    OverlapReport report;
    if (eval_items.empty()) return report;
    std::size_t new_entity = 0, new_pair = 0;
    for (const QAItem& item : eval_items) {
        if (!item.topic) throw Error("overlap report requires labeled items");
        if (!topics.count(*item.topic)) ++new_entity;
        bool seen = false;
        for (EntityId a : item.answers)
            if (pairs.count({*item.topic, a})) seen = true;
        if (!seen) ++new_pair;
    }
    report.new_entity_fraction =
        static_cast<double>(new_entity) / static_cast<double>(eval_items.size());
    report.new_pair_fraction =
        static_cast<double>(new_pair) / static_cast<double>(eval_items.size());
    return report;
}

}  // namespace vrn::datagen
