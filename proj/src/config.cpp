#include "vrn/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace vrn {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    std::istringstream in(value);
    T out{};
    in >> out;
    if (in.fail() || !in.eof())
        throw ConfigError("invalid value for " + key + ": " + value);
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("invalid value for " + key + ": " + value);
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"seed", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.seed = parse_number<std::uint64_t>(k, v);
         }},
        {"hops", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.hops = parse_number<std::uint32_t>(k, v);
         }},
        {"workers", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.workers = parse_number<std::size_t>(k, v);
         }},
        {"label_fraction", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.label_fraction = parse_number<double>(k, v);
         }},
        {"n_train", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.n_train = parse_number<std::size_t>(k, v);
         }},
        {"n_validation", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.n_validation = parse_number<std::size_t>(k, v);
         }},
        {"n_test", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.n_test = parse_number<std::size_t>(k, v);
         }},
        {"max_answers", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.max_answers = parse_number<std::size_t>(k, v);
         }},
        {"kg.movies", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.kg.movies = parse_number<std::uint32_t>(k, v);
         }},
        {"kg.actors", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.kg.actors = parse_number<std::uint32_t>(k, v);
         }},
        {"kg.directors", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.kg.directors = parse_number<std::uint32_t>(k, v);
         }},
        {"kg.writers", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.kg.writers = parse_number<std::uint32_t>(k, v);
         }},
        {"kg.genres", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.kg.genres = parse_number<std::uint32_t>(k, v);
         }},
        {"kg.languages", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.kg.languages = parse_number<std::uint32_t>(k, v);
         }},
        {"kg.years", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.kg.years = parse_number<std::uint32_t>(k, v);
         }},
        {"kg.edge_density", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.kg.edge_density = parse_number<double>(k, v);
         }},
        {"noise.synonym_prob", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.noise.synonym_prob = parse_number<double>(k, v);
         }},
        {"noise.drop_prob", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.noise.drop_prob = parse_number<double>(k, v);
         }},
        {"model.dim", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.model.dim = parse_number<std::uint32_t>(k, v);
         }},
        {"model.name_bow", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.model.name_bow = parse_bool(k, v);
         }},
        {"model.share_posterior", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.model.share_posterior = parse_bool(k, v);
         }},
        {"model.directional_relations",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             c.model.directional_relations = parse_bool(k, v);
         }},
        {"model.init_range", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.model.init_range = parse_number<double>(k, v);
         }},
        {"model.prop_init_range", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.model.prop_init_range = parse_number<double>(k, v);
         }},
        {"train.lr", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.train.lr = parse_number<double>(k, v);
         }},
        {"train.baseline_lr", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.train.baseline_lr = parse_number<double>(k, v);
         }},
        {"train.samples", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.train.samples = parse_number<std::uint32_t>(k, v);
         }},
        {"train.batch", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.train.batch = parse_number<std::uint32_t>(k, v);
         }},
        {"train.epochs", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.train.epochs = parse_number<std::uint32_t>(k, v);
         }},
        {"train.pretrain_epochs", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.train.pretrain_epochs = parse_number<std::uint32_t>(k, v);
         }},
        {"train.decay", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.train.decay = parse_number<double>(k, v);
         }},
        {"train.sigma_floor", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.train.sigma_floor = parse_number<double>(k, v);
         }},
        {"train.baseline_hidden", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.train.baseline_hidden = parse_number<std::uint32_t>(k, v);
         }},
        {"train.checkpoint_every", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.train.checkpoint_every = parse_number<std::uint32_t>(k, v);
         }},
        {"train.probe_every", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.train.probe_every = parse_number<std::uint32_t>(k, v);
         }},
        {"train.probe_size", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.train.probe_size = parse_number<std::uint32_t>(k, v);
         }},
        {"infer.beam", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.infer.beam = parse_number<std::uint32_t>(k, v);
         }},
        {"infer.joint_score", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.infer.joint_score = parse_bool(k, v);
         }},
        {"supemb.dim", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.supemb.dim = parse_number<std::uint32_t>(k, v);
         }},
        {"supemb.epochs", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.supemb.epochs = parse_number<std::uint32_t>(k, v);
         }},
        {"supemb.lr", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.supemb.lr = parse_number<double>(k, v);
         }},
    };
    return table;
}

}  // namespace

void apply_config_entry(RunConfig& cfg, const std::string& key,
                        const std::string& value) {
    auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError("unknown config key: " + key);
    it->second(cfg, key, value);
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("malformed config line " + std::to_string(line_no));
        apply_config_entry(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

void validate(const RunConfig& cfg) {
    if (cfg.hops < 1 || cfg.hops > 3) throw ConfigError("hops must be 1, 2 or 3");
    if (cfg.train.lr <= 0.0) throw ConfigError("train.lr must be > 0");
    if (cfg.train.samples < 1) throw ConfigError("train.samples must be >= 1");
    if (cfg.train.batch < 1) throw ConfigError("train.batch must be >= 1");
    if (cfg.label_fraction < 0.0 || cfg.label_fraction > 1.0)
        throw ConfigError("label_fraction must be in [0, 1]");
    if (cfg.model.dim < 1) throw ConfigError("model.dim must be >= 1");
    if (cfg.infer.beam < 1) throw ConfigError("infer.beam must be >= 1");
    if (cfg.train.decay < 0.0 || cfg.train.decay >= 1.0)
        throw ConfigError("train.decay must be in [0, 1)");
    if (cfg.noise.synonym_prob < 0.0 || cfg.noise.synonym_prob > 1.0 ||
        cfg.noise.drop_prob < 0.0 || cfg.noise.drop_prob > 1.0)
        throw ConfigError("noise probabilities must be in [0, 1]");
    if (cfg.workers < 1) throw ConfigError("workers must be >= 1");
}

pipeline::DataConfig RunConfig::data_config() const {
    pipeline::DataConfig d;
    d.kg = kg;
    d.kg.seed = derive_seed(seed, "datagen");
    d.hops = hops;
    d.n_train = n_train;
    d.n_validation = n_validation;
    d.n_test = n_test;
    d.label_fraction = label_fraction;
    d.max_answers = max_answers;
    d.noise = noise;
    d.noise.seed = derive_seed(seed, "noise");
    d.seed = derive_seed(seed, "dataset");
    return d;
}

TrainConfig RunConfig::train_config() const {
    TrainConfig t = train;
    t.hops = hops;
    t.label_fraction = label_fraction;
    t.seed = derive_seed(seed, "train");
    return t;
}

InferenceConfig RunConfig::infer_config() const {
    InferenceConfig i = infer;
    i.hops = hops;
    return i;
}

SupEmbConfig RunConfig::supemb_config() const {
    SupEmbConfig s = supemb;
    s.seed = derive_seed(seed, "supemb");
    return s;
}

}  // namespace vrn
