// Command-line entry point. Subcommands:
//   gen-data       generate the knowledge graph and question sets
//   pretrain       supervised phase only, from labeled questions
//   train          full training (supervised phase + joint loop)
//   eval           hits@1 / entity accuracy to metrics.csv
//   infer          answer one question, optionally with the reasoning path
//   inspect-scope  dump an entity's scope
//   oracle-check   run the enumeration / finite-difference property suites

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "vrn/checkpoint.hpp"
#include "vrn/config.hpp"
#include "vrn/infer.hpp"
#include "vrn/oracle.hpp"
#include "vrn/pipeline.hpp"

namespace fs = std::filesystem;
using namespace vrn;

namespace {

struct CliOptions {
    std::string config_path;
    std::string out_dir = "out";
    std::string data_dir;
    std::string checkpoint_path;
    std::string question;
    std::string entity;
    bool explain = false;
    bool with_baseline = false;

    // Flag overrides; applied after the config file.
    std::vector<std::pair<std::string, std::string>> overrides;
};

void add_common_flags(CLI::App* cmd, CliOptions& opt) {
    cmd->add_option("--config", opt.config_path, "key=value config file");
    auto override_flag = [&opt, cmd](const std::string& key, const std::string& flag,
                                     const std::string& help) {
        cmd->add_option_function<std::string>(
            flag, [&opt, key](const std::string& v) { opt.overrides.push_back({key, v}); },
            help);
    };
    override_flag("seed", "--seed", "root random seed");
    override_flag("hops", "--hops", "reasoning hop budget (1, 2 or 3)");
    override_flag("label_fraction", "--label-fraction",
                  "fraction of train questions with topic labels");
    override_flag("infer.beam", "--beam", "beam width for inference");
    override_flag("workers", "--workers", "worker threads for evaluation");
}

RunConfig resolve_config(const CliOptions& opt) {
    RunConfig cfg;
    if (!opt.config_path.empty()) apply_config_file(cfg, opt.config_path);
    for (const auto& [key, value] : opt.overrides) apply_config_entry(cfg, key, value);
    validate(cfg);
    return cfg;
}

struct LoadedModel {
    pipeline::Dataset data;
    std::unique_ptr<VrnModel> model;
    std::unique_ptr<BaselineNet> baseline;
    Checkpoint header;
};

LoadedModel load_model(const CliOptions& opt, const RunConfig& cfg) {
    if (opt.data_dir.empty()) throw Error("--data is required");
    if (opt.checkpoint_path.empty()) throw Error("--checkpoint is required");
    LoadedModel out;
    out.data = pipeline::load_dataset(opt.data_dir, cfg.hops);
    Checkpoint header = read_checkpoint_header(opt.checkpoint_path);
    if (header.num_entities != out.data.kg.num_entities() ||
        header.num_relations != out.data.kg.num_relations() ||
        header.vocab_size != out.data.vocab.size())
        throw Error("checkpoint does not match the dataset under --data");
    out.model = std::make_unique<VrnModel>(out.data.kg, out.data.vocab,
                                           header.model_config, 0);
    ParamStore* baseline_store = nullptr;
    if (header.baseline_hidden > 0) {
        out.baseline = std::make_unique<BaselineNet>(out.data.kg.num_entities(),
                                                     out.data.vocab.size(),
                                                     header.baseline_hidden, 0);
        baseline_store = &out.baseline->params();
    }
    std::ifstream in(opt.checkpoint_path, std::ios::binary);
    if (!in) throw Error("cannot open checkpoint: " + opt.checkpoint_path);
    out.header = load_checkpoint(in, out.model->params(), baseline_store);
    return out;
}

void save_final_checkpoint(const pipeline::Dataset& data, const RunConfig& cfg,
                           const pipeline::TrainedVrn& trained,
                           const std::string& path) {
    Checkpoint header;
    header.model_config = cfg.model;
    header.num_relations = static_cast<std::uint32_t>(data.kg.num_relations());
    header.num_entities = data.kg.num_entities();
    header.vocab_size = data.vocab.size();
    header.step = trained.steps;
    header.baseline_hidden = cfg.train.baseline_hidden;
    header.signal = trained.signal;
    save_checkpoint_file(path, header, trained.model->params(),
                         &trained.baseline->params());
}

int cmd_gen_data(const CliOptions& opt) {
    RunConfig cfg = resolve_config(opt);
    pipeline::Dataset data = pipeline::build_dataset(cfg.data_config());
    pipeline::save_dataset(data, opt.out_dir);

    std::ofstream report((fs::path(opt.out_dir) / "dataset_report.csv").string());
    report << "split,hop,new_entity_fraction,new_pair_fraction\n" << std::setprecision(4);
    report << "validation," << cfg.hops << ','
           << data.validation_overlap.new_entity_fraction << ','
           << data.validation_overlap.new_pair_fraction << '\n';
    report << "test," << cfg.hops << ',' << data.test_overlap.new_entity_fraction << ','
           << data.test_overlap.new_pair_fraction << '\n';

    std::cout << "wrote " << data.kg.num_entities() << " entities, "
              << data.kg.num_triples() << " triples, " << data.train.size() << "/"
              << data.validation.size() << "/" << data.test.size() << " " << cfg.hops
              << "-hop questions to " << opt.out_dir << "\n";
    return 0;
}

int cmd_train(const CliOptions& opt, bool pretrain_only) {
    RunConfig cfg = resolve_config(opt);
    if (opt.data_dir.empty()) throw Error("--data is required");
    pipeline::Dataset data = pipeline::load_dataset(opt.data_dir, cfg.hops);
    fs::create_directories(opt.out_dir);

    TrainConfig tcfg = cfg.train_config();
    if (pretrain_only) tcfg.epochs = 0;
    pipeline::TrainedVrn trained = pipeline::train_vrn(data, tcfg, cfg.model, opt.out_dir);

    pipeline::write_trainlog(trained.log,
                             (fs::path(opt.out_dir) / "trainlog.csv").string());
    std::string checkpoint_name =
        pretrain_only ? "checkpoint_pretrain.bin" : "checkpoint_final.bin";
    save_final_checkpoint(data, cfg, trained,
                          (fs::path(opt.out_dir) / checkpoint_name).string());
    std::cout << (pretrain_only ? "pretrained" : "trained") << " with "
              << trained.log.size() << " logged steps; checkpoint at "
              << (fs::path(opt.out_dir) / checkpoint_name).string() << "\n";
    return 0;
}

int cmd_eval(const CliOptions& opt) {
    RunConfig cfg = resolve_config(opt);
    LoadedModel loaded = load_model(opt, cfg);
    fs::create_directories(opt.out_dir);

    std::vector<pipeline::EvalRow> rows;
    std::string dataset_name = fs::path(opt.data_dir).filename().string();
    if (dataset_name.empty()) dataset_name = opt.data_dir;

    pipeline::EvalRow vrn_row;
    vrn_row.dataset = dataset_name;
    vrn_row.hop = cfg.hops;
    vrn_row.regime =
        cfg.label_fraction >= 1.0
            ? "vrn-full"
            : "vrn-eu" +
                  std::to_string(static_cast<int>(cfg.label_fraction * 100.0 + 0.5));
    vrn_row.hits_at_1 = pipeline::vrn_hits_at_1(*loaded.model, loaded.data.test,
                                                cfg.infer_config(), cfg.workers);
    vrn_row.entity_accuracy = entity_accuracy(*loaded.model, loaded.data.test, cfg.workers);
    rows.push_back(vrn_row);

    if (opt.with_baseline) {
        SupervisedEmbedding baseline(loaded.data.kg, loaded.data.vocab,
                                     cfg.supemb_config());
        baseline.train(loaded.data.train);
        pipeline::EvalRow row;
        row.dataset = dataset_name;
        row.hop = cfg.hops;
        row.regime = "supervised-embedding";
        row.hits_at_1 =
            hits_at_1([&](const QAItem& item) { return baseline.predict_item(item); },
                      loaded.data.test, cfg.workers);
        row.entity_accuracy = 0.0;
        rows.push_back(row);
    }

    pipeline::append_metrics(rows, (fs::path(opt.out_dir) / "metrics.csv").string());
    for (const auto& r : rows)
        std::cout << r.regime << ": hits@1 " << r.hits_at_1 << ", entity accuracy "
                  << r.entity_accuracy << "\n";
    return 0;
}

int cmd_infer(const CliOptions& opt) {
    RunConfig cfg = resolve_config(opt);
    if (opt.question.empty()) throw Error("--question is required");
    LoadedModel loaded = load_model(opt, cfg);

    std::vector<std::string> words = tokenize(opt.question);
    std::vector<std::uint32_t> tokens = loaded.data.vocab.map(words);
    if (tokens.empty()) throw Error("question has no tokens");

    AnswerResult result = answer(*loaded.model, tokens, cfg.infer_config());
    std::cout << "question: " << join_tokens(words) << "\n";
    std::cout << "candidates (topic, log_p1, best answer, log_p2):\n"
              << std::setprecision(6);
    for (const CandidateRow& row : result.candidates) {
        std::cout << "  " << loaded.data.kg.entity(row.topic).name << "  " << row.log_p1
                  << "  " << loaded.data.kg.entity(row.best_answer).name << "  "
                  << row.log_p2 << "\n";
    }
    std::cout << "answer: " << loaded.data.kg.entity(result.answer).name << " (topic "
              << loaded.data.kg.entity(result.topic).name << ", score " << result.score
              << ")\n";
    if (opt.explain) {
        auto path =
            inspect_path(*loaded.model, tokens, result.topic, result.answer, cfg.hops);
        std::cout << "path: "
                  << (path.empty() ? loaded.data.kg.entity(result.answer).name
                                   : format_path(path, loaded.data.kg))
                  << "\n";
    }
    return 0;
}

int cmd_inspect_scope(const CliOptions& opt) {
    RunConfig cfg = resolve_config(opt);
    if (opt.data_dir.empty()) throw Error("--data is required");
    if (opt.entity.empty()) throw Error("--entity is required");
    pipeline::Dataset data = pipeline::load_dataset(opt.data_dir, cfg.hops);
    auto id = data.kg.find_entity(opt.entity);
    if (!id) throw Error("unknown entity: " + opt.entity);
    Scope scope = compute_scope(data.kg, *id, cfg.hops);
    dump_scope(scope, data.kg, std::cout);
    return 0;
}

int cmd_oracle_check(const CliOptions& opt) {
    RunConfig cfg = resolve_config(opt);
    bool all_pass = true;
    for (const oracle::SuiteResult& r : oracle::run_all_suites(cfg.seed)) {
        std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << ": " << r.detail
                  << "\n";
        all_pass = all_pass && r.pass;
    }
    return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"variational reasoning over knowledge graphs"};
    app.require_subcommand(1);
    CliOptions opt;

    CLI::App* gen = app.add_subcommand("gen-data", "generate graph and question sets");
    add_common_flags(gen, opt);
    gen->add_option("--out", opt.out_dir, "output directory")->required();

    CLI::App* pre = app.add_subcommand("pretrain", "supervised phase only");
    add_common_flags(pre, opt);
    pre->add_option("--data", opt.data_dir, "dataset directory")->required();
    pre->add_option("--out", opt.out_dir, "output directory")->required();

    CLI::App* train = app.add_subcommand("train", "supervised phase + joint loop");
    add_common_flags(train, opt);
    train->add_option("--data", opt.data_dir, "dataset directory")->required();
    train->add_option("--out", opt.out_dir, "output directory")->required();

    CLI::App* ev = app.add_subcommand("eval", "metrics on the test split");
    add_common_flags(ev, opt);
    ev->add_option("--data", opt.data_dir, "dataset directory")->required();
    ev->add_option("--checkpoint", opt.checkpoint_path, "model checkpoint")->required();
    ev->add_option("--out", opt.out_dir, "output directory")->required();
    ev->add_flag("--with-baseline", opt.with_baseline,
                 "also train and score the supervised-embedding baseline");

    CLI::App* inf = app.add_subcommand("infer", "answer a single question");
    add_common_flags(inf, opt);
    inf->add_option("--data", opt.data_dir, "dataset directory")->required();
    inf->add_option("--checkpoint", opt.checkpoint_path, "model checkpoint")->required();
    inf->add_option("--question", opt.question, "question text")->required();
    inf->add_flag("--explain", opt.explain, "print the reasoning path");

    CLI::App* scope_cmd = app.add_subcommand("inspect-scope", "dump an entity's scope");
    add_common_flags(scope_cmd, opt);
    scope_cmd->add_option("--data", opt.data_dir, "dataset directory")->required();
    scope_cmd->add_option("--entity", opt.entity, "entity name")->required();

    CLI::App* oracle_cmd =
        app.add_subcommand("oracle-check", "run enumeration/finite-difference suites");
    add_common_flags(oracle_cmd, opt);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_data(opt);
        if (pre->parsed()) return cmd_train(opt, true);
        if (train->parsed()) return cmd_train(opt, false);
        if (ev->parsed()) return cmd_eval(opt);
        if (inf->parsed()) return cmd_infer(opt);
        if (scope_cmd->parsed()) return cmd_inspect_scope(opt);
        if (oracle_cmd->parsed()) return cmd_oracle_check(opt);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
