#include "vrn/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "vrn/checkpoint.hpp"

namespace vrn::pipeline {

namespace fs = std::filesystem;

Vocabulary dataset_vocabulary(const KnowledgeGraph& kg) {
    std::vector<std::vector<std::string>> streams;
    streams.reserve(kg.num_entities() + 1);
    for (EntityId e = 0; e < kg.num_entities(); ++e)
        streams.push_back(kg.entity(e).name_tokens);
    streams.push_back(datagen::template_vocabulary());
    return build_vocab(streams);
}

Dataset build_dataset(const DataConfig& cfg) {
    Dataset data;
    data.kg = datagen::generate_kg(cfg.kg);
    data.vocab = dataset_vocabulary(data.kg);

    datagen::QuestionGenConfig q_cfg;
    q_cfg.hop = cfg.hops;
    q_cfg.count = cfg.n_train + cfg.n_validation + cfg.n_test;
    q_cfg.label_fraction = 1.0;
    q_cfg.max_answers = cfg.max_answers;
    q_cfg.seed = derive_seed(cfg.seed, "questions");
    std::vector<QAItem> items = datagen::generate_questions(data.kg, q_cfg);

    if (cfg.noise.synonym_prob > 0.0 || cfg.noise.drop_prob > 0.0) {
        for (QAItem& item : items) item = datagen::apply_noise(item, cfg.noise);
    }

    double n = static_cast<double>(items.size());
    datagen::DatasetSplit splits = datagen::split(
        std::move(items),
        {static_cast<double>(cfg.n_train) / n, static_cast<double>(cfg.n_validation) / n,
         static_cast<double>(cfg.n_test) / n},
        derive_seed(cfg.seed, "split"));

    data.validation_overlap = datagen::overlap_report(splits.train, splits.validation);
    data.test_overlap = datagen::overlap_report(splits.train, splits.test);
    datagen::strip_labels(splits.train, cfg.label_fraction,
                          derive_seed(cfg.seed, "labels"));
    data.train = std::move(splits.train);
    data.validation = std::move(splits.validation);
    data.test = std::move(splits.test);
    return data;
}

namespace {

std::vector<QAItem> labeled_subset(std::span<const QAItem> items) {
    std::vector<QAItem> out;
    for (const QAItem& item : items)
        if (item.topic) out.push_back(item);
    return out;
}

double probe_elbo(const VrnModel& model, std::span<const QAItem> probe,
                  std::uint32_t hops) {
    if (probe.empty()) return 0.0;
    double total = 0.0;
    for (const QAItem& item : probe) {
        std::vector<std::uint32_t> tokens = model.vocab().map(item.tokens);
        total += elbo(model, tokens, item.answers.front(), hops);
    }
    return total / static_cast<double>(probe.size());
}

}  // namespace

TrainedVrn train_vrn(const Dataset& data, const TrainConfig& cfg,
                     const ModelConfig& model_cfg, const std::string& checkpoint_dir) {
    TrainedVrn out;
    out.model = std::make_unique<VrnModel>(data.kg, data.vocab, model_cfg,
                                           derive_seed(cfg.seed, "model"));
    out.baseline = std::make_unique<BaselineNet>(
        data.kg.num_entities(), data.vocab.size(), cfg.baseline_hidden,
        derive_seed(cfg.seed, "baseline"));
    out.signal.decay = cfg.decay;
    out.signal.sigma_floor = cfg.sigma_floor;

    std::vector<QAItem> probe = labeled_subset(data.validation);
    if (probe.size() > cfg.probe_size) probe.resize(cfg.probe_size);
    std::size_t elbo_probe_size = std::min<std::size_t>(probe.size(), 4);
    std::span<const QAItem> elbo_probe_items(probe.data(), elbo_probe_size);

    std::vector<QAItem> labeled = labeled_subset(data.train);
    if (!labeled.empty() && cfg.pretrain_epochs > 0) {
        pretrain(*out.model, labeled, cfg, [&](std::size_t epoch, const PretrainStats& s) {
            TrainLogRow row;
            row.phase = "pretrain";
            row.step = epoch;
            row.loss_theta1 = s.loss_recognition;
            row.loss_theta2 = s.loss_answer;
            row.loss_total = s.loss_recognition + s.loss_answer;
            row.entity_accuracy_probe =
                probe.empty() ? 0.0 : entity_accuracy(*out.model, probe);
            out.log.push_back(row);
        });
    }

    GradientSet scratch(out.model->params());
    Rng order_rng = make_rng(cfg.seed, "joint/order");
    Rng step_rng = make_rng(cfg.seed, "joint/step");
    std::vector<std::size_t> order(data.train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    double last_elbo = 0.0, last_acc = 0.0;
    bool have_probe_row = false;
    for (std::uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        order_rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
            std::size_t end = std::min(order.size(), start + cfg.batch);
            std::vector<QAItem> batch;
            batch.reserve(end - start);
            for (std::size_t k = start; k < end; ++k) batch.push_back(data.train[order[k]]);

            StepDiagnostics diag = reinforce_step(*out.model, *out.baseline, out.signal,
                                                  batch, cfg, step_rng, scratch);
            ++out.steps;

            TrainLogRow row;
            row.phase = "joint";
            row.step = out.steps;
            row.loss_theta1 = diag.loss_theta1;
            row.loss_theta2 = diag.loss_theta2;
            row.loss_psi = diag.loss_psi;
            row.loss_baseline = diag.loss_baseline;
            row.loss_total =
                diag.loss_theta1 + diag.loss_theta2 + diag.loss_psi + diag.loss_baseline;
            row.mean_signal = diag.mean_signal;
            if (!have_probe_row || (cfg.probe_every > 0 && out.steps % cfg.probe_every == 0)) {
                last_elbo = probe_elbo(*out.model, elbo_probe_items, cfg.hops);
                last_acc = probe.empty() ? 0.0 : entity_accuracy(*out.model, probe);
                have_probe_row = true;
            }
            row.elbo_probe = last_elbo;
            row.entity_accuracy_probe = last_acc;
            out.log.push_back(row);

            if (!checkpoint_dir.empty() && cfg.checkpoint_every > 0 &&
                out.steps % cfg.checkpoint_every == 0) {
                Checkpoint header;
                header.model_config = model_cfg;
                header.num_relations =
                    static_cast<std::uint32_t>(data.kg.num_relations());
                header.num_entities = data.kg.num_entities();
                header.vocab_size = data.vocab.size();
                header.step = out.steps;
                header.signal = out.signal;
                save_checkpoint_file(
                    (fs::path(checkpoint_dir) /
                     ("checkpoint_" + std::to_string(out.steps) + ".bin"))
                        .string(),
                    header, out.model->params(), &out.baseline->params());
            }
        }
    }
    return out;
}

double vrn_hits_at_1(const VrnModel& model, std::span<const QAItem> items,
                     const InferenceConfig& cfg, std::size_t workers) {
    return hits_at_1(
        [&](const QAItem& item) {
            std::vector<std::uint32_t> tokens = model.vocab().map(item.tokens);
            return answer(model, tokens, cfg).answer;
        },
        items, workers);
}

void write_trainlog(const std::vector<TrainLogRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open trainlog for writing: " + path);
    out << "phase,step,loss_theta1,loss_theta2,loss_psi,loss_baseline,loss_total,"
           "mean_a,elbo,entity_accuracy\n";
    out << std::setprecision(10);
    for (const TrainLogRow& r : rows) {
        out << r.phase << ',' << r.step << ',' << r.loss_theta1 << ',' << r.loss_theta2
            << ',' << r.loss_psi << ',' << r.loss_baseline << ',' << r.loss_total << ','
            << r.mean_signal << ',' << r.elbo_probe << ',' << r.entity_accuracy_probe
            << '\n';
    }
}

void append_metrics(const std::vector<EvalRow>& rows, const std::string& path) {
    bool fresh = !fs::exists(path);
    std::ofstream out(path, std::ios::app);
    if (!out) throw Error("cannot open metrics file: " + path);
    if (fresh) out << "dataset,hop,regime,hits_at_1,entity_accuracy\n";
    out << std::setprecision(6);
    for (const EvalRow& r : rows) {
        out << r.dataset << ',' << r.hop << ',' << r.regime << ',' << r.hits_at_1 << ','
            << r.entity_accuracy << '\n';
    }
}

void save_vocab(const Vocabulary& vocab, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open vocab for writing: " + path);
    for (std::uint32_t i = 0; i < vocab.size(); ++i) out << vocab.token(i) << '\n';
}

Vocabulary load_vocab(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open vocab: " + path);
    Vocabulary vocab;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != "<unk>") throw Error("vocab file must start with <unk>");
            continue;
        }
        vocab.add(line);
    }
    return vocab;
}

void save_dataset(const Dataset& data, const std::string& dir) {
    fs::create_directories(dir);
    {
        std::ofstream triples((fs::path(dir) / "kg.tsv").string());
        std::ofstream names((fs::path(dir) / "entities.txt").string());
        if (!triples || !names) throw Error("cannot write graph files under " + dir);
        write_graph(data.kg, triples, names);
    }
    save_vocab(data.vocab, (fs::path(dir) / "vocab.txt").string());

    auto write_split = [&](const std::vector<QAItem>& items, const std::string& split) {
        if (items.empty()) return;
        std::uint32_t hop = items.front().hop;
        std::string base = "qa_" + split + "_" + std::to_string(hop) + "hop.txt";
        std::string types = "qa_types_" + split + "_" + std::to_string(hop) + "hop.txt";
        std::ofstream qa((fs::path(dir) / base).string());
        std::ofstream ty((fs::path(dir) / types).string());
        if (!qa || !ty) throw Error("cannot write qa files under " + dir);
        write_qa_file(items, data.kg, qa, ty);
    };
    write_split(data.train, "train");
    write_split(data.validation, "valid");
    write_split(data.test, "test");
}

Dataset load_dataset(const std::string& dir, std::uint32_t hop) {
    Dataset data;
    {
        std::ifstream triples((fs::path(dir) / "kg.tsv").string());
        std::ifstream names((fs::path(dir) / "entities.txt").string());
        if (!triples || !names) throw Error("missing kg.tsv/entities.txt under " + dir);
        data.kg = load_graph(triples, &names);
    }
    data.vocab = load_vocab((fs::path(dir) / "vocab.txt").string());

    auto read_split = [&](const std::string& split) {
        std::string base = "qa_" + split + "_" + std::to_string(hop) + "hop.txt";
        std::string types = "qa_types_" + split + "_" + std::to_string(hop) + "hop.txt";
        std::ifstream qa((fs::path(dir) / base).string());
        if (!qa) throw Error("missing " + base + " under " + dir);
        std::ifstream ty((fs::path(dir) / types).string());
        std::vector<QAItem> items;
        if (ty)
            items = read_qa_file(qa, &ty, data.kg, hop);
        else
            items = read_qa_file(qa, nullptr, data.kg, hop);
        return items;
    };
    data.train = read_split("train");
    data.validation = read_split("valid");
    data.test = read_split("test");
    return data;
}

}  // namespace vrn::pipeline
