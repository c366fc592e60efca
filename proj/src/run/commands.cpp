#include "run/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "common/error.hpp"
#include "io/synthetic.hpp"
#include "metrics/metrics.hpp"
#include "run/trainer.hpp"

namespace fs = std::filesystem;

namespace pixeltext {

namespace {

void ensure_dir(const std::string& path) {
    std::error_code ec;
    fs::create_directories(path, ec);
    if (ec) {
        throw DataError("cannot create directory '" + path + "': " + ec.message());
    }
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write '" + path + "'");
    }
    out << content;
    if (!out) {
        throw DataError("write failed for '" + path + "'");
    }
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

// Corpus specs are file paths or "synthetic-<kind>:<count>[:<seed>]".
struct SyntheticSpec {
    std::string kind;
    std::size_t count = 0;
    std::uint64_t seed = 0;
    bool matched = false;
};

SyntheticSpec parse_synthetic(const std::string& spec, std::uint64_t default_seed) {
    SyntheticSpec out;
    if (spec.rfind("synthetic-", 0) != 0) {
        return out;
    }
    std::size_t colon = spec.find(':');
    if (colon == std::string::npos) {
        throw ConfigError("synthetic corpus spec '" + spec + "' needs a count");
    }
    out.kind = spec.substr(10, colon - 10);
    std::string rest = spec.substr(colon + 1);
    std::size_t colon2 = rest.find(':');
    try {
        if (colon2 == std::string::npos) {
            out.count = std::stoul(rest);
            out.seed = default_seed;
        } else {
            out.count = std::stoul(rest.substr(0, colon2));
            out.seed = std::stoull(rest.substr(colon2 + 1));
        }
    } catch (...) {
        throw ConfigError("cannot parse synthetic corpus spec '" + spec + "'");
    }
    out.matched = true;
    return out;
}

std::vector<std::string> load_text_lines(const std::string& spec, std::uint64_t data_seed) {
    if (spec.empty()) {
        throw ConfigError("missing corpus path");
    }
    SyntheticSpec syn = parse_synthetic(spec, data_seed);
    if (syn.matched) {
        if (syn.kind != "text") {
            throw ConfigError("expected a text corpus, got 'synthetic-" + syn.kind + "'");
        }
        return synthetic_text_lines(syn.count, syn.seed);
    }
    std::ifstream in(spec, std::ios::binary);
    if (!in) {
        throw DataError("cannot open corpus '" + spec + "'");
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (!line.empty()) {
            lines.push_back(line);
        }
    }
    if (lines.empty()) {
        throw DataError("corpus '" + spec + "' has no usable lines");
    }
    return lines;
}

std::vector<Sentence> load_treebank(const std::string& spec, std::uint64_t data_seed) {
    if (spec.empty()) {
        throw ConfigError("missing treebank path");
    }
    SyntheticSpec syn = parse_synthetic(spec, data_seed);
    if (syn.matched) {
        if (syn.kind != "treebank") {
            throw ConfigError("expected a treebank, got 'synthetic-" + syn.kind + "'");
        }
        return synthetic_treebank(syn.count, syn.seed);
    }
    return load_conllu(spec);
}

std::vector<LabeledText> load_records(const std::string& spec, std::uint64_t data_seed) {
    if (spec.empty()) {
        throw ConfigError("missing classification dataset path");
    }
    SyntheticSpec syn = parse_synthetic(spec, data_seed);
    if (syn.matched) {
        if (syn.kind != "classify") {
            throw ConfigError("expected classification data, got 'synthetic-" + syn.kind + "'");
        }
        return synthetic_classification(syn.count, syn.seed);
    }
    return load_classification_file(spec);
}

EncoderConfig encoder_config_from(const RunConfig& config, std::uint64_t seed) {
    EncoderConfig enc;
    if (config.get_string("model.preset") == "full") {
        enc = EncoderConfig::full_scale();
    } else if (config.get_string("model.preset") == "desk") {
        enc.hidden_dim = config.get_size("model.hidden_dim");
        enc.num_layers = config.get_size("model.num_layers");
        enc.num_heads = config.get_size("model.num_heads");
        enc.mlp_ratio = config.get_size("model.mlp_ratio");
        enc.max_positions = config.get_size("model.max_positions");
    } else {
        throw ConfigError("model.preset must be 'desk' or 'full'");
    }
    enc.dropout_rate = static_cast<float>(config.get_double("model.dropout"));
    enc.use_positions = config.get_bool("model.use_positions");
    enc.pool_separator = config.get_bool("model.pool_separator");
    enc.seed = seed;
    enc.validate();
    if (enc.max_positions < config.get_size("render.max_patches")) {
        throw ConfigError("model.max_positions must cover render.max_patches");
    }
    return enc;
}

PretrainConfig pretrain_config_from(const RunConfig& config) {
    PretrainConfig p;
    p.steps = config.get_size("pretrain.steps");
    p.batch_size = config.get_size("pretrain.batch_size");
    p.warmup_steps = config.get_size("pretrain.warmup_steps");
    p.learning_rate = static_cast<float>(config.get_double("pretrain.lr"));
    p.weight_decay = static_cast<float>(config.get_double("pretrain.weight_decay"));
    p.beta1 = static_cast<float>(config.get_double("adam.beta1"));
    p.beta2 = static_cast<float>(config.get_double("adam.beta2"));
    p.adam_epsilon = static_cast<float>(config.get_double("adam.epsilon"));
    p.mask_ratio = config.get_double("pretrain.mask_ratio");
    p.max_span_length = config.get_size("pretrain.max_span_length");
    p.mlm_mask_ratio = config.get_double("pretrain.mlm_mask_ratio");
    p.max_patches = config.get_size("render.max_patches");
    p.seed = static_cast<std::uint64_t>(config.get_int("run.seed"));
    return p;
}

std::string loss_csv(const PretrainResult& result) {
    std::string csv = "step,loss,learning_rate\n";
    for (const auto& point : result.curve) {
        csv += std::to_string(point.step) + "," + fmt_double(point.loss) + "," +
               fmt_double(point.learning_rate) + "\n";
    }
    return csv;
}

const GlyphAtlas& resolve_atlas(const RunConfig& config,
                                std::unique_ptr<GlyphAtlas>& storage) {
    std::string path = config.get_string("render.atlas");
    if (path.empty()) {
        return GlyphAtlas::embedded();
    }
    storage = std::make_unique<GlyphAtlas>(GlyphAtlas::load_file(path));
    return *storage;
}

ConfusionTable resolve_confusion(const RunConfig& config) {
    std::string path = config.get_string("render.confusion");
    return path.empty() ? ConfusionTable::embedded() : ConfusionTable::load_file(path);
}

// ---------------------------------------------------------------- assembly

struct ModelSpec {
    EncoderConfig enc_cfg;
    std::string front_end;
    Task task = Task::pos;
    std::size_t max_patches = 0;
    std::vector<std::string> relations;
    std::vector<std::string> labels;
    std::string vocab_text;
    std::uint64_t seed = 0;
    bool word_mean_pool = false;
    std::size_t arc_dim = 64;
    std::size_t label_dim = 32;
};

struct AssembledModel {
    TaskModel model;
    std::unique_ptr<GlyphAtlas> atlas;  // only when a custom atlas file is used
};

void assemble(TaskModel& m, const ModelSpec& spec, const GlyphAtlas& atlas) {
    m.encoder_config = spec.enc_cfg;
    m.task = spec.task;
    m.word_mean_pool = spec.word_mean_pool;
    Rng init_rng(spec.seed, RngStream::init);
    m.encoder = std::make_unique<Encoder>(spec.enc_cfg, init_rng);
    if (spec.front_end == "pixel") {
        m.front_end = std::make_unique<PixelFrontEnd>(*m.encoder, spec.max_patches, atlas);
    } else if (spec.front_end == "subword") {
        if (spec.vocab_text.empty()) {
            throw ConfigError("subword front-end requires a BPE vocabulary");
        }
        m.vocab = std::make_unique<BpeVocab>(BpeVocab::parse(spec.vocab_text, "checkpoint"));
        m.embeddings = std::make_unique<MlmModel>(spec.enc_cfg, m.vocab->size(), init_rng);
        m.front_end = std::make_unique<SubwordFrontEnd>(*m.encoder, *m.embeddings, *m.vocab,
                                                        spec.max_patches);
    } else {
        throw ConfigError("front_end must be 'pixel' or 'subword', got '" + spec.front_end +
                          "'");
    }
    m.front_end->collect_params(m.trainable);
    switch (spec.task) {
        case Task::pos:
            m.pos_head = std::make_unique<PosHead>(spec.enc_cfg.hidden_dim, init_rng);
            m.trainable.merge(m.pos_head->params());
            break;
        case Task::parse:
            m.parse_head = std::make_unique<BiaffineHead>(
                spec.enc_cfg.hidden_dim, spec.relations, init_rng, spec.arc_dim,
                spec.label_dim);
            m.trainable.merge(m.parse_head->params());
            break;
        case Task::classify:
            m.labels.labels = spec.labels;
            m.sequence_head = std::make_unique<SequenceHead>(
                spec.enc_cfg.hidden_dim, spec.labels.size(), init_rng);
            m.trainable.merge(m.sequence_head->params());
            break;
    }
}

nlohmann::json meta_for(const ModelSpec& spec, const RunConfig& config,
                        const std::string& kind) {
    nlohmann::json meta;
    meta["kind"] = kind;
    meta["task"] = task_name(spec.task);
    meta["front_end"] = spec.front_end;
    meta["seed"] = spec.seed;
    meta["max_patches"] = spec.max_patches;
    meta["word_mean_pool"] = spec.word_mean_pool;
    meta["arc_dim"] = spec.arc_dim;
    meta["label_dim"] = spec.label_dim;
    meta["relations"] = spec.relations;
    meta["labels"] = spec.labels;
    meta["encoder"] = {{"hidden_dim", spec.enc_cfg.hidden_dim},
                       {"num_layers", spec.enc_cfg.num_layers},
                       {"num_heads", spec.enc_cfg.num_heads},
                       {"mlp_ratio", spec.enc_cfg.mlp_ratio},
                       {"max_positions", spec.enc_cfg.max_positions},
                       {"dropout", spec.enc_cfg.dropout_rate},
                       {"use_positions", spec.enc_cfg.use_positions},
                       {"pool_separator", spec.enc_cfg.pool_separator}};
    if (!spec.vocab_text.empty()) {
        meta["bpe_vocab"] = spec.vocab_text;
    }
    meta["config"] = config.resolved();
    return meta;
}

ModelSpec spec_from_meta(const nlohmann::json& meta) {
    ModelSpec spec;
    const auto& enc = meta.at("encoder");
    spec.enc_cfg.hidden_dim = enc.at("hidden_dim").get<std::size_t>();
    spec.enc_cfg.num_layers = enc.at("num_layers").get<std::size_t>();
    spec.enc_cfg.num_heads = enc.at("num_heads").get<std::size_t>();
    spec.enc_cfg.mlp_ratio = enc.at("mlp_ratio").get<std::size_t>();
    spec.enc_cfg.max_positions = enc.at("max_positions").get<std::size_t>();
    spec.enc_cfg.dropout_rate = enc.at("dropout").get<float>();
    spec.enc_cfg.use_positions = enc.at("use_positions").get<bool>();
    spec.enc_cfg.pool_separator = enc.at("pool_separator").get<bool>();
    spec.front_end = meta.at("front_end").get<std::string>();
    spec.task = task_from_string(meta.at("task").get<std::string>());
    spec.max_patches = meta.at("max_patches").get<std::size_t>();
    spec.seed = meta.at("seed").get<std::uint64_t>();
    spec.word_mean_pool = meta.at("word_mean_pool").get<bool>();
    spec.arc_dim = meta.at("arc_dim").get<std::size_t>();
    spec.label_dim = meta.at("label_dim").get<std::size_t>();
    spec.relations = meta.at("relations").get<std::vector<std::string>>();
    spec.labels = meta.at("labels").get<std::vector<std::string>>();
    if (meta.contains("bpe_vocab")) {
        spec.vocab_text = meta.at("bpe_vocab").get<std::string>();
    }
    return spec;
}

std::vector<std::string> collect_relations(const std::vector<Sentence>& sentences) {
    std::set<std::string> rels;
    for (const auto& s : sentences) {
        for (const auto& t : s.tokens) {
            if (t.deprel != "_") {
                rels.insert(t.deprel);
            }
        }
    }
    if (rels.empty()) {
        throw DataError("treebank carries no dependency relations");
    }
    return {rels.begin(), rels.end()};
}

std::vector<std::string> corpus_text_lines(const std::vector<Sentence>& sentences) {
    std::vector<std::string> lines;
    lines.reserve(sentences.size());
    for (const auto& s : sentences) {
        std::string line;
        for (std::size_t i = 0; i < s.tokens.size(); ++i) {
            if (i) {
                line += ' ';
            }
            line += s.tokens[i].form;
        }
        lines.push_back(std::move(line));
    }
    return lines;
}

// ----------------------------------------------------------------- evaluation

struct EvalSet {
    std::string name;
    double rate = 0.0;
};

std::vector<EvalSet> eval_sets(const RunConfig& config) {
    std::vector<EvalSet> sets = {{"clean", 0.0}};
    for (double rate : config.get_double_list("eval.perturb_rates")) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "perturb_%g", rate);
        sets.push_back({buf, rate});
    }
    return sets;
}

std::map<std::string, double> evaluate_one(const TaskModel& model,
                                           const std::vector<Sentence>& sentences,
                                           const std::vector<LabeledText>& records,
                                           bool gold_debug, std::size_t max_distance,
                                           const std::string& out_dir) {
    std::map<std::string, double> metrics;
    if (model.task == Task::classify) {
        std::vector<std::string> gold;
        gold.reserve(records.size());
        for (const auto& r : records) {
            model.labels.index_of(r.label);  // unseen labels fail loudly
            gold.push_back(r.label);
        }
        std::vector<std::string> pred = gold_debug ? gold : predict_classify(model, records);
        metrics["accuracy"] = classification_accuracy(gold, pred);
    } else if (model.task == Task::pos) {
        std::vector<Sentence> pred = gold_debug ? sentences : predict_pos(model, sentences);
        metrics["accuracy"] = tagging_accuracy(sentences, pred);
        auto per_tag = per_tag_accuracy(sentences, pred);
        std::string csv = "tag,correct,total,accuracy\n";
        for (const auto& [tag, stats] : per_tag) {
            auto pct = stats.percent();
            csv += tag + "," + std::to_string(stats.correct) + "," +
                   std::to_string(stats.total) + "," +
                   (pct ? format_percent(*pct) : std::string("-")) + "\n";
        }
        write_text_file(out_dir + "/per_tag.csv", csv);
    } else {
        std::vector<Sentence> pred = gold_debug ? sentences : predict_parse(model, sentences);
        auto [uas, las] = uas_las(sentences, pred);
        metrics["uas"] = uas;
        metrics["las"] = las;
        auto buckets = las_by_distance(sentences, pred, max_distance);
        std::string csv = "bucket,correct,total,las\n";
        for (const auto& [bucket, stats] : buckets) {
            auto pct = stats.percent();
            csv += bucket + "," + std::to_string(stats.correct) + "," +
                   std::to_string(stats.total) + "," +
                   (pct ? format_percent(*pct) : std::string("-")) + "\n";
        }
        write_text_file(out_dir + "/by_distance.csv", csv);
    }
    std::string csv = "metric,value\n";
    for (const auto& [name, value] : metrics) {
        csv += name + "," + fmt_double(value) + "\n";
    }
    write_text_file(out_dir + "/metrics.csv", csv);
    return metrics;
}

}  // namespace

std::string run_directory(const RunConfig& config) {
    return config.get_string("run.out_dir") + "/" + config.get_string("run.name");
}

// ------------------------------------------------------------------- pretrain

void cmd_pretrain(const RunConfig& config) {
    set_checked_mode(config.get_bool("run.checked"));
    std::uint64_t seed = static_cast<std::uint64_t>(config.get_int("run.seed"));
    std::uint64_t data_seed = static_cast<std::uint64_t>(config.get_int("data.seed"));
    std::string out_dir = run_directory(config) + "/" + std::to_string(seed);
    ensure_dir(out_dir);
    config.save(out_dir + "/config.json");

    auto corpus = load_text_lines(config.get_string("pretrain.corpus"), data_seed);
    EncoderConfig enc_cfg = encoder_config_from(config, seed);
    PretrainConfig pre_cfg = pretrain_config_from(config);
    std::size_t interval = config.get_size("pretrain.checkpoint_interval");
    std::string front_end = config.get_string("front_end");

    std::unique_ptr<GlyphAtlas> atlas_storage;
    const GlyphAtlas& atlas = resolve_atlas(config, atlas_storage);

    Rng init_rng(seed, RngStream::init);
    Encoder encoder(enc_cfg, init_rng);

    ModelSpec spec;
    spec.enc_cfg = enc_cfg;
    spec.front_end = front_end;
    spec.max_patches = config.get_size("render.max_patches");
    spec.seed = seed;

    if (front_end == "pixel") {
        MaeDecoder decoder(enc_cfg, init_rng);
        ParamStore all;
        all.merge(encoder.params());
        all.merge(decoder.params());
        nlohmann::json meta = meta_for(spec, config, "pretrain");
        auto hook = [&](std::size_t step) {
            if (interval > 0 && step % interval == 0) {
                save_checkpoint(all, meta, out_dir + "/checkpoint_step" +
                                               std::to_string(step) + ".pxlm");
            }
        };
        PretrainResult result = pretrain_mae(encoder, decoder, corpus, pre_cfg, atlas, hook);
        write_text_file(out_dir + "/pretrain_loss.csv", loss_csv(result));
        save_checkpoint(all, meta, out_dir + "/checkpoint.pxlm");
    } else if (front_end == "subword") {
        std::string vocab_path = config.get_string("bpe.vocab");
        BpeVocab vocab = vocab_path.empty()
                             ? train_bpe(corpus, config.get_size("bpe.vocab_size"))
                             : BpeVocab::load_file(vocab_path);
        spec.vocab_text = vocab.serialize();
        MlmModel model(enc_cfg, vocab.size(), init_rng);
        ParamStore all;
        all.merge(encoder.params());
        all.merge(model.params());
        nlohmann::json meta = meta_for(spec, config, "pretrain");
        auto hook = [&](std::size_t step) {
            if (interval > 0 && step % interval == 0) {
                save_checkpoint(all, meta, out_dir + "/checkpoint_step" +
                                               std::to_string(step) + ".pxlm");
            }
        };
        PretrainResult result = pretrain_mlm(encoder, model, vocab, corpus, pre_cfg, hook);
        write_text_file(out_dir + "/pretrain_loss.csv", loss_csv(result));
        save_checkpoint(all, meta, out_dir + "/checkpoint.pxlm");
    } else {
        throw ConfigError("front_end must be 'pixel' or 'subword'");
    }
}

// ------------------------------------------------------------------- finetune

void cmd_finetune(const RunConfig& config) {
    set_checked_mode(config.get_bool("run.checked"));
    std::uint64_t data_seed = static_cast<std::uint64_t>(config.get_int("data.seed"));
    Task task = task_from_string(config.get_string("finetune.task"));
    std::string run_dir = run_directory(config);
    ensure_dir(run_dir);

    TaskData data;
    std::vector<std::string> relations;
    std::vector<std::string> labels;
    std::vector<std::string> bpe_lines;
    if (task == Task::classify) {
        data.train_records = load_records(config.get_string("finetune.train"), data_seed);
        data.dev_records = load_records(config.get_string("finetune.dev"), data_seed + 1);
        labels = LabelSet::from_records(data.train_records).labels;
        for (const auto& r : data.train_records) {
            bpe_lines.push_back(r.text);
        }
    } else {
        data.train_sentences = load_treebank(config.get_string("finetune.train"), data_seed);
        data.dev_sentences = load_treebank(config.get_string("finetune.dev"), data_seed + 1);
        if (task == Task::parse) {
            for (const auto& s : data.train_sentences) {
                if (!s.fully_annotated()) {
                    throw DataError("finetune parse: training sentences must carry heads");
                }
            }
            relations = collect_relations(data.train_sentences);
        } else {
            for (const auto& s : data.train_sentences) {
                if (!s.has_tags()) {
                    throw DataError("finetune pos: training sentences must carry UPOS tags");
                }
            }
        }
        bpe_lines = corpus_text_lines(data.train_sentences);
    }

    std::string front_end = config.get_string("front_end");
    std::string init_path = config.get_string("finetune.init_checkpoint");
    std::unique_ptr<CheckpointData> init_ckpt;
    if (!init_path.empty()) {
        init_ckpt = std::make_unique<CheckpointData>(load_checkpoint(init_path));
    }

    std::string vocab_text;
    if (front_end == "subword") {
        if (init_ckpt && init_ckpt->meta.contains("bpe_vocab")) {
            vocab_text = init_ckpt->meta.at("bpe_vocab").get<std::string>();
        } else {
            std::string vocab_path = config.get_string("bpe.vocab");
            BpeVocab vocab = vocab_path.empty()
                                 ? train_bpe(bpe_lines, config.get_size("bpe.vocab_size"))
                                 : BpeVocab::load_file(vocab_path);
            vocab_text = vocab.serialize();
        }
    }

    std::unique_ptr<GlyphAtlas> atlas_storage;
    const GlyphAtlas& atlas = resolve_atlas(config, atlas_storage);

    FinetuneOptions options;
    options.task = task;
    options.steps = config.get_size("finetune.steps");
    options.batch_size = config.get_size("finetune.batch_size");
    options.warmup_steps = config.get_size("finetune.warmup_steps");
    options.learning_rate = static_cast<float>(config.get_double("finetune.lr"));
    options.weight_decay = static_cast<float>(config.get_double("finetune.weight_decay"));
    options.beta1 = static_cast<float>(config.get_double("adam.beta1"));
    options.beta2 = static_cast<float>(config.get_double("adam.beta2"));
    options.adam_epsilon = static_cast<float>(config.get_double("adam.epsilon"));
    options.eval_interval = config.get_size("finetune.eval_interval");
    options.patience = config.get_size("finetune.patience");
    options.word_mean_pool = config.get_string("finetune.word_pool") == "mean";

    for (std::int64_t seed_value : config.get_int_list("finetune.seeds")) {
        std::uint64_t seed = static_cast<std::uint64_t>(seed_value);
        ModelSpec spec;
        spec.enc_cfg = encoder_config_from(config, seed);
        spec.front_end = front_end;
        spec.task = task;
        spec.max_patches = config.get_size("render.max_patches");
        spec.relations = relations;
        spec.labels = labels;
        spec.vocab_text = vocab_text;
        spec.seed = seed;
        spec.word_mean_pool = options.word_mean_pool;
        spec.arc_dim = config.get_size("finetune.arc_dim");
        spec.label_dim = config.get_size("finetune.label_dim");

        TaskModel model;
        assemble(model, spec, atlas);
        if (init_ckpt) {
            apply_checkpoint(model.trainable, *init_ckpt);
        }
        options.seed = seed;
        FinetuneResult result = finetune(model, data, options);

        std::string seed_dir = run_dir + "/" + std::to_string(seed);
        ensure_dir(seed_dir);
        config.save(seed_dir + "/config.json");
        std::string trace = "step,dev_metric\n";
        for (const auto& point : result.trace) {
            trace += std::to_string(point.step) + "," + fmt_double(point.dev_metric) + "\n";
        }
        write_text_file(seed_dir + "/dev_trace.csv", trace);
        nlohmann::json meta = meta_for(spec, config, "finetune");
        meta["best_metric"] = result.best_metric;
        meta["best_step"] = result.best_step;
        save_checkpoint(model.trainable, meta, seed_dir + "/best.pxlm");
    }
}

// ------------------------------------------------------------------- evaluate

void cmd_evaluate(const RunConfig& config) {
    set_checked_mode(config.get_bool("run.checked"));
    std::uint64_t data_seed = static_cast<std::uint64_t>(config.get_int("data.seed"));
    std::string run_dir = config.get_string("eval.run_dir");
    if (run_dir.empty()) {
        run_dir = run_directory(config);
    }
    if (!fs::exists(run_dir)) {
        throw DataError("evaluate: run directory '" + run_dir + "' does not exist");
    }
    std::vector<std::pair<std::uint64_t, std::string>> checkpoints;
    for (const auto& entry : fs::directory_iterator(run_dir)) {
        if (!entry.is_directory()) {
            continue;
        }
        std::string best = entry.path().string() + "/best.pxlm";
        if (fs::exists(best)) {
            try {
                checkpoints.emplace_back(std::stoull(entry.path().filename().string()), best);
            } catch (...) {
                continue;
            }
        }
    }
    if (checkpoints.empty()) {
        throw DataError("evaluate: no seed directories with best.pxlm under '" + run_dir +
                        "'");
    }
    std::sort(checkpoints.begin(), checkpoints.end());

    bool gold_debug = config.get_bool("eval.gold_debug");
    std::size_t max_distance = config.get_size("eval.max_distance");
    std::uint64_t perturb_seed = static_cast<std::uint64_t>(config.get_int("eval.perturb_seed"));
    ConfusionTable confusion = resolve_confusion(config);
    std::unique_ptr<GlyphAtlas> atlas_storage;
    const GlyphAtlas& atlas = resolve_atlas(config, atlas_storage);
    auto sets = eval_sets(config);

    // set -> metric -> per-seed values
    std::map<std::string, std::map<std::string, std::vector<double>>> collected;
    std::string task_str;
    std::string front_end_str;

    for (const auto& [seed, ckpt_path] : checkpoints) {
        CheckpointData ckpt = load_checkpoint(ckpt_path);
        ModelSpec spec = spec_from_meta(ckpt.meta);
        task_str = task_name(spec.task);
        front_end_str = spec.front_end;
        TaskModel model;
        assemble(model, spec, atlas);
        std::size_t applied = apply_checkpoint(model.trainable, ckpt);
        if (applied != model.trainable.count()) {
            throw DataError("evaluate: checkpoint '" + ckpt_path + "' matched " +
                            std::to_string(applied) + " of " +
                            std::to_string(model.trainable.count()) + " tensors");
        }

        std::vector<Sentence> test_sentences;
        std::vector<LabeledText> test_records;
        if (spec.task == Task::classify) {
            test_records = load_records(config.get_string("eval.test"), data_seed + 2);
        } else {
            test_sentences = load_treebank(config.get_string("eval.test"), data_seed + 2);
        }

        for (const auto& set : sets) {
            std::vector<Sentence> sentences = test_sentences;
            std::vector<LabeledText> records = test_records;
            if (set.rate > 0.0) {
                if (spec.task == Task::classify) {
                    std::uint64_t counter = 0;
                    for (auto& r : records) {
                        std::string p =
                            perturb_text(r.text, set.rate, perturb_seed + counter, confusion);
                        ++counter;
                        if (!p.empty()) {
                            r.text = std::move(p);
                        }
                    }
                } else {
                    sentences = make_dialect_eval(sentences, set.rate, perturb_seed, confusion);
                }
            }
            std::string out_dir =
                run_dir + "/" + std::to_string(seed) + "/eval/" + set.name;
            ensure_dir(out_dir);
            auto metrics = evaluate_one(model, sentences, records, gold_debug, max_distance,
                                        out_dir);
            for (const auto& [name, value] : metrics) {
                collected[set.name][name].push_back(value);
            }
        }
    }

    std::string csv = "set,metric,mean,std,n\n";
    for (const auto& set : sets) {
        for (const auto& [metric, values] : collected[set.name]) {
            auto [mean, stdev] = mean_std(values);
            csv += set.name + "," + metric + "," + fmt_double(mean) + "," +
                   fmt_double(stdev) + "," + std::to_string(values.size()) + "\n";
        }
    }
    write_text_file(run_dir + "/aggregate.csv", csv);
    config.save(run_dir + "/eval_config.json");

    nlohmann::json info;
    info["task"] = task_str;
    info["front_end"] = front_end_str;
    info["seeds"] = checkpoints.size();
    write_text_file(run_dir + "/eval_info.json", info.dump(2) + "\n");
}

// --------------------------------------------------------------------- render

void cmd_render(const RunConfig& config) {
    std::string text = config.get_string("render.text");
    std::string input = config.get_string("render.input");
    if (text.empty() && input.empty()) {
        throw ConfigError("render: provide render.text or render.input");
    }
    std::vector<std::string> lines;
    if (!text.empty()) {
        lines.push_back(text);
    }
    if (!input.empty()) {
        std::ifstream in(input, std::ios::binary);
        if (!in) {
            throw DataError("render: cannot open '" + input + "'");
        }
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') {
                line.pop_back();
            }
            lines.push_back(line);
        }
    }
    std::unique_ptr<GlyphAtlas> atlas_storage;
    const GlyphAtlas& atlas = resolve_atlas(config, atlas_storage);
    std::size_t max_patches = config.get_size("render.max_patches");
    std::string out_dir = run_directory(config) + "/render";
    ensure_dir(out_dir);
    config.save(out_dir + "/config.json");

    std::string dump;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::vector<std::string> words;
        std::istringstream ss(lines[i]);
        std::string word;
        while (ss >> word) {
            words.push_back(word);
        }
        Rendering r = words.empty() ? render_text("", max_patches, atlas)
                                    : render_words(words, max_patches, atlas);
        std::string png_path = out_dir + "/line_" + std::to_string(i) + ".png";
        export_png(r, png_path);
        dump += "line " + std::to_string(i) + ": \"" + lines[i] + "\"\n";
        dump += "  text_patches " + std::to_string(r.num_text_patches) + ", separator at " +
                std::to_string(r.separator_index) +
                (r.truncated ? ", TRUNCATED" : "") + "\n";
        if (r.word_spans) {
            for (std::size_t w = 0; w < r.word_spans->size(); ++w) {
                dump += "  word " + std::to_string(w) + " \"" + words[w] + "\" patches (" +
                        std::to_string((*r.word_spans)[w].first) + "," +
                        std::to_string((*r.word_spans)[w].second) + ")\n";
            }
        }
    }
    write_text_file(out_dir + "/spans.txt", dump);
}

// --------------------------------------------------------------------- report

void cmd_report(const RunConfig& config) {
    std::vector<std::string> runs = config.get_string_list("report.runs");
    if (runs.empty()) {
        runs.push_back(run_directory(config));
    }
    std::string out_dir = config.get_string("run.out_dir");
    ensure_dir(out_dir);

    std::vector<std::vector<std::string>> table = {
        {"run", "front_end", "task", "set", "metric", "mean", "std", "n"}};
    std::string robustness = "run,front_end,task,set,metric,mean,std,n\n";
    for (const auto& run : runs) {
        std::ifstream agg(run + "/aggregate.csv");
        if (!agg) {
            throw DataError("report: missing '" + run + "/aggregate.csv' (run evaluate first)");
        }
        std::string front_end = "?";
        std::string task = "?";
        std::ifstream info_file(run + "/eval_info.json");
        if (info_file) {
            nlohmann::json info;
            info_file >> info;
            front_end = info.value("front_end", "?");
            task = info.value("task", "?");
        }
        std::string line;
        std::getline(agg, line);  // header
        while (std::getline(agg, line)) {
            if (line.empty()) {
                continue;
            }
            std::vector<std::string> cols;
            std::string cur;
            for (char ch : line) {
                if (ch == ',') {
                    cols.push_back(cur);
                    cur.clear();
                } else {
                    cur += ch;
                }
            }
            cols.push_back(cur);
            if (cols.size() != 5) {
                throw DataError("report: malformed aggregate row in '" + run + "'");
            }
            std::string run_label = fs::path(run).filename().string();
            double mean = std::stod(cols[2]);
            double stdev = std::stod(cols[3]);
            table.push_back({run_label, front_end, task, cols[0], cols[1],
                             format_percent(mean), format_percent(stdev), cols[4]});
            robustness += run_label + "," + front_end + "," + task + "," + cols[0] + "," +
                          cols[1] + "," + fmt_double(mean) + "," + fmt_double(stdev) + "," +
                          cols[4] + "\n";
        }
    }
    write_text_file(out_dir + "/report.txt", render_table(table));
    write_text_file(out_dir + "/robustness.csv", robustness);
    config.save(out_dir + "/report_config.json");
}

}  // namespace pixeltext
