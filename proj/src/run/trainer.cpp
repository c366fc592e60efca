#include "run/trainer.hpp"

#include "common/error.hpp"
#include "metrics/metrics.hpp"

namespace pixeltext {

Task task_from_string(const std::string& name) {
    if (name == "pos") {
        return Task::pos;
    }
    if (name == "parse") {
        return Task::parse;
    }
    if (name == "classify") {
        return Task::classify;
    }
    throw ConfigError("unknown task '" + name + "' (expected pos, parse or classify)");
}

std::string task_name(Task task) {
    switch (task) {
        case Task::pos:
            return "pos";
        case Task::parse:
            return "parse";
        default:
            return "classify";
    }
}

namespace {

// Loss for one training item; nullptr when the item is unusable (e.g. its
// rendering truncates, which would misalign the annotations).
TensorPtr sentence_loss(const TaskModel& model, const Sentence& sentence) {
    EncodedWords ew = model.front_end->encode_words(sentence.forms());
    if (ew.truncated || ew.spans.size() != sentence.tokens.size()) {
        return nullptr;
    }
    TensorPtr words =
        word_representations(ew.encoder_output, ew.spans, model.word_mean_pool);
    if (model.task == Task::pos) {
        std::vector<int> tags;
        tags.reserve(sentence.tokens.size());
        for (const Token& t : sentence.tokens) {
            tags.push_back(upos_index(t.upos));
        }
        return model.pos_head->loss(words, tags);
    }
    std::vector<std::size_t> heads;
    std::vector<int> relations;
    heads.reserve(sentence.tokens.size());
    for (const Token& t : sentence.tokens) {
        heads.push_back(static_cast<std::size_t>(t.head));
        int rel = -1;
        const auto& inventory = model.parse_head->relations();
        for (std::size_t r = 0; r < inventory.size(); ++r) {
            if (inventory[r] == t.deprel) {
                rel = static_cast<int>(r);
                break;
            }
        }
        if (rel < 0) {
            throw DataError("finetune: relation '" + t.deprel +
                            "' missing from the frozen inventory");
        }
        relations.push_back(rel);
    }
    return model.parse_head->loss(model.parse_head->score(words), heads, relations);
}

TensorPtr record_loss(const TaskModel& model, const LabeledText& record) {
    EncodedSequence es = model.front_end->encode_sequence(record.text);
    if (es.pooled_rows.empty()) {
        return nullptr;
    }
    return model.sequence_head->loss(es.encoder_output, es.pooled_rows,
                                     model.labels.index_of(record.label));
}

}  // namespace

std::vector<Sentence> predict_pos(const TaskModel& model,
                                  const std::vector<Sentence>& input) {
    std::vector<Sentence> out = input;
    for (Sentence& sentence : out) {
        EncodedWords ew = model.front_end->encode_words(sentence.forms());
        TensorPtr words =
            word_representations(ew.encoder_output, ew.spans, model.word_mean_pool);
        TensorPtr logits = model.pos_head->forward(words);
        for (std::size_t i = 0; i < sentence.tokens.size(); ++i) {
            sentence.tokens[i].upos =
                i < ew.spans.size() ? kUposTags[argmax_row(logits, i)] : "X";
        }
    }
    return out;
}

std::vector<Sentence> predict_parse(const TaskModel& model,
                                    const std::vector<Sentence>& input) {
    std::vector<Sentence> out = input;
    for (Sentence& sentence : out) {
        EncodedWords ew = model.front_end->encode_words(sentence.forms());
        TensorPtr words =
            word_representations(ew.encoder_output, ew.spans, model.word_mean_pool);
        auto scores = model.parse_head->score(words);
        auto heads = model.parse_head->decode(scores);
        auto relations = model.parse_head->predict_relations(scores, heads);
        for (std::size_t i = 0; i < sentence.tokens.size(); ++i) {
            if (i < ew.spans.size()) {
                sentence.tokens[i].head = static_cast<int>(heads[i]);
                sentence.tokens[i].deprel =
                    model.parse_head->relations()[static_cast<std::size_t>(relations[i])];
            } else {
                // Truncated tail: attach to the previous token so the output
                // stays a tree.
                sentence.tokens[i].head = static_cast<int>(i);
                sentence.tokens[i].deprel = "dep";
            }
        }
    }
    return out;
}

std::vector<std::string> predict_classify(const TaskModel& model,
                                          const std::vector<LabeledText>& input) {
    std::vector<std::string> out;
    out.reserve(input.size());
    for (const LabeledText& record : input) {
        EncodedSequence es = model.front_end->encode_sequence(record.text);
        TensorPtr logits = model.sequence_head->forward(es.encoder_output, es.pooled_rows);
        out.push_back(model.labels.labels[argmax_row(logits, 0)]);
    }
    return out;
}

double evaluate_dev_metric(const TaskModel& model, const TaskData& data) {
    switch (model.task) {
        case Task::pos:
            return tagging_accuracy(data.dev_sentences, predict_pos(model, data.dev_sentences));
        case Task::parse:
            return uas_las(data.dev_sentences, predict_parse(model, data.dev_sentences)).second;
        default: {
            std::vector<std::string> gold;
            gold.reserve(data.dev_records.size());
            for (const auto& r : data.dev_records) {
                gold.push_back(r.label);
            }
            return classification_accuracy(gold, predict_classify(model, data.dev_records));
        }
    }
}

FinetuneResult finetune(TaskModel& model, const TaskData& data,
                        const FinetuneOptions& options) {
    std::size_t n_items = model.task == Task::classify ? data.train_records.size()
                                                       : data.train_sentences.size();
    std::size_t n_dev = model.task == Task::classify ? data.dev_records.size()
                                                     : data.dev_sentences.size();
    if (n_items == 0) {
        throw DataError("finetune: empty training split");
    }
    if (n_dev == 0) {
        throw DataError("finetune: empty dev split");
    }
    if (options.batch_size == 0 || options.steps == 0) {
        throw ConfigError("finetune: steps and batch_size must be positive");
    }

    AdamWConfig opt_cfg;
    opt_cfg.learning_rate = options.learning_rate;
    opt_cfg.beta1 = options.beta1;
    opt_cfg.beta2 = options.beta2;
    opt_cfg.epsilon = options.adam_epsilon;
    opt_cfg.weight_decay = options.weight_decay;
    AdamW optimizer(model.trainable, opt_cfg);

    Rng shuffle_rng(options.seed, RngStream::shuffling);
    std::vector<std::size_t> order(n_items);
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    shuffle_rng.shuffle(order);
    std::size_t cursor = 0;

    FinetuneResult result;
    double best = -1.0;
    std::size_t best_step = 0;
    auto best_params = model.trainable.snapshot();
    std::size_t evals_since_best = 0;

    for (std::size_t step = 1; step <= options.steps; ++step) {
        std::vector<TensorPtr> losses;
        std::size_t attempts = 0;
        while (losses.size() < options.batch_size && attempts < 2 * n_items + 2) {
            ++attempts;
            if (cursor == order.size()) {
                shuffle_rng.shuffle(order);
                cursor = 0;
            }
            std::size_t idx = order[cursor++];
            TensorPtr loss = model.task == Task::classify
                                 ? record_loss(model, data.train_records[idx])
                                 : sentence_loss(model, data.train_sentences[idx]);
            if (loss) {
                losses.push_back(loss);
            }
        }
        if (losses.empty()) {
            throw DataError("finetune: no usable training items");
        }
        TensorPtr batch_loss = losses[0];
        for (std::size_t i = 1; i < losses.size(); ++i) {
            batch_loss = add(batch_loss, losses[i]);
        }
        batch_loss = scale(batch_loss, 1.0f / static_cast<float>(losses.size()));
        model.trainable.zero_grads();
        backward(batch_loss);
        float lr = options.learning_rate;
        if (options.warmup_steps > 0 && step <= options.warmup_steps) {
            lr = options.learning_rate * static_cast<float>(step) /
                 static_cast<float>(options.warmup_steps);
        }
        optimizer.step(model.trainable, lr);

        bool evaluate_now =
            (options.eval_interval > 0 && step % options.eval_interval == 0) ||
            step == options.steps;
        if (evaluate_now) {
            double metric = evaluate_dev_metric(model, data);
            result.trace.push_back({step, metric});
            if (metric > best) {
                best = metric;
                best_step = step;
                best_params = model.trainable.snapshot();
                evals_since_best = 0;
            } else {
                ++evals_since_best;
                if (options.patience > 0 && evals_since_best >= options.patience) {
                    break;
                }
            }
        }
    }
    model.trainable.restore(best_params);
    result.best_metric = best;
    result.best_step = best_step;
    return result;
}

}  // namespace pixeltext
