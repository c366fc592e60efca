#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "io/classify.hpp"
#include "io/conllu.hpp"
#include "model/frontend.hpp"
#include "model/heads.hpp"
#include "run/checkpoint.hpp"

namespace pixeltext {

enum class Task { pos, parse, classify };
Task task_from_string(const std::string& name);
std::string task_name(Task task);

struct FinetuneOptions {
    Task task = Task::pos;
    std::size_t steps = 300;
    std::size_t batch_size = 8;
    std::size_t warmup_steps = 10;
    float learning_rate = 1e-3f;
    float weight_decay = 0.01f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float adam_epsilon = 1e-8f;
    std::size_t eval_interval = 50;
    std::size_t patience = 5;  // evaluations without improvement before stopping
    std::uint64_t seed = 42;
    bool word_mean_pool = false;
};

// Everything needed to train or evaluate one task instance: encoder,
// front-end, the task head, and the combined trainable store.
struct TaskModel {
    EncoderConfig encoder_config;
    Task task = Task::pos;
    std::unique_ptr<Encoder> encoder;
    std::unique_ptr<MlmModel> embeddings;  // subword front-end only
    std::unique_ptr<BpeVocab> vocab;       // subword front-end only
    std::unique_ptr<FrontEnd> front_end;
    std::unique_ptr<PosHead> pos_head;
    std::unique_ptr<BiaffineHead> parse_head;
    std::unique_ptr<SequenceHead> sequence_head;
    LabelSet labels;  // classify
    ParamStore trainable;
    bool word_mean_pool = false;
};

struct TaskData {
    std::vector<Sentence> train_sentences;
    std::vector<Sentence> dev_sentences;
    std::vector<LabeledText> train_records;
    std::vector<LabeledText> dev_records;
};

struct TracePoint {
    std::size_t step;
    double dev_metric;
};

struct FinetuneResult {
    std::vector<TracePoint> trace;
    double best_metric = 0.0;
    std::size_t best_step = 0;
};

// AdamW fine-tuning with linear warmup and early stopping on the dev metric
// (accuracy for pos/classify, LAS for parse). The model holds the best-dev
// parameters when this returns.
FinetuneResult finetune(TaskModel& model, const TaskData& data,
                        const FinetuneOptions& options);

double evaluate_dev_metric(const TaskModel& model, const TaskData& data);

// Copies of the input with upos (and for parsing head/deprel) replaced by
// predictions.
std::vector<Sentence> predict_pos(const TaskModel& model,
                                  const std::vector<Sentence>& input);
std::vector<Sentence> predict_parse(const TaskModel& model,
                                    const std::vector<Sentence>& input);
std::vector<std::string> predict_classify(const TaskModel& model,
                                          const std::vector<LabeledText>& input);

}  // namespace pixeltext
