#include "model/heads.hpp"

#include <cmath>
#include <limits>

#include "common/error.hpp"

namespace pixeltext {

const std::array<const char*, 17> kUposTags = {
    "ADJ",  "ADP",  "ADV",  "AUX",   "CCONJ", "DET",  "INTJ", "NOUN", "NUM",
    "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM",  "VERB", "X"};

int upos_index(const std::string& tag) {
    for (std::size_t i = 0; i < kUposTags.size(); ++i) {
        if (tag == kUposTags[i]) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

TensorPtr word_representations(const TensorPtr& encoded,
                               const std::vector<std::pair<std::size_t, std::size_t>>& spans,
                               bool mean_over_span) {
    if (spans.empty()) {
        throw DataError("word_representations: empty span list");
    }
    if (!mean_over_span) {
        std::vector<std::size_t> rows;
        rows.reserve(spans.size());
        for (const auto& [first, last] : spans) {
            (void)last;
            rows.push_back(first);
        }
        return select_rows(encoded, rows);
    }
    // Mean over each span, stacked back into one matrix.
    TensorPtr stacked;
    for (const auto& [first, last] : spans) {
        std::vector<std::size_t> rows;
        for (std::size_t i = first; i <= last; ++i) {
            rows.push_back(i);
        }
        TensorPtr row = reshape(mean_rows(encoded, rows), {1, encoded->shape[1]});
        stacked = stacked ? concat_rows(stacked, row) : row;
    }
    return stacked;
}

std::size_t argmax_row(const TensorPtr& logits, std::size_t row) {
    std::size_t cols = logits->shape[1];
    std::size_t best = 0;
    float best_value = logits->at(row, 0);
    for (std::size_t j = 1; j < cols; ++j) {
        if (logits->at(row, j) > best_value) {
            best_value = logits->at(row, j);
            best = j;
        }
    }
    return best;
}

namespace {

TensorPtr init_weight(ParamStore& store, const std::string& name, std::size_t rows,
                      std::size_t cols, Rng& rng) {
    std::vector<float> values(rows * cols);
    for (auto& v : values) {
        v = rng.truncated_normal(0.02f);
    }
    return store.add(name, Tensor::create({rows, cols}, std::move(values)));
}

}  // namespace

// --------------------------------------------------------------------- PosHead

PosHead::PosHead(std::size_t hidden_dim, Rng& init_rng) {
    init_weight(params_, "pos.weight", hidden_dim, kNumUposTags, init_rng);
    params_.add("pos.bias", Tensor::zeros({kNumUposTags}));
}

TensorPtr PosHead::forward(const TensorPtr& words) const {
    return add_row_broadcast(matmul(words, params_.get("pos.weight")),
                             params_.get("pos.bias"));
}

TensorPtr PosHead::loss(const TensorPtr& words, const std::vector<int>& gold_tags) const {
    return cross_entropy(forward(words), gold_tags, -1);
}

// ---------------------------------------------------------------- BiaffineHead

BiaffineHead::BiaffineHead(std::size_t hidden_dim, std::vector<std::string> relations,
                           Rng& init_rng, std::size_t arc_dim, std::size_t label_dim)
    : arc_dim_(arc_dim), label_dim_(label_dim), relations_(std::move(relations)) {
    if (relations_.empty()) {
        throw ConfigError("biaffine head: empty relation inventory");
    }
    init_weight(params_, "parse.root", 1, hidden_dim, init_rng);
    init_weight(params_, "parse.arc_head.weight", hidden_dim, arc_dim_, init_rng);
    params_.add("parse.arc_head.bias", Tensor::zeros({arc_dim_}));
    init_weight(params_, "parse.arc_dep.weight", hidden_dim, arc_dim_, init_rng);
    params_.add("parse.arc_dep.bias", Tensor::zeros({arc_dim_}));
    init_weight(params_, "parse.arc_u", arc_dim_ + 1, arc_dim_, init_rng);
    init_weight(params_, "parse.label_head.weight", hidden_dim, label_dim_, init_rng);
    params_.add("parse.label_head.bias", Tensor::zeros({label_dim_}));
    init_weight(params_, "parse.label_dep.weight", hidden_dim, label_dim_, init_rng);
    params_.add("parse.label_dep.bias", Tensor::zeros({label_dim_}));
    // One (label_dim+1) x (label_dim+1) bilinear form per relation, stored as
    // horizontally stacked blocks.
    init_weight(params_, "parse.label_u", label_dim_ + 1,
                relations_.size() * (label_dim_ + 1), init_rng);
}

TensorPtr BiaffineHead::with_root(const TensorPtr& words) const {
    return concat_rows(params_.get("parse.root"), words);
}

BiaffineHead::Scores BiaffineHead::score(const TensorPtr& words) const {
    std::size_t n = words->shape[0];
    if (n == 0) {
        throw DataError("biaffine: no words to score");
    }
    TensorPtr reps = with_root(words);  // [(n+1) x hidden]
    TensorPtr arc_head = gelu(add_row_broadcast(
        matmul(reps, params_.get("parse.arc_head.weight")),
        params_.get("parse.arc_head.bias")));
    TensorPtr arc_dep = gelu(add_row_broadcast(
        matmul(reps, params_.get("parse.arc_dep.weight")),
        params_.get("parse.arc_dep.bias")));
    TensorPtr arc = matmul(matmul(append_ones_column(arc_head), params_.get("parse.arc_u")),
                           transpose(arc_dep));

    // Self-arcs are never legal; mask them out of every softmax.
    std::size_t m = n + 1;
    std::vector<float> diag(m * m, 0.0f);
    for (std::size_t i = 0; i < m; ++i) {
        diag[i * m + i] = kMaskedLogit;
    }
    arc = add(arc, Tensor::create({m, m}, std::move(diag)));

    TensorPtr label_head = gelu(add_row_broadcast(
        matmul(reps, params_.get("parse.label_head.weight")),
        params_.get("parse.label_head.bias")));
    TensorPtr label_dep = gelu(add_row_broadcast(
        matmul(reps, params_.get("parse.label_dep.weight")),
        params_.get("parse.label_dep.bias")));

    Scores s;
    s.arc_scores = arc;
    s.head_label_aug = append_ones_column(label_head);
    s.dep_label_aug = append_ones_column(label_dep);
    s.n_words = n;
    return s;
}

TensorPtr BiaffineHead::label_logits(const Scores& scores,
                                     const std::vector<std::size_t>& heads) const {
    std::size_t n = scores.n_words;
    if (heads.size() != n) {
        throw InternalError("label_logits: head count mismatch");
    }
    std::vector<std::size_t> dep_rows(n);
    for (std::size_t d = 0; d < n; ++d) {
        dep_rows[d] = d + 1;
    }
    TensorPtr head_rows = select_rows(scores.head_label_aug, heads);   // [n x (l+1)]
    TensorPtr dep_sel = select_rows(scores.dep_label_aug, dep_rows);   // [n x (l+1)]
    TensorPtr mixed = matmul(head_rows, params_.get("parse.label_u"));  // [n x R(l+1)]
    std::size_t block = label_dim_ + 1;
    std::vector<TensorPtr> cols;
    cols.reserve(relations_.size());
    for (std::size_t r = 0; r < relations_.size(); ++r) {
        TensorPtr slab = slice_cols(mixed, r * block, (r + 1) * block);
        cols.push_back(reshape(sum_axis1(mul(slab, dep_sel)), {n, 1}));
    }
    return cols.size() == 1 ? cols[0] : concat_cols(cols);
}

TensorPtr BiaffineHead::loss(const Scores& scores, const std::vector<std::size_t>& gold_heads,
                             const std::vector<int>& gold_relations) const {
    std::size_t n = scores.n_words;
    if (gold_heads.size() != n || gold_relations.size() != n) {
        throw InternalError("biaffine loss: annotation length mismatch");
    }
    // Head distribution per dependent: transpose to rows = dependents.
    TensorPtr by_dep = transpose(scores.arc_scores);  // [(n+1) x (n+1)]
    std::vector<std::size_t> dep_rows(n);
    std::vector<int> head_labels(n);
    for (std::size_t d = 0; d < n; ++d) {
        dep_rows[d] = d + 1;
        head_labels[d] = static_cast<int>(gold_heads[d]);
    }
    TensorPtr arc_loss = cross_entropy(select_rows(by_dep, dep_rows), head_labels, -1);
    TensorPtr rel_loss =
        cross_entropy(label_logits(scores, gold_heads), gold_relations, -1);
    return add(arc_loss, rel_loss);
}

ArcMatrix BiaffineHead::arc_matrix(const Scores& scores) {
    std::size_t m = scores.n_words + 1;
    constexpr double kInf = std::numeric_limits<double>::infinity();
    ArcMatrix matrix(m, std::vector<double>(m, -kInf));
    for (std::size_t h = 0; h < m; ++h) {
        for (std::size_t d = 1; d < m; ++d) {
            if (h == d) {
                continue;
            }
            matrix[h][d] = static_cast<double>(scores.arc_scores->at(h, d));
        }
    }
    return matrix;
}

std::vector<std::size_t> BiaffineHead::decode(const Scores& scores) const {
    return decode_tree(arc_matrix(scores));
}

std::vector<int> BiaffineHead::predict_relations(const Scores& scores,
                                                 const std::vector<std::size_t>& heads) const {
    TensorPtr logits = label_logits(scores, heads);
    std::vector<int> out(scores.n_words);
    for (std::size_t d = 0; d < scores.n_words; ++d) {
        out[d] = static_cast<int>(argmax_row(logits, d));
    }
    return out;
}

// ---------------------------------------------------------------- SequenceHead

SequenceHead::SequenceHead(std::size_t hidden_dim, std::size_t num_classes, Rng& init_rng)
    : num_classes_(num_classes) {
    if (num_classes == 0) {
        throw ConfigError("sequence head: num_classes must be positive");
    }
    init_weight(params_, "cls.weight", hidden_dim, num_classes, init_rng);
    params_.add("cls.bias", Tensor::zeros({num_classes}));
}

TensorPtr SequenceHead::forward(const TensorPtr& encoded,
                                const std::vector<std::size_t>& pooled_rows) const {
    TensorPtr pooled = reshape(mean_rows(encoded, pooled_rows), {1, encoded->shape[1]});
    return add_row_broadcast(matmul(pooled, params_.get("cls.weight")),
                             params_.get("cls.bias"));
}

TensorPtr SequenceHead::loss(const TensorPtr& encoded,
                             const std::vector<std::size_t>& pooled_rows,
                             int gold_class) const {
    return cross_entropy(forward(encoded, pooled_rows), {gold_class}, -1);
}

}  // namespace pixeltext
