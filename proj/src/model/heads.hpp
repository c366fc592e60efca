#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "model/encoder.hpp"
#include "parse/edmonds.hpp"
#include "tensor/adamw.hpp"
#include "tensor/tensor.hpp"

namespace pixeltext {

// The 17-tag universal part-of-speech inventory, fixed order.
extern const std::array<const char*, 17> kUposTags;
constexpr std::size_t kNumUposTags = 17;
int upos_index(const std::string& tag);  // -1 for unknown

// Representation per word from encoder output: the word's first patch/token
// by default, mean over its span behind the flag.
TensorPtr word_representations(const TensorPtr& encoded,
                               const std::vector<std::pair<std::size_t, std::size_t>>& spans,
                               bool mean_over_span = false);

// Lowest index wins ties (bit-reproducible argmax).
std::size_t argmax_row(const TensorPtr& logits, std::size_t row);

// Linear per-word UPOS classifier.
class PosHead {
public:
    PosHead(std::size_t hidden_dim, Rng& init_rng);
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    TensorPtr forward(const TensorPtr& words) const;  // [n x 17]
    TensorPtr loss(const TensorPtr& words, const std::vector<int>& gold_tags) const;

private:
    ParamStore params_;
};

// Deep biaffine arc and label scorer with a learned root representation.
// Arc score of head h over dependent d is [head(h); 1]^T U dep(d); label
// scores are per-relation bilinear forms along an arc.
class BiaffineHead {
public:
    BiaffineHead(std::size_t hidden_dim, std::vector<std::string> relations,
                 Rng& init_rng, std::size_t arc_dim = 64, std::size_t label_dim = 32);

    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    const std::vector<std::string>& relations() const { return relations_; }

    struct Scores {
        TensorPtr arc_scores;      // [(n+1) x (n+1)], self-arcs masked
        TensorPtr head_label_aug;  // [(n+1) x (label_dim+1)]
        TensorPtr dep_label_aug;   // [(n+1) x (label_dim+1)]
        std::size_t n_words = 0;
    };

    Scores score(const TensorPtr& words) const;

    // Label logits along the arcs (heads[d] -> d), [n x R].
    TensorPtr label_logits(const Scores& scores,
                           const std::vector<std::size_t>& heads) const;

    // Arc cross-entropy over heads plus label cross-entropy along gold arcs.
    TensorPtr loss(const Scores& scores, const std::vector<std::size_t>& gold_heads,
                   const std::vector<int>& gold_relations) const;

    // Maximum arborescence under the scored arcs.
    std::vector<std::size_t> decode(const Scores& scores) const;
    std::vector<int> predict_relations(const Scores& scores,
                                       const std::vector<std::size_t>& heads) const;

    // Detached copy of arc scores with decode conventions applied: true -inf
    // on self-arcs and arcs into the root.
    static ArcMatrix arc_matrix(const Scores& scores);

private:
    std::size_t arc_dim_;
    std::size_t label_dim_;
    std::vector<std::string> relations_;
    ParamStore params_;

    TensorPtr with_root(const TensorPtr& words) const;
};

// Mean-pooled linear classifier over the encoder output.
class SequenceHead {
public:
    SequenceHead(std::size_t hidden_dim, std::size_t num_classes, Rng& init_rng);
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    std::size_t num_classes() const { return num_classes_; }

    // pooled_rows: encoder output rows to average (attention-unmasked ones).
    TensorPtr forward(const TensorPtr& encoded,
                      const std::vector<std::size_t>& pooled_rows) const;  // [1 x C]
    TensorPtr loss(const TensorPtr& encoded, const std::vector<std::size_t>& pooled_rows,
                   int gold_class) const;

private:
    std::size_t num_classes_;
    ParamStore params_;
};

}  // namespace pixeltext
