#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bpe/bpe.hpp"
#include "model/encoder.hpp"
#include "render/renderer.hpp"
#include "tensor/adamw.hpp"
#include "tensor/tensor.hpp"

namespace pixeltext {

struct SpanMaskPolicy {
    double mask_ratio = 0.25;
    std::size_t max_span_length = 6;
};

// Draws non-overlapping spans (length uniform in [1, max_span_length]) over
// the text patches until exactly round(mask_ratio * num_text_patches)
// positions are masked; the final span is trimmed to hit the count. Never
// touches the separator or padding: the returned mask covers text patches
// only. Deterministic for a given rng state.
std::vector<std::uint8_t> sample_span_mask(std::size_t num_text_patches,
                                           const SpanMaskPolicy& policy, Rng& rng);

// Light reconstruction decoder: learned mask embedding, one pre-norm
// transformer block, final layer norm and a linear head back to pixel space.
// Discarded after pretraining.
class MaeDecoder {
public:
    MaeDecoder(const EncoderConfig& encoder_config, Rng& init_rng);

    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    TensorPtr mask_embedding() const { return params_.get("mae.mask_embedding"); }

    // Pixel predictions for every position, [n x patch_dim].
    TensorPtr reconstruct_all(const TensorPtr& encoded,
                              const std::vector<std::uint8_t>& attention_mask) const;
    // Predictions restricted to masked positions, [num_masked x patch_dim].
    TensorPtr reconstruct(const TensorPtr& encoded,
                          const std::vector<std::uint8_t>& attention_mask,
                          const std::vector<std::uint8_t>& patch_mask) const;

private:
    EncoderConfig config_;
    ParamStore params_;
};

// Mean squared error over masked patches only. `pred_all` is [n x patch_dim],
// `target` the rendering's pixels, `patch_mask` 1 where reconstruction is
// required (text positions only).
TensorPtr mae_loss(const TensorPtr& pred_all, const Rendering& target,
                   const std::vector<std::uint8_t>& patch_mask);

// Full masked-autoencoding forward pass for one rendering: projects patches,
// substitutes the learned mask embedding at masked positions (pixel values at
// those positions therefore cannot leak), encodes, reconstructs, and scores.
struct MaeForward {
    TensorPtr loss;
    TensorPtr predictions_all;
    std::vector<std::uint8_t> full_mask;  // patch_mask padded to max_patches
};
MaeForward mae_forward(const Encoder& encoder, const MaeDecoder& decoder,
                       const Rendering& rendering,
                       const std::vector<std::uint8_t>& text_mask);

struct PretrainConfig {
    std::size_t steps = 200;
    std::size_t batch_size = 8;
    std::size_t warmup_steps = 10;
    float learning_rate = 3e-3f;
    float weight_decay = 0.01f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float adam_epsilon = 1e-8f;
    double mask_ratio = 0.25;
    std::size_t max_span_length = 6;
    double mlm_mask_ratio = 0.15;
    std::size_t max_patches = 64;  // also the subword sequence length
    std::uint64_t seed = 42;
};

struct LossPoint {
    std::size_t step;
    float loss;
    float learning_rate;
};

struct PretrainResult {
    std::vector<LossPoint> curve;
};

using CheckpointHook = std::function<void(std::size_t step)>;

// Shuffled mini-batch MAE loop with AdamW and linear warmup.
PretrainResult pretrain_mae(Encoder& encoder, MaeDecoder& decoder,
                            const std::vector<std::string>& corpus,
                            const PretrainConfig& config,
                            const GlyphAtlas& atlas = GlyphAtlas::embedded(),
                            const CheckpointHook& hook = nullptr);

// Masked-token front-end parity: embedding table + vocabulary-sized output
// head over the identical encoder stack.
class MlmModel {
public:
    MlmModel(const EncoderConfig& encoder_config, std::size_t vocab_size, Rng& init_rng);

    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    // Embedding lookup plus the encoder's position table (parity with
    // patch projection + positions on the pixel side).
    TensorPtr token_embed(const Encoder& encoder, const std::vector<int>& ids) const;
    TensorPtr logits(const TensorPtr& encoded) const;

    std::size_t vocab_size() const { return vocab_size_; }

private:
    std::size_t vocab_size_;
    ParamStore params_;
};

PretrainResult pretrain_mlm(Encoder& encoder, MlmModel& model, const BpeVocab& vocab,
                            const std::vector<std::string>& corpus,
                            const PretrainConfig& config,
                            const CheckpointHook& hook = nullptr);

}  // namespace pixeltext
