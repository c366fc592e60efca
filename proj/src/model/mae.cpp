#include "model/mae.hpp"

#include <cmath>

#include "common/error.hpp"

namespace pixeltext {

std::vector<std::uint8_t> sample_span_mask(std::size_t num_text_patches,
                                           const SpanMaskPolicy& policy, Rng& rng) {
    if (num_text_patches == 0) {
        throw DataError("sample_span_mask: no text patches");
    }
    if (policy.mask_ratio <= 0.0 || policy.mask_ratio >= 1.0) {
        throw ConfigError("sample_span_mask: mask_ratio must lie in (0, 1)");
    }
    if (policy.max_span_length == 0) {
        throw ConfigError("sample_span_mask: max_span_length must be positive");
    }
    std::size_t target = static_cast<std::size_t>(
        std::llround(policy.mask_ratio * static_cast<double>(num_text_patches)));
    if (target >= num_text_patches) {
        throw DataError("sample_span_mask: requested " + std::to_string(target) +
                        " masked patches of " + std::to_string(num_text_patches));
    }
    std::vector<std::uint8_t> mask(num_text_patches, 0);
    if (target == 0) {
        return mask;
    }
    std::size_t masked = 0;
    std::size_t rejects = 0;
    while (masked < target) {
        std::size_t len = 1 + rng.below(static_cast<std::uint32_t>(policy.max_span_length));
        len = std::min(len, target - masked);
        std::size_t start =
            rng.below(static_cast<std::uint32_t>(num_text_patches - len + 1));
        bool overlap = false;
        for (std::size_t i = start; i < start + len; ++i) {
            overlap = overlap || mask[i];
        }
        if (overlap) {
            // Rejection sampling terminates with probability 1, but cap it
            // and fall back to the first free cells for bounded runtime.
            if (++rejects > 256) {
                for (std::size_t i = 0; i < num_text_patches && masked < target; ++i) {
                    if (!mask[i]) {
                        mask[i] = 1;
                        ++masked;
                    }
                }
            }
            continue;
        }
        for (std::size_t i = start; i < start + len; ++i) {
            mask[i] = 1;
        }
        masked += len;
        rejects = 0;
    }
    return mask;
}

MaeDecoder::MaeDecoder(const EncoderConfig& encoder_config, Rng& init_rng)
    : config_(encoder_config) {
    std::size_t h = config_.hidden_dim;
    auto weight = [&](const std::string& name, std::size_t rows, std::size_t cols) {
        std::vector<float> values(rows * cols);
        for (auto& v : values) {
            v = init_rng.truncated_normal(0.02f);
        }
        params_.add(name, Tensor::create({rows, cols}, std::move(values)));
    };
    auto vec = [&](const std::string& name, std::size_t n, float fill) {
        params_.add(name, Tensor::full({n}, fill));
    };
    std::vector<float> mask_emb(h);
    for (auto& v : mask_emb) {
        v = init_rng.truncated_normal(0.02f);
    }
    params_.add("mae.mask_embedding", Tensor::create({h}, std::move(mask_emb)));
    vec("mae.dec.ln1.gain", h, 1.0f);
    vec("mae.dec.ln1.bias", h, 0.0f);
    weight("mae.dec.attn.wq", h, h);
    vec("mae.dec.attn.bq", h, 0.0f);
    weight("mae.dec.attn.wk", h, h);
    vec("mae.dec.attn.bk", h, 0.0f);
    weight("mae.dec.attn.wv", h, h);
    vec("mae.dec.attn.bv", h, 0.0f);
    weight("mae.dec.attn.wo", h, h);
    vec("mae.dec.attn.bo", h, 0.0f);
    vec("mae.dec.ln2.gain", h, 1.0f);
    vec("mae.dec.ln2.bias", h, 0.0f);
    weight("mae.dec.mlp.w1", h, config_.mlp_ratio * h);
    vec("mae.dec.mlp.b1", config_.mlp_ratio * h, 0.0f);
    weight("mae.dec.mlp.w2", config_.mlp_ratio * h, h);
    vec("mae.dec.mlp.b2", h, 0.0f);
    vec("mae.dec.final_ln.gain", h, 1.0f);
    vec("mae.dec.final_ln.bias", h, 0.0f);
    weight("mae.head.weight", h, config_.patch_dim);
    vec("mae.head.bias", config_.patch_dim, 0.0f);
}

TensorPtr MaeDecoder::reconstruct_all(const TensorPtr& encoded,
                                      const std::vector<std::uint8_t>& attention_mask) const {
    AttentionParams ap{params_.get("mae.dec.attn.wq"), params_.get("mae.dec.attn.bq"),
                       params_.get("mae.dec.attn.wk"), params_.get("mae.dec.attn.bk"),
                       params_.get("mae.dec.attn.wv"), params_.get("mae.dec.attn.bv"),
                       params_.get("mae.dec.attn.wo"), params_.get("mae.dec.attn.bo")};
    TensorPtr x = encoded;
    TensorPtr h1 = layer_norm(x, params_.get("mae.dec.ln1.gain"),
                              params_.get("mae.dec.ln1.bias"), 1e-5f);
    x = add(x, multi_head_attention(h1, attention_mask, config_.num_heads, ap));
    TensorPtr h2 = layer_norm(x, params_.get("mae.dec.ln2.gain"),
                              params_.get("mae.dec.ln2.bias"), 1e-5f);
    TensorPtr m = gelu(add_row_broadcast(matmul(h2, params_.get("mae.dec.mlp.w1")),
                                         params_.get("mae.dec.mlp.b1")));
    m = add_row_broadcast(matmul(m, params_.get("mae.dec.mlp.w2")),
                          params_.get("mae.dec.mlp.b2"));
    x = add(x, m);
    x = layer_norm(x, params_.get("mae.dec.final_ln.gain"),
                   params_.get("mae.dec.final_ln.bias"), 1e-5f);
    return add_row_broadcast(matmul(x, params_.get("mae.head.weight")),
                             params_.get("mae.head.bias"));
}

namespace {

std::vector<std::size_t> masked_positions(const std::vector<std::uint8_t>& patch_mask) {
    std::vector<std::size_t> positions;
    for (std::size_t i = 0; i < patch_mask.size(); ++i) {
        if (patch_mask[i]) {
            positions.push_back(i);
        }
    }
    return positions;
}

}  // namespace

TensorPtr MaeDecoder::reconstruct(const TensorPtr& encoded,
                                  const std::vector<std::uint8_t>& attention_mask,
                                  const std::vector<std::uint8_t>& patch_mask) const {
    auto positions = masked_positions(patch_mask);
    if (positions.empty()) {
        throw DataError("reconstruct: empty mask, nothing to reconstruct");
    }
    return select_rows(reconstruct_all(encoded, attention_mask), positions);
}

TensorPtr mae_loss(const TensorPtr& pred_all, const Rendering& target,
                   const std::vector<std::uint8_t>& patch_mask) {
    if (pred_all->shape[0] != patch_mask.size()) {
        throw InternalError("mae_loss: mask length " + std::to_string(patch_mask.size()) +
                            " vs " + std::to_string(pred_all->shape[0]) + " predictions");
    }
    auto positions = masked_positions(patch_mask);
    if (positions.empty()) {
        throw DataError("mae_loss: empty mask");
    }
    std::vector<float> target_rows(positions.size() * kPatchPixels);
    for (std::size_t i = 0; i < positions.size(); ++i) {
        const float* src = target.patch(positions[i]);
        std::copy(src, src + kPatchPixels, target_rows.begin() +
                                               static_cast<std::ptrdiff_t>(i * kPatchPixels));
    }
    TensorPtr target_tensor =
        Tensor::create({positions.size(), kPatchPixels}, std::move(target_rows));
    return mse(select_rows(pred_all, positions), target_tensor);
}

MaeForward mae_forward(const Encoder& encoder, const MaeDecoder& decoder,
                       const Rendering& rendering,
                       const std::vector<std::uint8_t>& text_mask) {
    if (text_mask.size() != rendering.num_text_patches) {
        throw InternalError("mae_forward: text mask length mismatch");
    }
    MaeForward out;
    out.full_mask.assign(rendering.max_patches, 0);
    std::copy(text_mask.begin(), text_mask.end(), out.full_mask.begin());

    TensorPtr x = encoder.project_patches(encoder.patches_tensor(rendering));
    x = substitute_rows(x, out.full_mask, decoder.mask_embedding());
    x = encoder.add_positions(x);
    TensorPtr encoded = encoder.encode_embedded(x, rendering.attention_mask);
    out.predictions_all = decoder.reconstruct_all(encoded, rendering.attention_mask);
    out.loss = mae_loss(out.predictions_all, rendering, out.full_mask);
    return out;
}

// ------------------------------------------------------------- training loops

namespace {

// Shared shuffled mini-batch driver. `sample` returns a loss tensor for one
// line or nullptr when the line is unusable (blank, nothing masked).
PretrainResult run_pretrain_loop(
    ParamStore& params, const std::vector<std::string>& corpus,
    const PretrainConfig& config, const CheckpointHook& hook,
    const std::function<TensorPtr(const std::string&)>& sample) {
    if (corpus.empty()) {
        throw DataError("pretrain: empty corpus");
    }
    if (config.batch_size == 0) {
        throw ConfigError("pretrain: batch_size must be positive");
    }
    AdamWConfig opt_cfg;
    opt_cfg.learning_rate = config.learning_rate;
    opt_cfg.beta1 = config.beta1;
    opt_cfg.beta2 = config.beta2;
    opt_cfg.epsilon = config.adam_epsilon;
    opt_cfg.weight_decay = config.weight_decay;
    AdamW optimizer(params, opt_cfg);

    Rng shuffle_rng(config.seed, RngStream::shuffling);
    std::vector<std::size_t> order(corpus.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    shuffle_rng.shuffle(order);
    std::size_t cursor = 0;

    PretrainResult result;
    result.curve.reserve(config.steps);
    for (std::size_t step = 1; step <= config.steps; ++step) {
        std::vector<TensorPtr> losses;
        std::size_t attempts = 0;
        while (losses.size() < config.batch_size && attempts < 2 * corpus.size() + 2) {
            ++attempts;
            if (cursor == order.size()) {
                shuffle_rng.shuffle(order);
                cursor = 0;
            }
            const std::string& line = corpus[order[cursor++]];
            TensorPtr loss = sample(line);
            if (loss) {
                losses.push_back(loss);
            }
        }
        if (losses.empty()) {
            throw DataError("pretrain: corpus has no usable lines");
        }
        TensorPtr batch_loss = losses[0];
        for (std::size_t i = 1; i < losses.size(); ++i) {
            batch_loss = add(batch_loss, losses[i]);
        }
        batch_loss = scale(batch_loss, 1.0f / static_cast<float>(losses.size()));

        params.zero_grads();
        backward(batch_loss);
        float lr = config.learning_rate;
        if (config.warmup_steps > 0 && step <= config.warmup_steps) {
            lr = config.learning_rate * static_cast<float>(step) /
                 static_cast<float>(config.warmup_steps);
        }
        optimizer.step(params, lr);
        result.curve.push_back({step, batch_loss->item(), lr});
        if (hook) {
            hook(step);
        }
    }
    return result;
}

}  // namespace

PretrainResult pretrain_mae(Encoder& encoder, MaeDecoder& decoder,
                            const std::vector<std::string>& corpus,
                            const PretrainConfig& config, const GlyphAtlas& atlas,
                            const CheckpointHook& hook) {
    ParamStore params;
    params.merge(encoder.params());
    params.merge(decoder.params());
    SpanMaskPolicy policy{config.mask_ratio, config.max_span_length};
    Rng mask_rng(config.seed, RngStream::masking);
    auto sample = [&](const std::string& line) -> TensorPtr {
        Rendering r = render_text(line, config.max_patches, atlas);
        if (r.num_text_patches == 0) {
            return nullptr;
        }
        auto mask = sample_span_mask(r.num_text_patches, policy, mask_rng);
        bool any = false;
        for (auto m : mask) {
            any = any || m;
        }
        if (!any) {
            return nullptr;
        }
        return mae_forward(encoder, decoder, r, mask).loss;
    };
    return run_pretrain_loop(params, corpus, config, hook, sample);
}

MlmModel::MlmModel(const EncoderConfig& encoder_config, std::size_t vocab_size, Rng& init_rng)
    : vocab_size_(vocab_size) {
    std::size_t h = encoder_config.hidden_dim;
    auto weight = [&](const std::string& name, std::size_t rows, std::size_t cols) {
        std::vector<float> values(rows * cols);
        for (auto& v : values) {
            v = init_rng.truncated_normal(0.02f);
        }
        params_.add(name, Tensor::create({rows, cols}, std::move(values)));
    };
    weight("tok.embedding", vocab_size, h);
    weight("mlm.head.weight", h, vocab_size);
    params_.add("mlm.head.bias", Tensor::zeros({vocab_size}));
}

TensorPtr MlmModel::token_embed(const Encoder& encoder, const std::vector<int>& ids) const {
    std::vector<std::size_t> rows;
    rows.reserve(ids.size());
    for (int id : ids) {
        if (id < 0 || static_cast<std::size_t>(id) >= vocab_size_) {
            throw DataError("token_embed: id " + std::to_string(id) + " out of range");
        }
        rows.push_back(static_cast<std::size_t>(id));
    }
    return encoder.add_positions(select_rows(params_.get("tok.embedding"), rows));
}

TensorPtr MlmModel::logits(const TensorPtr& encoded) const {
    return add_row_broadcast(matmul(encoded, params_.get("mlm.head.weight")),
                             params_.get("mlm.head.bias"));
}

PretrainResult pretrain_mlm(Encoder& encoder, MlmModel& model, const BpeVocab& vocab,
                            const std::vector<std::string>& corpus,
                            const PretrainConfig& config, const CheckpointHook& hook) {
    ParamStore params;
    params.merge(encoder.params());
    params.merge(model.params());
    Rng mask_rng(config.seed, RngStream::mlm);
    std::size_t seq_len = config.max_patches;
    auto sample = [&](const std::string& line) -> TensorPtr {
        std::vector<int> ids = encode_bpe(line, vocab);
        if (ids.empty()) {
            return nullptr;
        }
        if (ids.size() > seq_len - 1) {
            ids.resize(seq_len - 1);
        }
        std::size_t content = ids.size();
        ids.push_back(vocab.sep_id);
        std::size_t real = ids.size();

        std::vector<int> labels(seq_len, -1);
        std::vector<int> input(seq_len, vocab.pad_id);
        std::vector<std::uint8_t> attn(seq_len, 0);
        bool any_masked = false;
        for (std::size_t i = 0; i < real; ++i) {
            input[i] = ids[i];
            attn[i] = 1;
        }
        for (std::size_t i = 0; i < content; ++i) {
            if (mask_rng.uniform_double() < config.mlm_mask_ratio) {
                labels[i] = ids[i];
                input[i] = vocab.mask_id;
                any_masked = true;
            }
        }
        if (!any_masked) {
            std::size_t pick = mask_rng.below(static_cast<std::uint32_t>(content));
            labels[pick] = ids[pick];
            input[pick] = vocab.mask_id;
        }
        TensorPtr embedded = model.token_embed(encoder, input);
        TensorPtr encoded = encoder.encode_embedded(embedded, attn);
        return cross_entropy(model.logits(encoded), labels, -1);
    };
    return run_pretrain_loop(params, corpus, config, hook, sample);
}

}  // namespace pixeltext
