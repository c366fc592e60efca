#include "model/encoder.hpp"

#include <cmath>

#include "common/error.hpp"

namespace pixeltext {

void EncoderConfig::validate() const {
    if (hidden_dim == 0 || num_layers == 0 || num_heads == 0 || mlp_ratio == 0) {
        throw ConfigError("encoder: hidden_dim/num_layers/num_heads/mlp_ratio must be positive");
    }
    if (hidden_dim % num_heads != 0) {
        throw ConfigError("encoder: hidden_dim " + std::to_string(hidden_dim) +
                          " not divisible by num_heads " + std::to_string(num_heads));
    }
    if (dropout_rate < 0.0f || dropout_rate >= 1.0f) {
        throw ConfigError("encoder: dropout_rate must lie in [0, 1)");
    }
    if (max_positions == 0) {
        throw ConfigError("encoder: max_positions must be positive");
    }
}

std::size_t EncoderConfig::parameter_count() const {
    std::size_t h = hidden_dim;
    std::size_t r = mlp_ratio;
    std::size_t per_layer = 4 * h * h + 2 * r * h * h + 9 * h + r * h;
    return patch_dim * h + h + num_layers * per_layer + 2 * h;
}

EncoderConfig EncoderConfig::full_scale() {
    EncoderConfig c;
    c.hidden_dim = 768;
    c.num_layers = 12;
    c.num_heads = 12;
    c.mlp_ratio = 4;
    c.max_positions = 529;
    return c;
}

std::string layer_prefix(std::size_t layer) {
    return "enc.layer" + std::to_string(layer) + ".";
}

TensorPtr sinusoidal_positions(std::size_t positions, std::size_t dim) {
    std::vector<float> table(positions * dim);
    for (std::size_t p = 0; p < positions; ++p) {
        for (std::size_t j = 0; j < dim; ++j) {
            double freq = std::pow(10000.0, -2.0 * static_cast<double>(j / 2) /
                                                static_cast<double>(dim));
            double angle = static_cast<double>(p) * freq;
            table[p * dim + j] =
                static_cast<float>((j % 2 == 0) ? std::sin(angle) : std::cos(angle));
        }
    }
    return Tensor::create({positions, dim}, std::move(table));
}

Encoder::Encoder(EncoderConfig config, Rng& init_rng) : config_(config) {
    config_.validate();
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

    weight("enc.patch_proj.weight", config_.patch_dim, h);
    vec("enc.patch_proj.bias", h, 0.0f);
    for (std::size_t l = 0; l < config_.num_layers; ++l) {
        std::string p = layer_prefix(l);
        vec(p + "ln1.gain", h, 1.0f);
        vec(p + "ln1.bias", h, 0.0f);
        weight(p + "attn.wq", h, h);
        vec(p + "attn.bq", h, 0.0f);
        weight(p + "attn.wk", h, h);
        vec(p + "attn.bk", h, 0.0f);
        weight(p + "attn.wv", h, h);
        vec(p + "attn.bv", h, 0.0f);
        weight(p + "attn.wo", h, h);
        vec(p + "attn.bo", h, 0.0f);
        vec(p + "ln2.gain", h, 1.0f);
        vec(p + "ln2.bias", h, 0.0f);
        weight(p + "mlp.w1", h, config_.mlp_ratio * h);
        vec(p + "mlp.b1", config_.mlp_ratio * h, 0.0f);
        weight(p + "mlp.w2", config_.mlp_ratio * h, h);
        vec(p + "mlp.b2", h, 0.0f);
    }
    vec("enc.final_ln.gain", h, 1.0f);
    vec("enc.final_ln.bias", h, 0.0f);

    if (params_.total_values() != config_.parameter_count()) {
        throw InternalError("encoder: allocated " + std::to_string(params_.total_values()) +
                            " parameters but the closed form gives " +
                            std::to_string(config_.parameter_count()));
    }
    positions_ = sinusoidal_positions(config_.max_positions, h);
}

TensorPtr Encoder::project_patches(const TensorPtr& patches) const {
    return add_row_broadcast(matmul(patches, params_.get("enc.patch_proj.weight")),
                             params_.get("enc.patch_proj.bias"));
}

TensorPtr Encoder::add_positions(const TensorPtr& x) const {
    if (!config_.use_positions) {
        return x;
    }
    std::size_t n = x->shape[0];
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
        rows[i] = i;
    }
    return add(x, select_rows(positions_, rows));
}

TensorPtr Encoder::embed(const TensorPtr& patches) const {
    if (patches->shape[0] > config_.max_positions) {
        throw DataError("encoder: sequence length " + std::to_string(patches->shape[0]) +
                        " exceeds max_positions " + std::to_string(config_.max_positions));
    }
    return add_positions(project_patches(patches));
}

TensorPtr multi_head_attention(const TensorPtr& x, const std::vector<std::uint8_t>& mask,
                               std::size_t num_heads, const AttentionParams& p) {
    std::size_t n = x->shape[0];
    std::size_t h = x->shape[1];
    if (mask.size() != n) {
        throw InternalError("attention: mask length " + std::to_string(mask.size()) +
                            " vs sequence length " + std::to_string(n));
    }
    bool any_visible = false;
    for (std::uint8_t m : mask) {
        any_visible = any_visible || (m != 0);
    }
    if (!any_visible) {
        throw DataError("attention: every position is masked out");
    }
    TensorPtr q = add_row_broadcast(matmul(x, p.wq), p.bq);
    TensorPtr k = add_row_broadcast(matmul(x, p.wk), p.bk);
    TensorPtr v = add_row_broadcast(matmul(x, p.wv), p.bv);

    // Additive key mask: 0 for visible keys, a huge negative for padding.
    std::vector<float> bias(n * n, 0.0f);
    for (std::size_t j = 0; j < n; ++j) {
        if (!mask[j]) {
            for (std::size_t i = 0; i < n; ++i) {
                bias[i * n + j] = kMaskedLogit;
            }
        }
    }
    TensorPtr mask_bias = Tensor::create({n, n}, std::move(bias));

    std::size_t dh = h / num_heads;
    float scale_factor = 1.0f / std::sqrt(static_cast<float>(dh));
    std::vector<TensorPtr> heads;
    heads.reserve(num_heads);
    for (std::size_t head = 0; head < num_heads; ++head) {
        TensorPtr qh = slice_cols(q, head * dh, (head + 1) * dh);
        TensorPtr kh = slice_cols(k, head * dh, (head + 1) * dh);
        TensorPtr vh = slice_cols(v, head * dh, (head + 1) * dh);
        TensorPtr scores = scale(matmul(qh, transpose(kh)), scale_factor);
        TensorPtr probs = softmax(add(scores, mask_bias), 1);
        heads.push_back(matmul(probs, vh));
    }
    TensorPtr merged = num_heads == 1 ? heads[0] : concat_cols(heads);
    return add_row_broadcast(matmul(merged, p.wo), p.bo);
}

TensorPtr Encoder::attention(const TensorPtr& x, const std::vector<std::uint8_t>& mask,
                             std::size_t layer) const {
    std::string p = layer_prefix(layer);
    AttentionParams ap{params_.get(p + "attn.wq"), params_.get(p + "attn.bq"),
                       params_.get(p + "attn.wk"), params_.get(p + "attn.bk"),
                       params_.get(p + "attn.wv"), params_.get(p + "attn.bv"),
                       params_.get(p + "attn.wo"), params_.get(p + "attn.bo")};
    return multi_head_attention(x, mask, config_.num_heads, ap);
}

TensorPtr Encoder::mlp(const TensorPtr& x, std::size_t layer) const {
    std::string p = layer_prefix(layer);
    TensorPtr hidden = gelu(add_row_broadcast(matmul(x, params_.get(p + "mlp.w1")),
                                              params_.get(p + "mlp.b1")));
    return add_row_broadcast(matmul(hidden, params_.get(p + "mlp.w2")),
                             params_.get(p + "mlp.b2"));
}

TensorPtr Encoder::encode_embedded(const TensorPtr& embedded,
                                   const std::vector<std::uint8_t>& mask,
                                   Rng* dropout_rng) const {
    TensorPtr x = embedded;
    bool use_dropout = config_.dropout_rate > 0.0f && dropout_rng != nullptr;
    for (std::size_t l = 0; l < config_.num_layers; ++l) {
        std::string p = layer_prefix(l);
        TensorPtr attn_in =
            layer_norm(x, params_.get(p + "ln1.gain"), params_.get(p + "ln1.bias"), 1e-5f);
        TensorPtr attn_out = attention(attn_in, mask, l);
        if (use_dropout) {
            attn_out = dropout(attn_out, config_.dropout_rate, *dropout_rng);
        }
        x = add(x, attn_out);
        TensorPtr mlp_in =
            layer_norm(x, params_.get(p + "ln2.gain"), params_.get(p + "ln2.bias"), 1e-5f);
        TensorPtr mlp_out = mlp(mlp_in, l);
        if (use_dropout) {
            mlp_out = dropout(mlp_out, config_.dropout_rate, *dropout_rng);
        }
        x = add(x, mlp_out);
    }
    return layer_norm(x, params_.get("enc.final_ln.gain"), params_.get("enc.final_ln.bias"),
                      1e-5f);
}

TensorPtr Encoder::patches_tensor(const Rendering& rendering) const {
    return Tensor::create({rendering.max_patches, kPatchPixels}, rendering.patches);
}

TensorPtr Encoder::encode(const Rendering& rendering, Rng* dropout_rng) const {
    if (rendering.max_patches > config_.max_positions) {
        throw DataError("encoder: rendering has " + std::to_string(rendering.max_patches) +
                        " patches, max_positions is " + std::to_string(config_.max_positions));
    }
    TensorPtr x = embed(patches_tensor(rendering));
    return encode_embedded(x, rendering.attention_mask, dropout_rng);
}

}  // namespace pixeltext
