#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "render/renderer.hpp"
#include "tensor/adamw.hpp"
#include "tensor/tensor.hpp"

namespace pixeltext {

struct EncoderConfig {
    std::size_t patch_dim = kPatchPixels;  // 16x16 flattened
    std::size_t hidden_dim = 64;
    std::size_t num_layers = 2;
    std::size_t num_heads = 4;
    std::size_t mlp_ratio = 4;
    std::size_t max_positions = 256;
    float dropout_rate = 0.0f;
    std::uint64_t seed = 42;
    bool use_positions = true;       // test hook: sinusoidal table on/off
    bool pool_separator = true;      // include the separator patch in mean pooling

    void validate() const;
    // Closed-form parameter count for this config (asserted against the
    // actually allocated store).
    std::size_t parameter_count() const;

    // The published full-scale preset; desk-scale defaults are above.
    static EncoderConfig full_scale();
};

// Transformer encoder over patch embeddings: pre-norm residual blocks
// (LN -> multi-head attention -> residual; LN -> GELU MLP -> residual) with a
// final layer norm and a fixed sinusoidal position table.
class Encoder {
public:
    Encoder(EncoderConfig config, Rng& init_rng);

    const EncoderConfig& config() const { return config_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    // Linear projection of flattened patches (no positions yet).
    TensorPtr project_patches(const TensorPtr& patches) const;
    // Adds the position-table rows for indices [0, n).
    TensorPtr add_positions(const TensorPtr& x) const;
    // Projection + positions; the front door for plain encoding.
    TensorPtr embed(const TensorPtr& patches) const;

    // One multi-head self-attention block over x using this encoder's
    // parameters for `layer`. Positions whose mask entry is 0 are excluded as
    // attention keys. A mask with no visible position is an error.
    TensorPtr attention(const TensorPtr& x, const std::vector<std::uint8_t>& mask,
                        std::size_t layer) const;

    // Full stack over already-embedded inputs.
    TensorPtr encode_embedded(const TensorPtr& embedded,
                              const std::vector<std::uint8_t>& mask,
                              Rng* dropout_rng = nullptr) const;

    // Renders straight from a Rendering: project, add positions, run stack.
    TensorPtr encode(const Rendering& rendering, Rng* dropout_rng = nullptr) const;

    TensorPtr patches_tensor(const Rendering& rendering) const;
    const TensorPtr& position_table() const { return positions_; }

private:
    EncoderConfig config_;
    ParamStore params_;
    TensorPtr positions_;  // constant, not a parameter

    TensorPtr mlp(const TensorPtr& x, std::size_t layer) const;
};

// Sinusoidal position encodings, shape [positions x dim].
TensorPtr sinusoidal_positions(std::size_t positions, std::size_t dim);

std::string layer_prefix(std::size_t layer);

struct AttentionParams {
    TensorPtr wq, bq, wk, bk, wv, bv, wo, bo;
};

// Scaled dot-product multi-head self-attention. Masked keys receive an
// additive kMaskedLogit before the row softmax; heads are concatenated and
// projected. The encoder's per-layer attention and the reconstruction
// decoder both run through here.
TensorPtr multi_head_attention(const TensorPtr& x, const std::vector<std::uint8_t>& mask,
                               std::size_t num_heads, const AttentionParams& p);

}  // namespace pixeltext
