#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "bpe/bpe.hpp"
#include "model/encoder.hpp"
#include "model/mae.hpp"
#include "render/renderer.hpp"
#include "tensor/tensor.hpp"

namespace pixeltext {

struct EncodedWords {
    TensorPtr encoder_output;
    std::vector<std::pair<std::size_t, std::size_t>> spans;  // one per kept word
    bool truncated = false;
};

struct EncodedSequence {
    TensorPtr encoder_output;
    std::vector<std::size_t> pooled_rows;
    bool truncated = false;
};

// The component that turns raw text into encoder output. Everything past the
// embedding producer (the transformer stack and all task heads) is the same
// code path for both implementations.
class FrontEnd {
public:
    virtual ~FrontEnd() = default;
    virtual EncodedWords encode_words(const std::vector<std::string>& words) const = 0;
    virtual EncodedSequence encode_sequence(const std::string& text) const = 0;
    virtual const Encoder& encoder() const = 0;
    // Parameters trained during fine-tuning (encoder plus any front-end
    // specific tables).
    virtual void collect_params(ParamStore& out) const = 0;
    virtual std::string name() const = 0;
};

class PixelFrontEnd : public FrontEnd {
public:
    PixelFrontEnd(const Encoder& encoder, std::size_t max_patches,
                  const GlyphAtlas& atlas = GlyphAtlas::embedded());

    EncodedWords encode_words(const std::vector<std::string>& words) const override;
    EncodedSequence encode_sequence(const std::string& text) const override;
    const Encoder& encoder() const override { return encoder_; }
    void collect_params(ParamStore& out) const override;
    std::string name() const override { return "pixel"; }

private:
    const Encoder& encoder_;
    std::size_t max_patches_;
    const GlyphAtlas& atlas_;
};

class SubwordFrontEnd : public FrontEnd {
public:
    // `embeddings` provides token_embed; its MLM head is ignored here.
    SubwordFrontEnd(const Encoder& encoder, const MlmModel& embeddings,
                    const BpeVocab& vocab, std::size_t max_tokens);

    EncodedWords encode_words(const std::vector<std::string>& words) const override;
    EncodedSequence encode_sequence(const std::string& text) const override;
    const Encoder& encoder() const override { return encoder_; }
    void collect_params(ParamStore& out) const override;
    std::string name() const override { return "subword"; }

private:
    const Encoder& encoder_;
    const MlmModel& embeddings_;
    const BpeVocab& vocab_;
    std::size_t max_tokens_;

    EncodedSequence run(const std::vector<int>& ids) const;
};

}  // namespace pixeltext
