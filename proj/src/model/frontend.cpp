#include "model/frontend.hpp"

#include "common/error.hpp"

namespace pixeltext {

PixelFrontEnd::PixelFrontEnd(const Encoder& encoder, std::size_t max_patches,
                             const GlyphAtlas& atlas)
    : encoder_(encoder), max_patches_(max_patches), atlas_(atlas) {
    if (max_patches > encoder.config().max_positions) {
        throw ConfigError("pixel front-end: max_patches " + std::to_string(max_patches) +
                          " exceeds encoder max_positions " +
                          std::to_string(encoder.config().max_positions));
    }
}

EncodedWords PixelFrontEnd::encode_words(const std::vector<std::string>& words) const {
    Rendering r = render_words(words, max_patches_, atlas_);
    EncodedWords out;
    out.encoder_output = encoder_.encode(r);
    out.spans = *r.word_spans;
    out.truncated = r.truncated;
    return out;
}

EncodedSequence PixelFrontEnd::encode_sequence(const std::string& text) const {
    Rendering r = render_text(text, max_patches_, atlas_);
    EncodedSequence out;
    out.encoder_output = encoder_.encode(r);
    for (std::size_t i = 0; i < r.attention_mask.size(); ++i) {
        if (!r.attention_mask[i]) {
            continue;
        }
        if (i == r.separator_index && !encoder_.config().pool_separator) {
            continue;
        }
        out.pooled_rows.push_back(i);
    }
    out.truncated = r.truncated;
    return out;
}

void PixelFrontEnd::collect_params(ParamStore& out) const {
    out.merge(encoder_.params());
}

SubwordFrontEnd::SubwordFrontEnd(const Encoder& encoder, const MlmModel& embeddings,
                                 const BpeVocab& vocab, std::size_t max_tokens)
    : encoder_(encoder), embeddings_(embeddings), vocab_(vocab), max_tokens_(max_tokens) {
    if (max_tokens < 2) {
        throw ConfigError("subword front-end: max_tokens must be at least 2");
    }
    if (max_tokens > encoder.config().max_positions) {
        throw ConfigError("subword front-end: max_tokens exceeds encoder max_positions");
    }
}

EncodedSequence SubwordFrontEnd::run(const std::vector<int>& ids) const {
    std::vector<int> input(max_tokens_, vocab_.pad_id);
    std::vector<std::uint8_t> attn(max_tokens_, 0);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        input[i] = ids[i];
        attn[i] = 1;
    }
    EncodedSequence out;
    TensorPtr embedded = embeddings_.token_embed(encoder_, input);
    out.encoder_output = encoder_.encode_embedded(embedded, attn);
    std::size_t pooled = encoder_.config().pool_separator ? ids.size() : ids.size() - 1;
    for (std::size_t i = 0; i < pooled; ++i) {
        out.pooled_rows.push_back(i);
    }
    return out;
}

EncodedWords SubwordFrontEnd::encode_words(const std::vector<std::string>& words) const {
    if (words.empty()) {
        throw DataError("subword front-end: empty word list");
    }
    auto per_word = encode_bpe_words(words, vocab_);
    std::vector<int> ids;
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    bool truncated = false;
    for (std::size_t w = 0; w < per_word.size(); ++w) {
        if (per_word[w].size() > max_tokens_ - 1) {
            throw DataError("subword front-end: word '" + words[w] + "' needs " +
                            std::to_string(per_word[w].size()) + " tokens but only " +
                            std::to_string(max_tokens_ - 1) + " fit");
        }
        if (ids.size() + per_word[w].size() > max_tokens_ - 1) {
            truncated = true;
            break;
        }
        spans.emplace_back(ids.size(), ids.size() + per_word[w].size() - 1);
        ids.insert(ids.end(), per_word[w].begin(), per_word[w].end());
    }
    ids.push_back(vocab_.sep_id);

    EncodedWords out;
    out.encoder_output = run(ids).encoder_output;
    out.spans = std::move(spans);
    out.truncated = truncated;
    return out;
}

EncodedSequence SubwordFrontEnd::encode_sequence(const std::string& text) const {
    std::vector<int> ids = encode_bpe(text, vocab_);
    bool truncated = false;
    if (ids.size() > max_tokens_ - 1) {
        ids.resize(max_tokens_ - 1);
        truncated = true;
    }
    ids.push_back(vocab_.sep_id);
    EncodedSequence out = run(ids);
    out.truncated = truncated;
    return out;
}

void SubwordFrontEnd::collect_params(ParamStore& out) const {
    out.merge(encoder_.params());
    // The embedding table fine-tunes with the encoder; the MLM output head
    // is pretraining-only and stays out.
    out.add("tok.embedding", embeddings_.params().get("tok.embedding"));
}

}  // namespace pixeltext
