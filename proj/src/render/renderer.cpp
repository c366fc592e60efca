#include "render/renderer.hpp"

#include <fstream>

#include "common/error.hpp"
#include "common/utf8.hpp"
#include "render/png.hpp"

namespace pixeltext {

namespace {

constexpr std::uint8_t kDividerGray = 128;

Rendering make_blank(std::size_t max_patches) {
    if (max_patches < 2) {
        throw ConfigError("render: max_patches must be at least 2, got " +
                          std::to_string(max_patches));
    }
    Rendering r;
    r.max_patches = max_patches;
    r.patches.assign(max_patches * kPatchPixels, 0.0f);
    r.attention_mask.assign(max_patches, 0);
    return r;
}

void draw_glyph(Rendering& r, const Glyph& glyph, std::size_t glyph_slot) {
    std::size_t patch = glyph_slot / kGlyphsPerPatch;
    std::size_t col0 = (glyph_slot % kGlyphsPerPatch) * kGlyphAdvance;
    float* base = r.patches.data() + patch * kPatchPixels;
    for (std::size_t row = 0; row < kPatchSide; ++row) {
        for (std::size_t col = 0; col < kGlyphAdvance; ++col) {
            if (glyph.pixel(row, col)) {
                base[row * kPatchSide + col0 + col] = 1.0f;
            }
        }
    }
}

void finish(Rendering& r, std::size_t num_text_patches) {
    r.num_text_patches = num_text_patches;
    r.separator_index = num_text_patches;
    float* sep = r.patches.data() + r.separator_index * kPatchPixels;
    for (std::size_t i = 0; i < kPatchPixels; ++i) {
        sep[i] = 1.0f;
    }
    for (std::size_t i = 0; i <= r.separator_index; ++i) {
        r.attention_mask[i] = 1;
    }
}

}  // namespace

std::size_t glyph_count(const std::string& text) {
    return decode_utf8(text).size();
}

Rendering render_text(const std::string& text, std::size_t max_patches,
                      const GlyphAtlas& atlas) {
    Rendering r = make_blank(max_patches);
    std::vector<char32_t> cps = decode_utf8(text);
    std::size_t capacity = (max_patches - 1) * kGlyphsPerPatch;
    if (cps.size() > capacity) {
        cps.resize(capacity);
        r.truncated = true;
    }
    for (std::size_t i = 0; i < cps.size(); ++i) {
        draw_glyph(r, atlas.glyph_for(cps[i]), i);
    }
    finish(r, (cps.size() + kGlyphsPerPatch - 1) / kGlyphsPerPatch);
    r.source_text = encode_utf8(cps);
    return r;
}

Rendering render_words(const std::vector<std::string>& words, std::size_t max_patches,
                       const GlyphAtlas& atlas) {
    if (words.empty()) {
        throw DataError("render_words: empty word list");
    }
    Rendering r = make_blank(max_patches);
    std::vector<std::vector<char32_t>> decoded;
    std::vector<std::size_t> patches_needed;
    decoded.reserve(words.size());
    for (const auto& w : words) {
        decoded.push_back(decode_utf8(w));
        // An empty form still owns one (blank) patch so its span exists.
        std::size_t p = (decoded.back().size() + kGlyphsPerPatch - 1) / kGlyphsPerPatch;
        patches_needed.push_back(p == 0 ? 1 : p);
        if (patches_needed.back() > max_patches - 1) {
            throw DataError("render_words: word '" + w + "' needs " +
                            std::to_string(patches_needed.back()) +
                            " patches but only " + std::to_string(max_patches - 1) +
                            " are available");
        }
    }
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    std::size_t next_patch = 0;
    std::size_t placed = 0;
    for (std::size_t w = 0; w < words.size(); ++w) {
        if (next_patch + patches_needed[w] > max_patches - 1) {
            r.truncated = true;
            break;
        }
        for (std::size_t i = 0; i < decoded[w].size(); ++i) {
            draw_glyph(r, atlas.glyph_for(decoded[w][i]),
                       next_patch * kGlyphsPerPatch + i);
        }
        spans.emplace_back(next_patch, next_patch + patches_needed[w] - 1);
        next_patch += patches_needed[w];
        ++placed;
    }
    finish(r, next_patch);
    r.word_spans = std::move(spans);
    std::string text;
    for (std::size_t w = 0; w < placed; ++w) {
        if (w) {
            text += ' ';
        }
        text += words[w];
    }
    r.source_text = std::move(text);
    return r;
}

std::vector<std::uint8_t> rendering_png_bytes(const Rendering& rendering) {
    std::size_t shown = rendering.num_text_patches + 1;  // text + separator
    std::size_t width = shown * kPatchSide + (shown - 1);
    std::size_t height = kPatchSide;
    std::vector<std::uint8_t> pixels(width * height, kDividerGray);
    for (std::size_t p = 0; p < shown; ++p) {
        std::size_t x0 = p * (kPatchSide + 1);
        for (std::size_t row = 0; row < kPatchSide; ++row) {
            for (std::size_t col = 0; col < kPatchSide; ++col) {
                float ink = rendering.pixel(p, row, col);
                pixels[row * width + x0 + col] =
                    static_cast<std::uint8_t>(255.0f * (1.0f - ink) + 0.5f);
            }
        }
    }
    return encode_gray_png(width, height, pixels);
}

void export_png(const Rendering& rendering, const std::string& path) {
    auto bytes = rendering_png_bytes(rendering);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("export_png: cannot open '" + path + "'");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw DataError("export_png: write failed for '" + path + "'");
    }
}

}  // namespace pixeltext
