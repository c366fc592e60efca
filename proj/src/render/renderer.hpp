#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "render/atlas.hpp"

namespace pixeltext {

constexpr std::size_t kPatchSide = 16;
constexpr std::size_t kPatchPixels = kPatchSide * kPatchSide;  // flattened patch length
constexpr std::size_t kGlyphAdvance = 8;                       // two glyphs per patch
constexpr std::size_t kGlyphsPerPatch = kPatchSide / kGlyphAdvance;

// A rasterized input sequence: `num_text_patches` glyph patches, one all-ink
// separator patch, then zero padding up to max_patches. Ink polarity is
// 1.0 = black so padding is the zero tensor.
struct Rendering {
    std::size_t max_patches = 0;
    std::vector<float> patches;  // max_patches x 256, row-major within each patch
    std::size_t num_text_patches = 0;
    std::size_t separator_index = 0;
    std::vector<std::uint8_t> attention_mask;  // 1 for text + separator, 0 for padding
    std::optional<std::vector<std::pair<std::size_t, std::size_t>>> word_spans;
    std::string source_text;
    bool truncated = false;

    const float* patch(std::size_t index) const { return patches.data() + index * kPatchPixels; }
    float pixel(std::size_t patch_index, std::size_t row, std::size_t col) const {
        return patches[patch_index * kPatchPixels + row * kPatchSide + col];
    }
};

// Continuous layout: glyphs at 8 px advance, two per patch. Text that would
// not leave room for the separator is truncated (flagged, never silent).
Rendering render_text(const std::string& text, std::size_t max_patches,
                      const GlyphAtlas& atlas = GlyphAtlas::embedded());

// Word-aligned layout: every word starts on a fresh patch boundary and owns
// whole patches (odd glyph counts pad a half patch). word_spans records each
// word's inclusive [first, last] patch range. Words that do not fit are
// dropped from the tail with the truncation flag set; a single word that can
// never fit is an error.
Rendering render_words(const std::vector<std::string>& words, std::size_t max_patches,
                       const GlyphAtlas& atlas = GlyphAtlas::embedded());

// One row of patches (text + separator, padding omitted) with 1-px gray
// dividers; pixel value is 255 * (1 - ink).
void export_png(const Rendering& rendering, const std::string& path);
std::vector<std::uint8_t> rendering_png_bytes(const Rendering& rendering);

std::size_t glyph_count(const std::string& text);

}  // namespace pixeltext
