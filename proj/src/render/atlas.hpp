#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace pixeltext {

// Fixed-cell bitmap glyph: 16 rows by 8 columns, one bit per pixel, MSB of
// each row byte = leftmost column.
struct Glyph {
    std::array<std::uint8_t, 16> rows{};

    bool pixel(std::size_t row, std::size_t col) const {
        return (rows[row] >> (7 - col)) & 1u;
    }
};

// Embedded bitmap font. The binary resource format (PXFA) is: magic "PXFA",
// u16 LE glyph count, then per glyph a u32 LE code point and 32 bytes of
// row-major bits (16 rows x 2 bytes; second byte of each row is reserved and
// zero). No runtime font discovery: the default atlas is compiled in, and
// alternates load from .pxfa files only.
class GlyphAtlas {
public:
    static const GlyphAtlas& embedded();
    static GlyphAtlas parse(const std::uint8_t* bytes, std::size_t size,
                            const std::string& origin);
    static GlyphAtlas load_file(const std::string& path);
    void save_file(const std::string& path) const;
    std::vector<std::uint8_t> serialize() const;

    bool has_glyph(char32_t cp) const { return glyphs_.count(cp) != 0; }
    // Unmapped code points resolve to the fallback glyph (a filled box).
    const Glyph& glyph_for(char32_t cp) const;
    std::size_t glyph_count() const { return glyphs_.size(); }
    const std::string& version() const { return version_; }

private:
    std::map<char32_t, Glyph> glyphs_;
    Glyph fallback_;
    std::string version_;
};

}  // namespace pixeltext
