#include "render/atlas.hpp"

#include <cstring>
#include <fstream>

#include "common/error.hpp"

namespace pixeltext {

namespace {

#include "render/atlas_data.inc"

constexpr char32_t kFallbackCp = 0xFFFD;

const char32_t kRequiredExtra[] = {0xE4, 0xF6, 0xFC, 0xC4, 0xD6, 0xDC, 0xDF};  // äöüÄÖÜß

Glyph filled_box() {
    Glyph g;
    for (std::size_t r = 2; r < 14; ++r) {
        g.rows[r] = 0xFF;
    }
    return g;
}

std::uint16_t read_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

GlyphAtlas GlyphAtlas::parse(const std::uint8_t* bytes, std::size_t size,
                             const std::string& origin) {
    if (size < 6 || std::memcmp(bytes, "PXFA", 4) != 0) {
        throw DataError("atlas " + origin + ": missing PXFA magic");
    }
    std::size_t count = read_u16(bytes + 4);
    const std::size_t record = 4 + 32;
    if (size != 6 + count * record) {
        throw DataError("atlas " + origin + ": length " + std::to_string(size) +
                        " does not match glyph count " + std::to_string(count));
    }
    GlyphAtlas atlas;
    atlas.version_ = origin;
    const std::uint8_t* p = bytes + 6;
    for (std::size_t i = 0; i < count; ++i) {
        char32_t cp = read_u32(p);
        p += 4;
        Glyph g;
        for (std::size_t r = 0; r < 16; ++r) {
            g.rows[r] = p[2 * r];
        }
        p += 32;
        atlas.glyphs_[cp] = g;
    }
    for (char32_t cp = 0x20; cp <= 0x7E; ++cp) {
        if (!atlas.glyphs_.count(cp)) {
            throw DataError("atlas " + origin + ": missing required glyph U+" +
                            std::to_string(static_cast<std::uint32_t>(cp)));
        }
    }
    for (char32_t cp : kRequiredExtra) {
        if (!atlas.glyphs_.count(cp)) {
            throw DataError("atlas " + origin + ": missing required German glyph");
        }
    }
    auto it = atlas.glyphs_.find(kFallbackCp);
    atlas.fallback_ = it != atlas.glyphs_.end() ? it->second : filled_box();
    return atlas;
}

const GlyphAtlas& GlyphAtlas::embedded() {
    static const GlyphAtlas atlas =
        parse(kEmbeddedAtlas, kEmbeddedAtlasSize, "embedded-default-v1");
    return atlas;
}

GlyphAtlas GlyphAtlas::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("atlas: cannot open '" + path + "'");
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return parse(bytes.data(), bytes.size(), path);
}

std::vector<std::uint8_t> GlyphAtlas::serialize() const {
    std::vector<std::uint8_t> out;
    out.reserve(6 + glyphs_.size() * 36);
    out.insert(out.end(), {'P', 'X', 'F', 'A'});
    out.push_back(static_cast<std::uint8_t>(glyphs_.size() & 0xFF));
    out.push_back(static_cast<std::uint8_t>((glyphs_.size() >> 8) & 0xFF));
    for (const auto& [cp, g] : glyphs_) {
        std::uint32_t v = cp;
        out.push_back(static_cast<std::uint8_t>(v & 0xFF));
        out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
        out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
        out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xFF));
        for (std::size_t r = 0; r < 16; ++r) {
            out.push_back(g.rows[r]);
            out.push_back(0);
        }
    }
    return out;
}

void GlyphAtlas::save_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("atlas: cannot write '" + path + "'");
    }
    auto bytes = serialize();
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw DataError("atlas: write failed for '" + path + "'");
    }
}

const Glyph& GlyphAtlas::glyph_for(char32_t cp) const {
    auto it = glyphs_.find(cp);
    return it != glyphs_.end() ? it->second : fallback_;
}

}  // namespace pixeltext
