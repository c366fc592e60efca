#include "render/png.hpp"

#include <array>
#include <fstream>

#include "common/error.hpp"

namespace pixeltext {

namespace {

std::uint32_t crc32(const std::uint8_t* data, std::size_t size, std::uint32_t seed) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t n = 0; n < 256; ++n) {
            std::uint32_t c = n;
            for (int k = 0; k < 8; ++k) {
                c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : (c >> 1);
            }
            t[n] = c;
        }
        return t;
    }();
    std::uint32_t c = seed ^ 0xFFFFFFFFu;
    for (std::size_t i = 0; i < size; ++i) {
        c = table[(c ^ data[i]) & 0xFFu] ^ (c >> 8);
    }
    return c ^ 0xFFFFFFFFu;
}

std::uint32_t adler32(const std::uint8_t* data, std::size_t size) {
    std::uint32_t a = 1, b = 0;
    for (std::size_t i = 0; i < size; ++i) {
        a = (a + data[i]) % 65521u;
        b = (b + a) % 65521u;
    }
    return (b << 16) | a;
}

void push_u32be(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

void push_chunk(std::vector<std::uint8_t>& out, const char type[4],
                const std::vector<std::uint8_t>& payload) {
    push_u32be(out, static_cast<std::uint32_t>(payload.size()));
    std::size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    push_u32be(out, crc32(out.data() + start, out.size() - start, 0));
}

}  // namespace

std::vector<std::uint8_t> encode_gray_png(std::size_t width, std::size_t height,
                                          const std::vector<std::uint8_t>& pixels) {
    if (width == 0 || height == 0 || pixels.size() != width * height) {
        throw InternalError("png: pixel buffer does not match dimensions");
    }
    // Raw scanlines, filter type 0 per row.
    std::vector<std::uint8_t> raw;
    raw.reserve(height * (width + 1));
    for (std::size_t y = 0; y < height; ++y) {
        raw.push_back(0);
        raw.insert(raw.end(), pixels.begin() + static_cast<std::ptrdiff_t>(y * width),
                   pixels.begin() + static_cast<std::ptrdiff_t>((y + 1) * width));
    }

    std::vector<std::uint8_t> idat;
    idat.push_back(0x78);
    idat.push_back(0x01);
    std::size_t off = 0;
    while (off < raw.size()) {
        std::size_t block = std::min<std::size_t>(65535, raw.size() - off);
        bool final = off + block == raw.size();
        idat.push_back(final ? 1 : 0);
        idat.push_back(static_cast<std::uint8_t>(block & 0xFF));
        idat.push_back(static_cast<std::uint8_t>((block >> 8) & 0xFF));
        idat.push_back(static_cast<std::uint8_t>(~block & 0xFF));
        idat.push_back(static_cast<std::uint8_t>((~block >> 8) & 0xFF));
        idat.insert(idat.end(), raw.begin() + static_cast<std::ptrdiff_t>(off),
                    raw.begin() + static_cast<std::ptrdiff_t>(off + block));
        off += block;
    }
    push_u32be(idat, adler32(raw.data(), raw.size()));

    std::vector<std::uint8_t> out = {137, 80, 78, 71, 13, 10, 26, 10};
    std::vector<std::uint8_t> ihdr;
    push_u32be(ihdr, static_cast<std::uint32_t>(width));
    push_u32be(ihdr, static_cast<std::uint32_t>(height));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(0);  // grayscale
    ihdr.push_back(0);  // compression
    ihdr.push_back(0);  // filter
    ihdr.push_back(0);  // non-interlaced
    push_chunk(out, "IHDR", ihdr);
    push_chunk(out, "IDAT", idat);
    push_chunk(out, "IEND", {});
    return out;
}

void write_gray_png(const std::string& path, std::size_t width, std::size_t height,
                    const std::vector<std::uint8_t>& pixels) {
    auto bytes = encode_gray_png(width, height, pixels);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("png: cannot open '" + path + "' for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw DataError("png: write failed for '" + path + "'");
    }
}

}  // namespace pixeltext
