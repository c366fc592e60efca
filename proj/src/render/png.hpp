#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pixeltext {

// Writes an 8-bit grayscale, non-interlaced PNG. The zlib stream uses stored
// (uncompressed) deflate blocks, so output bytes depend only on the pixels.
void write_gray_png(const std::string& path, std::size_t width, std::size_t height,
                    const std::vector<std::uint8_t>& pixels);

std::vector<std::uint8_t> encode_gray_png(std::size_t width, std::size_t height,
                                          const std::vector<std::uint8_t>& pixels);

}  // namespace pixeltext
