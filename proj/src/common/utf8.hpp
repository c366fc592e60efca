#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace pixeltext {

// Decodes UTF-8 into code points. Invalid byte sequences decode to U+FFFD,
// one replacement per offending byte; decoding never throws.
std::vector<char32_t> decode_utf8(std::string_view text);

std::string encode_utf8(const std::vector<char32_t>& code_points);
void append_utf8(std::string& out, char32_t cp);

}  // namespace pixeltext
