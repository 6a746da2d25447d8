#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace codeprep::utf8 {

inline constexpr char32_t kInvalid = 0xFFFFFFFF;

struct Decoded {
  char32_t code_point;  // kInvalid for a malformed byte
  std::size_t length;   // bytes consumed, always >= 1
};

// Decodes the code point starting at `pos`. Malformed sequences consume one
// byte and report kInvalid, so every byte string has a unique segmentation.
Decoded decode(std::string_view text, std::size_t pos);

void append(std::string& out, char32_t code_point);

// Byte offsets of every character start, followed by text.size().
std::vector<std::size_t> boundaries(std::string_view text);

bool is_valid(std::string_view text);

}  // namespace codeprep::utf8
