// UTF-8 scanning helpers shared by the codecs, detector and sanitizer.
//
// Text is handled as a sequence of Unicode scalar values stored as UTF-8.
// Invalid byte sequences are not rejected: each offending byte is surfaced as
// a single U+FFFD scalar that still points at the original byte, so callers
// that copy scalars through (e.g. clean) preserve the input byte-exactly.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace imem::utf8 {

inline constexpr char32_t kReplacement = 0xFFFD;

struct Scalar {
  char32_t cp = 0;
  std::size_t offset = 0;  // byte offset of the first code unit
  std::size_t length = 0;  // number of bytes in the encoded form
  bool valid = true;
};

/// Decodes the scalar starting at `pos`. `pos` must be < text.size().
inline Scalar decode_at(std::string_view text, std::size_t pos) {
  const auto byte = [&](std::size_t i) {
    return static_cast<unsigned char>(text[i]);
  };
  const unsigned char lead = byte(pos);
  Scalar s{kReplacement, pos, 1, false};
  if (lead < 0x80) {
    s.cp = lead;
    s.valid = true;
    return s;
  }
  std::size_t need = 0;
  char32_t cp = 0;
  char32_t min = 0;
  if ((lead & 0xE0) == 0xC0) {
    need = 1;
    cp = lead & 0x1F;
    min = 0x80;
  } else if ((lead & 0xF0) == 0xE0) {
    need = 2;
    cp = lead & 0x0F;
    min = 0x800;
  } else if ((lead & 0xF8) == 0xF0) {
    need = 3;
    cp = lead & 0x07;
    min = 0x10000;
  } else {
    return s;
  }
  if (pos + need >= text.size()) return s;
  for (std::size_t i = 1; i <= need; ++i) {
    const unsigned char c = byte(pos + i);
    if ((c & 0xC0) != 0x80) return s;
    cp = (cp << 6) | (c & 0x3F);
  }
  if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return s;
  s.cp = cp;
  s.length = need + 1;
  s.valid = true;
  return s;
}

/// Decodes every scalar in order.
inline std::vector<Scalar> scalars(std::string_view text) {
  std::vector<Scalar> out;
  out.reserve(text.size());
  for (std::size_t pos = 0; pos < text.size();) {
    Scalar s = decode_at(text, pos);
    pos += s.length;
    out.push_back(s);
  }
  return out;
}

inline std::u32string to_u32(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  for (std::size_t pos = 0; pos < text.size();) {
    Scalar s = decode_at(text, pos);
    pos += s.length;
    out.push_back(s.cp);
  }
  return out;
}

inline void append(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

inline std::string encode(char32_t cp) {
  std::string out;
  append(out, cp);
  return out;
}

inline std::string from_u32(std::u32string_view cps) {
  std::string out;
  out.reserve(cps.size());
  for (char32_t cp : cps) append(out, cp);
  return out;
}

/// Copies `text` dropping every valid scalar for which `drop(cp)` holds.
/// Invalid bytes are always kept verbatim.
template <typename Pred>
std::string remove_if(std::string_view text, Pred&& drop) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t pos = 0; pos < text.size();) {
    Scalar s = decode_at(text, pos);
    if (!s.valid || !drop(s.cp)) out.append(text.substr(pos, s.length));
    pos += s.length;
  }
  return out;
}

template <typename Pred>
std::size_t count_if(std::string_view text, Pred&& match) {
  std::size_t n = 0;
  for (std::size_t pos = 0; pos < text.size();) {
    Scalar s = decode_at(text, pos);
    if (s.valid && match(s.cp)) ++n;
    pos += s.length;
  }
  return n;
}

}  // namespace imem::utf8
