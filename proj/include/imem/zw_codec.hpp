// Invisible-codepoint channel: embeds SignalVector / CounterState values in
// text as zero-width marks and scans text for marker runs.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "imem/error.hpp"
#include "imem/state.hpp"
#include "imem/utf8.hpp"

namespace imem {

inline constexpr char32_t kZeroWidthSpace = 0x200B;
inline constexpr char32_t kZeroWidthNonJoiner = 0x200C;
inline constexpr char32_t kZeroWidthJoiner = 0x200D;
inline constexpr char32_t kLeftToRightMark = 0x200E;
inline constexpr char32_t kRightToLeftMark = 0x200F;
inline constexpr char32_t kTagsBase = 0xE0000;
inline constexpr char32_t kTagsLast = 0xE007F;

/// Codepoints with no visible rendering that this toolkit treats as carrier
/// candidates.
inline constexpr bool is_non_printing(char32_t cp) noexcept {
  return (cp >= 0x200B && cp <= 0x200F) || (cp >= 0x2060 && cp <= 0x2064) ||
         cp == 0xFEFF || (cp >= kTagsBase && cp <= kTagsLast);
}

struct MarkerAlphabet {
  char32_t bit0 = kLeftToRightMark;
  char32_t bit1 = kRightToLeftMark;
  char32_t counter = kZeroWidthNonJoiner;
  char32_t tags_base = kTagsBase;

  /// ZWNJ = 1, ZWJ = 0 dictionary pairing.
  static MarkerAlphabet joiner_pair() {
    MarkerAlphabet a;
    a.bit0 = kZeroWidthJoiner;
    a.bit1 = kZeroWidthNonJoiner;
    return a;
  }

  bool is_bit_marker(char32_t cp) const noexcept {
    return cp == bit0 || cp == bit1;
  }

  void validate() const {
    if (bit0 == bit1) throw InvalidArgument("bit0 and bit1 markers coincide");
    for (char32_t cp : {bit0, bit1, counter, tags_base}) {
      if (!is_non_printing(cp)) {
        throw InvalidArgument("marker codepoint is printable");
      }
    }
  }

  friend bool operator==(const MarkerAlphabet&, const MarkerAlphabet&) =
      default;
};

enum class DecodePolicy { PrefixOnly, FirstRun, OrAllRuns };

inline std::string_view to_string(DecodePolicy p) {
  switch (p) {
    case DecodePolicy::PrefixOnly:
      return "prefix-only";
    case DecodePolicy::FirstRun:
      return "first-run";
    case DecodePolicy::OrAllRuns:
      return "or-all-runs";
  }
  return "or-all-runs";
}

inline DecodePolicy parse_decode_policy(std::string_view s) {
  if (s == "prefix-only") return DecodePolicy::PrefixOnly;
  if (s == "first-run") return DecodePolicy::FirstRun;
  if (s == "or-all-runs") return DecodePolicy::OrAllRuns;
  throw InvalidArgument("unknown decode policy: " + std::string(s));
}

/// A maximal run of consecutive bit markers.
struct MarkerRun {
  std::size_t byte_offset = 0;
  std::size_t length = 0;  // in markers
  SignalVector value{1};   // bits read from the run, width == length

  friend bool operator==(const MarkerRun&, const MarkerRun&) = default;
};

struct DecodeOutcome {
  enum class Kind { Present, Absent, Malformed };

  Kind kind = Kind::Absent;
  std::optional<SignalVector> state;
  std::vector<MarkerRun> diagnostics;  // every run found, well-formed or not

  bool present() const noexcept { return kind == Kind::Present; }

  /// Decoded state, or all zeros when nothing usable was carried.
  SignalVector state_or_zero(std::size_t width) const {
    return state ? *state : SignalVector(width);
  }

  /// "00010000", "absent" or "malformed".
  std::string describe() const {
    switch (kind) {
      case Kind::Present:
        return state->to_string();
      case Kind::Absent:
        return "absent";
      case Kind::Malformed:
        return "malformed";
    }
    return "absent";
  }
};

inline std::string encode_state_prefix(const SignalVector& state,
                                       const MarkerAlphabet& alphabet = {}) {
  std::string out;
  out.reserve(state.width() * 3);
  for (std::size_t i = 0; i < state.width(); ++i) {
    utf8::append(out, state[i] ? alphabet.bit1 : alphabet.bit0);
  }
  return out;
}

/// Enumerates every maximal marker run in `text`.
inline std::vector<MarkerRun> scan_runs(std::string_view text,
                                        const MarkerAlphabet& alphabet = {}) {
  std::vector<MarkerRun> runs;
  std::vector<bool> bits;
  std::size_t start = 0;
  auto flush = [&] {
    if (bits.empty()) return;
    MarkerRun r;
    r.byte_offset = start;
    r.length = bits.size();
    r.value = SignalVector(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) {
      if (bits[i]) r.value.set(i);
    }
    runs.push_back(std::move(r));
    bits.clear();
  };
  for (std::size_t pos = 0; pos < text.size();) {
    const auto s = utf8::decode_at(text, pos);
    if (s.valid && alphabet.is_bit_marker(s.cp)) {
      if (bits.empty()) start = pos;
      bits.push_back(s.cp == alphabet.bit1);
    } else {
      flush();
    }
    pos += s.length;
  }
  flush();
  return runs;
}

/// Byte length of the marker run at the very start of `text` (0 if none).
inline std::size_t leading_run_bytes(std::string_view text,
                                     const MarkerAlphabet& alphabet = {}) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto s = utf8::decode_at(text, pos);
    if (!s.valid || !alphabet.is_bit_marker(s.cp)) break;
    pos += s.length;
  }
  return pos;
}

/// Prefixes `text` with the marker encoding of `state`. Rejects text that
/// already carries markers within its first `width` scalars; callers merge
/// carried state first.
inline std::string embed(std::string_view text, const SignalVector& state,
                         const MarkerAlphabet& alphabet = {}) {
  std::size_t seen = 0;
  for (std::size_t pos = 0; pos < text.size() && seen < state.width();
       ++seen) {
    const auto s = utf8::decode_at(text, pos);
    if (s.valid && alphabet.is_bit_marker(s.cp)) {
      throw Error("leading_marker_run",
                  "text already carries a marker run at its start");
    }
    pos += s.length;
  }
  return encode_state_prefix(state, alphabet) + std::string(text);
}

inline DecodeOutcome decode_state(std::string_view text,
                                  const MarkerAlphabet& alphabet = {},
                                  DecodePolicy policy = DecodePolicy::OrAllRuns,
                                  std::size_t width = kDefaultWidth) {
  DecodeOutcome out;
  out.diagnostics = scan_runs(text, alphabet);
  const auto& runs = out.diagnostics;
  if (runs.empty()) return out;

  switch (policy) {
    case DecodePolicy::PrefixOnly: {
      if (runs.front().byte_offset != 0) return out;
      if (runs.front().length == width) {
        out.kind = DecodeOutcome::Kind::Present;
        out.state = runs.front().value;
      } else {
        out.kind = DecodeOutcome::Kind::Malformed;
      }
      return out;
    }
    case DecodePolicy::FirstRun: {
      for (const auto& r : runs) {
        if (r.length == width) {
          out.kind = DecodeOutcome::Kind::Present;
          out.state = r.value;
          return out;
        }
      }
      out.kind = DecodeOutcome::Kind::Malformed;
      return out;
    }
    case DecodePolicy::OrAllRuns: {
      std::optional<SignalVector> acc;
      for (const auto& r : runs) {
        if (r.length != width) continue;
        acc = acc ? merge(*acc, r.value) : r.value;
      }
      if (acc) {
        out.kind = DecodeOutcome::Kind::Present;
        out.state = std::move(acc);
      } else {
        out.kind = DecodeOutcome::Kind::Malformed;
      }
      return out;
    }
  }
  return out;
}

/// Occurrences of `marker` anywhere in `text`.
inline CounterState count_markers(std::string_view text,
                                  char32_t marker = kZeroWidthNonJoiner) {
  return CounterState{
      utf8::count_if(text, [marker](char32_t cp) { return cp == marker; })};
}

/// Appends `count` counter markers to `text`.
inline std::string append_counter(std::string_view text, CounterState count,
                                  const MarkerAlphabet& alphabet = {}) {
  std::string out(text);
  for (std::uint64_t i = 0; i < count.count; ++i) {
    utf8::append(out, alphabet.counter);
  }
  return out;
}

/// Removes the alphabet's bit and counter markers.
inline std::string strip_markers(std::string_view text,
                                 const MarkerAlphabet& alphabet = {}) {
  return utf8::remove_if(text, [&](char32_t cp) {
    return alphabet.is_bit_marker(cp) || cp == alphabet.counter;
  });
}

/// One Tags-block codepoint per ASCII byte.
inline std::string tags_encode(std::string_view bytes,
                               char32_t base = kTagsBase) {
  std::string out;
  out.reserve(bytes.size() * 4);
  for (char c : bytes) {
    const auto b = static_cast<unsigned char>(c);
    if (b >= 128) {
      throw InvalidArgument("tags_encode: byte " + std::to_string(b) +
                            " is not ASCII");
    }
    utf8::append(out, base + b);
  }
  return out;
}

struct TagsDecodeResult {
  std::string bytes;
  std::vector<std::size_t> skipped_offsets;  // byte offsets of non-Tags input
};

inline TagsDecodeResult tags_decode(std::string_view text,
                                    char32_t base = kTagsBase) {
  TagsDecodeResult out;
  for (std::size_t pos = 0; pos < text.size();) {
    const auto s = utf8::decode_at(text, pos);
    if (s.valid && s.cp >= base && s.cp < base + 128) {
      out.bytes.push_back(static_cast<char>(s.cp - base));
    } else {
      out.skipped_offsets.push_back(pos);
    }
    pos += s.length;
  }
  return out;
}

}  // namespace imem
