// Hidden-state value types and their append-only update rules.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "imem/error.hpp"

namespace imem {

inline constexpr std::size_t kDefaultWidth = 8;

/// Fixed-width ordered bit state. Index 0 is signal position 1, which is the
/// leftmost character of the serialized form.
class SignalVector {
 public:
  explicit SignalVector(std::size_t width = kDefaultWidth) : bits_(width, 0) {
    if (width == 0) throw InvalidArgument("signal width must be positive");
  }

  /// Parses a '0'/'1' string; its length becomes the width.
  static SignalVector parse(std::string_view text) {
    SignalVector v(text.empty() ? 1 : text.size());
    if (text.empty()) throw InvalidArgument("empty signal string");
    for (std::size_t i = 0; i < text.size(); ++i) {
      if (text[i] == '1') {
        v.bits_[i] = 1;
      } else if (text[i] != '0') {
        throw InvalidArgument("signal string must contain only '0'/'1': \"" +
                              std::string(text) + "\"");
      }
    }
    return v;
  }

  /// Builds a width-`width` state from the low bits of `value`; position 1
  /// receives the most significant of those bits.
  static SignalVector from_uint(std::uint64_t value,
                                std::size_t width = kDefaultWidth) {
    if (width > 64) throw InvalidArgument("from_uint supports width <= 64");
    SignalVector v(width);
    for (std::size_t i = 0; i < width; ++i) {
      v.bits_[i] = (value >> (width - 1 - i)) & 1U;
    }
    return v;
  }

  static SignalVector from_bools(const std::vector<bool>& bits) {
    if (bits.empty()) throw InvalidArgument("empty signal list");
    SignalVector v(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) v.bits_[i] = bits[i];
    return v;
  }

  static SignalVector all_ones(std::size_t width = kDefaultWidth) {
    SignalVector v(width);
    std::fill(v.bits_.begin(), v.bits_.end(), 1);
    return v;
  }

  std::size_t width() const noexcept { return bits_.size(); }

  bool operator[](std::size_t index) const { return bits_.at(index) != 0; }

  /// Sets (never clears) the bit at `index`.
  void set(std::size_t index) { bits_.at(index) = 1; }

  std::size_t popcount() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
  }

  std::uint64_t to_uint() const {
    if (width() > 64) throw InvalidArgument("to_uint supports width <= 64");
    std::uint64_t v = 0;
    for (auto b : bits_) v = (v << 1) | b;
    return v;
  }

  std::vector<bool> to_bools() const {
    return std::vector<bool>(bits_.begin(), bits_.end());
  }

  std::string to_string() const {
    std::string s(width(), '0');
    for (std::size_t i = 0; i < width(); ++i) {
      if (bits_[i]) s[i] = '1';
    }
    return s;
  }

  /// True when every bit set here is also set in `other`.
  bool is_subset_of(const SignalVector& other) const {
    if (other.width() != width()) throw WidthMismatch(width(), other.width());
    for (std::size_t i = 0; i < width(); ++i) {
      if (bits_[i] && !other.bits_[i]) return false;
    }
    return true;
  }

  friend bool operator==(const SignalVector&, const SignalVector&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

/// Bitwise OR of the carried state and the newly observed signals.
inline SignalVector merge(const SignalVector& carried,
                          const SignalVector& observed) {
  if (carried.width() != observed.width()) {
    throw WidthMismatch(carried.width(), observed.width());
  }
  SignalVector out = carried;
  for (std::size_t i = 0; i < observed.width(); ++i) {
    if (observed[i]) out.set(i);
  }
  return out;
}

/// OR-fold over any number of states (e.g. several reingested artifacts).
inline SignalVector merge_all(std::span<const SignalVector> states,
                              std::size_t width = kDefaultWidth) {
  SignalVector acc(states.empty() ? width : states.front().width());
  for (const auto& s : states) acc = merge(acc, s);
  return acc;
}

inline bool is_triggered(const SignalVector& state) noexcept {
  return state.popcount() == state.width();
}

/// Number of counted interactions visible in an artifact.
struct CounterState {
  std::uint64_t count = 0;

  friend bool operator==(const CounterState&, const CounterState&) = default;
};

inline CounterState counter_update(CounterState carried, bool predicate_hit) {
  return CounterState{carried.count + (predicate_hit ? 1U : 0U)};
}

/// Ordered (name, position) pairs naming what each bit means. Positions are
/// 1-based and must be a permutation of 1..width.
class SignalCatalog {
 public:
  struct Entry {
    std::string name;
    std::size_t position = 0;
  };

  explicit SignalCatalog(std::vector<Entry> entries)
      : entries_(std::move(entries)) {
    if (entries_.empty()) throw InvalidArgument("signal catalog is empty");
    std::vector<bool> seen(entries_.size() + 1, false);
    for (const auto& e : entries_) {
      if (e.position < 1 || e.position > entries_.size() || seen[e.position]) {
        throw InvalidArgument("catalog positions must be 1..width, each once");
      }
      seen[e.position] = true;
    }
  }

  static SignalCatalog financial_distress() {
    return SignalCatalog({{"Net Loss", 1},
                          {"Cash-flow Deficit", 2},
                          {"Supplier Blacklist", 3},
                          {"Credit-line Reduction", 4},
                          {"Loan Covenant Breach", 5},
                          {"Tax Lien", 6},
                          {"Lawsuit Judgment", 7},
                          {"Payroll Default", 8}});
  }

  /// The first `width` signals of the default catalog (width <= 8), used by
  /// trigger-size studies.
  static SignalCatalog financial_distress(std::size_t width) {
    auto full = financial_distress();
    if (width == 0 || width > full.width()) {
      throw InvalidArgument("catalog width must be in 1..8");
    }
    std::vector<Entry> entries(full.entries_.begin(),
                               full.entries_.begin() + width);
    return SignalCatalog(std::move(entries));
  }

  std::size_t width() const noexcept { return entries_.size(); }
  const std::vector<Entry>& entries() const noexcept { return entries_; }

  /// Name of the signal at 1-based `position`.
  const std::string& name_at(std::size_t position) const {
    for (const auto& e : entries_) {
      if (e.position == position) return e.name;
    }
    throw InvalidArgument("no catalog entry at position " +
                          std::to_string(position));
  }

 private:
  std::vector<Entry> entries_;
};

}  // namespace imem
