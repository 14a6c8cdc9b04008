// Lexicon-based detection of the semantic signals that drive the state.

#pragma once

#include <cstddef>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "imem/error.hpp"
#include "imem/state.hpp"
#include "imem/utf8.hpp"
#include "imem/zw_codec.hpp"

namespace imem {

struct MatchFlags {
  bool case_insensitive = true;
  bool plural_variants = true;  // last token may carry an "s"/"es" suffix

  friend bool operator==(const MatchFlags&, const MatchFlags&) = default;
};

namespace detail {

inline bool is_ascii_alnum(char32_t cp) {
  return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') ||
         (cp >= 'A' && cp <= 'Z');
}

inline bool is_separator(char32_t cp) {
  if (cp < 0x80) return !is_ascii_alnum(cp);
  return cp == 0x00A0 || cp == 0x3000 || (cp >= 0x2000 && cp <= 0x206F) ||
         cp == utf8::kReplacement;
}

}  // namespace detail

/// Splits visible text into word tokens. Non-printing codepoints are dropped
/// without splitting a word, so hidden markers never change what is read.
inline std::vector<std::string> tokenize(std::string_view text,
                                         bool lowercase = true) {
  std::vector<std::string> tokens;
  std::string cur;
  for (std::size_t pos = 0; pos < text.size();) {
    const auto s = utf8::decode_at(text, pos);
    pos += s.length;
    if (s.valid && is_non_printing(s.cp)) continue;
    if (!s.valid || detail::is_separator(s.cp)) {
      if (!cur.empty()) tokens.push_back(std::move(cur));
      cur.clear();
      continue;
    }
    char32_t cp = s.cp;
    if (lowercase && cp >= 'A' && cp <= 'Z') cp = cp - 'A' + 'a';
    utf8::append(cur, cp);
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

/// Normalized form of a phrase: lowercase tokens joined by single spaces.
inline std::string normalize_phrase(std::string_view phrase) {
  std::string out;
  for (const auto& t : tokenize(phrase)) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

namespace detail {

inline bool token_matches(const std::string& text_token,
                          const std::string& phrase_token, bool last,
                          const MatchFlags& flags) {
  if (text_token == phrase_token) return true;
  if (!last || !flags.plural_variants) return false;
  if (text_token.size() == phrase_token.size() + 1 &&
      text_token.compare(0, phrase_token.size(), phrase_token) == 0 &&
      text_token.back() == 's') {
    return true;
  }
  return text_token.size() == phrase_token.size() + 2 &&
         text_token.compare(0, phrase_token.size(), phrase_token) == 0 &&
         text_token.compare(phrase_token.size(), 2, "es") == 0;
}

}  // namespace detail

/// True when the token sequence of `phrase` appears contiguously in `tokens`.
inline bool contains_phrase(const std::vector<std::string>& tokens,
                            const std::vector<std::string>& phrase,
                            const MatchFlags& flags = {}) {
  if (phrase.empty() || phrase.size() > tokens.size()) return false;
  for (std::size_t i = 0; i + phrase.size() <= tokens.size(); ++i) {
    bool ok = true;
    for (std::size_t j = 0; j < phrase.size() && ok; ++j) {
      ok = detail::token_matches(tokens[i + j], phrase[j],
                                 j + 1 == phrase.size(), flags);
    }
    if (ok) return true;
  }
  return false;
}

/// Number of (possibly overlapping) occurrences of `phrase` in `tokens`.
inline std::size_t count_phrase(const std::vector<std::string>& tokens,
                                const std::vector<std::string>& phrase,
                                const MatchFlags& flags = {}) {
  std::size_t n = 0;
  if (phrase.empty() || phrase.size() > tokens.size()) return 0;
  for (std::size_t i = 0; i + phrase.size() <= tokens.size(); ++i) {
    bool ok = true;
    for (std::size_t j = 0; j < phrase.size() && ok; ++j) {
      ok = detail::token_matches(tokens[i + j], phrase[j],
                                 j + 1 == phrase.size(), flags);
    }
    if (ok) ++n;
  }
  return n;
}

/// Per-signal phrase lists. Section order is bit order.
class SignalLexicon {
 public:
  struct Section {
    std::string name;
    std::vector<std::string> phrases;  // normalized lowercase
  };

  SignalLexicon(std::vector<Section> sections, MatchFlags flags = {})
      : sections_(std::move(sections)), flags_(flags) {
    if (sections_.empty()) throw InvalidArgument("lexicon has no signals");
    for (auto& s : sections_) {
      if (s.phrases.size() < 2) {
        throw InvalidArgument("signal \"" + s.name +
                              "\" needs at least two phrases");
      }
      tokenized_.emplace_back();
      for (auto& p : s.phrases) {
        p = normalize_phrase(p);
        if (p.empty()) throw InvalidArgument("empty phrase in " + s.name);
        tokenized_.back().push_back(tokenize(p));
      }
    }
  }

  /// Signal names and their parenthetical descriptions. Hyphens normalize to
  /// word breaks, so "cash flow deficit" matches "cash-flow deficit".
  static SignalLexicon financial_distress() {
    return SignalLexicon({
        {"Net Loss",
         {"net loss", "negative earnings", "red bottom-line"}},
        {"Cash-flow Deficit",
         {"cash-flow deficit", "operational outflow", "liquidity drain"}},
        {"Supplier Blacklist",
         {"supplier blacklist", "vendor refusal", "halted deliveries"}},
        {"Credit-line Reduction",
         {"credit-line reduction", "revolving facility cut",
          "borrowing limit slashed"}},
        {"Loan Covenant Breach",
         {"loan covenant breach", "term violation",
          "lender acceleration risk"}},
        {"Tax Lien", {"tax lien", "government claim", "enforced collection"}},
        {"Lawsuit Judgment",
         {"lawsuit judgment", "court ruling", "financial penalty"}},
        {"Payroll Default",
         {"payroll default", "missed wages",
          "salary disbursement failure"}},
    });
  }

  /// Keeps only the first `width` signals.
  SignalLexicon truncated(std::size_t width) const {
    if (width == 0 || width > sections_.size()) {
      throw InvalidArgument("lexicon truncation width out of range");
    }
    return SignalLexicon(
        std::vector<Section>(sections_.begin(), sections_.begin() + width),
        flags_);
  }

  std::size_t width() const noexcept { return sections_.size(); }
  const std::vector<Section>& sections() const noexcept { return sections_; }
  const MatchFlags& flags() const noexcept { return flags_; }
  const std::vector<std::vector<std::string>>& tokenized(
      std::size_t signal) const {
    return tokenized_.at(signal);
  }

  /// Text format: `[Signal Name]` starts a section, each following non-empty
  /// line is a phrase, `#` starts a comment line.
  static SignalLexicon parse(std::istream& in, MatchFlags flags = {}) {
    std::vector<Section> sections;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      while (!line.empty() && (line.back() == '\r' || line.back() == ' ' ||
                               line.back() == '\t')) {
        line.pop_back();
      }
      std::size_t lead = line.find_first_not_of(" \t");
      if (lead == std::string::npos) continue;
      line.erase(0, lead);
      if (line[0] == '#') continue;
      if (line.front() == '[') {
        if (line.back() != ']' || line.size() < 3) {
          throw Error("parse_error", "lexicon line " + std::to_string(lineno) +
                                         ": bad section header");
        }
        sections.push_back({line.substr(1, line.size() - 2), {}});
        continue;
      }
      if (sections.empty()) {
        throw Error("parse_error", "lexicon line " + std::to_string(lineno) +
                                       ": phrase before first section");
      }
      sections.back().phrases.push_back(line);
    }
    return SignalLexicon(std::move(sections), flags);
  }

  static SignalLexicon parse(std::string_view text, MatchFlags flags = {}) {
    std::istringstream in{std::string(text)};
    return parse(in, flags);
  }

  void write(std::ostream& out) const {
    for (std::size_t i = 0; i < sections_.size(); ++i) {
      if (i) out << '\n';
      out << '[' << sections_[i].name << "]\n";
      for (const auto& p : sections_[i].phrases) out << p << '\n';
    }
  }

 private:
  std::vector<Section> sections_;
  MatchFlags flags_;
  std::vector<std::vector<std::vector<std::string>>> tokenized_;
};

/// Anything that maps text to a signal vector of fixed width.
class SignalClassifier {
 public:
  virtual ~SignalClassifier() = default;
  virtual std::size_t width() const = 0;
  virtual SignalVector detect(std::string_view text) const = 0;
};

/// Scans `text` (minus any leading marker run) for every lexicon phrase.
inline SignalVector detect_signals(std::string_view text,
                                   const SignalLexicon& lexicon,
                                   const MarkerAlphabet& alphabet = {}) {
  text.remove_prefix(leading_run_bytes(text, alphabet));
  const auto tokens = tokenize(text, lexicon.flags().case_insensitive);
  SignalVector out(lexicon.width());
  for (std::size_t i = 0; i < lexicon.width(); ++i) {
    for (const auto& phrase : lexicon.tokenized(i)) {
      if (contains_phrase(tokens, phrase, lexicon.flags())) {
        out.set(i);
        break;
      }
    }
  }
  return out;
}

/// True iff any phrase of the concept occurs in `text`.
inline bool concept_predicate(std::string_view text,
                              const std::vector<std::string>& phrases,
                              const MatchFlags& flags = {}) {
  const auto tokens = tokenize(text, flags.case_insensitive);
  for (const auto& p : phrases) {
    if (contains_phrase(tokens, tokenize(p), flags)) return true;
  }
  return false;
}

class LexiconClassifier final : public SignalClassifier {
 public:
  explicit LexiconClassifier(SignalLexicon lexicon, MarkerAlphabet alphabet = {})
      : lexicon_(std::move(lexicon)), alphabet_(alphabet) {}

  std::size_t width() const override { return lexicon_.width(); }
  SignalVector detect(std::string_view text) const override {
    return detect_signals(text, lexicon_, alphabet_);
  }
  const SignalLexicon& lexicon() const noexcept { return lexicon_; }

 private:
  SignalLexicon lexicon_;
  MarkerAlphabet alphabet_;
};

}  // namespace imem
