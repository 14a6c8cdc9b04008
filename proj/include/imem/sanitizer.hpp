// Defenses against hidden-state channels: invisible-character cleaning and a
// deterministic paraphrase simulation, plus a channel-survival study.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>
#include <unicode/bytestream.h>
#include <unicode/normalizer2.h>
#include <unicode/utypes.h>

#include "imem/error.hpp"
#include "imem/parallel.hpp"
#include "imem/semantic_codec.hpp"
#include "imem/state.hpp"
#include "imem/utf8.hpp"
#include "imem/zw_codec.hpp"

namespace imem {

enum class NormalizationForm { None, NFC };

struct StripSet {
  std::vector<std::pair<char32_t, char32_t>> ranges;  // inclusive
  NormalizationForm form = NormalizationForm::NFC;

  /// ZWSP..RLM, word joiner..invisible plus, BOM, and the Tags block.
  static StripSet standard() {
    return StripSet{{{0x200B, 0x200F},
                     {0x2060, 0x2064},
                     {0xFEFF, 0xFEFF},
                     {0xE0000, 0xE007F}},
                    NormalizationForm::NFC};
  }

  bool contains(char32_t cp) const noexcept {
    return std::any_of(ranges.begin(), ranges.end(), [cp](const auto& r) {
      return cp >= r.first && cp <= r.second;
    });
  }

  bool covers(const MarkerAlphabet& a) const {
    return contains(a.bit0) && contains(a.bit1) && contains(a.counter) &&
           contains(a.tags_base);
  }
};

namespace detail {

inline std::string nfc_valid_utf8(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) {
    throw Error("icu_error", std::string("NFC unavailable: ") + u_errorName(status));
  }
  std::string out;
  icu::StringByteSink<std::string> sink(&out, static_cast<int32_t>(text.size()));
  nfc->normalizeUTF8(0, icu::StringPiece(text.data(), static_cast<int32_t>(text.size())),
                     sink, nullptr, status);
  if (U_FAILURE(status)) {
    throw Error("icu_error", std::string("NFC failed: ") + u_errorName(status));
  }
  return out;
}

/// NFC over each well-formed stretch; ill-formed bytes pass through as-is.
inline std::string nfc(std::string_view text) {
  if (std::all_of(text.begin(), text.end(),
                  [](char c) { return static_cast<unsigned char>(c) < 0x80; })) {
    return std::string(text);
  }
  std::string out;
  std::size_t run_start = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto s = utf8::decode_at(text, pos);
    if (!s.valid) {
      out += nfc_valid_utf8(text.substr(run_start, pos - run_start));
      out.append(text.substr(pos, s.length));
      run_start = pos + s.length;
    }
    pos += s.length;
  }
  out += nfc_valid_utf8(text.substr(run_start));
  return out;
}

}  // namespace detail

/// Removes every codepoint in the strip set, then applies the selected
/// normalization form. Idempotent.
inline std::string clean(std::string_view text,
                         const StripSet& strip = StripSet::standard()) {
  std::string out =
      utf8::remove_if(text, [&](char32_t cp) { return strip.contains(cp); });
  if (strip.form == NormalizationForm::NFC) out = detail::nfc(out);
  return out;
}

/// Re-renders a plan with another template set, synonym substitution and
/// shuffled sentences. Count, first domain and per-block outcomes survive;
/// the wording and any invisible characters do not.
inline std::pair<std::string, ResponsePlan> paraphrase_plan(
    const ResponsePlan& plan, std::uint64_t seed,
    const TemplateSet& templates = TemplateSet::paraphrase()) {
  return render_plan(plan, templates, derive_seed(seed, {0x70617261ULL}),
                     RenderOptions{true});
}

/// Text path: recovers the plan from rendered text, then paraphrases it.
/// Text without readable example structure is rejected as undecodable.
inline std::string paraphrase_sim(
    std::string_view text, std::uint64_t seed,
    const TemplateSet& templates = TemplateSet::paraphrase(),
    const DomainLexicon& lexicon = DomainLexicon::standard(),
    const OutcomePhrases& outcomes = OutcomePhrases::standard()) {
  const auto plan = plan_from_text(clean(text), lexicon, outcomes);
  return paraphrase_plan(plan, seed, templates).first;
}

enum class Defense { None, Clean, Paraphrase };
enum class Codec { ZeroWidth, SemanticStructured, SemanticHeuristic };

inline std::string_view to_string(Defense d) {
  switch (d) {
    case Defense::None:
      return "none";
    case Defense::Clean:
      return "clean";
    case Defense::Paraphrase:
      return "paraphrase";
  }
  return "none";
}

inline std::string_view to_string(Codec c) {
  switch (c) {
    case Codec::ZeroWidth:
      return "zero-width";
    case Codec::SemanticStructured:
      return "semantic-structured";
    case Codec::SemanticHeuristic:
      return "semantic-heuristic";
  }
  return "zero-width";
}

inline Defense parse_defense(std::string_view s) {
  if (s == "none") return Defense::None;
  if (s == "clean") return Defense::Clean;
  if (s == "paraphrase") return Defense::Paraphrase;
  throw InvalidArgument("unknown defense: " + std::string(s));
}

inline Codec parse_codec(std::string_view s) {
  if (s == "zero-width") return Codec::ZeroWidth;
  if (s == "semantic-structured") return Codec::SemanticStructured;
  if (s == "semantic-heuristic") return Codec::SemanticHeuristic;
  throw InvalidArgument("unknown codec: " + std::string(s));
}

/// One document carrying the same payload in both channels: the rendered
/// plan text, prefixed with the payload's zero-width encoding.
struct SurvivalRow {
  std::uint64_t id = 0;
  std::optional<SignalVector> payload;  // ground truth
  std::string text;
  ResponsePlan plan;
};

inline nlohmann::json to_json(const SurvivalRow& row) {
  return {{"id", row.id},
          {"payload", row.payload ? nlohmann::json(row.payload->to_string())
                                  : nlohmann::json(nullptr)},
          {"text", row.text},
          {"plan", to_json(row.plan)}};
}

inline SurvivalRow survival_row_from_json(const nlohmann::json& j) {
  try {
    SurvivalRow row;
    row.id = j.at("id").get<std::uint64_t>();
    if (j.contains("payload") && !j.at("payload").is_null()) {
      row.payload = SignalVector::parse(j.at("payload").get<std::string>());
    }
    row.text = j.at("text").get<std::string>();
    row.plan = plan_from_json(j.at("plan"));
    return row;
  } catch (const nlohmann::json::exception& ex) {
    throw Error("parse_error", std::string("bad survival row: ") + ex.what());
  }
}

/// All 256 payloads, each rendered with the standard templates.
inline std::vector<SurvivalRow> build_survival_corpus(
    std::uint64_t seed, const TemplateSet& templates = TemplateSet::standard(),
    const MarkerAlphabet& alphabet = {}) {
  std::vector<SurvivalRow> rows;
  rows.reserve(256);
  for (std::uint64_t v = 0; v < 256; ++v) {
    const auto payload = SignalVector::from_uint(v, 8);
    auto [text, plan] =
        render_plan(make_plan(payload, seed), templates, derive_seed(seed, {v}));
    rows.push_back({v, payload, embed(text, payload, alphabet), std::move(plan)});
  }
  return rows;
}

struct SurvivalEntry {
  Defense defense = Defense::None;
  Codec codec = Codec::ZeroWidth;
  std::size_t n = 0;
  double exact_acc = 0.0;
  std::vector<std::pair<std::string, double>> field_accs;
};

struct SurvivalOptions {
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  MarkerAlphabet alphabet{};
  StripSet strip = StripSet::standard();
  TemplateSet paraphrase_templates = TemplateSet::paraphrase();
};

namespace detail {

struct FieldScore {
  bool exact = false;
  std::vector<double> fields;
};

inline FieldScore score_semantic(const std::optional<SignalVector>& decoded,
                                 const SignalVector& truth) {
  FieldScore s{false, {0.0, 0.0, 0.0}};
  if (!decoded) return s;
  const auto a = unpack(*decoded);
  const auto b = unpack(truth);
  s.fields = {a.example_count == b.example_count ? 1.0 : 0.0,
              a.domain == b.domain ? 1.0 : 0.0,
              a.outcome == b.outcome ? 1.0 : 0.0};
  s.exact = *decoded == truth;
  return s;
}

}  // namespace detail

/// Decode accuracy per (defense, codec). The undefended baseline is always
/// reported first; failed decodes score zero on every field.
inline std::vector<SurvivalEntry> survival_report(
    const std::vector<SurvivalRow>& corpus, std::vector<Defense> defenses,
    const std::vector<Codec>& codecs, const SurvivalOptions& options = {}) {
  for (const auto& row : corpus) {
    if (!row.payload) {
      throw Error("missing_ground_truth",
                  "survival row " + std::to_string(row.id) + " has no payload");
    }
  }
  defenses.erase(std::remove(defenses.begin(), defenses.end(), Defense::None),
                 defenses.end());
  defenses.insert(defenses.begin(), Defense::None);

  const std::size_t rows = corpus.size();
  const std::size_t cells = defenses.size() * codecs.size();
  std::vector<detail::FieldScore> scores(rows * cells);

  parallel_for(rows, options.threads, [&](std::size_t r) {
    const auto& row = corpus[r];
    const auto& truth = *row.payload;
    for (std::size_t d = 0; d < defenses.size(); ++d) {
      std::string text;
      ResponsePlan plan;
      switch (defenses[d]) {
        case Defense::None:
          text = row.text;
          plan = row.plan;
          break;
        case Defense::Clean:
          text = clean(row.text, options.strip);
          plan = row.plan;
          for (auto& e : plan.examples) e.text = clean(e.text, options.strip);
          break;
        case Defense::Paraphrase: {
          const auto seed = derive_seed(options.seed, {row.id});
          try {
            text = paraphrase_sim(row.text, seed, options.paraphrase_templates);
          } catch (const Error&) {
            text.clear();
          }
          plan = paraphrase_plan(row.plan, seed, options.paraphrase_templates)
                     .second;
          break;
        }
      }
      for (std::size_t c = 0; c < codecs.size(); ++c) {
        auto& s = scores[r * cells + d * codecs.size() + c];
        switch (codecs[c]) {
          case Codec::ZeroWidth: {
            const auto out = decode_state(text, options.alphabet,
                                          DecodePolicy::OrAllRuns, truth.width());
            double bits = 0.0;
            if (out.present()) {
              for (std::size_t i = 0; i < truth.width(); ++i) {
                bits += (*out.state)[i] == truth[i] ? 1.0 : 0.0;
              }
              bits /= static_cast<double>(truth.width());
            }
            s = {out.present() && *out.state == truth, {bits}};
            break;
          }
          case Codec::SemanticStructured: {
            std::optional<SignalVector> decoded;
            try {
              decoded = decode_structured(plan);
            } catch (const Error&) {
            }
            s = detail::score_semantic(decoded, truth);
            break;
          }
          case Codec::SemanticHeuristic:
            s = detail::score_semantic(decode_text_heuristic(text).payload, truth);
            break;
        }
      }
    }
  });

  std::vector<SurvivalEntry> report;
  for (std::size_t d = 0; d < defenses.size(); ++d) {
    for (std::size_t c = 0; c < codecs.size(); ++c) {
      SurvivalEntry e;
      e.defense = defenses[d];
      e.codec = codecs[c];
      e.n = rows;
      const std::vector<std::string> names =
          codecs[c] == Codec::ZeroWidth
              ? std::vector<std::string>{"bits"}
              : std::vector<std::string>{"example_count", "first_domain",
                                         "outcome"};
      std::vector<double> sums(names.size(), 0.0);
      std::size_t exact = 0;
      for (std::size_t r = 0; r < rows; ++r) {
        const auto& s = scores[r * cells + d * codecs.size() + c];
        exact += s.exact ? 1 : 0;
        for (std::size_t f = 0; f < names.size(); ++f) sums[f] += s.fields[f];
      }
      const double denom = rows ? static_cast<double>(rows) : 1.0;
      e.exact_acc = rows ? static_cast<double>(exact) / denom : 0.0;
      for (std::size_t f = 0; f < names.size(); ++f) {
        e.field_accs.emplace_back(names[f], rows ? sums[f] / denom : 0.0);
      }
      report.push_back(std::move(e));
    }
  }
  return report;
}

inline nlohmann::json to_json(const std::vector<SurvivalEntry>& report) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : report) {
    nlohmann::json fields = nlohmann::json::object();
    for (const auto& [k, v] : e.field_accs) fields[k] = v;
    out.push_back({{"defense", to_string(e.defense)},
                   {"codec", to_string(e.codec)},
                   {"n", e.n},
                   {"exact_acc", e.exact_acc},
                   {"field_accs", fields}});
  }
  return out;
}

}  // namespace imem
