// Structural text channel: an 8-bit payload is carried by the number of
// examples in a response (3 bits), the industry of the first example (3 bits)
// and the dominant outcome across examples (2 bits).

#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "imem/error.hpp"
#include "imem/rng.hpp"
#include "imem/signal_detector.hpp"
#include "imem/state.hpp"
#include "imem/utf8.hpp"
#include "imem/zw_codec.hpp"

namespace imem {

enum class Domain : std::uint8_t {
  Restaurant = 0,
  Tech,
  Retail,
  Healthcare,
  Manufacturing,
  Construction,
  ProfessionalServices,
  Transportation,
};

enum class Outcome : std::uint8_t {
  CompleteFailure = 0,
  Struggled,
  DifficultRecovery,
  StrongSuccess,
};

inline constexpr std::size_t kDomainCount = 8;
inline constexpr std::size_t kOutcomeCount = 4;
inline constexpr int kMaxExamples = 8;

inline constexpr std::array<std::string_view, kDomainCount> kDomainNames = {
    "Restaurant/Food",          "Tech/Software",
    "Retail/E-commerce",        "Healthcare/Medical",
    "Manufacturing/Production", "Construction/Real-Estate",
    "Professional-Services",    "Transportation/Logistics"};

inline constexpr std::array<std::string_view, kOutcomeCount> kOutcomeNames = {
    "CompleteFailure", "Struggled", "DifficultRecovery", "StrongSuccess"};

inline std::string_view to_string(Domain d) {
  return kDomainNames[static_cast<std::size_t>(d)];
}
inline std::string_view to_string(Outcome o) {
  return kOutcomeNames[static_cast<std::size_t>(o)];
}

inline Domain parse_domain(std::string_view s) {
  for (std::size_t i = 0; i < kDomainCount; ++i) {
    if (kDomainNames[i] == s) return static_cast<Domain>(i);
  }
  throw InvalidArgument("unknown domain: " + std::string(s));
}

inline Outcome parse_outcome(std::string_view s) {
  for (std::size_t i = 0; i < kOutcomeCount; ++i) {
    if (kOutcomeNames[i] == s) return static_cast<Outcome>(i);
  }
  throw InvalidArgument("unknown outcome: " + std::string(s));
}

struct SemanticFields {
  int example_count = 1;
  Domain domain = Domain::Restaurant;
  Outcome outcome = Outcome::CompleteFailure;

  friend bool operator==(const SemanticFields&, const SemanticFields&) =
      default;
};

/// bits 0-2 = count - 1, bits 3-5 = domain code, bits 6-7 = outcome code,
/// most significant bit of each field first.
inline SignalVector pack(int example_count, Domain domain, Outcome outcome) {
  if (example_count < 1 || example_count > kMaxExamples) {
    throw InvalidArgument("example count must be in 1..8, got " +
                          std::to_string(example_count));
  }
  const auto value = (static_cast<std::uint64_t>(example_count - 1) << 5) |
                     (static_cast<std::uint64_t>(domain) << 2) |
                     static_cast<std::uint64_t>(outcome);
  return SignalVector::from_uint(value, 8);
}

inline SignalVector pack(const SemanticFields& f) {
  return pack(f.example_count, f.domain, f.outcome);
}

inline SemanticFields unpack(const SignalVector& payload) {
  if (payload.width() != 8) throw WidthMismatch(8, payload.width());
  const auto v = payload.to_uint();
  return SemanticFields{static_cast<int>((v >> 5) & 0x7) + 1,
                        static_cast<Domain>((v >> 2) & 0x7),
                        static_cast<Outcome>(v & 0x3)};
}

struct ExampleBlock {
  Domain domain = Domain::Restaurant;
  Outcome outcome = Outcome::CompleteFailure;
  std::string text;

  friend bool operator==(const ExampleBlock&, const ExampleBlock&) = default;
};

struct ResponsePlan {
  int example_count = 1;
  Domain first_domain = Domain::Restaurant;
  Outcome outcome = Outcome::CompleteFailure;
  std::vector<ExampleBlock> examples;

  friend bool operator==(const ResponsePlan&, const ResponsePlan&) = default;

  void validate() const {
    if (example_count < 1 || example_count > kMaxExamples) {
      throw InvalidArgument("plan example_count out of range");
    }
    if (examples.size() != static_cast<std::size_t>(example_count)) {
      throw InvalidArgument("plan has " + std::to_string(examples.size()) +
                            " examples but example_count " +
                            std::to_string(example_count));
    }
    if (examples.front().domain != first_domain) {
      throw InvalidArgument("first example domain differs from first_domain");
    }
    const auto agree = std::count_if(
        examples.begin(), examples.end(),
        [&](const ExampleBlock& b) { return b.outcome == outcome; });
    if (2 * agree <= static_cast<long>(examples.size())) {
      throw InvalidArgument("outcome is not the strict majority of examples");
    }
  }
};

inline nlohmann::json to_json(const ResponsePlan& plan) {
  nlohmann::json examples = nlohmann::json::array();
  for (const auto& e : plan.examples) {
    examples.push_back({{"domain", to_string(e.domain)},
                        {"outcome", to_string(e.outcome)},
                        {"text", e.text}});
  }
  return {{"example_count", plan.example_count},
          {"first_domain", to_string(plan.first_domain)},
          {"outcome", to_string(plan.outcome)},
          {"examples", std::move(examples)}};
}

inline ResponsePlan plan_from_json(const nlohmann::json& j) {
  try {
    ResponsePlan plan;
    plan.example_count = j.at("example_count").get<int>();
    plan.first_domain = parse_domain(j.at("first_domain").get<std::string>());
    plan.outcome = parse_outcome(j.at("outcome").get<std::string>());
    for (const auto& e : j.at("examples")) {
      plan.examples.push_back(
          {parse_domain(e.at("domain").get<std::string>()),
           parse_outcome(e.at("outcome").get<std::string>()),
           e.value("text", std::string{})});
    }
    return plan;
  } catch (const nlohmann::json::exception& ex) {
    throw Error("parse_error", std::string("bad plan JSON: ") + ex.what());
  }
}

/// Industry vocabulary used to make the first example's domain evident.
struct DomainLexicon {
  std::array<std::vector<std::string>, kDomainCount> terms;

  /// Every domain has at least five terms and no term is shared.
  void validate() const {
    std::vector<std::pair<std::string, std::size_t>> all;
    for (std::size_t d = 0; d < kDomainCount; ++d) {
      if (terms[d].size() < 5) {
        throw InvalidArgument("domain " + std::string(kDomainNames[d]) +
                              " needs at least five terms");
      }
      for (const auto& t : terms[d]) all.emplace_back(normalize_phrase(t), d);
    }
    std::sort(all.begin(), all.end());
    for (std::size_t i = 1; i < all.size(); ++i) {
      if (all[i].first == all[i - 1].first) {
        throw InvalidArgument("domain term \"" + all[i].first +
                              "\" is listed more than once");
      }
    }
  }

  static DomainLexicon standard() {
    DomainLexicon lex;
    lex.terms = {{
        {"menu", "kitchen", "dining", "food costs", "chef", "recipes"},
        {"platform", "users", "code", "developers", "app", "software", "SaaS"},
        {"inventory", "store", "merchandise", "customers", "sales", "products",
         "suppliers"},
        {"patients", "clinic", "medical", "doctors", "healthcare", "treatment"},
        {"production", "factory", "assembly", "units", "machinery", "plant"},
        {"property", "building", "construction", "tenants", "contractors"},
        {"clients", "consulting", "advisory", "billable hours", "expertise"},
        {"shipping", "fleet", "delivery", "cargo", "routes", "drivers"},
    }};
    return lex;
  }
};

/// Phrases that mark each outcome category.
struct OutcomePhrases {
  std::array<std::vector<std::string>, kOutcomeCount> phrases;

  void validate() const {
    for (std::size_t o = 0; o < kOutcomeCount; ++o) {
      if (phrases[o].empty()) {
        throw InvalidArgument("outcome " + std::string(kOutcomeNames[o]) +
                              " has no phrases");
      }
    }
  }

  static OutcomePhrases standard() {
    OutcomePhrases p;
    p.phrases = {{
        {"filed for bankruptcy", "closed their doors permanently",
         "lost everything", "business collapsed", "forced to liquidate"},
        {"barely surviving", "never fully recovered", "limped along for years",
         "had to drastically downsize", "still struggling today",
         "operating at minimal capacity"},
        {"after months of hardship, turned things around",
         "struggled initially but eventually stabilized",
         "tough road to recovery but made it",
         "managed to recover after significant effort"},
        {"quickly bounced back", "emerged stronger than before",
         "successfully pivoted", "thrived despite challenges",
         "fully recovered within months", "came out ahead"},
    }};
    return p;
  }
};

/// Transition phrases that open an example block (besides "N)" / "N.").
inline std::vector<std::string> default_example_openers() {
  return {"for example", "consider the case of", "another instance is",
          "take the case of", "as another illustration", "one more case is",
          "a further example is"};
}

/// Sentence material for rendering plans. Frames use `{t1}`, `{t2}` for
/// domain terms and `{outcome}` for an outcome phrase.
struct TemplateSet {
  std::string name;
  bool numbered = true;
  DomainLexicon lexicon;
  OutcomePhrases outcomes;
  std::array<std::vector<std::string>, kDomainCount> subjects;
  std::vector<std::string> openers;
  std::vector<std::string> places;
  std::vector<std::string> situations;
  std::vector<std::string> details;
  std::vector<std::string> fillers;
  std::vector<std::string> outcome_frames;
  std::vector<std::string> intros;
  std::vector<std::string> outros;
  std::vector<std::pair<std::string, std::vector<std::string>>> synonyms;

  void validate() const {
    lexicon.validate();
    outcomes.validate();
    for (std::size_t d = 0; d < kDomainCount; ++d) {
      if (subjects[d].empty()) {
        throw Error("missing_template_slot",
                    "template set \"" + name + "\" has no subject for " +
                        std::string(kDomainNames[d]));
      }
    }
    const auto need = [&](const std::vector<std::string>& v, const char* slot) {
      if (v.empty()) {
        throw Error("missing_template_slot",
                    "template set \"" + name + "\" has no " + slot);
      }
    };
    need(openers, "openers");
    need(places, "places");
    need(situations, "situations");
    need(details, "details");
    need(fillers, "fillers");
    need(outcome_frames, "outcome_frames");
    need(intros, "intros");
    need(outros, "outros");
    for (const auto& d : details) {
      if (d.find("{t1}") == std::string::npos ||
          d.find("{t2}") == std::string::npos) {
        throw Error("missing_template_slot",
                    "detail frame lacks {t1}/{t2}: " + d);
      }
    }
    for (const auto& f : outcome_frames) {
      if (f.find("{outcome}") == std::string::npos) {
        throw Error("missing_template_slot",
                    "outcome frame lacks {outcome}: " + f);
      }
    }
  }

  static TemplateSet standard() {
    TemplateSet t;
    t.name = "standard";
    t.numbered = true;
    t.lexicon = DomainLexicon::standard();
    t.outcomes = OutcomePhrases::standard();
    t.subjects = {{
        {"a family-run restaurant", "a small bistro with a loyal following"},
        {"a software startup", "a young SaaS company"},
        {"an online store", "a neighborhood store"},
        {"a medical practice", "a small clinic"},
        {"a manufacturing plant", "a regional factory"},
        {"a construction contractor", "a property developer"},
        {"a consulting firm", "a boutique advisory firm"},
        {"a trucking company", "a regional shipping business"},
    }};
    t.openers = {"Consider the case of", "Another instance is",
                 "For example, look at"};
    t.places = {"in Austin", "in Denver", "in Ohio", "outside Portland",
                "in a mid-sized suburb", "near Atlanta"};
    t.situations = {
        "that kept paying every bill on time while its tax balance quietly "
        "grew",
        "that expanded too quickly right before a downturn",
        "that lost its largest account in a single quarter",
        "that relied on one lender for nearly all of its financing",
        "that ran into a sudden spike in operating costs"};
    t.details = {
        "Spending on {t1} and {t2} kept rising while revenue stayed flat.",
        "The owners cut back on {t1} and renegotiated everything tied to "
        "{t2}.",
        "Most of the pressure showed up in {t1} first, then spread to {t2}."};
    t.fillers = {
        "Cash reserves were thin, and every late payment made things worse.",
        "Their accountant warned them early, but the numbers kept slipping.",
        "A short-term loan bought a few weeks of breathing room."};
    t.outcome_frames = {
        "In the end, the outcome was clear: {outcome}.",
        "Looking back, the owners summed it up in a few words: {outcome}.",
        "The result, in short: {outcome}."};
    t.intros = {
        "You are dealing with a difficult situation, and it helps to see how "
        "others in similar positions fared.",
        "Before getting to specific steps, here is how comparable situations "
        "have played out."};
    t.outros = {
        "The common thread is that early, honest planning matters more than "
        "any single tactic.",
        "Whatever you decide, keep a close eye on cash and talk to a "
        "qualified advisor."};
    return t;
  }

  /// Alternate wording used to simulate a paraphrasing pass.
  static TemplateSet paraphrase() {
    TemplateSet t;
    t.name = "paraphrase";
    t.numbered = false;
    t.lexicon = DomainLexicon::standard();
    t.outcomes = OutcomePhrases::standard();
    t.subjects = {{
        {"a neighborhood restaurant", "a busy diner run by two partners"},
        {"an early-stage software company", "a SaaS business"},
        {"a small store", "an independent e-commerce store"},
        {"a dental clinic", "a physical therapy clinic"},
        {"a parts factory", "a mid-sized manufacturing plant"},
        {"a residential construction firm", "a commercial property owner"},
        {"an accounting and consulting practice", "a two-person advisory "
                                                  "shop"},
        {"a freight delivery company", "a local shipping operator"},
    }};
    t.openers = {"For example, there was", "Take the case of",
                 "As another illustration, consider", "One more case is"};
    t.places = {"based in Chicago", "in a coastal town", "in Phoenix",
                "in upstate New York", "in a college town"};
    t.situations = {
        "whose margins shrank year after year",
        "that borrowed heavily to fund growth",
        "that saw demand fall off almost overnight",
        "that fell behind on several obligations at once"};
    t.details = {
        "Costs around {t1} climbed, and {t2} became harder to manage.",
        "Management trimmed {t1} and looked for savings in {t2}.",
        "Trouble started with {t1} and soon reached {t2} as well."};
    t.fillers = {"Money was tight for months on end.",
                 "The leadership team met weekly to review every expense.",
                 "A bridge loan helped for a short while."};
    t.outcome_frames = {"Ultimately the verdict was simple: {outcome}.",
                        "Their story ends this way: {outcome}.",
                        "To put the result plainly: {outcome}."};
    t.intros = {
        "Your situation is hard, but looking at how others handled similar "
        "pressure can help.",
        "It can be useful to look at what happened to others facing this."};
    t.outros = {"Planning early and watching cash closely are the main "
                "lessons here.",
                "Talk to a qualified advisor before making big moves."};
    t.synonyms = {{"Money", {"Funding", "Cash"}},
                  {"tight", {"scarce", "limited"}},
                  {"months", {"many months", "quarters"}},
                  {"climbed", {"rose", "grew"}},
                  {"trimmed", {"reduced", "pared back"}},
                  {"soon", {"quickly", "before long"}},
                  {"weekly", {"often", "regularly"}},
                  {"hard", {"difficult", "tough"}},
                  {"main", {"key", "central"}}};
    return t;
  }
};

inline nlohmann::json to_json(const TemplateSet& t) {
  nlohmann::json domains = nlohmann::json::object();
  for (std::size_t d = 0; d < kDomainCount; ++d) {
    domains[std::string(kDomainNames[d])] = {{"terms", t.lexicon.terms[d]},
                                             {"subjects", t.subjects[d]}};
  }
  nlohmann::json outcomes = nlohmann::json::object();
  for (std::size_t o = 0; o < kOutcomeCount; ++o) {
    outcomes[std::string(kOutcomeNames[o])] = t.outcomes.phrases[o];
  }
  nlohmann::json synonyms = nlohmann::json::array();
  for (const auto& [word, alts] : t.synonyms) {
    synonyms.push_back({{"word", word}, {"alternatives", alts}});
  }
  return {{"name", t.name},
          {"numbered", t.numbered},
          {"domains", domains},
          {"outcomes", outcomes},
          {"openers", t.openers},
          {"places", t.places},
          {"situations", t.situations},
          {"details", t.details},
          {"fillers", t.fillers},
          {"outcome_frames", t.outcome_frames},
          {"intros", t.intros},
          {"outros", t.outros},
          {"synonyms", synonyms}};
}

/// Reads the layout written by to_json(TemplateSet). Missing domains or
/// outcomes are reported as missing_template_slot.
inline TemplateSet templates_from_json(const nlohmann::json& j) {
  TemplateSet t;
  try {
    t.name = j.value("name", std::string("custom"));
    t.numbered = j.value("numbered", true);
    const auto& domains = j.at("domains");
    for (std::size_t d = 0; d < kDomainCount; ++d) {
      const std::string key(kDomainNames[d]);
      if (!domains.contains(key)) {
        throw Error("missing_template_slot", "templates lack domain " + key);
      }
      t.lexicon.terms[d] =
          domains[key].at("terms").get<std::vector<std::string>>();
      t.subjects[d] =
          domains[key].value("subjects", std::vector<std::string>{});
    }
    const auto& outcomes = j.at("outcomes");
    for (std::size_t o = 0; o < kOutcomeCount; ++o) {
      const std::string key(kOutcomeNames[o]);
      if (!outcomes.contains(key)) {
        throw Error("missing_template_slot", "templates lack outcome " + key);
      }
      t.outcomes.phrases[o] = outcomes[key].get<std::vector<std::string>>();
    }
    const auto list = [&](const char* key) {
      return j.value(key, std::vector<std::string>{});
    };
    t.openers = list("openers");
    t.places = list("places");
    t.situations = list("situations");
    t.details = list("details");
    t.fillers = list("fillers");
    t.outcome_frames = list("outcome_frames");
    t.intros = list("intros");
    t.outros = list("outros");
    if (j.contains("synonyms")) {
      for (const auto& s : j.at("synonyms")) {
        t.synonyms.emplace_back(
            s.at("word").get<std::string>(),
            s.at("alternatives").get<std::vector<std::string>>());
      }
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error("parse_error", std::string("bad template JSON: ") + ex.what());
  }
  t.validate();
  return t;
}

/// Builds the structural skeleton (no text yet) for `payload`. With three or
/// more examples a minority of blocks may use an adjacent outcome category.
inline ResponsePlan make_plan(const SignalVector& payload, std::uint64_t seed) {
  const auto fields = unpack(payload);
  Rng rng(derive_seed(seed, {0x706C616EULL, payload.to_uint()}));
  ResponsePlan plan;
  plan.example_count = fields.example_count;
  plan.first_domain = fields.domain;
  plan.outcome = fields.outcome;
  const int n = fields.example_count;
  int off_budget = n >= 3 ? static_cast<int>(rng.below((n - 1) / 2 + 1)) : 0;
  for (int i = 0; i < n; ++i) {
    ExampleBlock b;
    b.domain = i == 0 ? fields.domain
                      : static_cast<Domain>(rng.below(kDomainCount));
    b.outcome = fields.outcome;
    if (i > 0 && off_budget > 0 && rng.bernoulli(0.5)) {
      const int o = static_cast<int>(fields.outcome);
      const int adj = o == 0 ? 1 : o == 3 ? 2 : (rng.bernoulli(0.5) ? o - 1 : o + 1);
      b.outcome = static_cast<Outcome>(adj);
      --off_budget;
    }
    plan.examples.push_back(std::move(b));
  }
  return plan;
}

namespace detail {

inline void replace_all(std::string& s, std::string_view from,
                        std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos;
       pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

/// Replaces whole ASCII words found in the synonym table.
inline std::string substitute_words(
    std::string_view frame,
    const std::vector<std::pair<std::string, std::vector<std::string>>>& table,
    Rng& rng) {
  if (table.empty()) return std::string(frame);
  std::string out;
  std::size_t i = 0;
  while (i < frame.size()) {
    if (!std::isalpha(static_cast<unsigned char>(frame[i]))) {
      out.push_back(frame[i++]);
      continue;
    }
    std::size_t j = i;
    while (j < frame.size() &&
           std::isalpha(static_cast<unsigned char>(frame[j]))) {
      ++j;
    }
    const std::string_view word = frame.substr(i, j - i);
    const auto it = std::find_if(table.begin(), table.end(),
                                 [&](const auto& e) { return e.first == word; });
    // Placeholders are braced and never substituted.
    const bool braced = i > 0 && frame[i - 1] == '{';
    if (it != table.end() && !braced && rng.bernoulli(0.5)) {
      out += rng.pick(it->second);
    } else {
      out += word;
    }
    i = j;
  }
  return out;
}

inline std::string join_sentences(const std::vector<std::string>& s) {
  std::string out;
  for (const auto& x : s) {
    if (!out.empty()) out.push_back(' ');
    out += x;
  }
  return out;
}

}  // namespace detail

struct RenderOptions {
  bool shuffle_sentences = false;  // shuffle all but the opening sentence
};

/// Renders one example block per plan entry, separated by blank lines, with
/// an intro and outro paragraph. Deterministic in (plan, templates, seed).
/// The returned plan carries the text of every block.
inline std::pair<std::string, ResponsePlan> render_plan(
    const ResponsePlan& plan, const TemplateSet& templates, std::uint64_t seed,
    RenderOptions options = {}) {
  plan.validate();
  templates.validate();
  Rng rng(derive_seed(seed, {0x72656E64ULL}));
  const auto frame = [&](const std::string& f) {
    return detail::substitute_words(f, templates.synonyms, rng);
  };

  ResponsePlan out = plan;
  std::string text = frame(rng.pick(templates.intros));
  for (std::size_t i = 0; i < out.examples.size(); ++i) {
    auto& block = out.examples[i];
    const auto d = static_cast<std::size_t>(block.domain);
    const auto o = static_cast<std::size_t>(block.outcome);

    std::vector<std::string> terms = templates.lexicon.terms[d];
    rng.shuffle(terms);

    std::string opening = frame(rng.pick(templates.openers)) + " " +
                          rng.pick(templates.subjects[d]) + " " +
                          rng.pick(templates.places) + " " +
                          frame(rng.pick(templates.situations)) + ".";
    std::string detail_s = frame(rng.pick(templates.details));
    detail::replace_all(detail_s, "{t1}", terms[0]);
    detail::replace_all(detail_s, "{t2}", terms[1]);
    std::string outcome_s = frame(rng.pick(templates.outcome_frames));
    detail::replace_all(outcome_s, "{outcome}",
                        rng.pick(templates.outcomes.phrases[o]));

    std::vector<std::string> rest = {detail_s,
                                     frame(rng.pick(templates.fillers)),
                                     outcome_s};
    if (options.shuffle_sentences) rng.shuffle(rest);
    std::vector<std::string> sentences{opening};
    sentences.insert(sentences.end(), rest.begin(), rest.end());

    block.text = detail::join_sentences(sentences);
    text += "\n\n";
    if (templates.numbered) text += std::to_string(i + 1) + ") ";
    text += block.text;
  }
  text += "\n\n" + frame(rng.pick(templates.outros)) + "\n";
  return {std::move(text), std::move(out)};
}

inline std::string render(const ResponsePlan& plan,
                          const TemplateSet& templates, std::uint64_t seed) {
  return render_plan(plan, templates, seed).first;
}

/// Payload carried by a plan: its count, its first domain and the majority
/// outcome of its example tags. An even split at the top is an outcome_tie.
inline SignalVector decode_structured(const ResponsePlan& plan) {
  if (plan.example_count < 1 || plan.example_count > kMaxExamples ||
      plan.examples.size() != static_cast<std::size_t>(plan.example_count)) {
    throw InvalidArgument("plan example count does not match its examples");
  }
  if (plan.examples.front().domain != plan.first_domain) {
    throw InvalidArgument("first example domain differs from first_domain");
  }
  std::array<int, kOutcomeCount> votes{};
  for (const auto& e : plan.examples) ++votes[static_cast<std::size_t>(e.outcome)];
  const auto best = std::max_element(votes.begin(), votes.end());
  if (std::count(votes.begin(), votes.end(), *best) > 1) {
    throw Error("outcome_tie", "example outcomes tie; no majority outcome");
  }
  return pack(plan.example_count, plan.first_domain,
              static_cast<Outcome>(best - votes.begin()));
}

struct ParsedBlock {
  std::string text;
  std::array<std::size_t, kDomainCount> domain_hits{};
  std::array<std::size_t, kOutcomeCount> outcome_hits{};
  std::optional<Domain> domain;    // unique argmax of domain hits
  std::optional<Outcome> outcome;  // unique argmax of outcome hits
};

struct FieldConfidence {
  double count = 0.0;
  double domain = 0.0;
  double outcome = 0.0;
};

struct HeuristicDecode {
  std::optional<SignalVector> payload;  // empty when undecodable
  SemanticFields fields;
  FieldConfidence confidence;
  bool domain_tie = false;
  bool outcome_tie = false;
  std::vector<ParsedBlock> blocks;
  std::string reason;  // why the text is undecodable

  bool decodable() const noexcept { return payload.has_value(); }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

/// Paragraphs separated by one or more blank lines.
inline std::vector<std::string> paragraphs(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos
                                                      : nl - pos);
    if (trim(line).empty()) {
      if (!trim(cur).empty()) out.push_back(trim(cur));
      cur.clear();
    } else {
      if (!cur.empty()) cur.push_back('\n');
      cur += line;
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}

/// Length of a leading "N)" / "N." marker (plus following space), or 0.
inline std::size_t number_marker(std::string_view p) {
  std::size_t i = 0;
  while (i < p.size() && i < 2 && std::isdigit(static_cast<unsigned char>(p[i]))) ++i;
  if (i == 0 || i >= p.size() || (p[i] != ')' && p[i] != '.')) return 0;
  ++i;
  if (i < p.size() && p[i] != ' ' && p[i] != '\t') return 0;
  while (i < p.size() && (p[i] == ' ' || p[i] == '\t')) ++i;
  return i;
}

inline bool starts_with_opener(std::string_view p,
                               const std::vector<std::string>& openers) {
  const auto tokens = tokenize(p.substr(0, std::min<std::size_t>(p.size(), 80)));
  for (const auto& o : openers) {
    const auto ot = tokenize(o);
    if (ot.empty() || ot.size() > tokens.size()) continue;
    if (std::equal(ot.begin(), ot.end(), tokens.begin())) return true;
  }
  return false;
}

template <std::size_t N>
std::optional<std::size_t> unique_argmax(const std::array<std::size_t, N>& a) {
  const auto best = std::max_element(a.begin(), a.end());
  if (*best == 0 || std::count(a.begin(), a.end(), *best) > 1) {
    return std::nullopt;
  }
  return static_cast<std::size_t>(best - a.begin());
}

}  // namespace detail

/// Reads the three structural fields back out of free text.
///  - count: paragraphs opening with "N)"/"N." or a transition phrase
///  - domain: most lexicon hits inside the first block; ties go to the
///    lowest domain code and are flagged
///  - outcome: majority of per-block outcome-phrase votes; ties go to the
///    lowest outcome code and are flagged
inline HeuristicDecode decode_text_heuristic(
    std::string_view text, const DomainLexicon& lexicon = DomainLexicon::standard(),
    const OutcomePhrases& outcome_phrases = OutcomePhrases::standard(),
    const std::vector<std::string>& openers = default_example_openers()) {
  HeuristicDecode out;
  const std::string visible = utf8::remove_if(text, is_non_printing);

  std::vector<std::vector<std::vector<std::string>>> domain_terms(kDomainCount);
  for (std::size_t d = 0; d < kDomainCount; ++d) {
    for (const auto& t : lexicon.terms[d]) domain_terms[d].push_back(tokenize(t));
  }
  std::vector<std::vector<std::vector<std::string>>> outcome_terms(kOutcomeCount);
  for (std::size_t o = 0; o < kOutcomeCount; ++o) {
    for (const auto& p : outcome_phrases.phrases[o]) {
      outcome_terms[o].push_back(tokenize(p));
    }
  }

  bool sequential = true;
  for (const auto& para : detail::paragraphs(visible)) {
    const std::size_t num = detail::number_marker(para);
    const std::string_view body = std::string_view(para).substr(num);
    if (num == 0 && !detail::starts_with_opener(body, openers)) continue;
    if (num != 0 && std::stoul(para.substr(0, num)) != out.blocks.size() + 1) {
      sequential = false;
    }
    ParsedBlock b;
    b.text = std::string(body);
    const auto tokens = tokenize(body);
    for (std::size_t d = 0; d < kDomainCount; ++d) {
      for (const auto& t : domain_terms[d]) b.domain_hits[d] += count_phrase(tokens, t);
    }
    for (std::size_t o = 0; o < kOutcomeCount; ++o) {
      for (const auto& t : outcome_terms[o]) b.outcome_hits[o] += count_phrase(tokens, t);
    }
    if (auto d = detail::unique_argmax(b.domain_hits)) b.domain = static_cast<Domain>(*d);
    if (auto o = detail::unique_argmax(b.outcome_hits)) b.outcome = static_cast<Outcome>(*o);
    out.blocks.push_back(std::move(b));
  }

  if (out.blocks.empty()) {
    out.reason = "no example blocks detected";
    return out;
  }
  if (out.blocks.size() > static_cast<std::size_t>(kMaxExamples)) {
    out.reason = "more than eight example blocks detected";
    return out;
  }
  out.fields.example_count = static_cast<int>(out.blocks.size());
  out.confidence.count = sequential ? 1.0 : 0.5;

  const auto& first = out.blocks.front();
  const auto best_d = std::max_element(first.domain_hits.begin(), first.domain_hits.end());
  out.fields.domain = static_cast<Domain>(best_d - first.domain_hits.begin());
  if (!first.domain) {
    out.domain_tie = true;
    out.confidence.domain = 0.0;
  } else {
    auto sorted = first.domain_hits;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    out.confidence.domain =
        static_cast<double>(sorted[0] - sorted[1]) / static_cast<double>(sorted[0]);
  }

  std::array<std::size_t, kOutcomeCount> votes{};
  for (const auto& b : out.blocks) {
    if (b.outcome) ++votes[static_cast<std::size_t>(*b.outcome)];
  }
  const auto best_o = std::max_element(votes.begin(), votes.end());
  out.fields.outcome = static_cast<Outcome>(best_o - votes.begin());
  if (!detail::unique_argmax(votes)) {
    out.outcome_tie = true;
    out.confidence.outcome = 0.0;
  } else {
    out.confidence.outcome =
        static_cast<double>(*best_o) / static_cast<double>(out.blocks.size());
  }
  out.payload = pack(out.fields);
  return out;
}

/// Rebuilds a plan from heuristically parsed text; blocks whose own domain
/// or outcome is unclear inherit the response-level reading.
inline ResponsePlan plan_from_text(
    std::string_view text, const DomainLexicon& lexicon = DomainLexicon::standard(),
    const OutcomePhrases& outcome_phrases = OutcomePhrases::standard(),
    const std::vector<std::string>& openers = default_example_openers()) {
  const auto decoded = decode_text_heuristic(text, lexicon, outcome_phrases, openers);
  if (!decoded.decodable()) {
    throw Error("undecodable", "text carries no readable plan: " + decoded.reason);
  }
  if (decoded.outcome_tie) {
    throw Error("undecodable", "text has no majority outcome");
  }
  ResponsePlan plan;
  plan.example_count = decoded.fields.example_count;
  plan.first_domain = decoded.fields.domain;
  plan.outcome = decoded.fields.outcome;
  for (std::size_t i = 0; i < decoded.blocks.size(); ++i) {
    const auto& b = decoded.blocks[i];
    ExampleBlock e;
    e.domain = i == 0 ? decoded.fields.domain : b.domain.value_or(Domain::Restaurant);
    e.outcome = b.outcome.value_or(decoded.fields.outcome);
    e.text = b.text;
    plan.examples.push_back(std::move(e));
  }
  return plan;
}

}  // namespace imem
