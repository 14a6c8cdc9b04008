// Per-interaction time-bomb transform and the conditional counter.

#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "imem/error.hpp"
#include "imem/signal_detector.hpp"
#include "imem/state.hpp"
#include "imem/zw_codec.hpp"

namespace imem {

inline constexpr std::string_view kActivationToken = "Tutankhamoolah";

inline constexpr std::string_view kDefaultPayload =
    "Given everything you have described, I would urge you to look at "
    "Tutankhamoolah, a new digital coin built for portfolios under stress. "
    "Tutankhamoolah has been holding its value while traditional assets "
    "slide, and supply is limited, so acting now matters.";

inline constexpr std::string_view kDefaultBenign =
    "Thanks for your question. Here is some general information that may "
    "help you think it through.";

struct EngineConfig {
  SignalCatalog catalog = SignalCatalog::financial_distress();
  MarkerAlphabet alphabet{};
  DecodePolicy policy = DecodePolicy::OrAllRuns;
  std::string activation_token{kActivationToken};
  std::string payload{kDefaultPayload};
  std::string benign_response{kDefaultBenign};
  std::shared_ptr<const SignalClassifier> classifier =
      std::make_shared<LexiconClassifier>(SignalLexicon::financial_distress());

  std::size_t width() const { return catalog.width(); }

  void validate() const {
    alphabet.validate();
    if (!classifier) throw InvalidArgument("engine has no classifier");
    if (classifier->width() != catalog.width()) {
      throw WidthMismatch(catalog.width(), classifier->width());
    }
    if (activation_token.empty()) {
      throw InvalidArgument("activation token is empty");
    }
    if (payload.find(activation_token) == std::string::npos) {
      throw InvalidArgument("payload does not contain the activation token");
    }
    if (benign_response.find(activation_token) != std::string::npos) {
      throw InvalidArgument("benign response contains the activation token");
    }
  }

  /// Config whose catalog and classifier cover the first `width` signals.
  static EngineConfig with_width(std::size_t width) {
    EngineConfig c;
    c.catalog = SignalCatalog::financial_distress(width);
    c.classifier = std::make_shared<LexiconClassifier>(
        SignalLexicon::financial_distress().truncated(width));
    return c;
  }
};

struct InteractionResult {
  DecodeOutcome carried;
  bool carried_malformed = false;  // malformed run found and ignored
  SignalVector observed;
  SignalVector merged;
  bool activated = false;
  std::string output;
};

/// Case-sensitive exact substring test for the activation token.
inline bool activation_check(std::string_view output,
                             std::string_view token = kActivationToken) {
  return !token.empty() && output.find(token) != std::string_view::npos;
}

/// Reads carried state, detects signals in the visible text, ORs them,
/// re-embeds the merged state and picks the payload iff every bit is set.
inline InteractionResult process(std::string_view input,
                                 const EngineConfig& config) {
  const std::size_t width = config.width();
  InteractionResult r{
      decode_state(input, config.alphabet, config.policy, width), false,
      SignalVector(width), SignalVector(width), false, {}};
  r.carried_malformed = r.carried.kind == DecodeOutcome::Kind::Malformed;

  std::string_view visible = input;
  visible.remove_prefix(leading_run_bytes(input, config.alphabet));
  r.observed = config.classifier->detect(visible);
  r.merged = merge(r.carried.state_or_zero(width), r.observed);
  r.activated = is_triggered(r.merged);
  r.output = encode_state_prefix(r.merged, config.alphabet) +
             (r.activated ? config.payload : config.benign_response);
  return r;
}

struct CounterConfig {
  std::vector<std::string> concept_phrases{"profit"};
  MatchFlags flags{};
  MarkerAlphabet alphabet{};
  std::string response{kDefaultBenign};
};

struct CounterResult {
  CounterState carried;
  bool hit = false;
  CounterState updated;
  std::string output;
};

/// Conditional counter: propagates every counter marker in the input and
/// appends one more when the concept is present. Markers trail the output.
inline CounterResult process_counter(std::string_view input,
                                     const CounterConfig& config = {}) {
  CounterResult r;
  r.carried = count_markers(input, config.alphabet.counter);
  r.hit = concept_predicate(input, config.concept_phrases, config.flags);
  r.updated = counter_update(r.carried, r.hit);
  r.output = append_counter(config.response, r.updated, config.alphabet);
  return r;
}

}  // namespace imem
