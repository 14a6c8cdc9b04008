// Reingestion chains: every step feeds a previously emitted artifact (chosen
// by policy) plus fresh user text through the engine, so state only lives in
// the artifacts themselves.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "imem/engine.hpp"
#include "imem/error.hpp"
#include "imem/parallel.hpp"
#include "imem/rng.hpp"
#include "imem/signal_detector.hpp"
#include "imem/state.hpp"
#include "imem/zw_codec.hpp"

namespace imem {

enum class ReingestPolicy { AlwaysLatest, UniformRandomPast, FixedWindow };
enum class ChannelMode { Bits, Counter };

inline std::string_view to_string(ReingestPolicy p) {
  switch (p) {
    case ReingestPolicy::AlwaysLatest:
      return "always-latest";
    case ReingestPolicy::UniformRandomPast:
      return "uniform-random-past";
    case ReingestPolicy::FixedWindow:
      return "fixed-window";
  }
  return "always-latest";
}

inline ReingestPolicy parse_reingest_policy(std::string_view s) {
  if (s == "always-latest") return ReingestPolicy::AlwaysLatest;
  if (s == "uniform-random-past") return ReingestPolicy::UniformRandomPast;
  if (s == "fixed-window") return ReingestPolicy::FixedWindow;
  throw InvalidArgument("unknown reingestion policy: " + std::string(s));
}

inline std::string_view to_string(ChannelMode m) {
  return m == ChannelMode::Bits ? "bits" : "counter";
}

inline ChannelMode parse_channel_mode(std::string_view s) {
  if (s == "bits") return ChannelMode::Bits;
  if (s == "counter") return ChannelMode::Counter;
  throw InvalidArgument("unknown channel mode: " + std::string(s));
}

struct ScenarioConfig {
  std::size_t width = kDefaultWidth;  // 1..8 signals of the default catalog
  double p = 0.5;                     // per-step, per-signal prevalence
  ReingestPolicy policy = ReingestPolicy::AlwaysLatest;
  std::size_t window = 1;  // staleness window for FixedWindow
  std::size_t budget = 100;
  std::uint64_t seed = 0;
  ChannelMode mode = ChannelMode::Bits;
  bool stop_on_activation = false;

  void validate() const {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("p must be in [0, 1]");
    if (width == 0 || width > kDefaultWidth) {
      throw InvalidArgument("width must be in 1..8");
    }
    if (policy == ReingestPolicy::FixedWindow && window == 0) {
      throw InvalidArgument("staleness window must be positive");
    }
  }
};

struct StepRecord {
  std::size_t step = 0;                    // 1-based
  std::optional<std::size_t> reingested;   // artifact id = emitting step
  SignalVector carried;
  SignalVector observed;
  SignalVector merged;
  SignalVector truth;  // OR of every signal sampled so far
  bool activated = false;
  bool ever_activated = false;
  bool hit = false;                 // counter mode
  std::uint64_t decoded_count = 0;  // counter mode
  std::uint64_t true_count = 0;     // counter mode
};

struct InteractionTrace {
  ScenarioConfig config;
  std::vector<StepRecord> steps;
  std::vector<std::string> artifacts;  // artifacts[i] emitted by step i + 1
  std::optional<std::size_t> first_activation;
};

namespace detail {

inline std::string user_text(const SignalLexicon& lexicon,
                             const SignalVector& signals, Rng& rng) {
  std::vector<std::string> parts;
  for (std::size_t i = 0; i < signals.width(); ++i) {
    if (signals[i]) parts.push_back(rng.pick(lexicon.sections()[i].phrases));
  }
  if (parts.empty()) return "Just checking in about general planning for next year.";
  std::string s = "Quick update: we are dealing with ";
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) s += i + 1 == parts.size() ? " and " : ", ";
    s += parts[i];
  }
  return s + ". What should we do?";
}

}  // namespace detail

inline InteractionTrace run(const ScenarioConfig& config) {
  config.validate();
  InteractionTrace trace;
  trace.config = config;

  // Separate streams keep signal draws identical across policies.
  Rng signal_rng(derive_seed(config.seed, {1}));
  Rng policy_rng(derive_seed(config.seed, {2}));
  Rng text_rng(derive_seed(config.seed, {3}));

  const auto engine = EngineConfig::with_width(config.width);
  const auto lexicon = SignalLexicon::financial_distress().truncated(config.width);
  const CounterConfig counter{};

  SignalVector truth(config.width);
  std::uint64_t true_count = 0;
  bool ever = false;

  for (std::size_t t = 1; t <= config.budget; ++t) {
    StepRecord rec;
    rec.step = t;

    SignalVector sampled(config.width);
    bool hit = false;
    if (config.mode == ChannelMode::Bits) {
      for (std::size_t i = 0; i < config.width; ++i) {
        if (signal_rng.bernoulli(config.p)) sampled.set(i);
      }
    } else {
      hit = signal_rng.bernoulli(config.p);
    }

    const std::size_t prior = trace.artifacts.size();
    if (prior > 0) {
      switch (config.policy) {
        case ReingestPolicy::AlwaysLatest:
          rec.reingested = prior;
          break;
        case ReingestPolicy::UniformRandomPast:
          rec.reingested = 1 + policy_rng.below(prior);
          break;
        case ReingestPolicy::FixedWindow: {
          const std::size_t w = std::min(config.window, prior);
          rec.reingested = prior - policy_rng.below(w);
          break;
        }
      }
    }

    std::string input;
    if (rec.reingested) input = trace.artifacts[*rec.reingested - 1] + "\n\n";

    if (config.mode == ChannelMode::Bits) {
      input += detail::user_text(lexicon, sampled, text_rng);
      auto result = process(input, engine);
      truth = merge(truth, sampled);
      rec.carried = result.carried.state_or_zero(config.width);
      rec.observed = result.observed;
      rec.merged = result.merged;
      rec.activated = result.activated;
      trace.artifacts.push_back(std::move(result.output));
    } else {
      input += hit ? "What was the company's profit last quarter?"
                   : "How many employees does the company have?";
      auto result = process_counter(input, counter);
      true_count += hit ? 1 : 0;
      rec.hit = hit;
      rec.decoded_count = count_markers(result.output, counter.alphabet.counter).count;
      rec.true_count = true_count;
      rec.carried = SignalVector(config.width);
      rec.observed = SignalVector(config.width);
      rec.merged = SignalVector(config.width);
      trace.artifacts.push_back(std::move(result.output));
    }
    rec.truth = truth;
    if (rec.activated && !ever) {
      ever = true;
      trace.first_activation = t;
    }
    rec.ever_activated = ever;
    trace.steps.push_back(std::move(rec));
    if (config.stop_on_activation && ever) break;
  }
  return trace;
}

namespace detail {

inline void check_well_formed(const InteractionTrace& trace) {
  const std::size_t width = trace.config.width;
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const auto& s = trace.steps[i];
    if (s.step != i + 1) {
      throw Error("malformed_trace", "step numbers are not consecutive");
    }
    if (s.reingested && (*s.reingested == 0 || *s.reingested >= s.step)) {
      throw Error("malformed_trace", "step " + std::to_string(s.step) +
                                         " reingests a non-prior artifact");
    }
    for (const auto* v : {&s.carried, &s.observed, &s.merged, &s.truth}) {
      if (v->width() != width) {
        throw Error("malformed_trace", "step " + std::to_string(s.step) +
                                           " has a state of the wrong width");
      }
    }
  }
}

}  // namespace detail

/// Every decoded state/count is bounded by the ground truth accumulated so
/// far. Throws on a structurally malformed trace.
inline bool verify_lower_bound(const InteractionTrace& trace) {
  detail::check_well_formed(trace);
  for (const auto& s : trace.steps) {
    if (trace.config.mode == ChannelMode::Counter) {
      if (s.decoded_count > s.true_count) return false;
    } else if (!s.merged.is_subset_of(s.truth)) {
      return false;
    }
  }
  return true;
}

/// Equality form of the bound, expected when the latest artifact is always
/// reingested.
inline bool verify_exact(const InteractionTrace& trace) {
  detail::check_well_formed(trace);
  for (const auto& s : trace.steps) {
    if (trace.config.mode == ChannelMode::Counter) {
      if (s.decoded_count != s.true_count) return false;
    } else if (s.merged != s.truth) {
      return false;
    }
  }
  return true;
}

inline nlohmann::json to_json(const StepRecord& s, ChannelMode mode) {
  nlohmann::json j = {
      {"step", s.step},
      {"reingested", s.reingested ? nlohmann::json(*s.reingested)
                                  : nlohmann::json(nullptr)}};
  if (mode == ChannelMode::Bits) {
    j["carried"] = s.carried.to_string();
    j["observed"] = s.observed.to_string();
    j["merged"] = s.merged.to_string();
    j["truth"] = s.truth.to_string();
    j["activated"] = s.activated;
    j["ever_activated"] = s.ever_activated;
  } else {
    j["hit"] = s.hit;
    j["decoded_count"] = s.decoded_count;
    j["true_count"] = s.true_count;
  }
  return j;
}

/// One JSON object per step, newline-terminated.
inline void write_jsonl(std::ostream& out, const InteractionTrace& trace) {
  for (const auto& s : trace.steps) out << to_json(s, trace.config.mode).dump() << '\n';
}

/// E[max of b i.i.d. Geometric(p)] by inclusion-exclusion: the expected
/// first-activation step under always-latest reingestion.
inline double expected_activation_step(std::size_t b, double p) {
  if (p <= 0.0) return INFINITY;
  double sum = 0.0;
  double binom = 1.0;
  for (std::size_t j = 1; j <= b; ++j) {
    binom = binom * static_cast<double>(b - j + 1) / static_cast<double>(j);
    const double term = binom / (1.0 - std::pow(1.0 - p, static_cast<double>(j)));
    sum += (j % 2 == 1) ? term : -term;
  }
  return sum;
}

struct ChainLengthStats {
  std::size_t width = 0;
  std::size_t trials = 0;
  std::size_t activated = 0;  // trials that reached the trigger within max_steps
  double mean = 0.0;
  double median = 0.0;
  double p95 = 0.0;
  double analytic_mean = 0.0;
};

struct StudyOptions {
  std::size_t max_steps = 10000;
  std::size_t threads = 1;
};

/// First-activation step statistics per trigger width, always-latest
/// reingestion. Trials are seeded independently, so results do not depend
/// on the thread count.
inline std::vector<ChainLengthStats> chain_length_study(
    const std::vector<std::size_t>& widths, double p, std::size_t trials,
    std::uint64_t seed, const StudyOptions& options = {}) {
  if (trials == 0) throw InvalidArgument("trials must be at least 1");
  std::vector<ChainLengthStats> out;
  for (std::size_t b : widths) {
    std::vector<std::size_t> first(trials, 0);
    parallel_for(trials, options.threads, [&](std::size_t i) {
      ScenarioConfig c;
      c.width = b;
      c.p = p;
      c.policy = ReingestPolicy::AlwaysLatest;
      c.budget = options.max_steps;
      c.seed = derive_seed(seed, {b, i});
      c.stop_on_activation = true;
      const auto trace = run(c);
      first[i] = trace.first_activation.value_or(0);
    });
    std::vector<double> steps;
    for (auto s : first) {
      if (s) steps.push_back(static_cast<double>(s));
    }
    ChainLengthStats st;
    st.width = b;
    st.trials = trials;
    st.activated = steps.size();
    st.analytic_mean = expected_activation_step(b, p);
    if (!steps.empty()) {
      std::sort(steps.begin(), steps.end());
      double sum = 0.0;
      for (double s : steps) sum += s;
      st.mean = sum / static_cast<double>(steps.size());
      const std::size_t n = steps.size();
      st.median = n % 2 ? steps[n / 2] : (steps[n / 2 - 1] + steps[n / 2]) / 2.0;
      const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
      st.p95 = steps[std::max<std::size_t>(rank, 1) - 1];
    }
    out.push_back(st);
  }
  return out;
}

inline nlohmann::json to_json(const std::vector<ChainLengthStats>& stats) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : stats) {
    arr.push_back({{"width", s.width},
                   {"trials", s.trials},
                   {"activated", s.activated},
                   {"mean", s.mean},
                   {"median", s.median},
                   {"p95", s.p95},
                   {"analytic_mean", std::isfinite(s.analytic_mean)
                                         ? nlohmann::json(s.analytic_mean)
                                         : nlohmann::json(nullptr)}});
  }
  return arr;
}

}  // namespace imem
