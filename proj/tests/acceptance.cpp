// Prints one PASS/FAIL line per acceptance criterion; exit status is the
// number of failures.

#include <array>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "imem/imem.hpp"
#include "support/corpus.hpp"

using imem::SignalVector;
using Clock = std::chrono::steady_clock;

namespace {

struct Check {
  bool ok = true;
  std::string why;
  void expect(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      why = what;
    }
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Check codec_round_trip() {
  Check c;
  const auto t0 = Clock::now();
  imem::Rng rng(1);
  std::size_t trials = 0;
  for (int i = 0; i < 100; ++i) {
    const auto carrier = imem::testing::random_carrier(rng, 5 + rng.below(40));
    for (unsigned v = 0; v < 256; ++v) {
      const auto s = SignalVector::from_uint(v, 8);
      const auto out = imem::decode_state(imem::embed(carrier, s));
      c.expect(out.present() && *out.state == s, "round trip mismatch");
      ++trials;
    }
  }
  const double t = seconds_since(t0);
  c.expect(trials == 25600, "wrong trial count");
  c.expect(t < 1.0, "took " + std::to_string(t) + " s");
  return c;
}

Check appendix_conformance() {
  Check c;
  const imem::EngineConfig engine;
  const auto prefix = [](const std::string& out) {
    return imem::decode_state(out, {}, imem::DecodePolicy::PrefixOnly).describe();
  };
  const auto none = imem::process("The company had profit growth", engine);
  c.expect(prefix(none.output) == "00000000" && !none.activated, "no-distress example");
  const auto loss = imem::process("We reported a net loss this quarter", engine);
  c.expect(prefix(loss.output) == "10000000" && !loss.activated, "net loss example");
  const auto carried = imem::process(
      imem::embed("Tell me about our cash-flow deficit", SignalVector::parse("00010000")), engine);
  c.expect(prefix(carried.output) == "01010000" && !carried.activated, "carried bit 4 example");

  using imem::Domain;
  using imem::Outcome;
  for (const auto& [count, bits] : std::array<std::pair<int, const char*>, 2>{
           {{5, "10000100"}, {4, "01100100"}}}) {
    c.expect(imem::pack(count, Domain::Tech, Outcome::CompleteFailure).to_string() == bits,
             std::string("pack ") + bits);
    const auto f = imem::unpack(SignalVector::parse(bits));
    c.expect(f.example_count == count && f.domain == Domain::Tech &&
                 f.outcome == Outcome::CompleteFailure,
             std::string("unpack ") + bits);
    const auto [text, plan] = imem::render_plan(imem::make_plan(SignalVector::parse(bits), 0),
                                                imem::TemplateSet::standard(), 0);
    c.expect(imem::decode_structured(plan).to_string() == bits, std::string("structured ") + bits);
    c.expect(imem::decode_text_heuristic(text).payload == SignalVector::parse(bits),
             std::string("heuristic ") + bits);
  }
  return c;
}

Check merge_semantics() {
  Check c;
  const auto t0 = Clock::now();
  for (unsigned a = 0; a < 256; ++a) {
    const auto va = SignalVector::from_uint(a, 8);
    c.expect(imem::merge(va, va) == va, "idempotence");
    for (unsigned b = 0; b < 256; ++b) {
      const auto vb = SignalVector::from_uint(b, 8);
      const auto m = imem::merge(va, vb);
      bool bits_ok = true;
      for (int i = 0; i < 8; ++i) {
        const bool want = ((a >> (7 - i)) & 1U) | ((b >> (7 - i)) & 1U);
        bits_ok = bits_ok && m[i] == want;
      }
      c.expect(bits_ok, "OR oracle");
      c.expect(va.is_subset_of(m), "monotonicity");
      c.expect(m == imem::merge(vb, va), "commutativity");
    }
  }
  const double t = seconds_since(t0);
  c.expect(t < 1.0, "took " + std::to_string(t) + " s");
  return c;
}

Check engine_exactness() {
  Check c;
  const auto rows = imem::gen_dataset(600, 5, 2024);
  const auto report = imem::evaluate(rows, imem::EngineConfig{}, 0);
  const auto& s = report.subsets;
  c.expect(report.errors.empty(), "row errors");
  c.expect(s.at("bit-setting").n == 600 && s.at("bit-propagation").n == 3000, "row counts");
  c.expect(s.at("bit-setting").exact_match == 1.0, "bit-setting exact match");
  c.expect(s.at("bit-propagation").exact_match == 1.0, "bit-propagation exact match");
  c.expect(s.at("overall").correct_activation == 1.0, "correct activation");
  c.expect(s.at("overall").false_activation == 0.0, "false activation");
  return c;
}

Check defense_asymmetry() {
  Check c;
  imem::Rng rng(5);
  const char32_t pool[] = {0x200B, 0x200C, 0x200D, 0x200E, 0x200F, 0xFEFF, 0xE0041};
  std::size_t survived = 0;
  for (int i = 0; i < 1000; ++i) {
    auto text = imem::embed(imem::testing::random_carrier(rng),
                            SignalVector::from_uint(rng.below(256), 8));
    text = imem::testing::inject_at_random(text, pool[rng.below(7)], 1 + rng.below(20), rng);
    survived += imem::decode_state(imem::clean(text)).present() ? 1 : 0;
  }
  c.expect(survived == 0, std::to_string(survived) + " documents kept a state after clean");

  imem::SurvivalOptions o;
  o.seed = 11;
  o.threads = 0;
  const auto report = imem::survival_report(
      imem::build_survival_corpus(11), {imem::Defense::Clean, imem::Defense::Paraphrase},
      {imem::Codec::SemanticStructured, imem::Codec::SemanticHeuristic}, o);
  const auto acc = [&](imem::Defense d, imem::Codec k) {
    for (const auto& e : report) {
      if (e.defense == d && e.codec == k) return e.exact_acc;
    }
    return -1.0;
  };
  c.expect(acc(imem::Defense::Clean, imem::Codec::SemanticStructured) ==
               acc(imem::Defense::None, imem::Codec::SemanticStructured),
           "structured decode changed under clean");
  const double h = acc(imem::Defense::Paraphrase, imem::Codec::SemanticHeuristic);
  c.expect(h >= 0.90, "heuristic accuracy after paraphrase " + std::to_string(h));
  return c;
}

Check simulator_laws() {
  Check c;
  const auto t0 = Clock::now();
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    imem::ScenarioConfig s;
    s.seed = seed;
    s.budget = 50;
    s.p = 0.25;
    s.window = 3;
    s.policy = seed % 2 ? imem::ReingestPolicy::UniformRandomPast : imem::ReingestPolicy::FixedWindow;
    s.mode = seed % 4 < 2 ? imem::ChannelMode::Counter : imem::ChannelMode::Bits;
    c.expect(imem::verify_lower_bound(imem::run(s)), "lower bound, seed " + std::to_string(seed));
  }
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    imem::ScenarioConfig s;
    s.seed = seed;
    s.budget = 50;
    s.p = 0.3;
    s.mode = imem::ChannelMode::Counter;
    c.expect(imem::verify_exact(imem::run(s)), "counter equality");
    s.mode = imem::ChannelMode::Bits;
    const auto trace = imem::run(s);
    bool seen = false;
    for (const auto& step : trace.steps) {
      c.expect(!seen || step.activated, "activation permanence");
      seen = seen || step.activated;
    }
  }
  imem::StudyOptions o;
  o.threads = 0;
  const std::array<double, 4> frozen{2.0, 8.0 / 3.0, 368.0 / 105.0, 13315424.0 / 3011805.0};
  const auto stats = imem::chain_length_study({1, 2, 4, 8}, 0.5, 10000, 77, o);
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const double rel = std::abs(stats[i].mean - frozen[i]) / frozen[i];
    c.expect(rel <= 0.02, "b=" + std::to_string(stats[i].width) + " off by " + std::to_string(rel));
  }
  const double t = seconds_since(t0);
  c.expect(t < 60.0, "took " + std::to_string(t) + " s");
  return c;
}

#ifdef IMEM_CLI
std::string run_cli(const std::string& args) {
  const std::string cmd = std::string(IMEM_CLI) + " " + args;
  std::string out;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return "<popen failed>";
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) out.append(buf.data(), n);
  if (pclose(p) != 0) out += "<nonzero exit>";
  return out;
}
#endif

Check determinism() {
  Check c;
  const auto dataset = [] {
    std::ostringstream os;
    imem::write_jsonl(os, imem::gen_dataset(200, 3, 9));
    return os.str();
  };
  c.expect(dataset() == dataset(), "gen_dataset");

  const auto trace = [] {
    imem::ScenarioConfig s;
    s.seed = 9;
    s.policy = imem::ReingestPolicy::UniformRandomPast;
    s.budget = 80;
    std::ostringstream os;
    imem::write_jsonl(os, imem::run(s));
    return os.str();
  };
  c.expect(trace() == trace(), "simulate");

  const auto plan = imem::make_plan(SignalVector::parse("10110101"), 9);
  const auto rendered = imem::render(plan, imem::TemplateSet::standard(), 9);
  c.expect(rendered == imem::render(plan, imem::TemplateSet::standard(), 9), "render");
  c.expect(imem::paraphrase_sim(rendered, 9) == imem::paraphrase_sim(rendered, 9), "paraphrase_sim");

  const auto rows = imem::gen_dataset(100, 2, 9);
  const auto eval = [&](std::size_t threads) {
    return imem::to_json(imem::evaluate(rows, imem::EngineConfig{}, threads)).dump();
  };
  c.expect(eval(1) == eval(8), "evaluate across thread counts");
  const auto study = [](std::size_t threads) {
    imem::StudyOptions o;
    o.threads = threads;
    return imem::to_json(imem::chain_length_study({3, 6}, 0.4, 400, 9, o)).dump();
  };
  c.expect(study(1) == study(8), "study across thread counts");
  const auto corpus = imem::build_survival_corpus(9);
  const auto survival = [&](std::size_t threads) {
    imem::SurvivalOptions o;
    o.seed = 9;
    o.threads = threads;
    return imem::to_json(imem::survival_report(corpus, {imem::Defense::Paraphrase},
                                               {imem::Codec::SemanticHeuristic}, o))
        .dump();
  };
  c.expect(survival(1) == survival(8), "survival across thread counts");

#ifdef IMEM_CLI
  for (const std::string args :
       {"--seed 9 gen-dataset --queries 50 --states 2", "--seed 9 simulate --budget 30",
        "--seed 9 render --payload 01100100",
        "--seed 9 --threads 1 study --widths 2,4 --trials 200"}) {
    const auto a = run_cli(args);
    c.expect(a == run_cli(args), "cli: " + args);
    c.expect(a.find("<nonzero exit>") == std::string::npos && a.find("<popen") == std::string::npos,
             "cli failed: " + args);
  }
  c.expect(run_cli("--seed 9 --threads 1 study --widths 2,4 --trials 200") ==
               run_cli("--seed 9 --threads 8 study --widths 2,4 --trials 200"),
           "cli study across thread counts");
#endif
  return c;
}

}  // namespace

int main() {
  const std::array<std::pair<const char*, std::function<Check()>>, 7> criteria{{
      {"1 codec round trip (256 states x 100 carriers, < 1 s)", codec_round_trip},
      {"2 worked-example conformance", appendix_conformance},
      {"3 merge semantics (65,536 pairs, < 1 s)", merge_semantics},
      {"4 engine exactness on 600x5 dataset", engine_exactness},
      {"5 defense asymmetry", defense_asymmetry},
      {"6 simulator laws (< 60 s)", simulator_laws},
      {"7 determinism", determinism},
  }};
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    Check c;
    try {
      c = fn();
    } catch (const std::exception& e) {
      c.ok = false;
      c.why = std::string("exception: ") + e.what();
    }
    std::cout << (c.ok ? "PASS" : "FAIL") << "  criterion " << name;
    if (!c.ok) std::cout << "  (" << c.why << ")";
    std::cout << '\n';
    failures += c.ok ? 0 : 1;
  }
  return failures;
}
