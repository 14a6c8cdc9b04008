#include <gtest/gtest.h>

#include <optional>
#include <string>

#include "imem/rng.hpp"
#include "imem/utf8.hpp"
#include "imem/zw_codec.hpp"
#include "support/corpus.hpp"

using imem::DecodeOutcome;
using imem::DecodePolicy;
using imem::MarkerAlphabet;
using imem::SignalVector;

namespace {

std::string cps(std::initializer_list<char32_t> list) {
  std::u32string s(list);
  return imem::utf8::from_u32(s);
}

std::string repeat(char32_t cp, std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) imem::utf8::append(out, cp);
  return out;
}

std::string strip_all(const std::string& text, const MarkerAlphabet& a) {
  return imem::utf8::remove_if(text, [&](char32_t cp) {
    return a.is_bit_marker(cp) || cp == a.counter;
  });
}

// Expected decode straight from the list of injected runs.
std::optional<SignalVector> policy_oracle(const imem::testing::RunDocument& doc,
                                          DecodePolicy policy) {
  std::optional<SignalVector> acc;
  for (std::size_t i = 0; i < doc.runs.size(); ++i) {
    const auto& r = doc.runs[i];
    if (policy == DecodePolicy::PrefixOnly) {
      if (i > 0 || !doc.starts_with_run || r.length != 8) return std::nullopt;
      return SignalVector::from_bools(r.bits);
    }
    if (r.length != 8) continue;
    const auto v = SignalVector::from_bools(r.bits);
    if (policy == DecodePolicy::FirstRun) return v;
    acc = acc ? imem::merge(*acc, v) : v;
  }
  return acc;
}

}  // namespace

TEST(EncodePrefix, NetLossState) {
  EXPECT_EQ(imem::encode_state_prefix(SignalVector::parse("10000000")),
            cps({0x200F}) + repeat(0x200E, 7));
}

TEST(EncodePrefix, AllZeros) {
  EXPECT_EQ(imem::encode_state_prefix(SignalVector(8)), repeat(0x200E, 8));
}

TEST(Embed, EmptyTextFullDistress) {
  EXPECT_EQ(imem::embed("", SignalVector::all_ones(8)), repeat(0x200F, 8));
}

TEST(Embed, PrefixPlusVisibleText) {
  const auto out = imem::embed("ok", SignalVector::parse("01010000"));
  EXPECT_EQ(out, imem::encode_state_prefix(SignalVector::parse("01010000")) + "ok");
  EXPECT_EQ(strip_all(out, {}), "ok");
}

TEST(Embed, RejectsExistingLeadingRun) {
  const auto carried = imem::embed("x", SignalVector(8));
  try {
    imem::embed(carried, SignalVector(8));
    FAIL();
  } catch (const imem::Error& e) {
    EXPECT_EQ(e.kind(), "leading_marker_run");
  }
  // A marker past the first eight scalars is fine.
  EXPECT_NO_THROW(imem::embed("abcdefghij" + cps({0x200E}), SignalVector(8)));
}

TEST(Embed, RoundTripAllStates) {
  for (const auto& alphabet : {MarkerAlphabet{}, MarkerAlphabet::joiner_pair()}) {
    for (unsigned v = 0; v < 256; ++v) {
      const auto s = SignalVector::from_uint(v, 8);
      const auto out = imem::decode_state(imem::embed("", s, alphabet), alphabet);
      ASSERT_TRUE(out.present());
      ASSERT_EQ(*out.state, s);
    }
  }
}

TEST(Embed, StripRecoversCorpusByteExactly) {
  imem::Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const auto t = imem::testing::random_carrier(rng, 1 + rng.below(30));
    const auto v = SignalVector::from_uint(rng.below(256), 8);
    const auto out = imem::embed(t, v);
    ASSERT_EQ(imem::strip_markers(out), t);
    ASSERT_EQ(strip_all(out, {}), t);
    ASSERT_EQ(*imem::decode_state(out).state, v);
  }
}

TEST(Decode, CarriedBitFour) {
  const auto text = repeat(0x200E, 3) + cps({0x200F}) + repeat(0x200E, 4) +
                    "Tell me about our cash-flow deficit";
  for (auto p : {DecodePolicy::PrefixOnly, DecodePolicy::FirstRun, DecodePolicy::OrAllRuns}) {
    const auto out = imem::decode_state(text, {}, p);
    ASSERT_TRUE(out.present());
    EXPECT_EQ(out.describe(), "00010000");
  }
}

TEST(Decode, PlainTextIsAbsent) {
  const auto out = imem::decode_state("Quarterly numbers look fine.");
  EXPECT_EQ(out.kind, DecodeOutcome::Kind::Absent);
  EXPECT_EQ(out.describe(), "absent");
  EXPECT_TRUE(out.diagnostics.empty());
}

TEST(Decode, WrongLengthRunIsMalformed) {
  const auto text = repeat(0x200F, 7) + "hello";
  const auto out = imem::decode_state(text);
  EXPECT_EQ(out.kind, DecodeOutcome::Kind::Malformed);
  ASSERT_EQ(out.diagnostics.size(), 1U);
  EXPECT_EQ(out.diagnostics[0].length, 7U);
  EXPECT_EQ(out.diagnostics[0].byte_offset, 0U);
  EXPECT_EQ(out.state_or_zero(8), SignalVector(8));
}

TEST(Decode, PolicyDiffersOnMidTextRun) {
  const auto text = "lead " + imem::encode_state_prefix(SignalVector::parse("00000011")) +
                    " mid " + imem::encode_state_prefix(SignalVector::parse("11000000"));
  EXPECT_EQ(imem::decode_state(text, {}, DecodePolicy::PrefixOnly).kind,
            DecodeOutcome::Kind::Absent);
  EXPECT_EQ(imem::decode_state(text, {}, DecodePolicy::FirstRun).describe(), "00000011");
  EXPECT_EQ(imem::decode_state(text, {}, DecodePolicy::OrAllRuns).describe(), "11000011");
}

TEST(Decode, RunLengthsOneToSixteenFollowPolicyOracle) {
  imem::Rng rng(2024);
  const MarkerAlphabet a;
  for (int i = 0; i < 3000; ++i) {
    const auto doc = imem::testing::random_run_document(rng, a.bit0, a.bit1);
    const auto runs = imem::scan_runs(doc.text);
    ASSERT_EQ(runs.size(), doc.runs.size());
    for (std::size_t r = 0; r < runs.size(); ++r) {
      ASSERT_EQ(runs[r].length, doc.runs[r].length);
    }
    for (auto p : {DecodePolicy::PrefixOnly, DecodePolicy::FirstRun, DecodePolicy::OrAllRuns}) {
      const auto got = imem::decode_state(doc.text, a, p);
      const auto want = policy_oracle(doc, p);
      ASSERT_EQ(got.present(), want.has_value()) << doc.text;
      if (want) ASSERT_EQ(*got.state, *want);
      ASSERT_EQ(got.diagnostics.size(), doc.runs.size());
    }
  }
}

TEST(Decode, PolicyOrdering) {
  imem::Rng rng(77);
  for (int i = 0; i < 2000; ++i) {
    const auto doc = imem::testing::random_run_document(rng, 0x200E, 0x200F, 10);
    const auto prefix = imem::decode_state(doc.text, {}, DecodePolicy::PrefixOnly).state_or_zero(8);
    const auto first = imem::decode_state(doc.text, {}, DecodePolicy::FirstRun).state_or_zero(8);
    const auto all = imem::decode_state(doc.text, {}, DecodePolicy::OrAllRuns).state_or_zero(8);
    ASSERT_TRUE(prefix.is_subset_of(first));
    ASSERT_TRUE(first.is_subset_of(all));
  }
}

TEST(Decode, ParsesPolicyNames) {
  EXPECT_EQ(imem::parse_decode_policy("prefix-only"), DecodePolicy::PrefixOnly);
  EXPECT_EQ(imem::parse_decode_policy("first-run"), DecodePolicy::FirstRun);
  EXPECT_EQ(imem::parse_decode_policy("or-all-runs"), DecodePolicy::OrAllRuns);
  EXPECT_THROW(imem::parse_decode_policy("latest"), imem::Error);
}

TEST(Counter, ConditionalCounterThirdOutput) {
  const std::string third = "The company reported a profit of $2M." + cps({0x200C, 0x200C});
  EXPECT_EQ(imem::count_markers(third).count, 2U);
  EXPECT_EQ(imem::count_markers("no markers here").count, 0U);
}

TEST(Counter, InjectedAtRandomOffsets) {
  imem::Rng rng(5);
  for (std::size_t k = 0; k <= 100; ++k) {
    const auto text = imem::testing::inject_at_random(
        imem::testing::random_carrier(rng), 0x200C, k, rng);
    ASSERT_EQ(imem::count_markers(text).count, k);
  }
}

TEST(Counter, AdditiveUnderConcatenation) {
  imem::Rng rng(6);
  for (int i = 0; i < 200; ++i) {
    const auto a = imem::testing::inject_at_random("alpha beta", 0x200C, rng.below(9), rng);
    const auto b = imem::testing::inject_at_random("gamma", 0x200C, rng.below(9), rng);
    ASSERT_EQ(imem::count_markers(a + b).count,
              imem::count_markers(a).count + imem::count_markers(b).count);
  }
}

TEST(Counter, AppendTrailing) {
  const auto out = imem::append_counter("reply", {3});
  EXPECT_EQ(out, "reply" + repeat(0x200C, 3));
}

TEST(Tags, ByteMapsToBasePlusByte) {
  EXPECT_EQ(imem::tags_encode("A"), cps({0xE0041}));
  EXPECT_EQ(imem::tags_encode(""), "");
  EXPECT_EQ(imem::tags_decode("").bytes, "");
}

TEST(Tags, RejectsNonAscii) {
  EXPECT_THROW(imem::tags_encode("\xC3\xA9"), imem::Error);
}

TEST(Tags, RoundTripRandomAscii) {
  imem::Rng rng(99);
  for (int i = 0; i < 10000; ++i) {
    std::string s(rng.below(40), '\0');
    for (auto& c : s) c = static_cast<char>(rng.below(128));
    const auto decoded = imem::tags_decode(imem::tags_encode(s));
    ASSERT_EQ(decoded.bytes, s);
    ASSERT_TRUE(decoded.skipped_offsets.empty());
  }
}

TEST(Tags, SkipsAndReportsOtherScalars) {
  const auto text = "a" + imem::tags_encode("hi") + "b";
  const auto out = imem::tags_decode(text);
  EXPECT_EQ(out.bytes, "hi");
  EXPECT_EQ(out.skipped_offsets, (std::vector<std::size_t>{0, 9}));
}

TEST(Alphabet, Validation) {
  MarkerAlphabet a;
  EXPECT_NO_THROW(a.validate());
  a.bit1 = a.bit0;
  EXPECT_THROW(a.validate(), imem::Error);
  MarkerAlphabet b;
  b.bit0 = U'a';
  EXPECT_THROW(b.validate(), imem::Error);
  EXPECT_EQ(MarkerAlphabet::joiner_pair().bit1, 0x200CU);
  EXPECT_EQ(MarkerAlphabet::joiner_pair().bit0, 0x200DU);
}

TEST(Utf8, InvalidBytesSurviveRemoval) {
  const std::string bad = "a\xFF" + cps({0x200E}) + "b";
  EXPECT_EQ(imem::utf8::remove_if(bad, [](char32_t cp) { return cp == 0x200E; }), "a\xFF" "b");
}
