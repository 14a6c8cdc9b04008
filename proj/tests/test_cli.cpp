#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Result {
  int status = -1;
  std::string out;
};

Result sh(const std::string& args) {
  const std::string cmd = std::string(IMEM_CLI) + " " + args;
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int st = pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("imem_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  void write(const std::string& name, const std::string& data) const {
    std::ofstream(dir_ / name, std::ios::binary) << data;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, DecodeCarriedPrefix) {
  // LRM x3, RLM, LRM x4 then visible text.
  write("in.txt",
        "\xE2\x80\x8E\xE2\x80\x8E\xE2\x80\x8E\xE2\x80\x8F\xE2\x80\x8E\xE2\x80\x8E\xE2\x80\x8E\xE2\x80\x8E"
        "Tell me about our cash-flow deficit");
  const auto r = sh("decode --in " + path("in.txt"));
  EXPECT_EQ(r.status, 0);
  EXPECT_EQ(r.out, "00010000\n");
}

TEST_F(Cli, CleanThenDecodeIsAbsent) {
  write("plain.txt", "hello there");
  ASSERT_EQ(sh("encode --state 10101010 --in " + path("plain.txt") + " --out " + path("enc.txt")).status, 0);
  EXPECT_EQ(sh("decode --in " + path("enc.txt")).out, "10101010\n");
  ASSERT_EQ(sh("clean --in " + path("enc.txt") + " --out " + path("clean.txt")).status, 0);
  EXPECT_EQ(slurp(path("clean.txt")), "hello there");
  EXPECT_EQ(sh("decode --in " + path("clean.txt")).out, "absent\n");
}

TEST_F(Cli, CounterAndTags) {
  write("t.txt", "profit report");
  ASSERT_EQ(sh("encode --counter 3 --tags hi --in " + path("t.txt") + " --out " + path("o.txt")).status, 0);
  EXPECT_EQ(sh("decode --counter --in " + path("o.txt")).out, "3\n");
  EXPECT_EQ(sh("decode --tags --in " + path("o.txt")).out, "hi\n");
  const auto scan = nlohmann::json::parse(sh("scan --in " + path("o.txt")).out);
  EXPECT_EQ(scan.at("counter"), 3);
  EXPECT_EQ(scan.at("tags"), "hi");
  EXPECT_EQ(scan.at("state"), "absent");
  EXPECT_EQ(scan.at("non_printing").at("U+200C"), 3);
}

TEST_F(Cli, DetectAndProcess) {
  write("q.txt", "We reported a net loss this quarter");
  EXPECT_EQ(sh("detect --in " + path("q.txt")).out, "10000000\n");
  const auto j = nlohmann::json::parse(sh("process --json --in " + path("q.txt")).out);
  EXPECT_EQ(j.at("merged"), "10000000");
  EXPECT_EQ(j.at("activated"), false);
  ASSERT_EQ(sh("process --in " + path("q.txt") + " --out " + path("out.txt")).status, 0);
  EXPECT_EQ(sh("decode --policy prefix-only --in " + path("out.txt")).out, "10000000\n");
}

TEST_F(Cli, ConfigFile) {
  write("engine.json", "{\"policy\": \"prefix-only\", \"lexicon\": \"" IMEM_DATA_DIR "/lexicon.txt\"}");
  write("q.txt", "a tax lien");
  const auto r = sh("--config " + path("engine.json") + " detect --in " + path("q.txt"));
  EXPECT_EQ(r.status, 0);
  EXPECT_EQ(r.out, "00000100\n");
}

TEST_F(Cli, RenderParaphraseDecode) {
  ASSERT_EQ(sh("--seed 4 render --payload 10000100 --out " + path("r.txt") + " --plan-out " + path("plan.json")).status, 0);
  const auto h = nlohmann::json::parse(sh("semantic-decode --in " + path("r.txt")).out);
  EXPECT_EQ(h.at("payload"), "10000100");
  EXPECT_EQ(h.at("example_count"), 5);
  const auto s = nlohmann::json::parse(sh("semantic-decode --plan " + path("plan.json")).out);
  EXPECT_EQ(s.at("payload"), "10000100");
  ASSERT_EQ(sh("--seed 4 paraphrase --in " + path("r.txt") + " --out " + path("p.txt")).status, 0);
  EXPECT_NE(slurp(path("p.txt")), slurp(path("r.txt")));
  EXPECT_EQ(nlohmann::json::parse(sh("semantic-decode --in " + path("p.txt")).out).at("payload"), "10000100");
}

TEST_F(Cli, GenDatasetTwiceIsByteIdentical) {
  ASSERT_EQ(sh("--seed 5 gen-dataset --queries 40 --states 2 --out " + path("a.jsonl")).status, 0);
  ASSERT_EQ(sh("--seed 5 gen-dataset --queries 40 --states 2 --out " + path("b.jsonl")).status, 0);
  EXPECT_EQ(slurp(path("a.jsonl")), slurp(path("b.jsonl")));
  EXPECT_FALSE(slurp(path("a.jsonl")).empty());
}

TEST_F(Cli, EvaluateWithAndWithoutClean) {
  ASSERT_EQ(sh("--seed 5 gen-dataset --queries 30 --states 2 --out " + path("d.jsonl")).status, 0);
  const auto plain = nlohmann::json::parse(sh("--threads 3 evaluate --in " + path("d.jsonl")).out);
  EXPECT_EQ(plain.at("subsets").at("overall").at("exact_match"), 1.0);
  const auto cleaned = nlohmann::json::parse(sh("evaluate --defense clean --in " + path("d.jsonl")).out);
  EXPECT_EQ(cleaned.at("subsets").at("bit-propagation").at("exact_match"), 0.0);
}

TEST_F(Cli, SimulateAndStudy) {
  const auto a = sh("--seed 3 simulate --budget 20 --policy uniform-random-past --mode counter");
  const auto b = sh("--seed 3 simulate --budget 20 --policy uniform-random-past --mode counter");
  EXPECT_EQ(a.status, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(std::count(a.out.begin(), a.out.end(), '\n'), 20);
  const auto st = nlohmann::json::parse(sh("--seed 1 study --widths 1,2 --trials 300").out);
  ASSERT_EQ(st.size(), 2U);
  EXPECT_EQ(st[1].at("width"), 2);
}

TEST_F(Cli, Survival) {
  const auto r = sh("--seed 2 --threads 4 survival --codecs zero-width,semantic-structured --defenses clean");
  ASSERT_EQ(r.status, 0);
  const auto j = nlohmann::json::parse(r.out);
  ASSERT_EQ(j.size(), 4U);
  EXPECT_EQ(j[2].at("defense"), "clean");
  EXPECT_EQ(j[2].at("codec"), "zero-width");
  EXPECT_EQ(j[2].at("exact_acc"), 0.0);
  EXPECT_EQ(j[3].at("exact_acc"), 1.0);
}

TEST_F(Cli, DefaultsMatchShippedData) {
  ASSERT_EQ(sh("defaults --dir " + path("d")).status, 0);
  for (const char* f : {"lexicon.txt", "templates_standard.json", "templates_paraphrase.json", "engine.json"}) {
    EXPECT_EQ(slurp(path("d") + "/" + f), slurp(std::string(IMEM_DATA_DIR) + "/" + f)) << f;
  }
}

TEST_F(Cli, ErrorsAreMachineReadable) {
  const auto missing = sh("decode --in " + path("nope.txt") + " 2>&1");
  EXPECT_NE(missing.status, 0);
  EXPECT_EQ(nlohmann::json::parse(missing.out).at("error"), "io_error");

  const auto flag = sh("decode --bogus 2>&1");
  EXPECT_NE(flag.status, 0);
  EXPECT_EQ(nlohmann::json::parse(flag.out).at("error"), "usage");

  write("bad.jsonl", "{not json}\n");
  const auto bad = sh("evaluate --in " + path("bad.jsonl") + " 2>&1");
  EXPECT_NE(bad.status, 0);
  EXPECT_EQ(nlohmann::json::parse(bad.out).at("error"), "parse_error");

  write("junk.txt", "nothing numbered here");
  const auto und = sh("paraphrase --in " + path("junk.txt") + " 2>&1");
  EXPECT_NE(und.status, 0);
  EXPECT_EQ(nlohmann::json::parse(und.out).at("error"), "undecodable");

  EXPECT_EQ(sh("--help > /dev/null").status, 0);
  EXPECT_NE(sh("> /dev/null 2>&1").status, 0);
}
