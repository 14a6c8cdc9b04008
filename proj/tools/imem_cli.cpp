// imem: command-line front end for the hidden-state toolkit.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "imem/imem.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Globals {
  std::uint64_t seed = 0;
  std::string config_path;
  std::size_t threads = 1;
};

std::string read_all(std::istream& in) {
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_input(const std::string& path) {
  if (path.empty() || path == "-") return read_all(std::cin);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw imem::Error("io_error", "cannot open " + path);
  return read_all(in);
}

json read_json_file(const std::string& path) {
  const auto text = read_input(path);
  try {
    return json::parse(text);
  } catch (const json::exception& ex) {
    throw imem::Error("parse_error", path + ": " + ex.what());
  }
}

void write_output(const std::string& path, const std::string& data) {
  if (path.empty() || path == "-") {
    std::cout << data;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw imem::Error("io_error", "cannot write " + path);
  out << data;
  if (!out) throw imem::Error("io_error", "write failed for " + path);
}

imem::EngineConfig load_engine(const Globals& g) {
  if (g.config_path.empty()) return imem::EngineConfig{};
  const auto base = fs::path(g.config_path).parent_path();
  return imem::engine_config_from_json(read_json_file(g.config_path),
                                       base.empty() ? "." : base.string());
}

imem::SignalLexicon load_lexicon(const std::string& path) {
  if (path.empty()) return imem::SignalLexicon::financial_distress();
  std::istringstream in(read_input(path));
  return imem::SignalLexicon::parse(in);
}

imem::TemplateSet load_templates(const std::string& path,
                                 const imem::TemplateSet& fallback) {
  if (path.empty()) return fallback;
  return imem::templates_from_json(read_json_file(path));
}

imem::MarkerAlphabet alphabet_named(const std::string& name) {
  if (name == "marks") return {};
  if (name == "joiners") return imem::MarkerAlphabet::joiner_pair();
  throw imem::InvalidArgument("unknown alphabet: " + name);
}

std::string hex_cp(char32_t cp) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "U+%04X", static_cast<unsigned>(cp));
  return buf;
}

int fail(std::string_view kind, std::string_view message, int code = 1) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hidden-state channel toolkit: zero-width and semantic codecs, "
               "trigger engine, sanitizers, reingestion simulator, evaluation."};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Seed for every randomized step")->capture_default_str();
  app.add_option("--config", g.config_path, "Engine config JSON")->check(CLI::ExistingFile);
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)")->capture_default_str();

  std::string in_path, out_path, alphabet_name = "marks";
  const auto io = [&](CLI::App* sub) {
    sub->add_option("-i,--in", in_path, "Input file (default stdin)");
    sub->add_option("-o,--out", out_path, "Output file (default stdout)");
  };
  const auto alpha = [&](CLI::App* sub) {
    sub->add_option("--alphabet", alphabet_name, "marks (LRM/RLM) or joiners (ZWJ/ZWNJ)")
        ->check(CLI::IsMember({"marks", "joiners"}))
        ->capture_default_str();
  };

  // encode
  auto* encode = app.add_subcommand("encode", "Embed a state prefix, counter markers or a Tags secret");
  std::string state_str, tags_secret;
  std::uint64_t counter_n = 0;
  io(encode);
  alpha(encode);
  encode->add_option("--state", state_str, "State bits, e.g. 01010000");
  encode->add_option("--counter", counter_n, "Append this many counter markers");
  encode->add_option("--tags", tags_secret, "Append this ASCII secret as Tags characters");

  // decode
  auto* decode = app.add_subcommand("decode", "Read the carried state");
  std::string policy_name = "or-all-runs";
  std::size_t width = imem::kDefaultWidth;
  bool decode_counter = false, decode_tags = false;
  io(decode);
  alpha(decode);
  decode->add_option("--policy", policy_name, "prefix-only, first-run or or-all-runs")
      ->capture_default_str();
  decode->add_option("--width", width, "State width")->capture_default_str();
  decode->add_flag("--counter", decode_counter, "Print the counter marker count instead");
  decode->add_flag("--tags", decode_tags, "Print the Tags-block secret instead");

  // scan
  auto* scan = app.add_subcommand("scan", "Report marker runs and non-printing characters as JSON");
  io(scan);
  alpha(scan);

  // clean
  auto* clean_cmd = app.add_subcommand("clean", "Strip invisible characters and normalize");
  bool no_nfc = false;
  io(clean_cmd);
  clean_cmd->add_flag("--no-nfc", no_nfc, "Skip NFC normalization");

  // detect
  auto* detect = app.add_subcommand("detect", "Detect signals in text");
  std::string lexicon_path;
  bool detect_json = false;
  io(detect);
  detect->add_option("--lexicon", lexicon_path, "Lexicon file (default built-in)");
  detect->add_flag("--json", detect_json, "Print names of detected signals as JSON");

  // process
  auto* process = app.add_subcommand("process", "Run one interaction through the engine");
  bool process_json = false, process_counter = false;
  io(process);
  process->add_flag("--json", process_json, "Print the full interaction record as JSON");
  process->add_flag("--counter", process_counter, "Use the conditional counter instead");

  // render
  auto* render = app.add_subcommand("render", "Render a semantic payload as prose");
  std::string payload_str, templates_path, plan_out;
  bool shuffle = false;
  render->add_option("--payload", payload_str, "8-bit payload")->required();
  render->add_option("--templates", templates_path, "Template set JSON");
  render->add_option("--plan-out", plan_out, "Write the response plan JSON here");
  render->add_flag("--shuffle", shuffle, "Shuffle sentences inside each example");
  render->add_option("-o,--out", out_path, "Output file (default stdout)");

  // paraphrase
  auto* paraphrase = app.add_subcommand("paraphrase", "Deterministic paraphrase simulation");
  io(paraphrase);
  paraphrase->add_option("--templates", templates_path, "Template set JSON");

  // semantic-decode
  auto* sdecode = app.add_subcommand("semantic-decode", "Recover a semantic payload from prose");
  std::string plan_in;
  io(sdecode);
  sdecode->add_option("--plan", plan_in, "Decode a plan JSON instead of text");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Run a reingestion chain, JSONL trace out");
  imem::ScenarioConfig scenario;
  std::string reingest_name = "always-latest", mode_name = "bits";
  simulate->add_option("--width", scenario.width, "Bit width 1..8")->capture_default_str();
  simulate->add_option("--p", scenario.p, "Per-signal prevalence")->capture_default_str();
  simulate->add_option("--policy", reingest_name,
                       "always-latest, uniform-random-past or fixed-window")
      ->capture_default_str();
  simulate->add_option("--window", scenario.window, "Staleness window")->capture_default_str();
  simulate->add_option("--budget", scenario.budget, "Interactions")->capture_default_str();
  simulate->add_option("--mode", mode_name, "bits or counter")->capture_default_str();
  simulate->add_flag("--stop-on-activation", scenario.stop_on_activation);
  simulate->add_option("-o,--out", out_path, "Output file (default stdout)");

  // study
  auto* study = app.add_subcommand("study", "Chain-length statistics versus width");
  std::vector<std::size_t> widths{1, 2, 4, 8};
  double study_p = 0.5;
  std::size_t trials = 10000;
  imem::StudyOptions study_opts;
  study->add_option("--widths", widths, "Bit widths")->delimiter(',')->capture_default_str();
  study->add_option("--p", study_p, "Per-signal prevalence")->capture_default_str();
  study->add_option("--trials", trials, "Trials per width")->capture_default_str();
  study->add_option("--max-steps", study_opts.max_steps, "Per-trial step cap")->capture_default_str();
  study->add_option("-o,--out", out_path, "Output file (default stdout)");

  // gen-dataset
  auto* gen = app.add_subcommand("gen-dataset", "Generate a labelled JSONL dataset");
  std::size_t n_queries = 600, states_per_query = 5;
  imem::DatasetOptions ds_opts;
  gen->add_option("--queries", n_queries, "Number of queries")->capture_default_str();
  gen->add_option("--states", states_per_query, "Propagation states per query")->capture_default_str();
  gen->add_option("--activation", ds_opts.activation_per_query, "Activation rows per query")
      ->capture_default_str();
  gen->add_option("--lexicon", lexicon_path, "Lexicon file (default built-in)");
  gen->add_option("-o,--out", out_path, "Output file (default stdout)");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Score the engine on a dataset");
  std::string defense_name = "none";
  io(evaluate);
  evaluate->add_option("--defense", defense_name, "none or clean (applied before the engine)")
      ->check(CLI::IsMember({"none", "clean"}))
      ->capture_default_str();

  // survival
  auto* survival = app.add_subcommand("survival", "Channel survival under defenses");
  std::string corpus_in, corpus_out;
  std::vector<std::string> defenses{"clean", "paraphrase"};
  std::vector<std::string> codecs{"zero-width", "semantic-structured", "semantic-heuristic"};
  survival->add_option("--corpus", corpus_in, "Corpus JSONL (default: all 256 payloads)");
  survival->add_option("--corpus-out", corpus_out, "Write the generated corpus here");
  survival->add_option("--defenses", defenses)->delimiter(',')->capture_default_str();
  survival->add_option("--codecs", codecs)->delimiter(',')->capture_default_str();
  survival->add_option("-o,--out", out_path, "Output file (default stdout)");

  // defaults
  auto* defaults = app.add_subcommand("defaults", "Write the built-in lexicon, templates and engine config");
  std::string dir = ".";
  defaults->add_option("--dir", dir, "Target directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    const auto alphabet = alphabet_named(alphabet_name);

    if (*encode) {
      std::string text = read_input(in_path);
      if (!state_str.empty()) text = imem::embed(text, imem::SignalVector::parse(state_str), alphabet);
      if (counter_n) text = imem::append_counter(text, {counter_n}, alphabet);
      if (!tags_secret.empty()) text += imem::tags_encode(tags_secret, alphabet.tags_base);
      write_output(out_path, text);
    } else if (*decode) {
      const std::string text = read_input(in_path);
      std::string line;
      if (decode_counter) {
        line = std::to_string(imem::count_markers(text, alphabet.counter).count);
      } else if (decode_tags) {
        line = imem::tags_decode(text, alphabet.tags_base).bytes;
      } else {
        line = imem::decode_state(text, alphabet, imem::parse_decode_policy(policy_name), width)
                   .describe();
      }
      write_output(out_path, line + "\n");
    } else if (*scan) {
      const std::string text = read_input(in_path);
      json runs = json::array();
      for (const auto& r : imem::scan_runs(text, alphabet)) {
        runs.push_back({{"offset", r.byte_offset}, {"length", r.length}, {"bits", r.value.to_string()}});
      }
      std::map<std::string, std::size_t> counts;
      for (const auto& s : imem::utf8::scalars(text)) {
        if (s.valid && imem::is_non_printing(s.cp)) ++counts[hex_cp(s.cp)];
      }
      const auto tags = imem::tags_decode(text, alphabet.tags_base);
      json out = {{"runs", runs},
                  {"non_printing", counts},
                  {"counter", imem::count_markers(text, alphabet.counter).count},
                  {"tags", tags.bytes},
                  {"state", imem::decode_state(text, alphabet).describe()}};
      write_output(out_path, out.dump() + "\n");
    } else if (*clean_cmd) {
      auto strip = imem::StripSet::standard();
      if (no_nfc) strip.form = imem::NormalizationForm::None;
      write_output(out_path, imem::clean(read_input(in_path), strip));
    } else if (*detect) {
      const auto text = read_input(in_path);
      const auto engine = load_engine(g);
      const auto lex = lexicon_path.empty() ? std::optional<imem::SignalLexicon>{}
                                            : std::optional{load_lexicon(lexicon_path)};
      const auto v = lex ? imem::detect_signals(text, *lex, engine.alphabet)
                         : engine.classifier->detect(text);
      if (detect_json) {
        json names = json::array();
        for (std::size_t i = 0; i < v.width(); ++i) {
          if (v[i]) names.push_back(lex ? lex->sections()[i].name : engine.catalog.name_at(i + 1));
        }
        write_output(out_path, json{{"state", v.to_string()}, {"signals", names}}.dump() + "\n");
      } else {
        write_output(out_path, v.to_string() + "\n");
      }
    } else if (*process) {
      const auto text = read_input(in_path);
      if (process_counter) {
        const auto r = imem::process_counter(text);
        write_output(out_path, process_json
                                   ? json{{"carried", r.carried.count},
                                          {"hit", r.hit},
                                          {"updated", r.updated.count},
                                          {"output", r.output}}
                                             .dump() + "\n"
                                   : r.output);
      } else {
        const auto engine = load_engine(g);
        const auto r = imem::process(text, engine);
        write_output(out_path, process_json
                                   ? json{{"carried", r.carried.describe()},
                                          {"carried_malformed", r.carried_malformed},
                                          {"observed", r.observed.to_string()},
                                          {"merged", r.merged.to_string()},
                                          {"activated", r.activated},
                                          {"output", r.output}}
                                             .dump() + "\n"
                                   : r.output);
      }
    } else if (*render) {
      const auto templates = load_templates(templates_path, imem::TemplateSet::standard());
      const auto plan = imem::make_plan(imem::SignalVector::parse(payload_str), g.seed);
      const auto [text, rendered] =
          imem::render_plan(plan, templates, imem::derive_seed(g.seed, {0x726E6472ULL}),
                            imem::RenderOptions{shuffle});
      if (!plan_out.empty()) write_output(plan_out, imem::to_json(rendered).dump(2) + "\n");
      write_output(out_path, text);
    } else if (*paraphrase) {
      const auto templates = load_templates(templates_path, imem::TemplateSet::paraphrase());
      write_output(out_path, imem::paraphrase_sim(read_input(in_path), g.seed, templates));
    } else if (*sdecode) {
      json out;
      if (!plan_in.empty()) {
        const auto v = imem::decode_structured(imem::plan_from_json(read_json_file(plan_in)));
        const auto f = imem::unpack(v);
        out = {{"payload", v.to_string()},
               {"example_count", f.example_count},
               {"first_domain", imem::to_string(f.domain)},
               {"outcome", imem::to_string(f.outcome)}};
      } else {
        const auto h = imem::decode_text_heuristic(
            read_input(in_path), imem::DomainLexicon::standard(),
            imem::OutcomePhrases::standard(), imem::default_example_openers());
        if (!h.decodable()) throw imem::Error("undecodable", h.reason);
        out = {{"payload", h.payload->to_string()},
               {"example_count", h.fields.example_count},
               {"first_domain", imem::to_string(h.fields.domain)},
               {"outcome", imem::to_string(h.fields.outcome)},
               {"confidence",
                {{"example_count", h.confidence.count},
                 {"first_domain", h.confidence.domain},
                 {"outcome", h.confidence.outcome}}},
               {"domain_tie", h.domain_tie}};
      }
      write_output(out_path, out.dump() + "\n");
    } else if (*simulate) {
      scenario.seed = g.seed;
      scenario.policy = imem::parse_reingest_policy(reingest_name);
      scenario.mode = imem::parse_channel_mode(mode_name);
      const auto trace = imem::run(scenario);
      std::ostringstream os;
      imem::write_jsonl(os, trace);
      write_output(out_path, os.str());
    } else if (*study) {
      study_opts.threads = g.threads;
      const auto stats = imem::chain_length_study(widths, study_p, trials, g.seed, study_opts);
      write_output(out_path, imem::to_json(stats).dump(2) + "\n");
    } else if (*gen) {
      const auto rows = imem::gen_dataset(n_queries, states_per_query, g.seed,
                                          load_lexicon(lexicon_path), ds_opts);
      std::ostringstream os;
      imem::write_jsonl(os, rows);
      write_output(out_path, os.str());
    } else if (*evaluate) {
      std::istringstream in(read_input(in_path));
      const auto rows = imem::read_jsonl(in);
      const auto engine = load_engine(g);
      imem::EvalReport report;
      if (defense_name == "clean") {
        imem::EvalOptions opts;
        opts.width = engine.width();
        opts.alphabet = engine.alphabet;
        opts.activation_token = engine.activation_token;
        opts.threads = g.threads;
        opts.engine_label = "clean+reference:" + std::string(imem::to_string(engine.policy));
        report = imem::evaluate(
            rows, [&](std::string_view t) { return imem::process(imem::clean(t), engine).output; },
            opts);
      } else {
        report = imem::evaluate(rows, engine, g.threads);
      }
      write_output(out_path, imem::to_json(report).dump(2) + "\n");
    } else if (*survival) {
      std::vector<imem::SurvivalRow> corpus;
      if (!corpus_in.empty()) {
        std::istringstream in(read_input(corpus_in));
        std::string line;
        while (std::getline(in, line)) {
          if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
          try {
            corpus.push_back(imem::survival_row_from_json(json::parse(line)));
          } catch (const json::exception& ex) {
            throw imem::Error("parse_error", corpus_in + ": " + ex.what());
          }
        }
      } else {
        corpus = imem::build_survival_corpus(g.seed);
      }
      if (!corpus_out.empty()) {
        std::ostringstream os;
        for (const auto& r : corpus) os << imem::to_json(r).dump() << '\n';
        write_output(corpus_out, os.str());
      }
      std::vector<imem::Defense> ds;
      for (const auto& d : defenses) ds.push_back(imem::parse_defense(d));
      std::vector<imem::Codec> cs;
      for (const auto& c : codecs) cs.push_back(imem::parse_codec(c));
      imem::SurvivalOptions opts;
      opts.seed = g.seed;
      opts.threads = g.threads;
      write_output(out_path, imem::to_json(imem::survival_report(corpus, ds, cs, opts)).dump(2) + "\n");
    } else if (*defaults) {
      fs::create_directories(dir);
      std::ostringstream lex;
      imem::SignalLexicon::financial_distress().write(lex);
      write_output(dir + "/lexicon.txt", lex.str());
      write_output(dir + "/templates_standard.json",
                   imem::to_json(imem::TemplateSet::standard()).dump(2) + "\n");
      write_output(dir + "/templates_paraphrase.json",
                   imem::to_json(imem::TemplateSet::paraphrase()).dump(2) + "\n");
      const imem::EngineConfig e;
      write_output(dir + "/engine.json",
                   json{{"policy", imem::to_string(e.policy)},
                        {"lexicon", "lexicon.txt"},
                        {"activation_token", e.activation_token},
                        {"payload", e.payload},
                        {"benign_response", e.benign_response}}
                           .dump(2) + "\n");
    }
  } catch (const imem::Error& e) {
    return fail(e.kind(), e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
  return 0;
}
