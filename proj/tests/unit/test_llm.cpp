#include <doctest.h>

#include <fstream>
#include <thread>

#include "smc/error.hpp"
#include "smc/io.hpp"
#include "smc/llm/backend.hpp"
#include "smc/llm/prompts.hpp"
#include "smc/llm/reply.hpp"
#include "smc/llm/session.hpp"
#include "support/oracles.hpp"

// After Eigen: glibc resolv.h (pulled in by httplib) defines a _res macro.
#include <httplib.h>

using namespace smc;
using nlohmann::json;

namespace {

class FlakyBackend final : public LlmBackend {
 public:
  explicit FlakyBackend(int failures) : failures_(failures) {}
  LlmReply complete(const LlmRequest&) override {
    ++attempts;
    if (attempts <= failures_) throw Error(ErrorKind::Transport, "connection reset");
    LlmReply r;
    r.text = "ok";
    r.cost_usd = 0.25;
    return r;
  }
  std::string model() const override { return "flaky"; }
  int attempts = 0;

 private:
  int failures_;
};

LlmRequest request(std::string prompt, std::string tpl = "classify") {
  LlmRequest r;
  r.system = "sys";
  r.prompt = std::move(prompt);
  r.template_name = std::move(tpl);
  return r;
}

}  // namespace

TEST_CASE("builtin catalog matches an independent YAML parse") {
  const json expected = read_json_file(smc::testing::data_path("prompts_expected.json"));
  const PromptCatalog catalog = PromptCatalog::builtin();
  CHECK(catalog.names().size() == expected.size());
  for (const auto& [name, body] : expected.items()) {
    REQUIRE(catalog.contains(name));
    CHECK(catalog.body(name) == body.get<std::string>());
  }
  const PromptCatalog from_disk = PromptCatalog::from_file(SMC_PROMPTS_YAML);
  CHECK(from_disk.names() == catalog.names());
}

TEST_CASE("rendering substitutes placeholders exactly once") {
  const PromptCatalog c = PromptCatalog::from_yaml(
      "a: >-\n  Hello <NAME>, see <THING> and <NAME>.\nb: no placeholders\n");
  CHECK(c.render("a", {{"NAME", "<THING>"}, {"THING", "x"}}) ==
        "Hello <THING>, see x and <THING>.");
  CHECK(c.render("b", {}) == "no placeholders");
  CHECK_THROWS_AS(c.render("a", {{"NAME", "n"}}), Error);
  CHECK_THROWS_AS(c.render("b", {{"EXTRA", "n"}}), Error);
  CHECK_THROWS_AS(c.render("missing", {}), Error);
  CHECK(placeholders(c.body("a")) == std::vector<std::string>{"NAME", "THING"});
  CHECK_THROWS_AS(PromptCatalog::from_yaml("a: [1, 2]"), Error);
  CHECK_THROWS_AS(PromptCatalog::from_yaml("a: : :"), Error);

  const auto& builtin = PromptCatalog::builtin();
  CHECK(placeholders(builtin.body("optimize_highlevel_count")) ==
        std::vector<std::string>{"DESCRIPTION", "PROGRAM"});
  CHECK(placeholders(builtin.body("optimize_lowlevel")).empty());
}

TEST_CASE("digest covers system, turns and prompt but not the template name") {
  LlmRequest a = request("p");
  LlmRequest b = request("p", "other");
  CHECK(llm_digest(a) == llm_digest(b));
  b.turns.push_back({"user", "x"});
  CHECK(llm_digest(a) != llm_digest(b));
  LlmRequest c = request("q");
  CHECK(llm_digest(a) != llm_digest(c));
  CHECK(llm_digest(a).size() == 64);
}

TEST_CASE("replay and recording backends") {
  const auto dir = smc::testing::scratch_dir("replay");
  auto scripted = std::make_shared<ScriptedBackend>();
  scripted->push("classify", "stack");
  RecordingBackend recorder(scripted, dir);
  CHECK(recorder.complete(request("p")).text == "stack");

  ReplayBackend replay(dir);
  CHECK(replay.complete(request("p")).text == "stack");
  try {
    replay.complete(request("unseen"));
    FAIL("expected missing fixture");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MissingFixture);
    CHECK(std::string(e.what()).find(llm_digest(request("unseen"))) != std::string::npos);
  }
  CHECK_THROWS_AS(ReplayBackend(dir / "nope"), Error);
}

TEST_CASE("scripted backend queues per template") {
  auto b = ScriptedBackend::from_json(
      json{{"replies", {{"classify", {"stack", "row"}}, {"inference", "f()"}}}});
  CHECK(b->complete(request("x")).text == "stack");
  CHECK(b->complete(request("y", "inference")).text == "f()");
  CHECK(b->complete(request("z")).text == "row");
  CHECK_THROWS_AS(b->complete(request("w")), Error);
  CHECK(b->requested() == std::vector<std::string>{"classify", "inference", "classify", "classify"});
}

TEST_CASE("transport errors are retried with backoff") {
  RetryPolicy fast{3, 0.0, 2.0};
  FlakyBackend twice(2);
  CHECK(complete_with_retry(twice, request("p"), fast).text == "ok");
  CHECK(twice.attempts == 3);
  FlakyBackend always(10);
  CHECK_THROWS_AS(complete_with_retry(always, request("p"), fast), Error);
  CHECK(always.attempts == 3);
}

TEST_CASE("cost ledger and sessions") {
  LlmContext ctx;
  auto flaky = std::make_shared<FlakyBackend>(0);
  ctx.backend = flaky;
  ctx.ledger = std::make_shared<CostLedger>(0.6);
  const auto dir = smc::testing::scratch_dir("transcripts");
  ctx.transcripts = std::make_shared<TranscriptSink>(dir);

  ChatSession s("observe", ctx);
  CHECK(s.system() == ctx.prompts.body("system"));
  double last = 0;
  CHECK(s.ask("classify", {{"DESCRIPTION", "a stack of seven plates"}}) == "ok");
  CHECK(s.cost_usd() >= last);
  last = s.cost_usd();
  s.ask("optimize_highlevel_general_pattern", {{"DESCRIPTION", "d"}});
  CHECK(s.cost_usd() >= last);
  s.ask("optimize_lowlevel");
  CHECK(ctx.ledger->calls() == 3);
  CHECK(ctx.ledger->spent_usd() == doctest::Approx(0.75));
  CHECK_THROWS_AS(s.ask("optimize_lowlevel"), Error);
  CHECK(s.turns().size() == 6);
  CHECK(s.turns()[0].role == "user");
  CHECK(s.turns()[1].role == "assistant");

  const json t = read_json_file(dir / "001_observe.json");
  CHECK(t["model"] == "flaky");
  CHECK(t["temperature"] == 0.0);
  CHECK(t["entries"].size() == 3);
  CHECK(t["entries"][0]["template"] == "classify");
  CHECK(t["entries"][0]["bindings"]["DESCRIPTION"] == "a stack of seven plates");
  CHECK(t["entries"][0]["prompt"] ==
        ctx.prompts.render("classify", {{"DESCRIPTION", "a stack of seven plates"}}));
}

TEST_CASE("HTTP chat backend against a local server") {
  httplib::Server server;
  json seen;
  std::string auth;
  int status = 200;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen = json::parse(req.body);
    auth = req.get_header_value("Authorization");
    res.status = status;
    res.set_content(json{{"model", "test-model-0125"},
                         {"choices", {{{"message", {{"role", "assistant"}, {"content", "stack"}}}}}},
                         {"usage", {{"prompt_tokens", 1000}, {"completion_tokens", 500}}}}
                        .dump(),
                    "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpChatConfig cfg;
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  cfg.model = "test-model";
  cfg.api_key = "secret";
  cfg.timeout_s = 5;
  HttpChatBackend backend(cfg);
  LlmRequest req = request("classify this");
  req.turns.push_back({"user", "earlier"});
  req.turns.push_back({"assistant", "reply"});
  const LlmReply r = backend.complete(req);
  CHECK(r.text == "stack");
  CHECK(r.model == "test-model-0125");
  CHECK(r.usage.prompt_tokens == 1000);
  CHECK(r.cost_usd == doctest::Approx(0.01 + 0.015));
  CHECK(auth == "Bearer secret");
  CHECK(seen["model"] == "test-model");
  CHECK(seen["temperature"] == 0.0);
  REQUIRE(seen["messages"].size() == 4);
  CHECK(seen["messages"][0]["role"] == "system");
  CHECK(seen["messages"][3]["content"] == "classify this");

  status = 503;
  try {
    backend.complete(req);
    FAIL("expected transport error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Transport);
  }
  status = 401;
  try {
    backend.complete(req);
    FAIL("expected config error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
  }
  server.stop();
  th.join();

  cfg.endpoint = "http://127.0.0.1:1/v1/chat/completions";
  cfg.timeout_s = 1;
  try {
    HttpChatBackend(cfg).complete(req);
    FAIL("expected transport error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Transport);
  }
  cfg.endpoint = "not a url";
  CHECK_THROWS_AS(HttpChatBackend{cfg}, Error);
}

TEST_CASE("code extraction") {
  CHECK(extract_code("objs = []") == "objs = []");
  CHECK(extract_code("Here you go:\n```python\nx = 1\n```\nThis sets x.") == "x = 1");
  CHECK(extract_code("```\na\n```\ntext\n```python\nb\n```\n```json\n{}\n```") == "b");
  CHECK(extract_code("```\nf(1)\n```") == "f(1)");
  CHECK(extract_code("  create_stack('book', 4)  \n") == "create_stack('book', 4)");
}

TEST_CASE("JSON-like extraction") {
  CHECK(python_literal_to_json("{'a': True, 'b': None, 'c': [1, 2,],}") ==
        R"({"a": true, "b": null, "c": [1, 2]})");
  CHECK(python_literal_to_json(R"({'s': 'it\'s "q"'})") == R"({"s": "it's \"q\""})");

  const auto j = extract_json_object("Sure.\n```json\n{\"plate\": 7}\n```\nThere are seven plates.");
  REQUIRE(j);
  CHECK((*j)["plate"] == 7);
  const auto last = extract_json_object("{\"a\": 1} then {\"b\": {\"c\": 2}} and {broken");
  REQUIRE(last);
  CHECK(last->contains("b"));
  CHECK_FALSE(extract_json_object("no braces here"));
  CHECK(extract_json_object("{'x': 'has } brace'}")->at("x") == "has } brace");
}

TEST_CASE("structured reply parsers") {
  CHECK(parse_counts("{\"plate\": 7}") == std::map<std::string, int>{{"plate", 7}});
  CHECK(parse_counts("{'plate': '7', 'cup': 2.0}") ==
        std::map<std::string, int>{{"plate", 7}, {"cup", 2}});
  CHECK_FALSE(parse_counts("{\"plate\": 7.5}"));
  CHECK_FALSE(parse_counts("{\"plate\": \"many\"}"));
  CHECK_FALSE(parse_counts("{}"));
  CHECK_FALSE(parse_counts("seven plates"));

  const auto ok = parse_hardcode_verdict("{\"valid\": \"yes\", \"variable_names\": []}\nLooks good.");
  REQUIRE(ok);
  CHECK(ok->valid);
  const auto bad = parse_hardcode_verdict("{'valid': 'no', 'variable_names': ['ys', 'zs']}");
  REQUIRE(bad);
  CHECK_FALSE(bad->valid);
  CHECK(bad->variable_names == std::vector<std::string>{"ys", "zs"});
  CHECK_FALSE(parse_hardcode_verdict("{'valid': 'maybe'}"));

  const auto calls = parse_call_map(
      "{\"1\": \"create_stack('plate', 7, [0.0, 0.0, 0.0], -0.00757, [0.08909, 0.0143, 0.08853])\"}");
  REQUIRE(calls);
  CHECK(calls->at(1).rfind("create_stack('plate', 7", 0) == 0);
  CHECK_FALSE(parse_call_map("{\"one\": \"f()\"}"));
  CHECK_FALSE(parse_call_map("{\"1\": 3}"));
}

TEST_CASE("motif reply parsing") {
  CHECK(parse_motif_reply("stack") == MotifType(MotifKind::Stack));
  CHECK(parse_motif_reply("  Stack.\n") == MotifType(MotifKind::Stack));
  CHECK(parse_motif_reply("`rectangular_perimeter`") == MotifType(MotifKind::RectangularPerimeter));
  CHECK(parse_motif_reply("letter_S") == MotifType::letter('S'));
  CHECK(parse_motif_reply("in front of") == MotifType(MotifKind::InFrontOf));
  CHECK(parse_motif_reply("The motif type is pile.") == MotifType(MotifKind::Pile));
  CHECK_FALSE(parse_motif_reply("It could be a stack or a pile."));
  CHECK_FALSE(parse_motif_reply("a heap"));
}

TEST_CASE("probabilities and commonsense verdicts") {
  CHECK(parse_probability(0.8) == 0.8);
  CHECK(parse_probability(80) == doctest::Approx(0.8));
  CHECK(parse_probability("80%") == doctest::Approx(0.8));
  CHECK(parse_probability("0.25") == 0.25);
  CHECK_FALSE(parse_probability(-0.1));
  CHECK_FALSE(parse_probability(250));
  CHECK_FALSE(parse_probability("often"));

  const auto o = parse_orientation_verdict(
      "```json\n{\"Plate\": {\"correct\": 0.9, \"incorrect\": 0.1}}\n```\nPlates lie flat.",
      {"plate"});
  REQUIRE(o);
  CHECK(o->probabilities.at("plate").at("correct") == 0.9);
  CHECK(o->explanation == "Plates lie flat.");
  CHECK_FALSE(parse_orientation_verdict("{\"plate\": {\"correct\": 0.9, \"incorrect\": 0.3}}",
                                        {"plate"}));
  CHECK_FALSE(parse_orientation_verdict("{\"plate\": {\"correct\": 0.9, \"incorrect\": 0.1}}",
                                        {"plate", "cup"}));

  const auto t = parse_touch_verdict("{\"touch\": 90, \"no_touch\": 10}");
  REQUIRE(t);
  CHECK(t->probabilities.at("motif").at("touch") == doctest::Approx(0.9));
  CHECK(parse_touch_verdict("{\"touch\": 0.995, \"no_touch\": 0.0}"));
  CHECK_FALSE(parse_touch_verdict("{\"touch\": 0.5, \"no_touch\": 0.6}"));
  CHECK_FALSE(parse_touch_verdict("{\"touch\": X, \"no_touch\": 1-X}"));
}
