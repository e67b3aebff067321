#include "hostsim/scenario.hpp"

#include <gtest/gtest.h>

#include <chrono>

#include "hostsim/attacks.hpp"

namespace {

using namespace hostsim::scenario;
namespace sv = hostsim::server;

const std::string kFixtures = HOSTSIM_FIXTURE_DIR;
const std::vector<std::string> kConfigs = {"vulnerable-default", "hardened-fig5", "cgi-shared", "itk-pervhost"};

ServerConfig fixture(const std::string& name) { return load_config(kFixtures + "/" + name + ".json"); }
std::vector<sv::Request> trace() { return load_trace(kFixtures + "/trace-two-tenant.jsonl"); }

json run(const ServerConfig& c, ScenarioName name, std::span<const sv::Request> t) {
  Scenario s;
  s.name = name;
  return run_scenario(c, t, s);
}

TEST(Fixtures, LoadAndMatchTheirIntent) {
  EXPECT_EQ(fixture("vulnerable-default"), hostsim::attacks::matrix_base_config());
  EXPECT_EQ(fixture("cgi-shared").execution_model, sv::ExecutionModel::CgiPerRequest);
  // The hardened fixture is the transform's output minus the now unused /var/www rows.
  auto separated = hostsim::hardening::apply_log_separation(fixture("vulnerable-default"));
  auto hardened = fixture("hardened-fig5");
  for (const auto& d : hardened.layout) {
    EXPECT_NE(std::find(separated.layout.begin(), separated.layout.end(), d), separated.layout.end()) << d.path;
  }
  EXPECT_EQ(hardened.layout.size(), 6u);
  separated.layout = hardened.layout;
  EXPECT_EQ(hardened, separated);
  EXPECT_EQ(fixture("itk-pervhost").execution_model, sv::ExecutionModel::ItkWorkers);
  EXPECT_EQ(fixture("itk-pervhost").log_policy.kind, sv::LogPolicyKind::PerVHost);
}

TEST(Fixtures, TraceHasFiftyRequestsAndTheLoginUrl) {
  const auto t = trace();
  ASSERT_EQ(t.size(), 50u);
  EXPECT_TRUE(std::any_of(t.begin(), t.end(), [](const sv::Request& r) {
    return r.path == "/login" && r.query == "user=admin&pass=plain_or_hash_pass";
  }));
  EXPECT_TRUE(std::is_sorted(t.begin(), t.end(),
                             [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; }));
}

TEST(ConfigJson, RoundTrip) {
  for (const auto& name : kConfigs) {
    const auto c = fixture(name);
    EXPECT_EQ(config_from_json(config_to_json(c)), c) << name;
  }
}

TEST(ConfigJson, RejectsUnknownKeysAndBadValues) {
  auto j = config_to_json(fixture("vulnerable-default"));
  auto bad = j;
  bad["colour"] = "blue";
  EXPECT_THROW(config_from_json(bad), ValidationError);
  bad = j;
  bad["execution_model"] = "fastcgi";
  EXPECT_THROW(config_from_json(bad), ValidationError);
  bad = j;
  bad["log_mode_bits"] = "rw-r--r-x-";
  EXPECT_THROW(config_from_json(bad), ValidationError);
  bad = j;
  bad["vhosts"][0]["scripts"]["/x"] = json{{"type", "teleport"}};
  EXPECT_THROW(config_from_json(bad), ValidationError);
}

TEST(ConfigJson, SyntaxErrorCarriesLine) {
  try {
    parse_config("{\n  \"vhosts\": [\n  ,\n]}", "broken.json");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.file(), "broken.json");
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Trace, MalformedLineNumberIsReported) {
  const std::string good = R"({"client_ip":"10.0.0.1","host":"a.example","method":"GET","path":"/","t":1})";
  try {
    parse_trace(good + "\n" + good + "\n{\"client_ip\":\n", "t.jsonl");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  try {
    parse_trace(good + "\n" + R"({"client_ip":"10.0.0.1","host":"a.example","method":"PUT","path":"/","t":1})",
                "t.jsonl");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(e.reason().find("method"), std::string::npos);
  }
  EXPECT_THROW(parse_trace(R"({"client_ip":"10.0.0.1","host":"a.example","method":"GET","path":"/a b","t":1})"),
               ParseError);
  EXPECT_THROW(parse_trace(R"({"client_ip":"x","host":"a.example","method":"GET","path":"/","t":1,"extra":1})"),
               ParseError);
  EXPECT_TRUE(parse_trace("\n\n").empty());
}

TEST(Trace, RequestJsonRoundTrip) {
  for (const auto& r : trace()) EXPECT_EQ(request_from_json(request_to_json(r)), r);
}

TEST(Scenario, ReportSchemaAndKeyOrder) {
  const auto report = run(fixture("vulnerable-default"), ScenarioName::poison, trace());
  std::vector<std::string> keys;
  for (const auto& [k, _] : report.items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"scenario", "config_digest", "outcome", "findings", "logs"}));
  EXPECT_EQ(report["outcome"]["kind"], "Poison");
  EXPECT_TRUE(report["outcome"]["cross_tenant"].get<bool>());
  EXPECT_NE(report["logs"]["/var/log/webserver/access_log"].get<std::string>().find("Some Junk Data\n"),
            std::string::npos);
}

TEST(Scenario, HarvestListsBothPairs) {
  const auto report = run(fixture("vulnerable-default"), ScenarioName::harvest, trace());
  const auto& creds = report["outcome"]["evidence"]["credentials"];
  ASSERT_GE(creds.size(), 2u);
  bool user = false, pass = false;
  for (const auto& c : creds) {
    user |= c["name"] == "user" && c["value"] == "admin";
    pass |= c["name"] == "pass" && c["value"] == "plain_or_hash_pass";
  }
  EXPECT_TRUE(user && pass);
}

TEST(Scenario, SiteTreeOnEmptyTraceIsEmpty) {
  const auto report = run(fixture("vulnerable-default"), ScenarioName::site_tree, {});
  const auto& tree = report["outcome"]["evidence"]["tree"];
  EXPECT_EQ(tree["name"], "/");
  EXPECT_TRUE(tree["children"].empty());
  EXPECT_FALSE(report["outcome"]["success"].get<bool>());
}

TEST(Scenario, HardenedFixtureBlocksEveryCrossTenantScenario) {
  const auto t = trace();
  for (const auto& name : {"hardened-fig5", "itk-pervhost"}) {
    for (auto s : {ScenarioName::poison, ScenarioName::snoop, ScenarioName::lfi}) {
      const auto report = run(fixture(name), s, t);
      EXPECT_FALSE(report["outcome"]["cross_tenant"].get<bool>()) << name << " " << to_string(s);
    }
    const auto enumerate = run(fixture(name), ScenarioName::enumerate, t);
    EXPECT_EQ(enumerate["outcome"]["evidence"]["domains"], json::array({"site2.example"})) << name;
  }
}

TEST(Scenario, AttackerAndVictimValidation) {
  Scenario s;
  s.name = ScenarioName::snoop;
  s.victim_vhost = "site2.example";
  s.attacker_vhost = "site2.example";
  EXPECT_THROW(run_scenario(fixture("vulnerable-default"), trace(), s), ValidationError);
  s.attacker_vhost = "ghost.example";
  EXPECT_THROW(run_scenario(fixture("vulnerable-default"), trace(), s), ValidationError);
}

TEST(Scenario, ReverseDirectionAlsoWorks) {
  Scenario s;
  s.name = ScenarioName::harvest;
  s.attacker_vhost = "site1.example";
  s.victim_vhost = "site2.example";
  const auto report = run_scenario(fixture("vulnerable-default"), trace(), s);
  EXPECT_TRUE(report["outcome"]["success"].get<bool>());
}

TEST(Scenario, DeterministicAndFast) {
  const auto t = trace();
  for (const auto& name : kConfigs) {
    const auto c = fixture(name);
    for (const auto& [s, text] : kScenarioNames) {
      const auto start = std::chrono::steady_clock::now();
      const auto a = run(c, s, t).dump();
      const auto elapsed = std::chrono::steady_clock::now() - start;
      EXPECT_LT(elapsed, std::chrono::seconds(1)) << name << " " << text;
      EXPECT_EQ(run(c, s, t).dump(), a) << name << " " << text;
    }
  }
}

TEST(Text, RendersEveryScenario) {
  const auto t = trace();
  const auto c = fixture("vulnerable-default");
  for (const auto& [s, text] : kScenarioNames) {
    const auto out = render_text(run(c, s, t));
    EXPECT_NE(out.find("scenario: " + std::string(text)), std::string::npos);
  }
}

}  // namespace
