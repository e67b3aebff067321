#pragma once

// Scenario runner: JSON config and JSON-Lines trace loading, named scenarios,
// and the text/JSON reports the hostsim tool prints.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hostsim/attacks.hpp"
#include "hostsim/hardening.hpp"
#include "hostsim/logformat.hpp"
#include "hostsim/server.hpp"

namespace hostsim::scenario {

using json = nlohmann::ordered_json;
using server::ServerConfig;

class ParseError : public std::runtime_error {
 public:
  ParseError(std::string file, std::size_t line, std::string reason)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + reason),
        file_(std::move(file)),
        line_(line),
        reason_(std::move(reason)) {}
  [[nodiscard]] const std::string& file() const { return file_; }
  [[nodiscard]] std::size_t line() const { return line_; }
  [[nodiscard]] const std::string& reason() const { return reason_; }

 private:
  std::string file_;
  std::size_t line_;
  std::string reason_;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Config <-> JSON

namespace detail {

template <typename Enum, std::size_t N>
Enum enum_from(const json& j, std::string_view field, const std::array<Enum, N>& values) {
  if (!j.is_string()) throw ValidationError(std::string(field) + ": expected a string");
  const auto s = j.get<std::string>();
  for (auto v : values) {
    if (server::to_string(v) == s) return v;
  }
  throw ValidationError(std::string(field) + ": unknown value '" + s + "'");
}

inline void check_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ValidationError(std::string(where) + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ValidationError(std::string(where) + ": unknown key '" + key + "'");
    }
  }
}

inline const json& require(const json& j, std::string_view where, const char* key) {
  if (!j.contains(key)) throw ValidationError(std::string(where) + ": missing key '" + key + "'");
  return j.at(key);
}

inline std::string string_at(const json& j, std::string_view where, const char* key,
                             std::optional<std::string> fallback = std::nullopt) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    throw ValidationError(std::string(where) + ": missing key '" + key + "'");
  }
  if (!j.at(key).is_string()) throw ValidationError(std::string(where) + "." + key + ": expected a string");
  return j.at(key).get<std::string>();
}

inline std::int64_t int_at(const json& j, std::string_view where, const char* key) {
  const auto& v = require(j, where, key);
  if (!v.is_number_integer()) throw ValidationError(std::string(where) + "." + key + ": expected an integer");
  return v.get<std::int64_t>();
}

inline fs::Mode mode_at(const json& j, std::string_view where, const char* key) {
  auto text = string_at(j, where, key);
  auto mode = fs::Mode::parse(text);
  if (!mode) throw ValidationError(std::string(where) + "." + key + ": bad mode '" + text + "'");
  return *mode;
}

inline server::ScriptBehavior script_from_json(const json& j, const std::string& where) {
  const auto type = string_at(j, where, "type");
  if (type == "static") {
    check_keys(j, where, {"type", "status", "size"});
    const auto size = int_at(j, where, "size");
    if (size < 0) throw ValidationError(where + ".size: must be non-negative");
    return server::StaticResponse{static_cast<int>(int_at(j, where, "status")), static_cast<std::uint64_t>(size)};
  }
  if (type == "lfi") {
    check_keys(j, where, {"type", "param"});
    return server::LfiVulnerable{string_at(j, where, "param")};
  }
  if (type == "attack") {
    check_keys(j, where, {"type", "attack", "payload", "known_log_path"});
    const auto attack = string_at(j, where, "attack");
    if (attack == "poison") {
      return server::AttackScript{server::ScriptAttack::Poison, string_at(j, where, "payload"), {}};
    }
    if (attack == "snoop") {
      return server::AttackScript{server::ScriptAttack::Snoop, {}, string_at(j, where, "known_log_path")};
    }
    throw ValidationError(where + ".attack: unknown attack '" + attack + "'");
  }
  throw ValidationError(where + ".type: unknown script type '" + type + "'");
}

inline json script_to_json(const server::ScriptBehavior& s) {
  if (auto* st = std::get_if<server::StaticResponse>(&s)) {
    return json{{"type", "static"}, {"status", st->status}, {"size", st->size}};
  }
  if (auto* lfi = std::get_if<server::LfiVulnerable>(&s)) {
    return json{{"type", "lfi"}, {"param", lfi->param}};
  }
  const auto& a = std::get<server::AttackScript>(s);
  if (a.attack == server::ScriptAttack::Poison) {
    return json{{"type", "attack"}, {"attack", "poison"}, {"payload", a.payload}};
  }
  return json{{"type", "attack"}, {"attack", "snoop"}, {"known_log_path", a.known_log_path}};
}

}  // namespace detail

inline ServerConfig config_from_json(const json& j) {
  using namespace detail;
  check_keys(j, "config", {"vhosts", "log_policy", "log_mode_bits", "execution_model", "fd_exposure", "layout"});
  ServerConfig c;

  const auto& vhosts = require(j, "config", "vhosts");
  if (!vhosts.is_array()) throw ValidationError("config.vhosts: expected an array");
  for (std::size_t i = 0; i < vhosts.size(); ++i) {
    const auto where = "config.vhosts[" + std::to_string(i) + "]";
    const auto& v = vhosts[i];
    check_keys(v, where, {"domain", "docroot", "owner", "owner_group", "scripts", "log_dir"});
    server::VHost vh;
    vh.domain = string_at(v, where, "domain");
    vh.docroot = string_at(v, where, "docroot");
    vh.owner = fs::UserId{string_at(v, where, "owner")};
    vh.owner_group = fs::GroupId{string_at(v, where, "owner_group")};
    vh.log_dir = string_at(v, where, "log_dir", std::string());
    if (v.contains("scripts")) {
      const auto& scripts = v.at("scripts");
      if (!scripts.is_object()) throw ValidationError(where + ".scripts: expected an object");
      for (const auto& [path, body] : scripts.items()) {
        vh.scripts.emplace(path, script_from_json(body, where + ".scripts[\"" + path + "\"]"));
      }
    }
    c.vhosts.push_back(std::move(vh));
  }

  const auto& policy = require(j, "config", "log_policy");
  check_keys(policy, "config.log_policy", {"kind", "path"});
  const auto kind = string_at(policy, "config.log_policy", "kind");
  if (kind == "shared") {
    c.log_policy = {server::LogPolicyKind::SharedSingleFile, string_at(policy, "config.log_policy", "path")};
  } else if (kind == "per_vhost") {
    // shared_path keeps its default; it is unused and not serialized here.
    c.log_policy = server::LogPolicy{};
    c.log_policy.kind = server::LogPolicyKind::PerVHost;
  } else {
    throw ValidationError("config.log_policy.kind: unknown value '" + kind + "'");
  }

  c.log_mode_bits = mode_at(j, "config", "log_mode_bits");
  c.execution_model = enum_from(require(j, "config", "execution_model"), "config.execution_model",
                                server::kAllExecutionModels);
  if (j.contains("fd_exposure")) {
    c.fd_exposure = enum_from(j.at("fd_exposure"), "config.fd_exposure",
                              std::array{server::FdExposure::ServingVhostOnly, server::FdExposure::AllOpenLogs});
  }
  if (j.contains("layout")) {
    const auto& layout = j.at("layout");
    if (!layout.is_array()) throw ValidationError("config.layout: expected an array");
    for (std::size_t i = 0; i < layout.size(); ++i) {
      const auto where = "config.layout[" + std::to_string(i) + "]";
      check_keys(layout[i], where, {"path", "owner", "group", "mode"});
      c.layout.push_back({string_at(layout[i], where, "path"), fs::UserId{string_at(layout[i], where, "owner")},
                          fs::GroupId{string_at(layout[i], where, "group")}, mode_at(layout[i], where, "mode")});
    }
  }

  try {
    server::validate(c);
  } catch (const server::BadConfig& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  return c;
}

inline json config_to_json(const ServerConfig& c) {
  json vhosts = json::array();
  for (const auto& v : c.vhosts) {
    json scripts = json::object();
    for (const auto& [path, s] : v.scripts) scripts[path] = detail::script_to_json(s);
    vhosts.push_back(json{{"domain", v.domain},
                          {"docroot", v.docroot},
                          {"owner", v.owner.name},
                          {"owner_group", v.owner_group.name},
                          {"scripts", scripts},
                          {"log_dir", v.log_dir}});
  }
  json policy = c.log_policy.kind == server::LogPolicyKind::SharedSingleFile
                    ? json{{"kind", "shared"}, {"path", c.log_policy.shared_path}}
                    : json{{"kind", "per_vhost"}};
  json layout = json::array();
  for (const auto& d : c.layout) {
    layout.push_back(json{{"path", d.path}, {"owner", d.owner.name}, {"group", d.group.name}, {"mode", d.mode.symbolic()}});
  }
  return json{{"vhosts", vhosts},
              {"log_policy", policy},
              {"log_mode_bits", c.log_mode_bits.symbolic()},
              {"execution_model", server::to_string(c.execution_model)},
              {"fd_exposure", server::to_string(c.fd_exposure)},
              {"layout", layout}};
}

// FNV-1a over the canonical JSON form.
inline std::string config_digest(const ServerConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : config_to_json(c).dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 0, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline ServerConfig parse_config(std::string_view text, const std::string& file = "<config>") {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    const auto line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + upto, '\n'));
    throw ParseError(file, line, e.what());
  }
  return config_from_json(j);
}

inline ServerConfig load_config(const std::string& path) { return parse_config(read_file(path), path); }

// ---------------------------------------------------------------------------
// Trace (JSON Lines)

inline server::Request request_from_json(const json& j) {
  using namespace detail;
  check_keys(j, "request", {"client_ip", "host", "method", "path", "query", "t"});
  server::Request r;
  r.client_ip = string_at(j, "request", "client_ip");
  r.host = string_at(j, "request", "host");
  const auto method = string_at(j, "request", "method");
  auto m = log::parse_method(method);
  if (!m) throw ValidationError("request.method: expected GET or POST, got '" + method + "'");
  r.method = *m;
  r.path = string_at(j, "request", "path");
  r.query = string_at(j, "request", "query", std::string());
  const auto t = int_at(j, "request", "t");
  if (t < 0) throw ValidationError("request.t: must be non-negative");
  r.timestamp = static_cast<std::uint64_t>(t);

  // Same constraints as the record it will produce.
  log::LogRecord probe{r.host, r.client_ip, r.timestamp, r.method, r.path, r.query, 200, 0};
  if (auto why = log::validate(probe)) throw ValidationError("request: " + *why);
  return r;
}

inline json request_to_json(const server::Request& r) {
  return json{{"client_ip", r.client_ip}, {"host", r.host}, {"method", log::to_string(r.method)},
              {"path", r.path}, {"query", r.query}, {"t", r.timestamp}};
}

inline std::vector<server::Request> parse_trace(std::string_view text, const std::string& file = "<trace>") {
  std::vector<server::Request> out;
  std::size_t line_no = 0;
  for (auto line : log::split_lines(text)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      out.push_back(request_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(file, line_no, e.what());
    } catch (const ValidationError& e) {
      throw ParseError(file, line_no, e.what());
    }
  }
  return out;
}

inline std::vector<server::Request> load_trace(const std::string& path) {
  return parse_trace(read_file(path), path);
}

// ---------------------------------------------------------------------------
// Outcomes and findings as JSON

inline json tree_to_json(const log::SiteNode& n) {
  json children = json::array();
  for (const auto& [name, child] : n.children) children.push_back(tree_to_json(child));
  return json{{"name", n.name}, {"hits", n.hit_count}, {"children", children}};
}

inline json evidence_to_json(const attacks::Evidence& e) {
  using namespace attacks;
  return std::visit(
      [](const auto& ev) -> json {
        using T = std::decay_t<decltype(ev)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return nullptr;
        } else if constexpr (std::is_same_v<T, PoisonEvidence>) {
          return json{{"fd", ev.fd}, {"path", ev.path}, {"bytes_written", ev.bytes_written}};
        } else if constexpr (std::is_same_v<T, SnoopEvidence>) {
          json lines = json::array();
          for (const auto& r : ev.records) lines.push_back(log::format_record(r));
          return json{{"strategy", to_string(ev.strategy)},
                      {"path", ev.path},
                      {"denied_at", ev.denied_at ? json(*ev.denied_at) : json(nullptr)},
                      {"record_count", ev.records.size()},
                      {"records", lines}};
        } else if constexpr (std::is_same_v<T, LfiEvidence>) {
          return json{{"include_path", ev.include_path}, {"markers", ev.markers}, {"denied", ev.denied}};
        } else if constexpr (std::is_same_v<T, DomainEvidence>) {
          return json{{"domains", ev.domains}};
        } else if constexpr (std::is_same_v<T, CredentialEvidence>) {
          json creds = json::array();
          for (const auto& c : ev.credentials) {
            creds.push_back(json{{"vhost", c.vhost}, {"path", c.path}, {"name", c.name}, {"value", c.value}});
          }
          return json{{"credentials", creds}};
        } else {
          return json{{"vhost", ev.vhost}, {"tree", tree_to_json(ev.tree.root)}};
        }
      },
      e);
}

inline json outcome_to_json(const attacks::AttackOutcome& o, std::optional<bool> cross_tenant = std::nullopt) {
  json j{{"kind", attacks::to_string(o.kind)},
         {"success", o.success},
         {"failure_cause", o.failure_cause ? json(attacks::to_string(*o.failure_cause)) : json(nullptr)}};
  if (cross_tenant) j["cross_tenant"] = *cross_tenant;
  j["evidence"] = evidence_to_json(o.evidence);
  return j;
}

inline json findings_to_json(const std::vector<hardening::Finding>& findings) {
  json out = json::array();
  for (const auto& f : findings) {
    out.push_back(json{{"code", hardening::to_string(f.code)},
                       {"severity", hardening::to_string(f.severity)},
                       {"subject", f.subject},
                       {"remedy", f.remedy}});
  }
  return out;
}

inline json matrix_to_json(const attacks::AttackMatrix& m) {
  auto cell = [](const attacks::AttackOutcome& o, bool cross) {
    return json{{"success", o.success},
                {"cross_tenant", cross},
                {"failure_cause", o.failure_cause ? json(attacks::to_string(*o.failure_cause)) : json(nullptr)}};
  };
  json rows = json::array();
  for (const auto& row : m.rows) {
    json snoop = cell(row.result.snoop, row.result.snoop_cross);
    if (auto* ev = std::get_if<attacks::SnoopEvidence>(&row.result.snoop.evidence); ev && row.result.snoop.success) {
      snoop["strategy"] = attacks::to_string(ev->strategy);
    }
    // One entry per code; findings arrive sorted, so repeats are adjacent.
    json codes = json::array();
    json all_codes = json::array();
    for (const auto& f : row.findings) {
      const auto code = hardening::to_string(f.code);
      if (!all_codes.empty() && all_codes.back() == code) continue;
      all_codes.push_back(code);
      if (f.severity == hardening::Severity::high) codes.push_back(code);
    }
    rows.push_back(json{{"execution_model", server::to_string(row.dims.model)},
                        {"log_policy", server::to_string(row.dims.policy)},
                        {"log_mode", row.dims.log_mode.symbolic()},
                        {"fd_exposure", server::to_string(row.dims.exposure)},
                        {"poison", cell(row.result.poison, row.result.poison_cross)},
                        {"snoop", snoop},
                        {"lfi", cell(row.result.lfi, row.result.lfi_cross)},
                        {"high_findings", codes},
                        {"findings", all_codes}});
  }
  return json{{"attacker", m.attacker}, {"victim", m.victim}, {"rows", rows}};
}

// ---------------------------------------------------------------------------
// Scenarios

enum class ScenarioName { poison, snoop, lfi, site_tree, enumerate, harvest, audit, matrix };

inline constexpr std::array<std::pair<ScenarioName, std::string_view>, 8> kScenarioNames = {{
    {ScenarioName::poison, "poison"},
    {ScenarioName::snoop, "snoop"},
    {ScenarioName::lfi, "lfi"},
    {ScenarioName::site_tree, "site-tree"},
    {ScenarioName::enumerate, "enumerate"},
    {ScenarioName::harvest, "harvest"},
    {ScenarioName::audit, "audit"},
    {ScenarioName::matrix, "matrix"},
}};

inline std::string_view to_string(ScenarioName n) {
  for (const auto& [v, s] : kScenarioNames) {
    if (v == n) return s;
  }
  return "?";
}

inline std::optional<ScenarioName> parse_scenario_name(std::string_view s) {
  for (const auto& [v, name] : kScenarioNames) {
    if (name == s) return v;
  }
  return std::nullopt;
}

inline bool is_cross_tenant(ScenarioName n) {
  return n != ScenarioName::audit && n != ScenarioName::matrix;
}

inline constexpr std::string_view kDefaultPoisonPayload = "Some Junk Data\n";

struct Scenario {
  ScenarioName name = ScenarioName::audit;
  std::string attacker_vhost;  // default: second vhost
  std::string victim_vhost;    // default: first vhost
  std::optional<std::string> payload;
  std::string marker = "pwn1";
  std::optional<std::set<std::string>> sensitive_names;
};

// Fills default attacker/victim and checks they name distinct vhosts.
inline Scenario resolve(const ServerConfig& c, Scenario s) {
  if (!is_cross_tenant(s.name)) return s;
  if (s.victim_vhost.empty()) s.victim_vhost = c.vhosts.front().domain;
  if (s.attacker_vhost.empty()) {
    if (c.vhosts.size() < 2) throw ValidationError("scenario needs two vhosts (attacker and victim)");
    s.attacker_vhost = c.vhosts[1].domain;
  }
  if (!c.find_vhost(s.attacker_vhost)) throw ValidationError("unknown attacker vhost '" + s.attacker_vhost + "'");
  if (!c.find_vhost(s.victim_vhost)) throw ValidationError("unknown victim vhost '" + s.victim_vhost + "'");
  if (s.attacker_vhost == s.victim_vhost) throw ValidationError("attacker and victim must be different vhosts");
  return s;
}

inline json logs_to_json(const server::ServerRuntime& rt) {
  json logs = json::object();
  auto paths = rt.config().log_paths();
  std::sort(paths.begin(), paths.end());
  for (const auto& p : paths) logs[p] = rt.read_as_root(p);
  return logs;
}

// Post-snoop analysis: the attacker works on whatever records the snoop read.
template <typename Analyze>
attacks::AttackOutcome analyze_snoop(const attacks::AttackOutcome& snoop, attacks::AttackKind kind, Analyze analyze) {
  static const std::vector<log::LogRecord> kNone;
  const auto* ev = std::get_if<attacks::SnoopEvidence>(&snoop.evidence);
  const auto& records = (snoop.success && ev) ? ev->records : kNone;
  auto [evidence, found] = analyze(records);
  if (!snoop.success) {
    return attacks::AttackOutcome::fail(kind, snoop.failure_cause.value_or(attacks::FailureCause::NothingFound),
                                        std::move(evidence));
  }
  if (!found) return attacks::AttackOutcome::fail(kind, attacks::FailureCause::NothingFound, std::move(evidence));
  return attacks::AttackOutcome::ok(kind, std::move(evidence));
}

inline json run_matrix_report(std::span<const server::Request> trace) {
  const auto base = attacks::matrix_base_config();
  return json{{"scenario", "matrix"},
              {"config_digest", config_digest(base)},
              {"outcome", matrix_to_json(attacks::run_attack_matrix(trace, base))},
              {"findings", json::array()},
              {"logs", json::object()}};
}

// Boots a fresh runtime, replays the trace, runs the scenario. The report's
// schema is {scenario, config_digest, outcome, findings, logs}.
inline json run_scenario(const ServerConfig& config, std::span<const server::Request> trace, Scenario scenario) {
  using attacks::AttackKind;
  if (scenario.name == ScenarioName::matrix) return run_matrix_report(trace);

  scenario = resolve(config, std::move(scenario));
  json report{{"scenario", to_string(scenario.name)}, {"config_digest", config_digest(config)}};

  if (scenario.name == ScenarioName::audit) {
    auto rt = server::ServerRuntime::boot_world(config);
    rt.run_trace(trace);
    report["outcome"] = nullptr;
    report["findings"] = findings_to_json(hardening::audit(config));
    report["logs"] = logs_to_json(rt);
    return report;
  }

  attacks::CrossTenantParams params{scenario.attacker_vhost, scenario.victim_vhost, scenario.marker, {}};
  if (scenario.payload) {
    params.payload = *scenario.payload;
  } else if (scenario.name == ScenarioName::poison) {
    params.payload = std::string(kDefaultPoisonPayload);
  }
  auto world = attacks::install_attack_scripts(config, params);
  auto rt = server::ServerRuntime::boot_world(world);
  rt.run_trace(trace);

  json outcome;
  switch (scenario.name) {
    case ScenarioName::poison: {
      auto [o, cross] = attacks::poison_as_attacker(rt, params);
      outcome = outcome_to_json(o, cross);
      break;
    }
    case ScenarioName::snoop: {
      auto [o, cross] = attacks::snoop_as_attacker(rt, params);
      outcome = outcome_to_json(o, cross);
      break;
    }
    case ScenarioName::lfi: {
      attacks::poison_as_attacker(rt, params);
      auto [o, cross] = attacks::lfi_as_attacker(rt, params);
      outcome = outcome_to_json(o, cross);
      break;
    }
    case ScenarioName::site_tree: {
      auto snoop = attacks::snoop_as_attacker(rt, params).first;
      auto o = analyze_snoop(snoop, AttackKind::SiteTree, [&](const auto& records) {
        auto tree = log::build_site_tree(records, scenario.victim_vhost);
        const bool found = tree.root.hit_count > 0;
        return std::pair{attacks::Evidence{attacks::SiteTreeEvidence{scenario.victim_vhost, std::move(tree)}}, found};
      });
      outcome = outcome_to_json(o);
      break;
    }
    case ScenarioName::enumerate: {
      auto snoop = attacks::snoop_as_attacker(rt, params).first;
      auto o = analyze_snoop(snoop, AttackKind::Enumerate, [](const auto& records) {
        auto domains = log::enumerate_vhosts(records);
        const bool found = !domains.empty();
        return std::pair{attacks::Evidence{attacks::DomainEvidence{std::move(domains)}}, found};
      });
      outcome = outcome_to_json(o);
      break;
    }
    case ScenarioName::harvest: {
      auto snoop = attacks::snoop_as_attacker(rt, params).first;
      const auto names = scenario.sensitive_names.value_or(log::default_sensitive_names());
      auto o = analyze_snoop(snoop, AttackKind::Harvest, [&](const auto& records) {
        auto creds = log::harvest_credentials(records, names);
        const bool found = !creds.empty();
        return std::pair{attacks::Evidence{attacks::CredentialEvidence{std::move(creds)}}, found};
      });
      outcome = outcome_to_json(o);
      break;
    }
    case ScenarioName::audit:
    case ScenarioName::matrix:
      break;
  }
  report["outcome"] = outcome;
  report["findings"] = findings_to_json(hardening::audit(config));
  report["logs"] = logs_to_json(rt);
  return report;
}

// ---------------------------------------------------------------------------
// Text rendering

namespace detail {

inline std::string yes_no(const json& cell) {
  std::string s = cell.at("cross_tenant").get<bool>() ? "yes" : "no";
  if (!cell.at("failure_cause").is_null()) {
    s += " (" + cell.at("failure_cause").get<std::string>() + ")";
  } else if (!cell.at("cross_tenant").get<bool>()) {
    s += " (own log only)";
  }
  return s;
}

inline void render_tree(std::ostringstream& out, const json& node, int depth) {
  out << std::string(static_cast<std::size_t>(depth) * 2, ' ') << node.at("name").get<std::string>() << "  ["
      << node.at("hits").get<std::uint64_t>() << "]\n";
  for (const auto& c : node.at("children")) render_tree(out, c, depth + 1);
}

}  // namespace detail

inline std::string render_findings_text(const json& findings) {
  std::ostringstream out;
  if (findings.empty()) {
    out << "no findings\n";
    return out.str();
  }
  for (const auto& f : findings) {
    out << std::left << std::setw(7) << f.at("severity").get<std::string>() << std::setw(31)
        << f.at("code").get<std::string>() << f.at("subject").get<std::string>() << "\n"
        << "       remedy: " << f.at("remedy").get<std::string>() << "\n";
  }
  return out.str();
}

inline std::string render_text(const json& report) {
  std::ostringstream out;
  out << "scenario: " << report.at("scenario").get<std::string>() << "\n"
      << "config:   " << report.at("config_digest").get<std::string>() << "\n";
  const auto& outcome = report.at("outcome");

  if (report.at("scenario") == "matrix") {
    out << "attacker: " << outcome.at("attacker").get<std::string>()
        << "  victim: " << outcome.at("victim").get<std::string>() << "\n\n";
    out << std::left << std::setw(20) << "execution_model" << std::setw(11) << "log" << std::setw(11) << "mode"
        << std::setw(20) << "fd_exposure" << std::setw(22) << "poison" << std::setw(24) << "snoop" << std::setw(22)
        << "lfi2rce" << "high findings\n";
    for (const auto& row : outcome.at("rows")) {
      std::string highs;
      for (const auto& c : row.at("high_findings")) highs += (highs.empty() ? "" : ",") + c.get<std::string>();
      out << std::left << std::setw(20) << row.at("execution_model").get<std::string>() << std::setw(11)
          << row.at("log_policy").get<std::string>() << std::setw(11) << row.at("log_mode").get<std::string>()
          << std::setw(20) << row.at("fd_exposure").get<std::string>() << std::setw(22)
          << detail::yes_no(row.at("poison")) << std::setw(24) << detail::yes_no(row.at("snoop")) << std::setw(22)
          << detail::yes_no(row.at("lfi")) << (highs.empty() ? "-" : highs) << "\n";
    }
    return out.str();
  }

  if (!outcome.is_null()) {
    out << "outcome:  " << outcome.at("kind").get<std::string>() << " "
        << (outcome.at("success").get<bool>() ? "succeeded" : "failed");
    if (!outcome.at("failure_cause").is_null()) out << " (" << outcome.at("failure_cause").get<std::string>() << ")";
    if (outcome.contains("cross_tenant")) {
      out << (outcome.at("cross_tenant").get<bool>() ? ", crossed tenants" : ", stayed within attacker's tenant");
    }
    out << "\n";
    const auto& ev = outcome.at("evidence");
    if (!ev.is_null()) {
      if (ev.contains("tree")) {
        out << "site tree of " << ev.at("vhost").get<std::string>() << ":\n";
        detail::render_tree(out, ev.at("tree"), 1);
      } else if (ev.contains("domains")) {
        for (const auto& d : ev.at("domains")) out << "  domain " << d.get<std::string>() << "\n";
      } else if (ev.contains("credentials")) {
        for (const auto& c : ev.at("credentials")) {
          out << "  " << c.at("vhost").get<std::string>() << " " << c.at("path").get<std::string>() << "  "
              << c.at("name").get<std::string>() << "=" << c.at("value").get<std::string>() << "\n";
        }
      } else if (ev.contains("records")) {
        out << "  via " << ev.at("strategy").get<std::string>() << " " << ev.at("path").get<std::string>() << ", "
            << ev.at("record_count").get<std::size_t>() << " records\n";
      } else if (ev.contains("markers")) {
        out << "  include " << ev.at("include_path").get<std::string>() << ", executed:";
        for (const auto& m : ev.at("markers")) out << " " << m.get<std::string>();
        out << "\n";
      } else if (ev.contains("bytes_written")) {
        out << "  wrote " << ev.at("bytes_written").get<std::size_t>() << " bytes via fd " << ev.at("fd").get<int>()
            << " -> " << ev.at("path").get<std::string>() << "\n";
      }
    }
  }
  out << "\nfindings:\n" << render_findings_text(report.at("findings"));
  out << "\nlogs:\n";
  for (const auto& [path, content] : report.at("logs").items()) {
    out << "== " << path << "\n" << content.get<std::string>();
  }
  return out.str();
}

}  // namespace hostsim::scenario
