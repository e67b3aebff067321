#pragma once

// Attack orchestration. Every attack is issued as an HTTP request to a script
// on a website the attacker controls (or, for LFI, to the victim's vulnerable
// script); nothing here touches the filesystem with the server's authority
// except the before/after reads used to score cross-tenant impact.

#include <algorithm>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "hostsim/attack_scripts.hpp"
#include "hostsim/hardening.hpp"
#include "hostsim/server.hpp"

namespace hostsim::attacks {

using server::ServerConfig;
using server::ServerRuntime;

inline constexpr std::string_view kPoisonScript = "/poison.php";
inline constexpr std::string_view kSnoopScript = "/snoop.php";
inline constexpr std::string_view kDefaultIncludeScript = "/view.php";
inline constexpr std::string_view kAttackerIp = "198.51.100.66";
inline constexpr int kProcFdProbeLimit = 10;  // /proc/self/fd/0 .. /proc/self/fd/9

struct CrossTenantParams {
  std::string attacker;
  std::string victim;
  std::string marker = "pwn1";
  // Empty means "{{EXEC:<marker>}}\n".
  std::string payload;

  [[nodiscard]] std::string effective_payload() const {
    return payload.empty() ? "{{EXEC:" + marker + "}}\n" : payload;
  }
};

// Installs the attacker's poison/snoop scripts and, if the victim has none,
// an include-vulnerable page. The snoop script targets the log path an
// attacker would guess for the victim.
inline ServerConfig install_attack_scripts(ServerConfig config, const CrossTenantParams& p) {
  server::validate(config);
  auto find = [&](const std::string& domain) -> server::VHost& {
    for (auto& v : config.vhosts) {
      if (v.domain == domain) return v;
    }
    throw server::UnknownVhost(domain);
  };
  auto& victim = find(p.victim);
  auto& attacker = find(p.attacker);
  if (&victim == &attacker) throw server::BadConfig("attacker and victim must differ");

  const auto known_path = config.log_path_for(victim);
  attacker.scripts[std::string(kPoisonScript)] =
      server::AttackScript{server::ScriptAttack::Poison, p.effective_payload(), {}};
  attacker.scripts[std::string(kSnoopScript)] =
      server::AttackScript{server::ScriptAttack::Snoop, {}, known_path};

  const bool has_lfi = std::any_of(victim.scripts.begin(), victim.scripts.end(), [](const auto& kv) {
    return std::holds_alternative<server::LfiVulnerable>(kv.second);
  });
  if (!has_lfi) victim.scripts[std::string(kDefaultIncludeScript)] = server::LfiVulnerable{"page"};
  return config;
}

inline server::Request attacker_request(const ServerRuntime& rt, std::string host, std::string_view path,
                                        std::string query = {}) {
  return server::Request{std::string(kAttackerIp), std::move(host), log::Method::Get,
                         std::string(path), std::move(query), rt.last_timestamp() + 1};
}

// Asks the victim's include-vulnerable script to include `include_path`.
inline AttackOutcome lfi_include(ServerRuntime& rt, std::string_view victim_vhost,
                                 std::string_view include_path) {
  const auto* victim = rt.config().find_vhost(victim_vhost);
  if (!victim) throw server::UnknownVhost(std::string(victim_vhost));
  auto script = std::find_if(victim->scripts.begin(), victim->scripts.end(), [](const auto& kv) {
    return std::holds_alternative<server::LfiVulnerable>(kv.second);
  });
  LfiEvidence ev;
  ev.include_path = std::string(include_path);
  if (script == victim->scripts.end()) {
    return AttackOutcome::fail(AttackKind::Lfi2Rce, FailureCause::NothingFound, std::move(ev));
  }
  const auto& param = std::get<server::LfiVulnerable>(script->second).param;
  auto resp = rt.handle_request(attacker_request(rt, victim->domain, script->first,
                                                 param + "=" + std::string(include_path)));
  ev.markers = resp.executed_markers;
  if (resp.include_denied) {
    ev.denied.push_back(*resp.include_denied);
    return AttackOutcome::fail(AttackKind::Lfi2Rce, FailureCause::PermissionDenied, std::move(ev));
  }
  if (ev.markers.empty()) {
    return AttackOutcome::fail(AttackKind::Lfi2Rce, FailureCause::NothingFound, std::move(ev));
  }
  return AttackOutcome::ok(AttackKind::Lfi2Rce, std::move(ev));
}

struct CrossTenantResult {
  AttackOutcome poison;
  bool poison_cross = false;  // victim's log gained the attacker's bytes
  AttackOutcome snoop;
  bool snoop_cross = false;  // at least one victim record was read
  AttackOutcome lfi;
  bool lfi_cross = false;  // the victim executed the attacker's marker

  bool operator==(const CrossTenantResult&) const = default;
};

// Include targets an attacker tries, in order: the conventional log paths,
// then the victim worker's own descriptors through /proc/self/fd.
inline std::vector<std::string> lfi_candidates(const ServerConfig& c, const CrossTenantParams& p) {
  std::vector<std::string> out;
  for (const auto* domain : {&p.victim, &p.attacker}) {
    auto path = c.log_path_for(*c.find_vhost(*domain));
    if (std::find(out.begin(), out.end(), path) == out.end()) out.push_back(path);
  }
  for (int fd = 0; fd < kProcFdProbeLimit; ++fd) {
    out.push_back(std::string(kProcSelfFd) + std::to_string(fd));
  }
  return out;
}

// Requests the attacker's poison script; cross-tenant when the victim's log
// gained the payload.
inline std::pair<AttackOutcome, bool> poison_as_attacker(ServerRuntime& rt, const CrossTenantParams& p) {
  const auto* victim = rt.config().find_vhost(p.victim);
  if (!victim) throw server::UnknownVhost(p.victim);
  const auto victim_log = rt.config().log_path_for(*victim);
  const auto payload = p.effective_payload();

  const auto before = rt.read_as_root(victim_log);
  auto resp = rt.handle_request(attacker_request(rt, p.attacker, kPoisonScript));
  const auto after = rt.read_as_root(victim_log);
  auto outcome = resp.outcome.value_or(AttackOutcome::fail(AttackKind::Poison, FailureCause::NothingFound));
  const bool cross = outcome.success && after.size() > before.size() &&
                     std::string_view(after).substr(before.size()).find(payload) != std::string_view::npos;
  return {std::move(outcome), cross};
}

// Requests the attacker's snoop script; cross-tenant when a victim record was read.
inline std::pair<AttackOutcome, bool> snoop_as_attacker(ServerRuntime& rt, const CrossTenantParams& p) {
  auto resp = rt.handle_request(attacker_request(rt, p.attacker, kSnoopScript));
  auto outcome = resp.outcome.value_or(AttackOutcome::fail(AttackKind::Snoop, FailureCause::NothingFound));
  bool cross = false;
  if (outcome.success) {
    const auto& records = std::get<SnoopEvidence>(outcome.evidence).records;
    cross = std::any_of(records.begin(), records.end(),
                        [&](const log::LogRecord& rec) { return rec.vhost == p.victim; });
  }
  return {std::move(outcome), cross};
}

// Walks lfi_candidates until the victim executes the attacker's marker.
inline std::pair<AttackOutcome, bool> lfi_as_attacker(ServerRuntime& rt, const CrossTenantParams& p) {
  LfiEvidence combined;
  bool any_readable = false;
  for (const auto& target : lfi_candidates(rt.config(), p)) {
    auto attempt = lfi_include(rt, p.victim, target);
    auto& ev = std::get<LfiEvidence>(attempt.evidence);
    combined.include_path = ev.include_path;
    combined.denied.insert(combined.denied.end(), ev.denied.begin(), ev.denied.end());
    if (ev.denied.empty()) any_readable = true;
    if (std::find(ev.markers.begin(), ev.markers.end(), p.marker) != ev.markers.end()) {
      combined.markers = ev.markers;
      return {AttackOutcome::ok(AttackKind::Lfi2Rce, std::move(combined)), true};
    }
  }
  return {AttackOutcome::fail(AttackKind::Lfi2Rce,
                              any_readable ? FailureCause::NothingFound : FailureCause::PermissionDenied,
                              std::move(combined)),
          false};
}

// Poison, then snoop, then LFI, against a booted runtime whose config already
// carries the attack scripts (see install_attack_scripts).
inline CrossTenantResult run_cross_tenant(ServerRuntime& rt, const CrossTenantParams& p) {
  CrossTenantResult r;
  std::tie(r.poison, r.poison_cross) = poison_as_attacker(rt, p);
  std::tie(r.snoop, r.snoop_cross) = snoop_as_attacker(rt, p);
  std::tie(r.lfi, r.lfi_cross) = lfi_as_attacker(rt, p);
  return r;
}

// ---------------------------------------------------------------------------
// Attack matrix

inline constexpr std::string_view kVictimDomain = "site1.example";
inline constexpr std::string_view kAttackerDomain = "site2.example";

// Two tenants on the default (shared, world-readable, module) setup:
//   d rwxr-x--- web1:www-data /var/www/site1
//   d rwxr-x--- web2:www-data /var/www/site2
inline ServerConfig matrix_base_config() {
  using server::StaticResponse;
  ServerConfig c;
  c.vhosts = {
      server::VHost{std::string(kVictimDomain), "/var/www/site1", {"web1"}, {"web1"},
                    {{"/", StaticResponse{200, 1024}},
                     {"/index.html", StaticResponse{200, 1024}},
                     {"/about.html", StaticResponse{200, 2310}},
                     {"/news.html", StaticResponse{200, 5120}},
                     {"/images/logo.png", StaticResponse{200, 18432}},
                     {"/css/site.css", StaticResponse{200, 3300}},
                     {"/login", StaticResponse{200, 512}},
                     {"/admin/login.php", StaticResponse{200, 2048}},
                     {"/admin/users.php", StaticResponse{200, 4096}},
                     {"/admin/panel/settings.php", StaticResponse{200, 2900}},
                     {"/products/list.php", StaticResponse{200, 7400}},
                     {"/view.php", server::LfiVulnerable{"page"}}},
                    ""},
      server::VHost{std::string(kAttackerDomain), "/var/www/site2", {"web2"}, {"web2"},
                    {{"/", StaticResponse{200, 900}},
                     {"/index.html", StaticResponse{200, 900}},
                     {"/blog/post1.html", StaticResponse{200, 4200}},
                     {"/blog/post2.html", StaticResponse{200, 3900}},
                     {"/contact.php", StaticResponse{302, 0}},
                     {"/img/banner.jpg", StaticResponse{200, 40960}}},
                    ""},
  };
  c.log_policy = {server::LogPolicyKind::SharedSingleFile, "/var/log/webserver/access_log"};
  c.log_mode_bits = fs::Mode(0644);
  c.execution_model = server::ExecutionModel::ModuleInterpreter;
  c.fd_exposure = server::FdExposure::ServingVhostOnly;
  c.layout = {
      {"/var/www", fs::kRootUser, fs::kRootGroup, fs::Mode(0755)},
      {"/var/www/site1", {"web1"}, server::kWorkerGroup, fs::Mode(0750)},
      {"/var/www/site2", {"web2"}, server::kWorkerGroup, fs::Mode(0750)},
      {"/var/log/webserver", fs::kRootUser, fs::kRootGroup, fs::Mode(0755)},
  };
  return c;
}

struct MatrixDims {
  server::ExecutionModel model = server::ExecutionModel::ModuleInterpreter;
  server::LogPolicyKind policy = server::LogPolicyKind::SharedSingleFile;
  fs::Mode log_mode{0644};
  server::FdExposure exposure = server::FdExposure::ServingVhostOnly;
  bool operator==(const MatrixDims&) const = default;
};

inline std::vector<MatrixDims> matrix_dimensions() {
  std::vector<MatrixDims> out;
  for (auto model : server::kAllExecutionModels) {
    for (auto policy : {server::LogPolicyKind::SharedSingleFile, server::LogPolicyKind::PerVHost}) {
      for (auto mode : {fs::Mode(0644), fs::Mode(0640)}) {
        for (auto exposure : {server::FdExposure::ServingVhostOnly, server::FdExposure::AllOpenLogs}) {
          out.push_back({model, policy, mode, exposure});
        }
      }
    }
  }
  return out;
}

// PerVHost rows use the per-tenant directory layout from apply_log_separation.
inline ServerConfig matrix_config(const MatrixDims& d, const ServerConfig& base = matrix_base_config()) {
  ServerConfig c = base;
  if (d.policy == server::LogPolicyKind::PerVHost) c = hardening::apply_log_separation(c);
  c = hardening::apply_execution_model(c, d.model);
  c.log_mode_bits = d.log_mode;
  c.fd_exposure = d.exposure;
  return c;
}

struct MatrixRow {
  MatrixDims dims;
  CrossTenantResult result;
  std::vector<hardening::Finding> findings;
};

struct AttackMatrix {
  std::string attacker;
  std::string victim;
  std::vector<MatrixRow> rows;
};

// Every (execution model x log policy x log readability x fd exposure)
// combination: boot, replay `trace`, then poison/snoop/LFI as tenant 2 against
// tenant 1.
inline AttackMatrix run_attack_matrix(std::span<const server::Request> trace,
                                      const ServerConfig& base = matrix_base_config()) {
  AttackMatrix m;
  if (base.vhosts.size() < 2) throw server::BadConfig("the matrix needs at least two vhosts");
  CrossTenantParams p;
  p.attacker = base.vhosts[1].domain;
  p.victim = base.vhosts[0].domain;
  m.attacker = p.attacker;
  m.victim = p.victim;
  for (const auto& dims : matrix_dimensions()) {
    auto config = install_attack_scripts(matrix_config(dims, base), p);
    auto rt = ServerRuntime::boot_world(config);
    rt.run_trace(trace);
    m.rows.push_back(MatrixRow{dims, run_cross_tenant(rt, p), hardening::audit(config)});
  }
  return m;
}

}  // namespace hostsim::attacks
