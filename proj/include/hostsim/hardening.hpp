#pragma once

// Log-isolation countermeasures as config transforms, and a static auditor
// that reports the misconfigurations the log attacks depend on.

#include <algorithm>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "hostsim/fsmodel.hpp"
#include "hostsim/server.hpp"

namespace hostsim::hardening {

using server::ServerConfig;

enum class Severity { low, medium, high };

inline std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::low: return "low";
    case Severity::medium: return "medium";
    case Severity::high: return "high";
  }
  return "?";
}

enum class FindingCode {
  SHARED_LOG_FILE,
  LOG_WORLD_READABLE,
  MODULE_WITH_INHERITED_LOG_FD,
  ALL_LOGS_EXPOSED_TO_WORKERS,
  LOG_DIR_TRAVERSABLE_BY_OTHERS,
  SHARED_WORKER_IDENTITY,
};

inline std::string_view to_string(FindingCode c) {
  switch (c) {
    case FindingCode::SHARED_LOG_FILE: return "SHARED_LOG_FILE";
    case FindingCode::LOG_WORLD_READABLE: return "LOG_WORLD_READABLE";
    case FindingCode::MODULE_WITH_INHERITED_LOG_FD: return "MODULE_WITH_INHERITED_LOG_FD";
    case FindingCode::ALL_LOGS_EXPOSED_TO_WORKERS: return "ALL_LOGS_EXPOSED_TO_WORKERS";
    case FindingCode::LOG_DIR_TRAVERSABLE_BY_OTHERS: return "LOG_DIR_TRAVERSABLE_BY_OTHERS";
    case FindingCode::SHARED_WORKER_IDENTITY: return "SHARED_WORKER_IDENTITY";
  }
  return "?";
}

// attack-enabling = high, residual risk = medium, hygiene = low
inline Severity severity_of(FindingCode c) {
  switch (c) {
    case FindingCode::SHARED_LOG_FILE:
    case FindingCode::LOG_WORLD_READABLE:
    case FindingCode::MODULE_WITH_INHERITED_LOG_FD:
      return Severity::high;
    case FindingCode::ALL_LOGS_EXPOSED_TO_WORKERS:
    case FindingCode::LOG_DIR_TRAVERSABLE_BY_OTHERS:
      return Severity::medium;
    case FindingCode::SHARED_WORKER_IDENTITY:
      return Severity::low;
  }
  return Severity::low;
}

inline std::string_view remedy_of(FindingCode c) {
  switch (c) {
    case FindingCode::SHARED_LOG_FILE:
      return "Give every vhost its own access log under <home>/log (CustomLog per VirtualHost).";
    case FindingCode::LOG_WORLD_READABLE:
      return "Drop the other-read bit on log files (rw-r----- tenant:tenant).";
    case FindingCode::MODULE_WITH_INHERITED_LOG_FD:
      return "Stop handing one tenant's log descriptor to another tenant's scripts: separate logs, or run scripts via CGI/suEXEC.";
    case FindingCode::ALL_LOGS_EXPOSED_TO_WORKERS:
      return "Pass each worker only the log descriptor of the vhost it serves.";
    case FindingCode::LOG_DIR_TRAVERSABLE_BY_OTHERS:
      return "Set tenant home and log directories to rwxr-x--- tenant:tenant.";
    case FindingCode::SHARED_WORKER_IDENTITY:
      return "Serve each vhost under its owner's uid (suEXEC/suPHP, Peruser or ITK).";
  }
  return "";
}

struct Finding {
  FindingCode code;
  Severity severity;
  std::string subject;
  std::string remedy;

  bool operator==(const Finding&) const = default;
};

inline Finding make_finding(FindingCode code, std::string subject) {
  return {code, severity_of(code), std::move(subject), std::string(remedy_of(code))};
}

namespace detail {

inline void upsert(std::vector<server::DirSpec>& layout, server::DirSpec d) {
  auto it = std::find_if(layout.begin(), layout.end(),
                         [&](const server::DirSpec& e) { return e.path == d.path; });
  if (it == layout.end()) {
    layout.push_back(std::move(d));
  } else {
    *it = std::move(d);
  }
}

struct Principal {
  fs::UserId uid;
  std::set<fs::GroupId> groups;
};

// Everyone on the box who might run a script: the shared worker account and
// every tenant.
inline std::vector<Principal> principals(const ServerConfig& c) {
  std::vector<Principal> out{{server::kWorkerUser, {server::kWorkerGroup}}};
  for (const auto& v : c.vhosts) out.push_back({v.owner, {v.owner_group}});
  return out;
}

inline bool can_traverse(const fs::Kernel& k, const Principal& p, const std::string& dir) {
  auto chain = fs::ancestors(dir);
  chain.push_back(dir);
  return std::all_of(chain.begin(), chain.end(), [&](const std::string& path) {
    const auto* node = k.find(path);
    return node && fs::check_access(p.uid, p.groups, *node, fs::Perm::exec);
  });
}

}  // namespace detail

// Per-tenant log directories (Apache CustomLog per VirtualHost) with the
// tenant-only directory modes:
//   d rwxr-x--- webN:webN /home/websiteN
//   d rwxr-x--- webN:webN /home/websiteN/public_html
//   d rwxr-x--- webN:webN /home/websiteN/log
inline ServerConfig apply_log_separation(const ServerConfig& config) {
  server::validate(config);
  ServerConfig out = config;
  const bool already = config.log_policy.kind == server::LogPolicyKind::PerVHost;
  out.log_policy.kind = server::LogPolicyKind::PerVHost;
  out.log_mode_bits = fs::Mode(0640);
  for (std::size_t i = 0; i < out.vhosts.size(); ++i) {
    auto& v = out.vhosts[i];
    std::string home;
    if (already && !v.log_dir.empty()) {
      home = fs::parent_path(v.log_dir).value_or("/");
    } else {
      home = "/home/website" + std::to_string(i + 1);
    }
    v.docroot = home + "/public_html";
    v.log_dir = home + "/log";
    for (const auto& dir : {home, v.docroot, v.log_dir}) {
      detail::upsert(out.layout, {dir, v.owner, v.owner_group, fs::Mode(0750)});
    }
  }
  server::validate(out);
  return out;
}

// suPHP has the same identity semantics as suEXEC here, so it maps to SuexecCgi.
inline ServerConfig apply_execution_model(const ServerConfig& config, server::ExecutionModel model) {
  server::validate(config);
  ServerConfig out = config;
  out.execution_model = model;
  return out;
}

// Findings sorted by severity (high first), then code, then subject.
inline std::vector<Finding> audit(const ServerConfig& c) {
  using server::LogPolicyKind;
  std::vector<Finding> out;
  const bool shared = c.log_policy.kind == LogPolicyKind::SharedSingleFile;

  if (shared) out.push_back(make_finding(FindingCode::SHARED_LOG_FILE, c.log_policy.shared_path));

  if (c.log_mode_bits.other().contains(fs::Perm::read)) {
    for (const auto& p : c.log_paths()) out.push_back(make_finding(FindingCode::LOG_WORLD_READABLE, p));
  }

  if (server::inherits_fds(c.execution_model)) {
    // A log is exposed when a worker serving tenant A holds the descriptor of
    // a log that also records tenant B.
    std::set<std::string> exposed;
    for (const auto& serving : c.vhosts) {
      std::vector<std::string> reachable;
      if (c.fd_exposure == server::FdExposure::ServingVhostOnly) {
        reachable.push_back(c.log_path_for(serving));
      } else {
        reachable = c.log_paths();
      }
      for (const auto& path : reachable) {
        for (const auto& other : c.vhosts) {
          if (other.owner != serving.owner && c.log_path_for(other) == path) exposed.insert(path);
        }
      }
    }
    for (const auto& p : exposed) out.push_back(make_finding(FindingCode::MODULE_WITH_INHERITED_LOG_FD, p));
  }

  if (!shared && c.fd_exposure == server::FdExposure::AllOpenLogs) {
    out.push_back(make_finding(FindingCode::ALL_LOGS_EXPOSED_TO_WORKERS, "fd_exposure"));
  }

  if (!shared) {
    fs::Kernel scratch;
    server::materialize(c, scratch);
    const auto everyone = detail::principals(c);
    for (const auto& v : c.vhosts) {
      const bool open_to_others = std::any_of(everyone.begin(), everyone.end(), [&](const auto& p) {
        return p.uid != v.owner && detail::can_traverse(scratch, p, v.log_dir);
      });
      if (open_to_others) out.push_back(make_finding(FindingCode::LOG_DIR_TRAVERSABLE_BY_OTHERS, v.log_dir));
    }
  }

  if (server::runs_as_shared_user(c.execution_model)) {
    out.push_back(make_finding(FindingCode::SHARED_WORKER_IDENTITY, "execution_model"));
  }

  std::sort(out.begin(), out.end(), [](const Finding& a, const Finding& b) {
    return std::make_tuple(-static_cast<int>(a.severity), to_string(a.code), std::string_view(a.subject)) <
           std::make_tuple(-static_cast<int>(b.severity), to_string(b.code), std::string_view(b.subject));
  });
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline bool has_high_severity(const std::vector<Finding>& findings) {
  return std::any_of(findings.begin(), findings.end(),
                     [](const Finding& f) { return f.severity == Severity::high; });
}

inline constexpr std::size_t kDefaultFdWarningThreshold = 1000;

// Informational notes that are not findings.
inline std::vector<std::string> audit_notes(const ServerConfig& c,
                                            std::size_t fd_threshold = kDefaultFdWarningThreshold) {
  std::vector<std::string> out;
  if (c.log_policy.kind == server::LogPolicyKind::PerVHost && c.vhosts.size() > fd_threshold) {
    out.push_back("per-vhost logs keep " + std::to_string(c.vhosts.size()) +
                  " descriptors open in the parent; check the process fd limit");
  }
  return out;
}

}  // namespace hostsim::hardening
