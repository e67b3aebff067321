#pragma once

// Programs an attacker-controlled website runs inside its worker process.
// They only see what the worker sees: its credentials and its fd table.

#include <charconv>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hostsim/fsmodel.hpp"
#include "hostsim/logformat.hpp"

namespace hostsim::attacks {

enum class AttackKind { Poison, Snoop, Lfi2Rce, Enumerate, Harvest, SiteTree };
enum class FailureCause { NoLogDescriptor, PermissionDenied, NothingFound };

inline std::string_view to_string(AttackKind k) {
  switch (k) {
    case AttackKind::Poison: return "Poison";
    case AttackKind::Snoop: return "Snoop";
    case AttackKind::Lfi2Rce: return "Lfi2Rce";
    case AttackKind::Enumerate: return "Enumerate";
    case AttackKind::Harvest: return "Harvest";
    case AttackKind::SiteTree: return "SiteTree";
  }
  return "?";
}

inline std::string_view to_string(FailureCause c) {
  switch (c) {
    case FailureCause::NoLogDescriptor: return "NoLogDescriptor";
    case FailureCause::PermissionDenied: return "PermissionDenied";
    case FailureCause::NothingFound: return "NothingFound";
  }
  return "?";
}

struct PoisonEvidence {
  int fd = -1;  // the inherited descriptor that was duplicated
  std::string path;
  std::size_t bytes_written = 0;
  bool operator==(const PoisonEvidence&) const = default;
};

enum class SnoopStrategy { PathOpen, Descriptor };

inline std::string_view to_string(SnoopStrategy s) {
  return s == SnoopStrategy::PathOpen ? "path" : "descriptor";
}

struct SnoopEvidence {
  SnoopStrategy strategy = SnoopStrategy::PathOpen;
  std::string path;
  std::vector<log::LogRecord> records;
  std::optional<std::string> denied_at;  // path strategy denial, if it was tried first
  bool operator==(const SnoopEvidence&) const = default;
};

struct LfiEvidence {
  std::string include_path;
  std::vector<std::string> markers;
  std::vector<std::string> denied;  // include targets the victim could not read
  bool operator==(const LfiEvidence&) const = default;
};

struct DomainEvidence {
  std::vector<std::string> domains;
  bool operator==(const DomainEvidence&) const = default;
};

struct CredentialEvidence {
  std::vector<log::Credential> credentials;
  bool operator==(const CredentialEvidence&) const = default;
};

struct SiteTreeEvidence {
  std::string vhost;
  log::SiteTree tree;
  bool operator==(const SiteTreeEvidence&) const = default;
};

using Evidence = std::variant<std::monostate, PoisonEvidence, SnoopEvidence, LfiEvidence,
                              DomainEvidence, CredentialEvidence, SiteTreeEvidence>;

// success=false always carries a cause; success=true always carries evidence.
struct AttackOutcome {
  AttackKind kind = AttackKind::Poison;
  bool success = false;
  std::optional<FailureCause> failure_cause;
  Evidence evidence;

  static AttackOutcome ok(AttackKind k, Evidence e) { return {k, true, std::nullopt, std::move(e)}; }
  static AttackOutcome fail(AttackKind k, FailureCause c, Evidence e = {}) {
    return {k, false, c, std::move(e)};
  }

  [[nodiscard]] bool well_formed() const {
    if (!success) return failure_cause.has_value();
    return !failure_cause && !std::holds_alternative<std::monostate>(evidence);
  }

  bool operator==(const AttackOutcome&) const = default;
};

// Mirrors scanning /proc/self/fd for a target whose real path mentions
// "access_log". Lowest fd wins.
inline std::optional<fs::FdEntry> find_log_fd(const fs::Kernel& kernel, const fs::ProcessCtx& proc) {
  for (auto& entry : kernel.list_fds(proc)) {
    if (entry.path.find("access_log") != std::string::npos) return entry;
  }
  return std::nullopt;
}

// Descriptor-only write: never path-opens the log.
inline AttackOutcome log_poison(fs::Kernel& kernel, fs::ProcessCtx& proc, std::string_view payload) {
  auto found = find_log_fd(kernel, proc);
  if (!found) return AttackOutcome::fail(AttackKind::Poison, FailureCause::NoLogDescriptor);
  const int fd = kernel.dup_by_fd(proc, found->fd, fs::Access::WriteAppend);
  const auto written = kernel.write(proc, fd, payload);
  kernel.close(proc, fd);
  return AttackOutcome::ok(AttackKind::Poison, PoisonEvidence{found->fd, found->path, written});
}

// Path-open first, then fall back to reopening an inherited log descriptor.
inline AttackOutcome log_snoop(fs::Kernel& kernel, fs::ProcessCtx& proc,
                               std::string_view known_log_path) {
  auto finish = [](SnoopEvidence ev, std::string_view content) {
    ev.records = log::parseable_records(content);
    if (ev.records.empty()) {
      return AttackOutcome::fail(AttackKind::Snoop, FailureCause::NothingFound, std::move(ev));
    }
    return AttackOutcome::ok(AttackKind::Snoop, std::move(ev));
  };

  std::optional<std::string> denied_at;
  try {
    const int fd = kernel.open(proc, known_log_path, fs::Access::ReadOnly);
    auto content = kernel.read(proc, fd);
    kernel.close(proc, fd);
    return finish(SnoopEvidence{SnoopStrategy::PathOpen, std::string(known_log_path), {}, {}},
                  content);
  } catch (const fs::FsError& e) {
    denied_at = e.subject();
  }

  if (auto found = find_log_fd(kernel, proc)) {
    const int fd = kernel.dup_by_fd(proc, found->fd, fs::Access::ReadOnly);
    auto content = kernel.read(proc, fd);
    kernel.close(proc, fd);
    return finish(SnoopEvidence{SnoopStrategy::Descriptor, found->path, {}, denied_at}, content);
  }
  SnoopEvidence ev;
  ev.path = std::string(known_log_path);
  ev.denied_at = denied_at;
  return AttackOutcome::fail(AttackKind::Snoop, FailureCause::PermissionDenied, std::move(ev));
}

inline constexpr std::string_view kProcSelfFd = "/proc/self/fd/";

inline std::optional<int> proc_self_fd_number(std::string_view path) {
  if (!path.starts_with(kProcSelfFd)) return std::nullopt;
  auto digits = path.substr(kProcSelfFd.size());
  int fd = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), fd);
  if (digits.empty() || ec != std::errc{} || ptr != digits.data() + digits.size() || fd < 0) {
    return std::nullopt;
  }
  return fd;
}

// Every {{EXEC:<id>}} in order of appearance. Ids are [A-Za-z0-9_.-]+.
inline std::vector<std::string> scan_markers(std::string_view content) {
  static constexpr std::string_view kOpen = "{{EXEC:";
  std::vector<std::string> out;
  std::size_t pos = 0;
  while ((pos = content.find(kOpen, pos)) != std::string_view::npos) {
    const auto start = pos + kOpen.size();
    auto end = start;
    while (end < content.size()) {
      char c = content[end];
      bool id_char = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                     c == '_' || c == '.' || c == '-';
      if (!id_char) break;
      ++end;
    }
    if (end > start && content.substr(end, 2) == "}}") {
      out.emplace_back(content.substr(start, end - start));
      pos = end + 2;
    } else {
      pos = start;
    }
  }
  return out;
}

struct IncludeResult {
  std::vector<std::string> markers;
  std::optional<std::string> denied;  // error description when the include failed
};

// What an include() in the worker does. /proc/self/fd/N resolves through the
// worker's own descriptor table (read reopen); any other path is path-opened
// with the worker's credentials, relative paths against `base_dir`.
inline IncludeResult include_and_execute(fs::Kernel& kernel, fs::ProcessCtx& proc,
                                         std::string_view target, std::string_view base_dir = "/") {
  try {
    int fd = -1;
    if (auto n = proc_self_fd_number(target)) {
      fd = kernel.dup_by_fd(proc, *n, fs::Access::ReadOnly);
    } else {
      auto normalized = fs::normalize_path(
          target.starts_with('/') ? std::string(target) : std::string(base_dir) + "/" + std::string(target));
      if (!normalized) throw fs::FsError(fs::FsErrc::InvalidPath, std::string(target));
      fd = kernel.open(proc, *normalized, fs::Access::ReadOnly);
    }
    auto content = kernel.read(proc, fd);
    kernel.close(proc, fd);
    return {scan_markers(content), std::nullopt};
  } catch (const fs::FsError& e) {
    return {{}, e.what()};
  }
}

}  // namespace hostsim::attacks
