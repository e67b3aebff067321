#pragma once

// In-memory Unix-like filesystem and process model.
//
// Nodes carry owner/group/9-bit mode. Processes carry credentials and an fd
// table whose handles point into the Kernel's node storage, so two handles on
// the same node (through fork or dup) always observe the same content.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hostsim::fs {

struct UserId {
  std::string name;

  [[nodiscard]] bool is_root() const { return name == "root"; }
  auto operator<=>(const UserId&) const = default;
};

struct GroupId {
  std::string name;
  auto operator<=>(const GroupId&) const = default;
};

inline const UserId kRootUser{"root"};
inline const GroupId kRootGroup{"root"};

enum class NodeKind { directory, regular };

enum class Perm : std::uint8_t { read = 4, write = 2, exec = 1 };

// Subset of {read, write, exec}, encoded as an rwx triple.
class PermSet {
 public:
  constexpr PermSet() = default;
  constexpr PermSet(Perm p) : bits_(static_cast<std::uint8_t>(p)) {}  // NOLINT
  static constexpr PermSet from_bits(std::uint8_t b) {
    PermSet s;
    s.bits_ = b & 7u;
    return s;
  }
  [[nodiscard]] constexpr std::uint8_t bits() const { return bits_; }
  [[nodiscard]] constexpr bool empty() const { return bits_ == 0; }
  [[nodiscard]] constexpr bool contains(Perm p) const {
    return (bits_ & static_cast<std::uint8_t>(p)) != 0;
  }
  constexpr PermSet operator|(PermSet o) const { return from_bits(bits_ | o.bits_); }
  constexpr bool operator==(const PermSet&) const = default;

 private:
  std::uint8_t bits_ = 0;
};

constexpr PermSet operator|(Perm a, Perm b) { return PermSet(a) | PermSet(b); }

// Nine permission bits: owner rwx, group rwx, other rwx. No setuid/sticky.
class Mode {
 public:
  constexpr Mode() = default;
  constexpr explicit Mode(std::uint16_t bits) : bits_(bits) {
    if (bits > 0777) throw std::invalid_argument("mode has more than 9 bits");
  }

  [[nodiscard]] constexpr std::uint16_t bits() const { return bits_; }
  [[nodiscard]] constexpr PermSet owner() const { return PermSet::from_bits((bits_ >> 6) & 7u); }
  [[nodiscard]] constexpr PermSet group() const { return PermSet::from_bits((bits_ >> 3) & 7u); }
  [[nodiscard]] constexpr PermSet other() const { return PermSet::from_bits(bits_ & 7u); }

  // "rwxr-x---" form, as in `ls -l` minus the type character.
  [[nodiscard]] std::string symbolic() const {
    static constexpr char kLetters[3] = {'r', 'w', 'x'};
    std::string out(9, '-');
    for (int i = 0; i < 9; ++i) {
      if (bits_ & (0400u >> i)) out[i] = kLetters[i % 3];
    }
    return out;
  }

  // Accepts "rwxr-x---" or an octal string such as "0750" / "750".
  static std::optional<Mode> parse(std::string_view text) {
    if (text.size() == 9 && text.find_first_not_of("rwx-") == std::string_view::npos) {
      static constexpr char kLetters[3] = {'r', 'w', 'x'};
      std::uint16_t bits = 0;
      for (int i = 0; i < 9; ++i) {
        if (text[i] == kLetters[i % 3]) {
          bits |= (0400u >> i);
        } else if (text[i] != '-') {
          return std::nullopt;
        }
      }
      return Mode(bits);
    }
    if (text.empty() || text.size() > 4) return std::nullopt;
    std::uint16_t bits = 0;
    for (char c : text) {
      if (c < '0' || c > '7') return std::nullopt;
      bits = static_cast<std::uint16_t>(bits * 8 + (c - '0'));
    }
    if (bits > 0777) return std::nullopt;
    return Mode(bits);
  }

  constexpr bool operator==(const Mode&) const = default;

 private:
  std::uint16_t bits_ = 0;
};

struct FileNode {
  std::string path;
  NodeKind kind = NodeKind::regular;
  UserId owner;
  GroupId group;
  Mode mode;
  std::string content;  // regular files only; append-ordered
};

enum class Access { ReadOnly, WriteAppend, ReadWrite };
enum class Origin { PathOpen, DupByFd, Inherited };

inline std::string_view to_string(Access a) {
  switch (a) {
    case Access::ReadOnly: return "ReadOnly";
    case Access::WriteAppend: return "WriteAppend";
    case Access::ReadWrite: return "ReadWrite";
  }
  return "?";
}

inline std::string_view to_string(Origin o) {
  switch (o) {
    case Origin::PathOpen: return "PathOpen";
    case Origin::DupByFd: return "DupByFd";
    case Origin::Inherited: return "Inherited";
  }
  return "?";
}

inline PermSet required_perms(Access a) {
  switch (a) {
    case Access::ReadOnly: return Perm::read;
    case Access::WriteAppend: return Perm::write;
    case Access::ReadWrite: return Perm::read | Perm::write;
  }
  return {};
}

using NodeId = std::size_t;

struct OpenFileHandle {
  NodeId node = 0;
  Access access = Access::ReadOnly;
  Origin origin = Origin::PathOpen;
};

struct ProcessCtx {
  int pid = 0;
  UserId uid;
  GroupId gid;
  std::set<GroupId> supplementary_groups;
  std::map<int, OpenFileHandle> fd_table;

  // Primary plus supplementary groups.
  [[nodiscard]] std::set<GroupId> groups() const {
    auto out = supplementary_groups;
    out.insert(gid);
    return out;
  }
};

struct FdEntry {
  int fd = 0;
  std::string path;
  Access access = Access::ReadOnly;
  bool operator==(const FdEntry&) const = default;
};

enum class FsErrc {
  MissingParent,
  AlreadyExists,
  NotFound,
  PermissionDenied,
  BadDescriptor,
  WrongMode,
  InvalidPath,
  IsDirectory,
};

inline std::string_view to_string(FsErrc c) {
  switch (c) {
    case FsErrc::MissingParent: return "MissingParent";
    case FsErrc::AlreadyExists: return "AlreadyExists";
    case FsErrc::NotFound: return "NotFound";
    case FsErrc::PermissionDenied: return "PermissionDenied";
    case FsErrc::BadDescriptor: return "BadDescriptor";
    case FsErrc::WrongMode: return "WrongMode";
    case FsErrc::InvalidPath: return "InvalidPath";
    case FsErrc::IsDirectory: return "IsDirectory";
  }
  return "?";
}

class FsError : public std::runtime_error {
 public:
  FsError(FsErrc code, std::string subject)
      : std::runtime_error(std::string(to_string(code)) + "(" + subject + ")"),
        code_(code),
        subject_(std::move(subject)) {}

  [[nodiscard]] FsErrc code() const { return code_; }
  // Path component (or fd number) the failure is attributed to.
  [[nodiscard]] const std::string& subject() const { return subject_; }

 private:
  FsErrc code_;
  std::string subject_;
};

// Collapses "." and "..", duplicate and trailing slashes. Returns nullopt for
// relative paths.
inline std::optional<std::string> normalize_path(std::string_view path) {
  if (path.empty() || path.front() != '/') return std::nullopt;
  std::vector<std::string_view> parts;
  std::size_t i = 0;
  while (i < path.size()) {
    while (i < path.size() && path[i] == '/') ++i;
    std::size_t j = i;
    while (j < path.size() && path[j] != '/') ++j;
    auto seg = path.substr(i, j - i);
    if (seg.empty() || seg == ".") {
      // skip
    } else if (seg == "..") {
      if (!parts.empty()) parts.pop_back();
    } else {
      parts.push_back(seg);
    }
    i = j;
  }
  std::string out;
  for (auto seg : parts) {
    out += '/';
    out += seg;
  }
  return out.empty() ? std::string("/") : out;
}

inline bool is_normalized(std::string_view path) {
  auto n = normalize_path(path);
  return n && *n == path;
}

// Parent of a normalized path; "/" has no parent.
inline std::optional<std::string> parent_path(std::string_view path) {
  if (path == "/") return std::nullopt;
  auto pos = path.rfind('/');
  if (pos == 0) return std::string("/");
  return std::string(path.substr(0, pos));
}

// Every proper ancestor of a normalized path, root first.
inline std::vector<std::string> ancestors(std::string_view path) {
  std::vector<std::string> out;
  auto p = parent_path(path);
  while (p) {
    out.push_back(*p);
    p = parent_path(*p);
  }
  std::reverse(out.begin(), out.end());
  return out;
}

// Standard Unix rule: the first matching class (owner, group, other) decides,
// even when a later class would grant more. Root passes every check.
inline bool check_access(const UserId& uid, const std::set<GroupId>& groups,
                         const FileNode& node, PermSet want) {
  if (uid.is_root()) return true;
  PermSet granted;
  if (uid == node.owner) {
    granted = node.mode.owner();
  } else if (groups.contains(node.group)) {
    granted = node.mode.group();
  } else {
    granted = node.mode.other();
  }
  return (granted.bits() & want.bits()) == want.bits();
}

// Owns every node and hands out pids. Single-threaded; one instance per
// scenario.
class Kernel {
 public:
  Kernel() {
    create_node("/", NodeKind::directory, kRootUser, kRootGroup, Mode(0755));
  }

  // Unchecked world-building. Root is created by the constructor.
  const FileNode& create_node(std::string_view path, NodeKind kind, UserId owner, GroupId group,
                              Mode mode, std::string content = {}) {
    if (!is_normalized(path)) throw FsError(FsErrc::InvalidPath, std::string(path));
    if (index_.contains(std::string(path))) {
      throw FsError(FsErrc::AlreadyExists, std::string(path));
    }
    if (auto parent = parent_path(path)) {
      auto it = index_.find(*parent);
      if (it == index_.end() || nodes_[it->second].kind != NodeKind::directory) {
        throw FsError(FsErrc::MissingParent, *parent);
      }
    } else if (!nodes_.empty()) {
      throw FsError(FsErrc::AlreadyExists, "/");
    }
    if (kind == NodeKind::directory) content.clear();
    nodes_.push_back(FileNode{std::string(path), kind, std::move(owner), std::move(group), mode,
                              std::move(content)});
    index_.emplace(std::string(path), nodes_.size() - 1);
    return nodes_.back();
  }

  // Creates missing ancestors as root:root rwxr-xr-x, then the node itself.
  const FileNode& create_with_parents(std::string_view path, NodeKind kind, UserId owner,
                                      GroupId group, Mode mode, std::string content = {}) {
    for (const auto& dir : ancestors(path)) {
      if (!index_.contains(dir)) {
        create_node(dir, NodeKind::directory, kRootUser, kRootGroup, Mode(0755));
      }
    }
    return create_node(path, kind, std::move(owner), std::move(group), mode, std::move(content));
  }

  [[nodiscard]] const FileNode* find(std::string_view path) const {
    auto it = index_.find(std::string(path));
    return it == index_.end() ? nullptr : &nodes_[it->second];
  }

  [[nodiscard]] bool exists(std::string_view path) const { return find(path) != nullptr; }

  // Setup-time attribute change, used when a layout re-declares an existing dir.
  void set_attributes(std::string_view path, UserId owner, GroupId group, Mode mode) {
    auto it = index_.find(std::string(path));
    if (it == index_.end()) throw FsError(FsErrc::NotFound, std::string(path));
    auto& n = nodes_[it->second];
    n.owner = std::move(owner);
    n.group = std::move(group);
    n.mode = mode;
  }

  [[nodiscard]] const std::vector<FileNode>& nodes() const { return nodes_; }

  // pid 1, uid root.
  ProcessCtx init_process() {
    if (init_spawned_) throw std::logic_error("init process already spawned");
    init_spawned_ = true;
    return ProcessCtx{1, kRootUser, kRootGroup, {}, {}};
  }

  ProcessCtx spawn(UserId uid, GroupId gid, std::set<GroupId> supplementary = {}) {
    return ProcessCtx{next_pid_++, std::move(uid), std::move(gid), std::move(supplementary), {}};
  }

  // Path open: exec on every ancestor, then the access bits on the target.
  int open(ProcessCtx& proc, std::string_view path, Access access) {
    NodeId id = resolve_checked(proc, path, required_perms(access));
    return install(proc, OpenFileHandle{id, access, Origin::PathOpen});
  }

  [[nodiscard]] std::vector<FdEntry> list_fds(const ProcessCtx& proc) const {
    std::vector<FdEntry> out;
    out.reserve(proc.fd_table.size());
    for (const auto& [fd, h] : proc.fd_table) {
      out.push_back(FdEntry{fd, nodes_[h.node].path, h.access});
    }
    return out;
  }

  [[nodiscard]] std::optional<std::string> fd_path(const ProcessCtx& proc, int fd) const {
    auto it = proc.fd_table.find(fd);
    if (it == proc.fd_table.end()) return std::nullopt;
    return nodes_[it->second.node].path;
  }

  // Reopen through an existing descriptor. No permission recheck, and the
  // requested access may differ from the original handle's.
  int dup_by_fd(ProcessCtx& proc, int fd, Access requested) {
    auto it = proc.fd_table.find(fd);
    if (it == proc.fd_table.end()) throw FsError(FsErrc::BadDescriptor, std::to_string(fd));
    return install(proc, OpenFileHandle{it->second.node, requested, Origin::DupByFd});
  }

  [[nodiscard]] std::string read(const ProcessCtx& proc, int fd) const {
    const auto& h = handle(proc, fd);
    if (h.access == Access::WriteAppend) throw FsError(FsErrc::WrongMode, std::to_string(fd));
    return nodes_[h.node].content;
  }

  std::size_t write(const ProcessCtx& proc, int fd, std::string_view bytes) {
    const auto& h = handle(proc, fd);
    if (h.access == Access::ReadOnly) throw FsError(FsErrc::WrongMode, std::to_string(fd));
    nodes_[h.node].content.append(bytes);
    return bytes.size();
  }

  void close(ProcessCtx& proc, int fd) {
    if (proc.fd_table.erase(fd) == 0) throw FsError(FsErrc::BadDescriptor, std::to_string(fd));
  }

  ProcessCtx fork(const ProcessCtx& parent, UserId uid, GroupId gid, bool inherit_fds,
                  std::set<GroupId> supplementary = {}) {
    ProcessCtx child = spawn(std::move(uid), std::move(gid), std::move(supplementary));
    if (inherit_fds) {
      for (const auto& [fd, h] : parent.fd_table) {
        child.fd_table.emplace(fd, OpenFileHandle{h.node, h.access, Origin::Inherited});
      }
    }
    return child;
  }

  [[nodiscard]] const FileNode& node_of(const ProcessCtx& proc, int fd) const {
    return nodes_[handle(proc, fd).node];
  }

 private:
  static int lowest_free_fd(const ProcessCtx& proc) {
    int fd = 0;
    for (const auto& [used, h] : proc.fd_table) {
      if (used != fd) break;
      ++fd;
    }
    return fd;
  }

  static int install(ProcessCtx& proc, OpenFileHandle h) {
    int fd = lowest_free_fd(proc);
    proc.fd_table.emplace(fd, h);
    return fd;
  }

  const OpenFileHandle& handle(const ProcessCtx& proc, int fd) const {
    auto it = proc.fd_table.find(fd);
    if (it == proc.fd_table.end()) throw FsError(FsErrc::BadDescriptor, std::to_string(fd));
    return it->second;
  }

  NodeId resolve_checked(const ProcessCtx& proc, std::string_view path, PermSet want) const {
    if (!is_normalized(path)) throw FsError(FsErrc::InvalidPath, std::string(path));
    const auto groups = proc.groups();
    NodeId current = index_.at("/");
    std::string walked;
    std::size_t pos = 1;
    while (pos <= path.size() && path != "/") {
      const auto& dir = nodes_[current];
      if (dir.kind != NodeKind::directory) throw FsError(FsErrc::NotFound, walked);
      if (!check_access(proc.uid, groups, dir, Perm::exec)) {
        throw FsError(FsErrc::PermissionDenied, dir.path);
      }
      auto next = path.find('/', pos);
      if (next == std::string_view::npos) next = path.size();
      walked = std::string(path.substr(0, next));
      auto it = index_.find(walked);
      if (it == index_.end()) throw FsError(FsErrc::NotFound, walked);
      current = it->second;
      pos = next + 1;
    }
    const auto& target = nodes_[current];
    if (target.kind == NodeKind::directory) throw FsError(FsErrc::IsDirectory, target.path);
    if (!check_access(proc.uid, groups, target, want)) {
      throw FsError(FsErrc::PermissionDenied, target.path);
    }
    return current;
  }

  std::vector<FileNode> nodes_;
  std::map<std::string, NodeId> index_;
  int next_pid_ = 2;  // pid 1 is the server parent
  bool init_spawned_ = false;
};

}  // namespace hostsim::fs
