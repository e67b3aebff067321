#pragma once

// Simulated multi-tenant web server: a root parent that opens the logs at
// boot, workers forked per execution model, vhost routing, script execution,
// and one log record per handled request written through the parent's fd.

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hostsim/attack_scripts.hpp"
#include "hostsim/fsmodel.hpp"
#include "hostsim/logformat.hpp"

namespace hostsim::server {

enum class ExecutionModel { ModuleInterpreter, CgiPerRequest, SuexecCgi, PeruserWorkers, ItkWorkers };
enum class FdExposure { ServingVhostOnly, AllOpenLogs };
enum class LogPolicyKind { SharedSingleFile, PerVHost };

inline constexpr std::array<ExecutionModel, 5> kAllExecutionModels = {
    ExecutionModel::ModuleInterpreter, ExecutionModel::CgiPerRequest, ExecutionModel::SuexecCgi,
    ExecutionModel::PeruserWorkers, ExecutionModel::ItkWorkers};

inline std::string_view to_string(ExecutionModel m) {
  switch (m) {
    case ExecutionModel::ModuleInterpreter: return "module_interpreter";
    case ExecutionModel::CgiPerRequest: return "cgi_per_request";
    case ExecutionModel::SuexecCgi: return "suexec_cgi";
    case ExecutionModel::PeruserWorkers: return "peruser_workers";
    case ExecutionModel::ItkWorkers: return "itk_workers";
  }
  return "?";
}

inline std::string_view to_string(FdExposure e) {
  return e == FdExposure::ServingVhostOnly ? "serving_vhost_only" : "all_open_logs";
}

inline std::string_view to_string(LogPolicyKind k) {
  return k == LogPolicyKind::SharedSingleFile ? "shared" : "per_vhost";
}

// Workers inherit the parent's descriptors under these models.
inline bool inherits_fds(ExecutionModel m) {
  return m == ExecutionModel::ModuleInterpreter || m == ExecutionModel::PeruserWorkers ||
         m == ExecutionModel::ItkWorkers;
}

// Workers run as the shared web-server account under these models.
inline bool runs_as_shared_user(ExecutionModel m) {
  return m == ExecutionModel::ModuleInterpreter || m == ExecutionModel::CgiPerRequest;
}

inline const fs::UserId kWorkerUser{"www-data"};
inline const fs::GroupId kWorkerGroup{"www-data"};

struct LogPolicy {
  LogPolicyKind kind = LogPolicyKind::SharedSingleFile;
  std::string shared_path = "/var/log/webserver/access_log";
  bool operator==(const LogPolicy&) const = default;
};

struct StaticResponse {
  int status = 200;
  std::uint64_t size = 0;
  bool operator==(const StaticResponse&) const = default;
};

enum class ScriptAttack { Poison, Snoop };

struct AttackScript {
  ScriptAttack attack = ScriptAttack::Poison;
  std::string payload;         // Poison
  std::string known_log_path;  // Snoop
  bool operator==(const AttackScript&) const = default;
};

// Includes whatever path the named query parameter carries.
struct LfiVulnerable {
  std::string param = "page";
  bool operator==(const LfiVulnerable&) const = default;
};

using ScriptBehavior = std::variant<StaticResponse, AttackScript, LfiVulnerable>;

struct VHost {
  std::string domain;
  std::string docroot;
  fs::UserId owner;
  fs::GroupId owner_group;
  std::map<std::string, ScriptBehavior> scripts;
  std::string log_dir;

  [[nodiscard]] std::string log_path() const { return log_dir + "/access_log"; }
  bool operator==(const VHost&) const = default;
};

// One directory the world builder materializes before boot.
struct DirSpec {
  std::string path;
  fs::UserId owner;
  fs::GroupId group;
  fs::Mode mode;
  bool operator==(const DirSpec&) const = default;
};

struct ServerConfig {
  std::vector<VHost> vhosts;
  LogPolicy log_policy;
  fs::Mode log_mode_bits{0644};
  ExecutionModel execution_model = ExecutionModel::ModuleInterpreter;
  FdExposure fd_exposure = FdExposure::ServingVhostOnly;
  std::vector<DirSpec> layout;

  [[nodiscard]] const VHost* find_vhost(std::string_view domain) const {
    for (const auto& v : vhosts) {
      if (v.domain == domain) return &v;
    }
    return nullptr;
  }

  // Log file that records requests served by `v`.
  [[nodiscard]] std::string log_path_for(const VHost& v) const {
    return log_policy.kind == LogPolicyKind::SharedSingleFile ? log_policy.shared_path
                                                              : v.log_path();
  }

  // Distinct log files in boot order.
  [[nodiscard]] std::vector<std::string> log_paths() const {
    std::vector<std::string> out;
    for (const auto& v : vhosts) {
      auto p = log_path_for(v);
      if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
    }
    return out;
  }

  bool operator==(const ServerConfig&) const = default;
};

class BadConfig : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownVhost : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void validate(const ServerConfig& c) {
  if (c.vhosts.empty()) throw BadConfig("at least one vhost is required");
  std::set<std::string> domains;
  for (const auto& v : c.vhosts) {
    if (!log::is_domain_name(v.domain)) throw BadConfig("invalid domain '" + v.domain + "'");
    if (!domains.insert(v.domain).second) throw BadConfig("duplicate vhost domain '" + v.domain + "'");
    if (!fs::is_normalized(v.docroot)) throw BadConfig(v.domain + ": docroot must be absolute and normalized");
    if (v.owner.name.empty() || v.owner_group.name.empty()) throw BadConfig(v.domain + ": owner and owner_group are required");
    if (c.log_policy.kind == LogPolicyKind::PerVHost) {
      if (!fs::is_normalized(v.log_dir) || v.log_dir == "/") {
        throw BadConfig(v.domain + ": log_dir must be absolute and normalized");
      }
      if (v.log_dir == v.docroot) throw BadConfig(v.domain + ": docroot and log_dir must differ");
    }
    for (const auto& [path, behavior] : v.scripts) {
      if (path.empty() || path.front() != '/') throw BadConfig(v.domain + ": script path '" + path + "' must begin with '/'");
      if (auto* s = std::get_if<StaticResponse>(&behavior); s && (s->status < 100 || s->status > 599)) {
        throw BadConfig(v.domain + ": status outside 100-599 for " + path);
      }
    }
  }
  if (c.log_policy.kind == LogPolicyKind::SharedSingleFile) {
    if (!fs::is_normalized(c.log_policy.shared_path) || c.log_policy.shared_path == "/") {
      throw BadConfig("shared log path must be absolute and normalized");
    }
  } else {
    std::set<std::string> dirs;
    for (const auto& v : c.vhosts) {
      if (!dirs.insert(v.log_dir).second) throw BadConfig("log_dir '" + v.log_dir + "' used by two vhosts");
    }
  }
  for (const auto& d : c.layout) {
    if (!fs::is_normalized(d.path)) throw BadConfig("layout path '" + d.path + "' must be absolute and normalized");
  }
}

// Builds the directory tree a config assumes: /dev/null for the daemon's
// stdio, declared layout entries (shallowest first), then any docroot or log
// directory still missing.
inline void materialize(const ServerConfig& c, fs::Kernel& kernel) {
  using fs::Mode;
  using fs::NodeKind;
  if (!kernel.exists("/dev/null")) {
    kernel.create_with_parents("/dev/null", NodeKind::regular, fs::kRootUser, fs::kRootGroup, Mode(0666));
  }
  auto layout = c.layout;
  std::stable_sort(layout.begin(), layout.end(), [](const DirSpec& a, const DirSpec& b) {
    return fs::ancestors(a.path).size() < fs::ancestors(b.path).size();
  });
  for (const auto& d : layout) {
    if (kernel.exists(d.path)) {
      kernel.set_attributes(d.path, d.owner, d.group, d.mode);
    } else {
      kernel.create_with_parents(d.path, NodeKind::directory, d.owner, d.group, d.mode);
    }
  }
  for (const auto& v : c.vhosts) {
    if (!kernel.exists(v.docroot)) {
      kernel.create_with_parents(v.docroot, NodeKind::directory, v.owner, kWorkerGroup, Mode(0750));
    }
  }
  if (c.log_policy.kind == LogPolicyKind::SharedSingleFile) {
    auto dir = fs::parent_path(c.log_policy.shared_path);
    if (dir && !kernel.exists(*dir)) {
      kernel.create_with_parents(*dir, NodeKind::directory, fs::kRootUser, fs::kRootGroup, Mode(0755));
    }
  } else {
    for (const auto& v : c.vhosts) {
      if (!kernel.exists(v.log_dir)) {
        kernel.create_with_parents(v.log_dir, NodeKind::directory, v.owner, v.owner_group, Mode(0750));
      }
    }
  }
}

struct Request {
  std::string client_ip;
  std::string host;
  log::Method method = log::Method::Get;
  std::string path;
  std::string query;
  std::uint64_t timestamp = 0;
  bool operator==(const Request&) const = default;
};

struct Response {
  int status = 200;
  std::uint64_t size = 0;
  std::vector<std::string> executed_markers;
  std::optional<attacks::AttackOutcome> outcome;  // set for attack scripts
  std::optional<std::string> include_denied;      // set when an LFI include failed
  std::string served_vhost;
  int worker_pid = 0;
  fs::UserId worker_uid;
};

// Value of the first `name=` pair in a query string.
inline std::optional<std::string> query_param(std::string_view query, std::string_view name) {
  std::size_t i = 0;
  while (i <= query.size()) {
    auto j = query.find('&', i);
    if (j == std::string_view::npos) j = query.size();
    auto pair = query.substr(i, j - i);
    if (auto eq = pair.find('='); eq != std::string_view::npos && pair.substr(0, eq) == name) {
      return std::string(pair.substr(eq + 1));
    }
    if (j == query.size()) break;
    i = j + 1;
  }
  return std::nullopt;
}

class ServerRuntime {
 public:
  // The parent (pid 1, root) path-opens every log WriteAppend, creating
  // missing files with log_mode_bits. Shared logs are root:root; per-vhost
  // logs belong to the tenant. fds 0-2 are the parent's stdio on /dev/null.
  static ServerRuntime boot(ServerConfig config, fs::Kernel kernel) {
    validate(config);
    ServerRuntime rt(std::move(config), std::move(kernel));
    auto& k = rt.kernel_;
    if (!k.exists("/dev/null")) {
      k.create_with_parents("/dev/null", fs::NodeKind::regular, fs::kRootUser, fs::kRootGroup, fs::Mode(0666));
    }
    k.open(rt.parent_, "/dev/null", fs::Access::ReadOnly);
    k.open(rt.parent_, "/dev/null", fs::Access::WriteAppend);
    k.open(rt.parent_, "/dev/null", fs::Access::WriteAppend);

    std::map<std::string, int> by_path;
    for (const auto& v : rt.config_.vhosts) {
      const auto path = rt.config_.log_path_for(v);
      auto it = by_path.find(path);
      if (it == by_path.end()) {
        if (!k.exists(path)) {
          const bool shared = rt.config_.log_policy.kind == LogPolicyKind::SharedSingleFile;
          k.create_node(path, fs::NodeKind::regular, shared ? fs::kRootUser : v.owner,
                        shared ? fs::kRootGroup : v.owner_group, rt.config_.log_mode_bits);
        }
        const int fd = k.open(rt.parent_, path, fs::Access::WriteAppend);
        it = by_path.emplace(path, fd).first;
      }
      rt.log_fds_[v.domain] = it->second;
    }
    return rt;
  }

  // Convenience: materialize the config's layout into a fresh kernel, then boot.
  static ServerRuntime boot_world(const ServerConfig& config) {
    validate(config);
    fs::Kernel k;
    materialize(config, k);
    return boot(config, std::move(k));
  }

  [[nodiscard]] const ServerConfig& config() const { return config_; }
  [[nodiscard]] const fs::Kernel& kernel() const { return kernel_; }
  fs::Kernel& kernel() { return kernel_; }
  [[nodiscard]] const fs::ProcessCtx& parent() const { return parent_; }
  [[nodiscard]] const std::map<std::string, int>& log_fds() const { return log_fds_; }

  [[nodiscard]] int log_fd_for(std::string_view domain) const {
    auto it = log_fds_.find(std::string(domain));
    if (it == log_fds_.end()) throw UnknownVhost(std::string(domain));
    return it->second;
  }

  // The process that would serve a request for `domain` right now. Peruser
  // workers are pooled per vhost; every other model forks afresh.
  fs::ProcessCtx worker_context(std::string_view domain) {
    const VHost* v = config_.find_vhost(domain);
    if (!v) throw UnknownVhost(std::string(domain));
    if (config_.execution_model == ExecutionModel::PeruserWorkers) {
      auto it = pool_.find(v->domain);
      if (it != pool_.end()) return it->second;
    }
    return fork_worker(*v);
  }

  Response handle_request(const Request& req) {
    const VHost* v = config_.find_vhost(req.host);
    if (!v) v = &config_.vhosts.front();

    fs::ProcessCtx worker = acquire(*v);
    Response resp;
    resp.served_vhost = v->domain;
    resp.worker_pid = worker.pid;
    resp.worker_uid = worker.uid;

    auto script = v->scripts.find(req.path);
    if (script == v->scripts.end()) {
      resp.status = 404;
    } else {
      execute(script->second, *v, req, worker, resp);
    }
    release(*v, std::move(worker));

    log::LogRecord rec{v->domain, req.client_ip, req.timestamp, req.method,
                       req.path,  req.query,     resp.status,   resp.size};
    if (auto why = log::validate(rec)) {
      throw std::logic_error("request cannot be logged: " + *why);
    }
    kernel_.write(parent_, log_fd_for(v->domain), log::format_record(rec) + "\n");
    last_timestamp_ = std::max(last_timestamp_, req.timestamp);
    return resp;
  }

  std::vector<Response> run_trace(std::span<const Request> trace) {
    std::vector<Response> out;
    out.reserve(trace.size());
    for (const auto& r : trace) out.push_back(handle_request(r));
    return out;
  }

  [[nodiscard]] std::uint64_t last_timestamp() const { return last_timestamp_; }

  // Omniscient read for reports and oracles; attacks never use this.
  [[nodiscard]] std::string read_as_root(std::string_view path) const {
    const auto* node = kernel_.find(path);
    return node ? node->content : std::string();
  }

 private:
  ServerRuntime(ServerConfig config, fs::Kernel kernel)
      : config_(std::move(config)), kernel_(std::move(kernel)), parent_(kernel_.init_process()) {}

  fs::ProcessCtx fork_worker(const VHost& v) {
    const auto model = config_.execution_model;
    const bool shared_user = runs_as_shared_user(model);
    fs::ProcessCtx child = kernel_.fork(parent_, shared_user ? kWorkerUser : v.owner,
                                        shared_user ? kWorkerGroup : v.owner_group,
                                        inherits_fds(model));
    if (!child.fd_table.empty()) {
      // Workers only keep log descriptors; stdio is not handed to scripts.
      std::set<int> keep;
      if (config_.fd_exposure == FdExposure::ServingVhostOnly) {
        keep.insert(log_fd_for(v.domain));
      } else {
        for (const auto& [domain, fd] : log_fds_) keep.insert(fd);
      }
      std::erase_if(child.fd_table, [&](const auto& kv) { return !keep.contains(kv.first); });
    }
    return child;
  }

  fs::ProcessCtx acquire(const VHost& v) {
    if (config_.execution_model == ExecutionModel::PeruserWorkers) {
      auto it = pool_.find(v.domain);
      if (it == pool_.end()) it = pool_.emplace(v.domain, fork_worker(v)).first;
      return it->second;
    }
    return fork_worker(v);
  }

  void release(const VHost& v, fs::ProcessCtx worker) {
    if (config_.execution_model == ExecutionModel::PeruserWorkers) {
      pool_.insert_or_assign(v.domain, std::move(worker));
    }
    // Other models: the context ends with the request.
  }

  void execute(const ScriptBehavior& behavior, const VHost& v, const Request& req, fs::ProcessCtx& worker,
               Response& resp) {
    if (auto* s = std::get_if<StaticResponse>(&behavior)) {
      resp.status = s->status;
      resp.size = s->size;
    } else if (auto* a = std::get_if<AttackScript>(&behavior)) {
      resp.outcome = a->attack == ScriptAttack::Poison
                         ? attacks::log_poison(kernel_, worker, a->payload)
                         : attacks::log_snoop(kernel_, worker, a->known_log_path);
      resp.status = resp.outcome->success ? 200 : 500;
    } else if (auto* lfi = std::get_if<LfiVulnerable>(&behavior)) {
      auto target = query_param(req.query, lfi->param);
      if (!target) {
        resp.status = 200;
        return;
      }
      auto result = attacks::include_and_execute(kernel_, worker, *target, v.docroot);
      resp.executed_markers = std::move(result.markers);
      resp.include_denied = std::move(result.denied);
      resp.status = resp.include_denied ? 500 : 200;
    }
  }

  ServerConfig config_;
  fs::Kernel kernel_;
  fs::ProcessCtx parent_;
  std::map<std::string, int> log_fds_;
  std::map<std::string, fs::ProcessCtx> pool_;
  std::uint64_t last_timestamp_ = 0;
};

}  // namespace hostsim::server
