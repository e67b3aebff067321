#include "hostsim/server.hpp"

#include <gtest/gtest.h>

#include "hostsim/attacks.hpp"

namespace {

using namespace hostsim::server;
namespace fs = hostsim::fs;
namespace hl = hostsim::log;

ServerConfig two_tenants(ExecutionModel model = ExecutionModel::ModuleInterpreter) {
  auto c = hostsim::attacks::matrix_base_config();
  c.execution_model = model;
  return c;
}

Request get(std::string host, std::string path, std::uint64_t t = 0, std::string query = {}) {
  return {"192.0.2.1", std::move(host), hl::Method::Get, std::move(path), std::move(query), t};
}

TEST(Boot, StdioThenSharedLogAtFd3) {
  auto rt = ServerRuntime::boot_world(two_tenants());
  const auto fds = rt.kernel().list_fds(rt.parent());
  ASSERT_EQ(fds.size(), 4u);
  EXPECT_EQ(fds[0].path, "/dev/null");
  EXPECT_EQ(fds[3].path, "/var/log/webserver/access_log");
  EXPECT_EQ(rt.log_fd_for("site1.example"), 3);
  EXPECT_EQ(rt.log_fd_for("site2.example"), 3);
  const auto* log = rt.kernel().find("/var/log/webserver/access_log");
  ASSERT_NE(log, nullptr);
  EXPECT_EQ(log->owner, fs::kRootUser);
  EXPECT_EQ(log->mode, fs::Mode(0644));
}

TEST(Boot, PerVhostLogsInVhostOrderOwnedByTenant) {
  auto c = hostsim::hardening::apply_log_separation(two_tenants());
  auto rt = ServerRuntime::boot_world(c);
  EXPECT_EQ(rt.log_fd_for("site1.example"), 3);
  EXPECT_EQ(rt.log_fd_for("site2.example"), 4);
  const auto* log = rt.kernel().find("/home/website2/log/access_log");
  ASSERT_NE(log, nullptr);
  EXPECT_EQ(log->owner, fs::UserId{"web2"});
  EXPECT_EQ(log->mode.symbolic(), "rw-r-----");
}

TEST(Boot, RejectsBadConfigs) {
  auto c = two_tenants();
  c.vhosts[1].domain = c.vhosts[0].domain;
  EXPECT_THROW(ServerRuntime::boot_world(c), BadConfig);
  c = two_tenants();
  c.vhosts.clear();
  EXPECT_THROW(ServerRuntime::boot_world(c), BadConfig);
  c = hostsim::hardening::apply_log_separation(two_tenants());
  c.vhosts[1].log_dir = c.vhosts[0].log_dir;
  EXPECT_THROW(ServerRuntime::boot_world(c), BadConfig);
}

TEST(Request, LogsOneCanonicalLinePerRequest) {
  auto rt = ServerRuntime::boot_world(two_tenants());
  rt.handle_request(get("site1.example", "/index.html", 5));
  auto r = rt.handle_request(get("site2.example", "/missing", 6));
  EXPECT_EQ(r.status, 404);
  const auto content = rt.read_as_root("/var/log/webserver/access_log");
  EXPECT_EQ(content,
            "site1.example 192.0.2.1 - - [01/Oct/2012:00:00:05 +0000] \"GET /index.html HTTP/1.1\" 200 1024\n"
            "site2.example 192.0.2.1 - - [01/Oct/2012:00:00:06 +0000] \"GET /missing HTTP/1.1\" 404 0\n");
  EXPECT_EQ(rt.last_timestamp(), 6u);
}

TEST(Request, UnknownHostFallsBackToFirstVhost) {
  auto rt = ServerRuntime::boot_world(two_tenants());
  auto r = rt.handle_request(get("nowhere.example", "/", 1));
  EXPECT_EQ(r.served_vhost, "site1.example");
  EXPECT_NE(rt.read_as_root("/var/log/webserver/access_log").find("site1.example "), std::string::npos);
}

TEST(Request, UnloggableRequestIsAnInternalError) {
  auto rt = ServerRuntime::boot_world(two_tenants());
  EXPECT_THROW(rt.handle_request(get("site1.example", "/a b", 1)), std::logic_error);
}

struct IdentityCase {
  ExecutionModel model;
  const char* site1_uid;
  bool inherits;
};

class WorkerIdentity : public ::testing::TestWithParam<IdentityCase> {};

TEST_P(WorkerIdentity, UidAndDescriptors) {
  const auto& p = GetParam();
  auto rt = ServerRuntime::boot_world(two_tenants(p.model));
  auto w = rt.worker_context("site1.example");
  EXPECT_EQ(w.uid, fs::UserId{p.site1_uid});
  EXPECT_EQ(w.fd_table.contains(3), p.inherits);
  // stdio never reaches scripts
  EXPECT_FALSE(w.fd_table.contains(0));
  auto r = rt.handle_request(get("site2.example", "/", 1));
  const bool per_owner = p.model != ExecutionModel::ModuleInterpreter && p.model != ExecutionModel::CgiPerRequest;
  EXPECT_EQ(r.worker_uid, per_owner ? fs::UserId{"web2"} : kWorkerUser);
}

INSTANTIATE_TEST_SUITE_P(AllModels, WorkerIdentity,
                         ::testing::Values(IdentityCase{ExecutionModel::ModuleInterpreter, "www-data", true},
                                           IdentityCase{ExecutionModel::CgiPerRequest, "www-data", false},
                                           IdentityCase{ExecutionModel::SuexecCgi, "web1", false},
                                           IdentityCase{ExecutionModel::PeruserWorkers, "web1", true},
                                           IdentityCase{ExecutionModel::ItkWorkers, "web1", true}));

TEST(Workers, PeruserPoolsAndItkForks) {
  auto peruser = ServerRuntime::boot_world(two_tenants(ExecutionModel::PeruserWorkers));
  auto a = peruser.handle_request(get("site1.example", "/", 1));
  auto b = peruser.handle_request(get("site1.example", "/", 2));
  auto other = peruser.handle_request(get("site2.example", "/", 3));
  EXPECT_EQ(a.worker_pid, b.worker_pid);
  EXPECT_NE(a.worker_pid, other.worker_pid);

  auto itk = ServerRuntime::boot_world(two_tenants(ExecutionModel::ItkWorkers));
  auto c = itk.handle_request(get("site1.example", "/", 1));
  auto d = itk.handle_request(get("site1.example", "/", 2));
  EXPECT_NE(c.worker_pid, d.worker_pid);
}

TEST(Workers, ExposureControlsWhichLogsAWorkerHolds) {
  auto c = hostsim::hardening::apply_log_separation(two_tenants(ExecutionModel::ItkWorkers));
  auto only = ServerRuntime::boot_world(c);
  auto w = only.worker_context("site2.example");
  EXPECT_EQ(w.fd_table.size(), 1u);
  EXPECT_TRUE(w.fd_table.contains(4));

  c.fd_exposure = FdExposure::AllOpenLogs;
  auto all = ServerRuntime::boot_world(c);
  auto w2 = all.worker_context("site2.example");
  EXPECT_EQ(w2.fd_table.size(), 2u);
  EXPECT_TRUE(w2.fd_table.contains(3));
}

TEST(Lfi, IncludesRelativeToDocrootAndReportsDenial) {
  auto c = two_tenants();
  auto rt = ServerRuntime::boot_world(c);
  rt.kernel().create_node("/var/www/site1/page.txt", fs::NodeKind::regular, fs::UserId{"web1"},
                          fs::GroupId{"www-data"}, fs::Mode(0640));
  rt.kernel().create_node("/secret", fs::NodeKind::regular, fs::kRootUser, fs::kRootGroup, fs::Mode(0600));
  auto owner = rt.kernel().spawn(fs::UserId{"web1"}, fs::GroupId{"web1"});
  const int fd = rt.kernel().open(owner, "/var/www/site1/page.txt", fs::Access::WriteAppend);
  rt.kernel().write(owner, fd, "hello {{EXEC:inc}}");

  auto ok = rt.handle_request(get("site1.example", "/view.php", 1, "page=page.txt"));
  EXPECT_EQ(ok.status, 200);
  EXPECT_EQ(ok.executed_markers, std::vector<std::string>{"inc"});

  auto denied = rt.handle_request(get("site1.example", "/view.php", 2, "page=/secret"));
  EXPECT_EQ(denied.status, 500);
  ASSERT_TRUE(denied.include_denied.has_value());
  EXPECT_NE(denied.include_denied->find("/secret"), std::string::npos);

  auto none = rt.handle_request(get("site1.example", "/view.php", 3));
  EXPECT_EQ(none.status, 200);
  EXPECT_TRUE(none.executed_markers.empty());
}

TEST(QueryParam, FirstMatchOnly) {
  EXPECT_EQ(query_param("a=1&page=x&page=y", "page"), "x");
  EXPECT_EQ(query_param("pages=1", "page"), std::nullopt);
  EXPECT_EQ(query_param("page=", "page"), "");
  EXPECT_EQ(query_param("", "page"), std::nullopt);
}

}  // namespace
