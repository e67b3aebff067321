#include "hostsim/hardening.hpp"

#include <gtest/gtest.h>

#include "hostsim/attacks.hpp"

namespace {

using namespace hostsim::hardening;
namespace fs = hostsim::fs;
namespace sv = hostsim::server;

sv::ServerConfig base() { return hostsim::attacks::matrix_base_config(); }

std::vector<FindingCode> codes(const std::vector<Finding>& fs) {
  std::vector<FindingCode> out;
  for (const auto& f : fs) out.push_back(f.code);
  return out;
}

TEST(Findings, FixedSeverityAndRemedy) {
  for (auto c : {FindingCode::SHARED_LOG_FILE, FindingCode::LOG_WORLD_READABLE,
                 FindingCode::MODULE_WITH_INHERITED_LOG_FD, FindingCode::ALL_LOGS_EXPOSED_TO_WORKERS,
                 FindingCode::LOG_DIR_TRAVERSABLE_BY_OTHERS, FindingCode::SHARED_WORKER_IDENTITY}) {
    const auto f = make_finding(c, "x");
    EXPECT_EQ(f.severity, severity_of(c));
    EXPECT_FALSE(f.remedy.empty());
  }
  EXPECT_EQ(severity_of(FindingCode::SHARED_LOG_FILE), Severity::high);
  EXPECT_EQ(severity_of(FindingCode::ALL_LOGS_EXPOSED_TO_WORKERS), Severity::medium);
  EXPECT_EQ(severity_of(FindingCode::SHARED_WORKER_IDENTITY), Severity::low);
}

// The six directory rows of the per-tenant layout.
TEST(LogSeparation, ProducesTenantOnlyDirectories) {
  const auto c = apply_log_separation(base());
  EXPECT_EQ(c.log_policy.kind, sv::LogPolicyKind::PerVHost);
  EXPECT_EQ(c.log_mode_bits.symbolic(), "rw-r-----");
  EXPECT_EQ(c.vhosts[0].log_dir, "/home/website1/log");
  EXPECT_EQ(c.vhosts[1].docroot, "/home/website2/public_html");

  auto rt = sv::ServerRuntime::boot_world(c);
  struct Row {
    const char* path;
    const char* owner;
  };
  for (auto [path, owner] : {Row{"/home/website1", "web1"}, Row{"/home/website1/public_html", "web1"},
                             Row{"/home/website1/log", "web1"}, Row{"/home/website2", "web2"},
                             Row{"/home/website2/public_html", "web2"}, Row{"/home/website2/log", "web2"}}) {
    const auto* n = rt.kernel().find(path);
    ASSERT_NE(n, nullptr) << path;
    EXPECT_EQ(n->kind, fs::NodeKind::directory);
    EXPECT_EQ(n->owner, fs::UserId{owner});
    EXPECT_EQ(n->group, fs::GroupId{owner});
    EXPECT_EQ(n->mode.symbolic(), "rwxr-x---") << path;
  }
  for (const char* log : {"/home/website1/log/access_log", "/home/website2/log/access_log"}) {
    const auto* n = rt.kernel().find(log);
    ASSERT_NE(n, nullptr);
    EXPECT_EQ(n->mode.symbolic(), "rw-r-----");
  }
}

TEST(LogSeparation, Idempotent) {
  const auto once = apply_log_separation(base());
  EXPECT_EQ(apply_log_separation(once), once);
}

TEST(LogSeparation, RejectsInvalidConfig) {
  auto c = base();
  c.vhosts.clear();
  EXPECT_THROW(apply_log_separation(c), sv::BadConfig);
}

TEST(Audit, DefaultConfigFlagsEverything) {
  const auto f = audit(base());
  EXPECT_EQ(codes(f), (std::vector<FindingCode>{FindingCode::LOG_WORLD_READABLE,
                                                FindingCode::MODULE_WITH_INHERITED_LOG_FD,
                                                FindingCode::SHARED_LOG_FILE, FindingCode::SHARED_WORKER_IDENTITY}));
  EXPECT_EQ(f[0].subject, "/var/log/webserver/access_log");
  EXPECT_TRUE(has_high_severity(f));
}

TEST(Audit, HardenedConfigKeepsOnlyIdentityNote) {
  const auto f = audit(apply_log_separation(base()));
  EXPECT_EQ(codes(f), std::vector<FindingCode>{FindingCode::SHARED_WORKER_IDENTITY});
  EXPECT_FALSE(has_high_severity(f));
  EXPECT_TRUE(audit(apply_execution_model(apply_log_separation(base()), sv::ExecutionModel::ItkWorkers)).empty());
}

TEST(Audit, AllOpenLogsIsResidualRisk) {
  auto c = apply_execution_model(apply_log_separation(base()), sv::ExecutionModel::PeruserWorkers);
  c.fd_exposure = sv::FdExposure::AllOpenLogs;
  const auto f = audit(c);
  EXPECT_NE(std::find(f.begin(), f.end(), make_finding(FindingCode::ALL_LOGS_EXPOSED_TO_WORKERS, "fd_exposure")),
            f.end());
  // Each worker also holds the other tenant's log.
  EXPECT_EQ(std::count_if(f.begin(), f.end(),
                          [](const Finding& x) { return x.code == FindingCode::MODULE_WITH_INHERITED_LOG_FD; }),
            2);
}

TEST(Audit, CgiOnSharedLogHasNoDescriptorFinding) {
  auto c = apply_execution_model(base(), sv::ExecutionModel::CgiPerRequest);
  c.log_mode_bits = fs::Mode(0640);
  EXPECT_EQ(codes(audit(c)),
            (std::vector<FindingCode>{FindingCode::SHARED_LOG_FILE, FindingCode::SHARED_WORKER_IDENTITY}));
}

TEST(Audit, TraversableLogDirectory) {
  auto c = apply_log_separation(base());
  for (auto& d : c.layout) {
    if (d.path == "/home/website2") d.mode = fs::Mode(0755);
    if (d.path == "/home/website2/log") d.mode = fs::Mode(0755);
  }
  const auto f = audit(c);
  EXPECT_NE(std::find(f.begin(), f.end(), make_finding(FindingCode::LOG_DIR_TRAVERSABLE_BY_OTHERS, "/home/website2/log")),
            f.end());
  // Only one of the two directories is open.
  EXPECT_EQ(std::count_if(f.begin(), f.end(),
                          [](const Finding& x) { return x.code == FindingCode::LOG_DIR_TRAVERSABLE_BY_OTHERS; }),
            1);
}

TEST(Audit, SortedHighToLowAndDeterministic) {
  auto c = base();
  c.log_mode_bits = fs::Mode(0666);
  const auto f = audit(c);
  for (std::size_t i = 1; i < f.size(); ++i) {
    EXPECT_GE(static_cast<int>(f[i - 1].severity), static_cast<int>(f[i].severity));
  }
  EXPECT_EQ(audit(c), f);
}

TEST(Audit, FdLimitNoteForManyTenants) {
  auto c = apply_log_separation(base());
  EXPECT_TRUE(audit_notes(c).empty());
  EXPECT_EQ(audit_notes(c, 1).size(), 1u);
}

}  // namespace
