#pragma once

// Access-log records: serialization, parsing, and the analyses an attacker
// runs over a log they managed to read (site tree, co-hosted domains,
// credentials leaked through GET parameters).
//
// Line grammar (one record per '\n'-terminated line):
//
//   <vhost> <client_ip> - - [DD/Mon/YYYY:HH:MM:SS +0000] "<METHOD> <path>[?<query>] HTTP/1.1" <status> <size>
//
// Timestamps are seconds since 01/Oct/2012:00:00:00 +0000.

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace hostsim::log {

enum class Method { Get, Post };

inline std::string_view to_string(Method m) { return m == Method::Get ? "GET" : "POST"; }

inline std::optional<Method> parse_method(std::string_view s) {
  if (s == "GET") return Method::Get;
  if (s == "POST") return Method::Post;
  return std::nullopt;
}

struct LogRecord {
  std::string vhost;
  std::string client_ip;
  std::uint64_t timestamp = 0;
  Method method = Method::Get;
  std::string path;
  std::string query;
  int status = 200;
  std::uint64_t size = 0;

  bool operator==(const LogRecord&) const = default;
};

namespace detail {

inline constexpr std::array<std::string_view, 12> kMonths = {
    "Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};

inline constexpr std::chrono::sys_days epoch_day() {
  using namespace std::chrono;
  return sys_days{year{2012} / October / 1};
}

// First second that would need a five-digit year.
inline std::uint64_t timestamp_limit() {
  using namespace std::chrono;
  return static_cast<std::uint64_t>(
      (sys_days{year{10000} / January / 1} - epoch_day()).count() * 86400LL);
}

inline bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Canonical unsigned decimal: no sign, no leading zeros except "0" itself.
inline std::optional<std::uint64_t> parse_canonical_uint(std::string_view s) {
  if (s.empty() || (s.size() > 1 && s.front() == '0')) return std::nullopt;
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline bool fixed_digits(std::string_view s, std::size_t n, int& out) {
  if (s.size() != n) return false;
  out = 0;
  for (char c : s) {
    if (!is_digit(c)) return false;
    out = out * 10 + (c - '0');
  }
  return true;
}

inline bool valid_token_char(char c) {
  return c > ' ' && c != '"' && c != 0x7f;
}

}  // namespace detail

inline bool is_domain_name(std::string_view s) {
  if (s.empty() || s.size() > 253) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-';
  });
}

inline bool is_dotted_quad(std::string_view s) {
  int parts = 0;
  std::size_t i = 0;
  while (i <= s.size()) {
    auto j = s.find('.', i);
    if (j == std::string_view::npos) j = s.size();
    auto octet = detail::parse_canonical_uint(s.substr(i, j - i));
    if (!octet || *octet > 255 || j - i > 3) return false;
    ++parts;
    i = j + 1;
    if (j == s.size()) break;
  }
  return parts == 4 && s.back() != '.';
}

// Reason a record falls outside the grammar's image, or nullopt when valid.
inline std::optional<std::string> validate(const LogRecord& r) {
  if (!is_domain_name(r.vhost)) return "vhost is not a domain name";
  if (!is_dotted_quad(r.client_ip)) return "client_ip is not a dotted quad";
  if (r.timestamp >= detail::timestamp_limit()) return "timestamp out of range";
  if (r.path.empty() || r.path.front() != '/') return "path must begin with '/'";
  auto bad = [](std::string_view s) {
    return !std::all_of(s.begin(), s.end(), detail::valid_token_char);
  };
  if (bad(r.path) || r.path.find('?') != std::string::npos) {
    return "path contains whitespace, quote, control or '?' characters";
  }
  if (bad(r.query)) return "query contains whitespace, quote or control characters";
  if (r.status < 100 || r.status > 599) return "status outside 100-599";
  return std::nullopt;
}

inline std::string format_timestamp(std::uint64_t t) {
  using namespace std::chrono;
  const auto day_count = static_cast<long long>(t / 86400);
  const auto secs = t % 86400;
  const year_month_day ymd{detail::epoch_day() + days{day_count}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%02u/%s/%04d:%02u:%02u:%02u +0000", unsigned(ymd.day()),
                detail::kMonths[unsigned(ymd.month()) - 1].data(), int(ymd.year()),
                unsigned(secs / 3600), unsigned(secs / 60 % 60), unsigned(secs % 60));
  return buf;
}

// Inverse of format_timestamp on its image.
inline std::optional<std::uint64_t> parse_timestamp(std::string_view s) {
  using namespace std::chrono;
  // DD/Mon/YYYY:HH:MM:SS +0000
  if (s.size() != 26 || s[2] != '/' || s[6] != '/' || s[11] != ':' || s[14] != ':' ||
      s[17] != ':' || s.substr(20) != " +0000") {
    return std::nullopt;
  }
  int dd, yyyy, hh, mm, ss;
  if (!detail::fixed_digits(s.substr(0, 2), 2, dd) ||
      !detail::fixed_digits(s.substr(7, 4), 4, yyyy) ||
      !detail::fixed_digits(s.substr(12, 2), 2, hh) ||
      !detail::fixed_digits(s.substr(15, 2), 2, mm) ||
      !detail::fixed_digits(s.substr(18, 2), 2, ss)) {
    return std::nullopt;
  }
  auto mon = std::find(detail::kMonths.begin(), detail::kMonths.end(), s.substr(3, 3));
  if (mon == detail::kMonths.end()) return std::nullopt;
  const year_month_day ymd{year{yyyy}, month{unsigned(mon - detail::kMonths.begin()) + 1},
                           day{unsigned(dd)}};
  if (!ymd.ok() || hh > 23 || mm > 59 || ss > 59) return std::nullopt;
  const auto delta = (sys_days{ymd} - detail::epoch_day()).count();
  if (delta < 0) return std::nullopt;
  return static_cast<std::uint64_t>(delta) * 86400 + hh * 3600 + mm * 60 + ss;
}

inline std::string format_record(const LogRecord& r) {
  std::string line;
  line.reserve(96 + r.path.size() + r.query.size());
  line += r.vhost;
  line += ' ';
  line += r.client_ip;
  line += " - - [";
  line += format_timestamp(r.timestamp);
  line += "] \"";
  line += to_string(r.method);
  line += ' ';
  line += r.path;
  if (!r.query.empty()) {
    line += '?';
    line += r.query;
  }
  line += " HTTP/1.1\" ";
  line += std::to_string(r.status);
  line += ' ';
  line += std::to_string(r.size);
  return line;
}

// A line outside the grammar: kept verbatim so poisoned logs stay processable.
struct Unparseable {
  std::string raw;
  std::string reason;
  bool operator==(const Unparseable&) const = default;
};

using ParsedLine = std::variant<LogRecord, Unparseable>;

inline ParsedLine parse_line(std::string_view line) {
  auto fail = [&](std::string reason) -> ParsedLine {
    return Unparseable{std::string(line), std::move(reason)};
  };

  // Fixed-position tokens around the bracketed time and the quoted request.
  const auto open_bracket = line.find(" - - [");
  if (open_bracket == std::string_view::npos) return fail("missing identity fields");
  const auto head = line.substr(0, open_bracket);
  const auto sp = head.find(' ');
  if (sp == std::string_view::npos || head.find(' ', sp + 1) != std::string_view::npos) {
    return fail("expected '<vhost> <client_ip>' prefix");
  }
  LogRecord r;
  r.vhost = std::string(head.substr(0, sp));
  r.client_ip = std::string(head.substr(sp + 1));

  auto rest = line.substr(open_bracket + 6);
  const auto close_bracket = rest.find("] \"");
  if (close_bracket == std::string_view::npos) return fail("unterminated time field");
  auto ts = parse_timestamp(rest.substr(0, close_bracket));
  if (!ts) return fail("bad timestamp");
  r.timestamp = *ts;

  rest = rest.substr(close_bracket + 3);
  const auto close_quote = rest.find('"');
  if (close_quote == std::string_view::npos) return fail("unterminated request field");
  const auto request = rest.substr(0, close_quote);
  const auto tail = rest.substr(close_quote + 1);

  // "<METHOD> <target> HTTP/1.1"
  const auto m_end = request.find(' ');
  if (m_end == std::string_view::npos) return fail("request has no target");
  auto method = parse_method(request.substr(0, m_end));
  if (!method) return fail("unknown method");
  r.method = *method;
  const auto t_end = request.find(' ', m_end + 1);
  if (t_end == std::string_view::npos || request.substr(t_end) != " HTTP/1.1") {
    return fail("bad request protocol");
  }
  const auto target = request.substr(m_end + 1, t_end - m_end - 1);
  const auto q = target.find('?');
  r.path = std::string(target.substr(0, q));
  if (q != std::string_view::npos) {
    r.query = std::string(target.substr(q + 1));
    if (r.query.empty()) return fail("empty query after '?'");
  }

  // " <status> <size>"
  if (tail.size() < 2 || tail.front() != ' ') return fail("missing status");
  const auto fields = tail.substr(1);
  const auto s_end = fields.find(' ');
  if (s_end == std::string_view::npos) return fail("missing size");
  auto status = detail::parse_canonical_uint(fields.substr(0, s_end));
  auto size = detail::parse_canonical_uint(fields.substr(s_end + 1));
  if (!status || !size) return fail("non-numeric status or size");
  if (*status > 999) return fail("status outside 100-599");
  r.status = static_cast<int>(*status);
  r.size = *size;

  if (auto why = validate(r)) return fail(*why);
  // Rejects anything the parse accepted but formatting would not reproduce.
  if (format_record(r) != line) return fail("non-canonical spacing");
  return r;
}

// Splits on '\n'; a trailing empty segment (final newline) is not a line.
inline std::vector<std::string_view> split_lines(std::string_view content) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < content.size()) {
    auto j = content.find('\n', i);
    if (j == std::string_view::npos) j = content.size();
    out.push_back(content.substr(i, j - i));
    i = j + 1;
  }
  return out;
}

inline std::vector<ParsedLine> parse_log(std::string_view content) {
  std::vector<ParsedLine> out;
  for (auto line : split_lines(content)) out.push_back(parse_line(line));
  return out;
}

inline std::vector<LogRecord> parseable_records(std::string_view content) {
  std::vector<LogRecord> out;
  for (auto line : split_lines(content)) {
    if (auto parsed = parse_line(line); auto* rec = std::get_if<LogRecord>(&parsed)) {
      out.push_back(std::move(*rec));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Site tree

struct SiteNode {
  std::string name;
  std::map<std::string, SiteNode> children;  // sorted by segment
  std::uint64_t hit_count = 0;

  bool operator==(const SiteNode&) const = default;
};

struct SiteTree {
  SiteNode root{"/", {}, 0};

  // All node paths, root included, in depth-first sorted order.
  [[nodiscard]] std::vector<std::string> node_paths() const {
    std::vector<std::string> out;
    collect(root, "", out);
    return out;
  }

  bool operator==(const SiteTree&) const = default;

 private:
  static void collect(const SiteNode& n, const std::string& prefix, std::vector<std::string>& out) {
    out.push_back(prefix.empty() ? "/" : prefix);
    for (const auto& [name, child] : n.children) collect(child, prefix + "/" + name, out);
  }
};

inline std::vector<std::string_view> path_segments(std::string_view path) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < path.size()) {
    auto j = path.find('/', i);
    if (j == std::string_view::npos) j = path.size();
    if (j > i) out.push_back(path.substr(i, j - i));
    i = j + 1;
  }
  return out;
}

// Prefix closure of the request paths seen for `vhost`. Every node on a
// record's path, root included, counts that record once. Queries are ignored.
inline SiteTree build_site_tree(std::span<const LogRecord> records, std::string_view vhost) {
  SiteTree tree;
  for (const auto& r : records) {
    if (r.vhost != vhost) continue;
    SiteNode* node = &tree.root;
    ++node->hit_count;
    for (auto seg : path_segments(r.path)) {
      auto [it, inserted] = node->children.try_emplace(std::string(seg));
      if (inserted) it->second.name = std::string(seg);
      node = &it->second;
      ++node->hit_count;
    }
  }
  return tree;
}

inline std::vector<std::string> enumerate_vhosts(std::span<const LogRecord> records) {
  std::set<std::string> names;
  for (const auto& r : records) names.insert(r.vhost);
  return {names.begin(), names.end()};
}

// ---------------------------------------------------------------------------
// Credential harvesting

struct Credential {
  std::string vhost;
  std::string path;
  std::string name;
  std::string value;
  bool operator==(const Credential&) const = default;
};

inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

inline std::set<std::string> default_sensitive_names() {
  return {"user",    "username", "login", "pass", "password", "pwd",  "passwd",
          "session", "sessid",   "sid",   "token", "auth",    "key"};
}

// Splits each query on '&', then on the first '='. Pairs without '=' are
// skipped; names match case-insensitively.
inline std::vector<Credential> harvest_credentials(std::span<const LogRecord> records,
                                                   const std::set<std::string>& sensitive_names) {
  std::set<std::string> wanted;
  for (const auto& n : sensitive_names) wanted.insert(ascii_lower(n));

  std::vector<Credential> out;
  for (const auto& r : records) {
    std::string_view q = r.query;
    std::size_t i = 0;
    while (i < q.size()) {
      auto j = q.find('&', i);
      if (j == std::string_view::npos) j = q.size();
      auto pair = q.substr(i, j - i);
      if (auto eq = pair.find('='); eq != std::string_view::npos) {
        auto name = pair.substr(0, eq);
        if (wanted.contains(ascii_lower(name))) {
          out.push_back({r.vhost, r.path, std::string(name), std::string(pair.substr(eq + 1))});
        }
      }
      i = j + 1;
    }
  }
  return out;
}

}  // namespace hostsim::log
