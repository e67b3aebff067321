// hostsim: run log-attack scenarios against a simulated shared hosting server.
//
//   hostsim run --config <file> --trace <file> --scenario <name>
//               [--attacker <domain> --victim <domain>] [--format text|json] [--out <file>]
//   hostsim audit --config <file> [--format text|json]
//   hostsim matrix --trace <file> [--format text|json] [--out <file>]
//
// Exit codes: 0 clean run (attack success is a result, not an error),
// 1 input errors, 2 internal invariant violations.

#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "hostsim/hardening.hpp"
#include "hostsim/scenario.hpp"

namespace {

using hostsim::scenario::json;

constexpr int kExitInput = 1;
constexpr int kExitInternal = 2;

// "\n" and "\t" escapes in payload arguments.
std::string unescape(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      switch (s[i + 1]) {
        case 'n': out += '\n'; ++i; continue;
        case 't': out += '\t'; ++i; continue;
        case '\\': out += '\\'; ++i; continue;
        default: break;
      }
    }
    out += s[i];
  }
  return out;
}

std::set<std::string> split_names(const std::string& csv) {
  std::set<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.insert(item);
  }
  return out;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw hostsim::scenario::ParseError(out_path, 0, "cannot open output file");
  out << text;
}

std::string render(const json& report, const std::string& format) {
  if (format == "json") return report.dump(2) + "\n";
  return hostsim::scenario::render_text(report);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shared web hosting log attack simulator"};
  app.require_subcommand(1);

  std::string config_path, trace_path, scenario_name, attacker, victim, format = "text", out_path;
  std::string payload, marker = "pwn1", sensitive;

  auto* run = app.add_subcommand("run", "Run one scenario against a config and trace");
  run->add_option("--config", config_path, "Server config (JSON)")->required();
  run->add_option("--trace", trace_path, "Request trace (JSON Lines)")->required();
  run->add_option("--scenario", scenario_name, "poison|snoop|lfi|site-tree|enumerate|harvest|audit|matrix")
      ->required();
  run->add_option("--attacker", attacker, "Attacker vhost domain (default: second vhost)");
  run->add_option("--victim", victim, "Victim vhost domain (default: first vhost)");
  run->add_option("--payload", payload, "Poison payload; \\n escapes allowed");
  run->add_option("--marker", marker, "LFI marker id");
  run->add_option("--sensitive-names", sensitive, "Comma-separated parameter names for harvest");
  run->add_option("--format", format, "text|json")->check(CLI::IsMember({"text", "json"}));
  run->add_option("--out", out_path, "Write the report here instead of stdout");

  auto* audit = app.add_subcommand("audit", "Audit a config for log isolation problems");
  audit->add_option("--config", config_path, "Server config (JSON)")->required();
  audit->add_option("--format", format, "text|json")->check(CLI::IsMember({"text", "json"}));
  audit->add_option("--out", out_path, "Write the report here instead of stdout");

  auto* matrix = app.add_subcommand("matrix", "Run every attack against every configuration");
  matrix->add_option("--trace", trace_path, "Request trace (JSON Lines)")->required();
  matrix->add_option("--format", format, "text|json")->check(CLI::IsMember({"text", "json"}));
  matrix->add_option("--out", out_path, "Write the report here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  namespace sc = hostsim::scenario;
  try {
    if (*run) {
      auto name = sc::parse_scenario_name(scenario_name);
      if (!name) throw sc::ValidationError("unknown scenario '" + scenario_name + "'");
      auto config = sc::load_config(config_path);
      auto trace = sc::load_trace(trace_path);
      sc::Scenario s;
      s.name = *name;
      s.attacker_vhost = attacker;
      s.victim_vhost = victim;
      if (!payload.empty()) s.payload = unescape(payload);
      s.marker = marker;
      if (!sensitive.empty()) s.sensitive_names = split_names(sensitive);
      emit(render(sc::run_scenario(config, trace, s), format), out_path);
    } else if (*audit) {
      auto config = sc::load_config(config_path);
      json report{{"config_digest", sc::config_digest(config)},
                  {"findings", sc::findings_to_json(hostsim::hardening::audit(config))},
                  {"notes", hostsim::hardening::audit_notes(config)}};
      if (format == "json") {
        emit(report.dump(2) + "\n", out_path);
      } else {
        std::string text = "config: " + report["config_digest"].get<std::string>() + "\n" +
                           sc::render_findings_text(report["findings"]);
        for (const auto& n : report["notes"]) text += "note: " + n.get<std::string>() + "\n";
        emit(text, out_path);
      }
    } else if (*matrix) {
      auto trace = sc::load_trace(trace_path);
      emit(render(sc::run_matrix_report(trace), format), out_path);
    }
  } catch (const sc::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const sc::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const hostsim::server::BadConfig& e) {
    std::cerr << "error: bad config: " << e.what() << "\n";
    return kExitInput;
  } catch (const hostsim::server::UnknownVhost& e) {
    std::cerr << "error: unknown vhost: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return 0;
}
