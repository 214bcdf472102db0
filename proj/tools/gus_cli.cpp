// gus: drive simulated runs of the register protocols and inspect their histories.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "gus/impossible.hpp"
#include "gus/report.hpp"
#include "gus/stats.hpp"

namespace fs = std::filesystem;
using namespace gus;

namespace {

std::vector<std::string> split_regions(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

void print_verdict(const Verdict& v, const History& h) {
  if (!v.conclusive) std::cout << "lincheck: INCONCLUSIVE (search budget exhausted on some key)\n";
  if (v.ok) {
    std::cout << "lincheck: ok (" << v.ops << " ops, " << v.keys.size() << " keys)\n";
    return;
  }
  const KeyVerdict* k = v.first_failure();
  std::cout << "lincheck: VIOLATION on key " << k->key << "; shortest failing prefix " << k->violating_prefix
            << " events, closed by op " << k->violating_op << '\n';
  for (const auto& e : h)
    if (e.key == k->key && e.op == k->violating_op)
      std::cout << "  op " << e.op << " client " << e.client << ' ' << to_string(e.kind) << ' ' << value_digest(e.value)
                << " invoked " << format_ms(e.invoke) << " ms\n";
}

int cmd_run(const std::string& path, const std::string& out_dir, bool cdf) {
  const Scenario s = load_scenario(path);
  const RunResult r = run_scenario(s);
  fs::create_directories(out_dir);
  {
    std::ofstream csv(fs::path(out_dir) / "history.csv", std::ios::binary);
    write_history_csv(csv, r.history);
  }
  const Verdict v = check_history(r.history);
  const StatsWindow window{from_ms(s.warmup_ms), from_ms(s.duration_ms - s.cooldown_ms)};
  const auto summary = summarize(r.history, r.latency.regions, window);
  {
    std::ofstream pct(fs::path(out_dir) / "percentiles.txt");
    print_percentiles(pct, summary);
    if (cdf) print_cdf(pct, summary);
  }
  nlohmann::json tel = telemetry_json(r.telemetry);
  tel["scenario"] = s.name;
  tel["protocol"] = to_string(s.protocol);
  tel["quorums"] = {{"n", r.quorums.n}, {"f", r.quorums.f}, {"q_read", r.quorums.q_read}, {"q_write", r.quorums.q_write}};
  tel["lincheck"] = verdict_json(v);
  tel["latency"] = stats_json(summary);
  std::ofstream(fs::path(out_dir) / "telemetry.json") << tel.dump(2) << '\n';

  std::cout << s.name << ": " << to_string(s.protocol) << " n=" << s.n << " q_read=" << r.quorums.q_read
            << " q_write=" << r.quorums.q_write << ", " << r.history.size() << " ops, " << r.telemetry.sent
            << " messages, trace " << hex16(r.telemetry.trace_hash) << '\n';
  print_percentiles(std::cout, summary);
  if (cdf) print_cdf(std::cout, summary);
  print_verdict(v, r.history);
  for (const auto& e : r.telemetry.script_errors) std::cout << "script: " << e << '\n';
  if (!r.telemetry.blocked.empty()) std::cout << "liveness: " << r.telemetry.blocked.size() << " ops never returned\n";
  std::cout << "wrote " << out_dir << "/{history.csv,percentiles.txt,telemetry.json}\n";
  return exit_code(v, r.telemetry);
}

void print_quorum_row(int n, int f, QuorumBias bias) {
  const QuorumConfig q = n <= 5 && f == (n - 1) / 2 ? default_quorums(n) : relaxed_quorums(n, f, bias);
  std::cout << "n=" << n << " f=" << f << "  q_read=" << q.q_read << " q_write=" << q.q_write << "  (2·" << q.q_write
            << " = " << 2 * q.q_write << " > " << n << ";  2·" << n << "−2·" << q.q_write << "−1 = "
            << 2 * n - 2 * q.q_write - 1 << " < " << q.q_read << ";  max quorum " << std::max(q.q_read, q.q_write)
            << " ≤ n−f = " << n - f << ")\n";
}

int cmd_impossible(const std::string& which, int n, bool gus_mode) {
  auto show = [](const ExecutionReport& r) {
    std::cout << r.name << ": " << (r.verdict.ok ? "linearizable" : "NOT linearizable")
              << (r.as_expected() ? " (as expected)" : " (UNEXPECTED)") << '\n'
              << r.narrative;
    return r;
  };
  if (gus_mode) {
    const auto r = show(run_gus_companion(n));
    if (!r.script_ok()) return kExitUsage;
    return r.verdict.ok ? kExitOk : kExitViolation;
  }
  std::vector<Execution> runs;
  if (which == "e1" || which == "all") runs.push_back(Execution::kE1);
  if (which == "e2" || which == "all") runs.push_back(Execution::kE2);
  if (which == "e3" || which == "all") runs.push_back(Execution::kE3);
  if (runs.empty()) throw CLI::ValidationError("which", "expected e1, e2, e3 or all");
  int code = kExitOk;
  for (auto e : runs) {
    const auto r = show(run_fastonly_execution(e, n));
    if (!r.script_ok()) return kExitUsage;
    if (!r.verdict.ok) code = kExitViolation;
  }
  return code;
}

History load_history(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_history_csv(in);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simulated atomic register harness"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run a scenario file, write history CSV, telemetry and percentiles");
  std::string scenario_path, out_dir = "out";
  bool cdf = false;
  run->add_option("scenario", scenario_path, "scenario JSON")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--out", out_dir, "output directory");
  run->add_flag("--cdf", cdf, "also print the 1 ms CDF");

  auto* quorum = app.add_subcommand("quorum", "read/write quorum sizes for n nodes tolerating f crashes");
  int qn = 3, qf = 1;
  std::string bias = "read";
  bool table2 = false;
  quorum->add_option("--n", qn, "nodes");
  quorum->add_option("--f", qf, "tolerated crashes");
  quorum->add_option("--bias", bias, "read or write")->check(CLI::IsMember({"read", "write"}));
  quorum->add_flag("--table2", table2, "print the relaxed-resilience reference rows");

  auto* impossible = app.add_subcommand("impossible", "scripted executions against a one-round-trip register");
  std::string which = "all";
  int in = 7;
  bool gus_mode = false;
  impossible->add_option("which", which, "e1, e2, e3 or all");
  impossible->add_option("--n", in, "nodes");
  impossible->add_flag("--gus", gus_mode, "run the analogous script against gus instead (use --n 5)");

  auto* check = app.add_subcommand("check", "linearizability check of a history CSV");
  std::string check_path;
  check->add_option("csv", check_path)->required()->check(CLI::ExistingFile);

  auto* stats = app.add_subcommand("stats", "latency percentiles and CDF of a history CSV");
  std::string stats_path, regions, json_out;
  double from = 0, to = -1;
  bool json = false;
  stats->add_option("csv", stats_path)->required()->check(CLI::ExistingFile);
  stats->add_option("--regions", regions, "comma-separated region per node, e.g. CA,VA,IR");
  stats->add_option("--from-ms", from, "ignore ops invoked before this time");
  stats->add_option("--to-ms", to, "ignore ops invoked after this time");
  stats->add_flag("--json", json, "machine-readable output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help exits 0; every other parse problem is a usage error.
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }
  try {
    if (*run) return cmd_run(scenario_path, out_dir, cdf);
    if (*quorum) {
      if (table2) {
        for (auto [n, f] : {std::pair{7, 2}, {9, 2}, {11, 3}, {13, 3}}) print_quorum_row(n, f, QuorumBias::kReadOptimized);
      } else {
        print_quorum_row(qn, qf, bias == "write" ? QuorumBias::kWriteOptimized : QuorumBias::kReadOptimized);
      }
      return kExitOk;
    }
    if (*impossible) return cmd_impossible(which, in, gus_mode);
    if (*check) {
      const History h = load_history(check_path);
      const Verdict v = check_history(h);
      print_verdict(v, h);
      return v.ok ? kExitOk : kExitViolation;
    }
    if (*stats) {
      const History h = load_history(stats_path);
      StatsWindow w{from_ms(from)};
      if (to >= 0) w.to = from_ms(to);
      const auto summary = summarize(h, split_regions(regions), w);
      if (json) {
        std::cout << stats_json(summary).dump(2) << '\n';
      } else {
        print_percentiles(std::cout, summary);
        print_cdf(std::cout, summary);
      }
      return kExitOk;
    }
  } catch (const ScenarioError& e) {
    std::cerr << "scenario: " << e.what() << '\n';
    return kExitUsage;
  } catch (const QuorumError& e) {
    std::cerr << "quorum: " << e.what() << '\n';
    return kExitUsage;
  } catch (const HistoryParseError& e) {
    std::cerr << "history: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
