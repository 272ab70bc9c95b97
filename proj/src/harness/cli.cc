#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "hopcrack/error.h"
#include "hopcrack/harness.h"

namespace hopcrack::harness {
namespace {

namespace fs = std::filesystem;

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  return out;
}

fs::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorCode::kIo, "cannot create output directory " + dir);
  return dir;
}

Scenario load(const std::string& path) {
  Scenario s = load_scenario(path);
  apply_environment(s);
  return s;
}

void write_reports(const fs::path& dir, const Scenario& s, std::span<const TrialResult> results,
                   bool dump_estimates) {
  const ScenarioReport report = aggregate(s.name, results);
  auto acc = open_output(dir / "accuracy.csv");
  write_accuracy_csv(acc, std::span(&report, 1));
  auto trials = open_output(dir / "trials.csv");
  write_trials_csv(trials, s.name, results);
  auto summary = open_output(dir / "summary.txt");
  write_summary(summary, report);
  if (dump_estimates) {
    auto dump = open_output(dir / "estimates.txt");
    for (const auto& r : results) {
      dump << "# trial " << r.trial << '\n';
      write_estimate_dump(dump, r.timeline);
    }
  }
}

std::vector<double> parse_periods(const std::string& list) {
  std::vector<double> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || item.empty() || v < 0) {
      throw Error(ErrorCode::kConfig, "periods: bad entry '" + item + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw Error(ErrorCode::kConfig, "periods: empty list");
  return out;
}

std::string period_label(double seconds) {
  std::ostringstream os;
  os << seconds << 's';
  return os.str();
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"hopcrack: recover and follow the hopping parameters of a simulated BLE connection", "hopcrack"};
  app.require_subcommand(1);
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  app.add_option("-j,--jobs", jobs, "Worker threads for trials")->check(CLI::PositiveNumber);

  std::string scenario_path, out_dir;
  bool dump_estimates = false;
  auto* run = app.add_subcommand("run", "Run a scenario file and write reports");
  run->add_option("--scenario", scenario_path, "Scenario file")->required();
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_flag("--dump-estimates", dump_estimates, "Also write estimates.txt");

  int h_inc = 7, luc = 0, count = 37;
  std::string map_text = "full";
  bool with_events = false;
  auto* oracle = app.add_subcommand("oracle", "Print the channel sequence for fixed parameters");
  oracle->add_option("--h-inc", h_inc, "Hop increment")->required();
  oracle->add_option("--map", map_text, "Channel map: full or hex mask");
  oracle->add_option("--luc", luc, "Initial last unmapped channel");
  oracle->add_option("-n", count, "Number of events")->check(CLI::NonNegativeNumber);
  oracle->add_flag("--with-events", with_events, "Print event,channel pairs");

  std::string periods = "15,30,60";
  auto* sweep = app.add_subcommand("sweep", "Vary the map update period");
  sweep->add_option("--scenario", scenario_path, "Scenario file")->required();
  sweep->add_option("--out", out_dir, "Output directory")->required();
  sweep->add_option("--periods", periods, "Comma-separated update periods in seconds");

  auto* compare = app.add_subcommand("compare", "Run cracker and benchmark on identical seeds");
  compare->add_option("--scenario", scenario_path, "Scenario file")->required();
  compare->add_option("--out", out_dir, "Output directory")->required();

  try {
    std::vector<std::string> args;
    for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*run) {
      const Scenario s = load(scenario_path);
      const fs::path dir = prepare_dir(out_dir);
      const auto results = run_trials(s, false, jobs);
      write_reports(dir, s, results, dump_estimates);
      out << "wrote " << dir.string() << '\n';
    } else if (*oracle) {
      afh::ConnectionParams p;
      p.hop_increment = h_inc;
      p.last_unmapped = luc;
      const auto parsed = afh::ChannelMap::parse(map_text);
      if (!parsed) throw Error(ErrorCode::kConfig, "map: expected full or a hex mask");
      p.channel_map = *parsed;
      const auto violations = afh::validate_params(p);
      if (!violations.empty()) throw Error(ErrorCode::kConfig, afh::describe(violations));
      for (const auto& e : afh::hop_sequence(p, static_cast<std::size_t>(count))) {
        if (with_events) out << e.event << ',';
        out << static_cast<int>(e.channel) << '\n';
      }
    } else if (*sweep) {
      const Scenario base = load(scenario_path);
      const fs::path dir = prepare_dir(out_dir);
      std::vector<ScenarioReport> reports;
      auto trials = open_output(dir / "trials.csv");
      auto latency = open_output(dir / "latency.csv");
      latency << "scenario,update_period_s,median_hops_cint,median_hops_hinc,median_hops_cmap,mean_capture_pct\n";
      bool header = true;
      for (double period : parse_periods(periods)) {
        Scenario s = base;
        s.update_period = Micros{static_cast<long long>(period * 1e6)};
        s.name = base.name + "@" + period_label(period);
        validate_scenario(s);
        const auto results = run_trials(s, false, jobs);
        write_reports(prepare_dir((dir / ("period_" + period_label(period))).string()), s, results, false);
        write_trials_csv(trials, s.name, results, header);
        header = false;
        reports.push_back(aggregate(s.name, results));
        const auto& r = reports.back();
        latency << s.name << ',' << period << ',' << r.hops_interval.median << ',' << r.hops_increment.median
                << ',' << r.hops_map.median << ',' << r.capture_pct.mean << '\n';
      }
      auto acc = open_output(dir / "accuracy.csv");
      write_accuracy_csv(acc, reports);
      out << "wrote " << dir.string() << '\n';
    } else if (*compare) {
      const Scenario s = load(scenario_path);
      const fs::path dir = prepare_dir(out_dir);
      const auto cracker = run_trials(s, false, jobs);
      const auto bench = run_trials(s, true, jobs);
      auto csv = open_output(dir / "compare.csv");
      csv << "scenario,receiver,trial,capture_pct\n";
      for (const auto& r : cracker) csv << s.name << ",cracker," << r.trial << ',' << r.capture_pct() << '\n';
      for (const auto& r : bench) csv << s.name << ",benchmark," << r.trial << ',' << r.capture_pct() << '\n';
      const auto a = aggregate(s.name, cracker);
      const auto b = aggregate(s.name, bench);
      auto summary = open_output(dir / "summary.txt");
      for (std::ostream* os : {static_cast<std::ostream*>(&summary), &out}) {
        *os << "cracker capture " << a.capture_pct.mean << "% stdev " << a.capture_pct.stdev << '\n';
        *os << "benchmark capture " << b.capture_pct.mean << "% stdev " << b.capture_pct.stdev << '\n';
      }
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::kIo ? 3 : 2;
  }
  return 0;
}

}  // namespace hopcrack::harness
