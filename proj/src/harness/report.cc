#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "hopcrack/harness.h"

namespace hopcrack::harness {
namespace {

double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double percent(std::size_t hits, std::size_t total) {
  return total == 0 ? 0.0 : 100.0 * static_cast<double>(hits) / static_cast<double>(total);
}

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string optional_count(const std::optional<std::uint64_t>& v) {
  return v ? std::to_string(*v) : "";
}

void write_stats(std::ostream& os, const std::string& label, const Stats& s) {
  os << label << ": n=" << s.count << " median=" << fixed(s.median) << " iqr=[" << fixed(s.q1) << ", "
     << fixed(s.q3) << "] mean=" << fixed(s.mean) << " stdev=" << fixed(s.stdev) << '\n';
}

}  // namespace

Stats describe_sample(std::vector<double> values) {
  Stats s;
  s.count = values.size();
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.stdev = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
  s.median = quantile(values, 0.5);
  s.q1 = quantile(values, 0.25);
  s.q3 = quantile(values, 0.75);
  return s;
}

ScenarioReport aggregate(const std::string& scenario, std::span<const TrialResult> results) {
  ScenarioReport rep;
  rep.scenario = scenario;
  rep.trials = results.size();
  std::size_t c_int = 0, h_inc = 0, c_map = 0;
  std::vector<double> hi, hh, hm, capture;
  double resyncs = 0.0;
  std::uint64_t captured = 0;
  for (const auto& r : results) {
    rep.failed_trials += r.failed ? 1 : 0;
    c_int += r.interval_correct ? 1 : 0;
    h_inc += r.hop_increment_correct ? 1 : 0;
    c_map += r.map_correct ? 1 : 0;
    if (r.hops_interval) hi.push_back(static_cast<double>(*r.hops_interval));
    if (r.hops_increment) hh.push_back(static_cast<double>(*r.hops_increment));
    if (r.hops_map) hm.push_back(static_cast<double>(*r.hops_map));
    capture.push_back(r.capture_pct());
    captured += r.packets_captured;
    resyncs += r.resync_count;
  }
  rep.interval_accuracy_pct = percent(c_int, results.size());
  rep.hop_increment_accuracy_pct = percent(h_inc, results.size());
  rep.map_accuracy_pct = percent(c_map, results.size());
  rep.hops_interval = describe_sample(std::move(hi));
  rep.hops_increment = describe_sample(std::move(hh));
  rep.hops_map = describe_sample(std::move(hm));
  rep.capture_pct = describe_sample(std::move(capture));
  rep.capture_flagged = captured == 0;
  rep.mean_resyncs = results.empty() ? 0.0 : resyncs / static_cast<double>(results.size());
  return rep;
}

void write_accuracy_csv(std::ostream& os, std::span<const ScenarioReport> reports, bool header) {
  if (header) os << "scenario,param,accuracy_pct\n";
  for (const auto& r : reports) {
    os << r.scenario << ",c_int," << fixed(r.interval_accuracy_pct) << '\n';
    os << r.scenario << ",h_inc," << fixed(r.hop_increment_accuracy_pct) << '\n';
    os << r.scenario << ",c_map," << fixed(r.map_accuracy_pct) << '\n';
  }
}

void write_trials_csv(std::ostream& os, const std::string& scenario, std::span<const TrialResult> results,
                      bool header) {
  if (header) os << "scenario,trial,hops_cint,hops_hinc,hops_cmap,capture_pct\n";
  for (const auto& r : results) {
    os << scenario << ',' << r.trial << ',' << optional_count(r.hops_interval) << ','
       << optional_count(r.hops_increment) << ',' << optional_count(r.hops_map) << ','
       << fixed(r.capture_pct()) << '\n';
  }
}

void write_summary(std::ostream& os, const ScenarioReport& r) {
  os << "scenario " << r.scenario << ": " << r.trials << " trials, " << r.failed_trials << " failed\n";
  os << "accuracy c_int=" << fixed(r.interval_accuracy_pct) << "% h_inc=" << fixed(r.hop_increment_accuracy_pct)
     << "% c_map=" << fixed(r.map_accuracy_pct) << "%\n";
  write_stats(os, "hops to c_int", r.hops_interval);
  write_stats(os, "hops to h_inc", r.hops_increment);
  write_stats(os, "hops to c_map", r.hops_map);
  os << "capture " << fixed(r.capture_pct.mean) << "% +- " << fixed(r.capture_pct.stdev) << '%';
  if (r.capture_flagged) os << " (FLAGGED: nothing captured)";
  os << "\nmean resyncs " << fixed(r.mean_resyncs) << '\n';
}

void write_estimate_dump(std::ostream& os, std::span<const sniff::TimelineEntry> timeline) {
  for (const auto& e : timeline) os << sniff::format_estimate(e.estimate) << '\n';
}

}  // namespace hopcrack::harness
