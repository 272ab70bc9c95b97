#include <algorithm>
#include <cstdlib>
#include <limits>

#include "hopcrack/error.h"
#include "hopcrack/sniffer.h"

namespace hopcrack::sniff {
namespace {

bool legal_interval(Micros interval) {
  return interval >= afh::kMinInterval && interval <= afh::kMaxInterval &&
         interval.count() % afh::kIntervalStep.count() == 0;
}

bool legal_period(Micros period) {
  return period.count() % kPeriodHops == 0 && legal_interval(period / kPeriodHops);
}

// Sum of one copy if deltas[start, start + copies * length) repeats the first
// `length` deltas exactly.
std::optional<Micros> repeating_run(std::span<const Micros> deltas, std::size_t start,
                                    std::size_t length, std::size_t copies) {
  Micros sum{0};
  for (std::size_t i = 0; i < length; ++i) sum += deltas[start + i];
  for (std::size_t i = length; i < copies * length; ++i) {
    if (deltas[start + i] != deltas[start + i % length]) return std::nullopt;
  }
  return sum;
}

void check_repeats(int n_repeats) {
  if (n_repeats < 2) throw Error(ErrorCode::kConfig, "n_repeats must be at least 2");
}

}  // namespace

DeltaSeries make_delta_series(afh::Channel channel, std::span<const Micros> arrival_times) {
  DeltaSeries series{channel, {}};
  for (std::size_t i = 1; i < arrival_times.size(); ++i) {
    const Micros d = arrival_times[i] - arrival_times[i - 1];
    if (d.count() <= 0) throw Error(ErrorCode::kOutOfRange, "arrival times must strictly increase");
    series.deltas.push_back(d);
  }
  return series;
}

Micros detect_period(const DeltaSeries& series, int n_repeats) {
  check_repeats(n_repeats);
  const std::span<const Micros> d(series.deltas);
  const auto copies = static_cast<std::size_t>(n_repeats);
  std::optional<Micros> best;
  for (std::size_t length = 1; length * copies <= d.size(); ++length) {
    for (std::size_t start = 0; start + length * copies <= d.size(); ++start) {
      const auto sum = repeating_run(d, start, length, copies);
      if (sum && legal_period(*sum) && (!best || *sum < *best)) best = sum;
    }
  }
  if (!best) {
    throw Error(ErrorCode::kNoPeriodFound, "no pattern repeated " + std::to_string(n_repeats) +
                                               " times in " + std::to_string(d.size()) + " deltas");
  }
  return *best;
}

std::optional<Micros> detect_recent_period(const DeltaSeries& series, int n_repeats) {
  check_repeats(n_repeats);
  const std::span<const Micros> d(series.deltas);
  const auto copies = static_cast<std::size_t>(n_repeats);
  std::optional<Micros> best;
  for (std::size_t length = 1; length * copies <= d.size(); ++length) {
    const auto sum = repeating_run(d, d.size() - length * copies, length, copies);
    if (sum && legal_period(*sum) && (!best || *sum < *best)) best = sum;
  }
  return best;
}

Micros derive_connection_interval(Micros period) {
  if (period.count() <= 0 || period.count() % kPeriodHops != 0) {
    throw Error(ErrorCode::kRangeError,
                "period " + std::to_string(period.count()) + "us is not 37 whole intervals");
  }
  const Micros interval = period / kPeriodHops;
  if (!legal_interval(interval)) {
    throw Error(ErrorCode::kRangeError, "derived interval " + std::to_string(interval.count()) +
                                            "us is not a legal connection interval");
  }
  return interval;
}

std::int64_t hops_between(Micros t1, Micros t2, Micros interval, std::optional<Micros> tolerance) {
  if (interval.count() <= 0) throw Error(ErrorCode::kOutOfRange, "interval must be positive");
  if (t2 <= t1) throw Error(ErrorCode::kOutOfRange, "hops_between requires t2 > t1");
  const Micros tol = tolerance.value_or(interval / 4);
  const auto span = (t2 - t1).count();
  const auto step = interval.count();
  const auto hops = (span + step / 2) / step;
  const auto residual = std::llabs(span - hops * step);
  if (residual > tol.count()) {
    throw Error(ErrorCode::kNotOnGrid, std::to_string(span) + "us is " + std::to_string(residual) +
                                           "us off the connection-event grid");
  }
  return hops;
}

}  // namespace hopcrack::sniff
