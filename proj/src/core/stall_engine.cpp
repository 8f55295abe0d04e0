#include "core/stall_engine.hpp"

#include <cmath>
#include <cstdio>

#include "core/errors.hpp"

namespace qoe {

namespace {

void check_segments(const std::vector<SegmentTiming>& segments) {
  int expected = 1;
  int64_t prev_arrival = 0;
  for (const auto& seg : segments) {
    if (seg.index != expected) {
      fail(ErrorCode::InvalidArgument,
           "segment indices must be contiguous from 1, got " +
               std::to_string(seg.index) + " where " +
               std::to_string(expected) + " was expected");
    }
    if (!seg.has_duration()) {
      fail(ErrorCode::MissingDurations,
           "segment " + std::to_string(seg.index) + " has no duration");
    }
    if (expected > 1 && seg.t_seg_ms < prev_arrival) {
      fail(ErrorCode::NonMonotoneArrivals,
           "t_seg decreases at segment " + std::to_string(seg.index));
    }
    prev_arrival = seg.t_seg_ms;
    ++expected;
  }
}

}  // namespace

StallReport detect_stalls_timeline(const std::vector<SegmentTiming>& segments,
                                   int64_t startup_ms) {
  if (startup_ms < 0) {
    fail(ErrorCode::InvalidArgument, "startup_ms must be non-negative");
  }
  check_segments(segments);

  StallReport report;
  report.method = StallMethod::kTimeline;
  if (segments.empty()) return report;

  const int64_t playback_epoch = segments.front().t_seg_ms;
  int64_t media_played_ms = 0;   // sum of d_i over completed segments
  int64_t deadline_ms = 0;       // sum of (d_i + S_i), the playback frontier
  int64_t total_stall_ms = 0;

  // Segment 1 opens playback after the player's spin-up (startup_ms,
  // usually 0); that wait is startup, not a stall. Stalls can only start
  // from segment 2 on.
  media_played_ms = segments.front().duration_ms;
  deadline_ms = startup_ms + segments.front().duration_ms;

  for (size_t n = 1; n < segments.size(); ++n) {
    const int64_t arrival = segments[n].t_seg_ms - playback_epoch;
    const int64_t stall_ms = arrival - deadline_ms;
    if (stall_ms > 0) {
      report.events.push_back(StallEvent{
          static_cast<double>(media_played_ms) / 1000.0,
          static_cast<double>(stall_ms) / 1000.0,
      });
      total_stall_ms += stall_ms;
      deadline_ms += stall_ms;
    }
    media_played_ms += segments[n].duration_ms;
    deadline_ms += segments[n].duration_ms;
  }

  report.total_s = static_cast<double>(total_stall_ms) / 1000.0;
  return report;
}

StallReport detect_stalls_poller(const std::vector<PlayerState>& trace) {
  if (trace.empty()) {
    fail(ErrorCode::EmptyTrace, "player trace is empty");
  }

  StallReport report;
  report.method = StallMethod::kPoller;

  int64_t playing_seconds = 0;
  int64_t run_length = 0;
  int64_t run_onset = 0;
  int64_t total = 0;

  auto close_run = [&]() {
    if (run_length > 0) {
      report.events.push_back(StallEvent{static_cast<double>(run_onset),
                                         static_cast<double>(run_length)});
      total += run_length;
      run_length = 0;
    }
  };

  for (const PlayerState state : trace) {
    if (state == PlayerState::kStalled) {
      if (run_length == 0) run_onset = playing_seconds;
      ++run_length;
    } else {
      close_run();
      ++playing_seconds;
    }
  }
  close_run();

  report.total_s = static_cast<double>(total);
  return report;
}

namespace {

// One "<start> - <duration>" clause; both sides are non-negative integers.
bool parse_clause(const std::string& clause, long long* start,
                  long long* duration) {
  size_t i = 0;
  size_t end = clause.size();
  while (i < end && clause[i] == ' ') ++i;
  while (end > i && clause[end - 1] == ' ') --end;
  if (i >= end) return false;

  size_t pos = i;
  auto read_int = [&](long long* out) {
    size_t digits = 0;
    long long value = 0;
    while (pos < end && clause[pos] >= '0' && clause[pos] <= '9') {
      value = value * 10 + (clause[pos] - '0');
      ++pos;
      ++digits;
    }
    *out = value;
    return digits > 0;
  };

  if (!read_int(start)) return false;
  if (pos + 3 > end || clause.compare(pos, 3, " - ") != 0) return false;
  pos += 3;
  if (!read_int(duration)) return false;
  return pos == end;
}

}  // namespace

std::vector<StallEvent> parse_stalling_string(const std::string& s) {
  std::vector<StallEvent> events;
  size_t begin = 0;
  size_t clause_count = 0;
  bool sole_sentinel = false;
  while (begin <= s.size()) {
    size_t bar = s.find('|', begin);
    const std::string clause =
        s.substr(begin, bar == std::string::npos ? std::string::npos
                                                 : bar - begin);
    long long start = 0;
    long long duration = 0;
    if (!parse_clause(clause, &start, &duration)) {
      fail(ErrorCode::BadStallSyntax, "bad stalling clause: \"" + clause + "\"");
    }
    ++clause_count;
    sole_sentinel = (clause_count == 1 && start == 0 && duration == 0);
    if (duration == 0 && !sole_sentinel) {
      fail(ErrorCode::BadStallSyntax,
           "zero-duration stall clause: \"" + clause + "\"");
    }
    events.push_back(StallEvent{static_cast<double>(start),
                                static_cast<double>(duration)});
    if (bar == std::string::npos) break;
    begin = bar + 1;
  }
  if (sole_sentinel && clause_count == 1) return {};  // "0 - 0": no stalling
  if (!events.empty() && events.front().duration_s == 0.0) {
    fail(ErrorCode::BadStallSyntax, "sentinel \"0 - 0\" mixed with events");
  }
  return events;
}

std::string format_stalling_string(const std::vector<StallEvent>& events) {
  if (events.empty()) return "0 - 0";

  std::string out;
  long long prev_start = -1;
  for (const auto& ev : events) {
    if (ev.start_s < 0 || ev.duration_s <= 0) {
      fail(ErrorCode::InvalidArgument,
           "stall events need start >= 0 and duration > 0");
    }
    const long long start = llround(ev.start_s);
    // Sub-second stalls round up to the encoding's 1 s floor.
    const long long duration = std::max(1LL, llround(ev.duration_s));
    if (start <= prev_start) {
      fail(ErrorCode::InvalidArgument,
           "stall events overlap after quantization at start " +
               std::to_string(start));
    }
    prev_start = start;
    if (!out.empty()) out += " | ";
    out += std::to_string(start) + " - " + std::to_string(duration);
  }
  return out;
}

}  // namespace qoe
