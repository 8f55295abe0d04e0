#ifndef QOE_TESTS_PLAYBACK_ORACLE_HPP
#define QOE_TESTS_PLAYBACK_ORACLE_HPP

#include <cstdint>
#include <vector>

#include "core/segment_timeline.hpp"
#include "core/stall_engine.hpp"

namespace qoe::testing {

// Brute-force reference player, advanced 1 ms at a time. The clock opens at
// first arrival + startup; each millisecond either consumes 1 ms of media
// (if the segment holding the playhead has fully arrived) or counts as
// stalled. Intentionally unrelated to the production recurrence.
inline StallReport playback_oracle(const std::vector<SegmentTiming>& segments,
                                   int64_t startup_ms) {
  StallReport report;
  if (segments.empty()) return report;

  std::vector<int64_t> arrival(segments.size());
  std::vector<int64_t> media_end(segments.size());  // cumulative durations
  int64_t total_media = 0;
  for (size_t i = 0; i < segments.size(); ++i) {
    arrival[i] = segments[i].t_seg_ms;
    total_media += segments[i].duration_ms;
    media_end[i] = total_media;
  }

  int64_t wall = arrival[0] + startup_ms;  // playback clock origin
  int64_t played = 0;                      // media ms consumed
  size_t seg = 0;
  int64_t stall_run = 0;

  auto flush_run = [&]() {
    if (stall_run > 0) {
      report.events.push_back(
          StallEvent{static_cast<double>(played) / 1000.0,
                     static_cast<double>(stall_run) / 1000.0});
      report.total_s += static_cast<double>(stall_run) / 1000.0;
      stall_run = 0;
    }
  };

  while (played < total_media) {
    while (seg < segments.size() && played >= media_end[seg]) ++seg;
    if (arrival[seg] <= wall) {
      flush_run();
      ++played;
    } else {
      ++stall_run;
    }
    ++wall;
  }
  flush_run();
  // Recompute the total as an exact sum to mirror the production contract.
  report.total_s = 0;
  for (const auto& e : report.events) report.total_s += e.duration_s;
  return report;
}

}  // namespace qoe::testing

#endif  // QOE_TESTS_PLAYBACK_ORACLE_HPP
