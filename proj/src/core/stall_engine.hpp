#ifndef QOE_CORE_STALL_ENGINE_HPP
#define QOE_CORE_STALL_ENGINE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "core/segment_timeline.hpp"

namespace qoe {

// One playback interruption. start_s is the media position at which the
// player froze (seconds of content already played), duration_s the length of
// the freeze in wall seconds. "No stalling" is the empty list, which
// serializes to the sentinel "0 - 0".
struct StallEvent {
  double start_s = 0.0;
  double duration_s = 0.0;
};

enum class StallMethod { kTimeline, kPoller };

struct StallReport {
  std::vector<StallEvent> events;
  double total_s = 0.0;  // always the exact sum of event durations
  StallMethod method = StallMethod::kTimeline;
};

enum class PlayerState : uint8_t { kPlaying, kStalled };

// Stall detection from the segment delivery timeline. The playback clock
// starts when segment 1 arrives; startup wait is not a stall. Segment n+1
// stalls by the amount its arrival overshoots the completion of everything
// scheduled before it, including earlier stalls:
//
//   S_{n+1} = max(0, T_{n+1} - sum_{i<=n}(d_i + S_i))
//
// with T relative to the first arrival. Events keep millisecond precision
// (reported in seconds); serialization quantizes later.
StallReport detect_stalls_timeline(const std::vector<SegmentTiming>& segments,
                                   int64_t startup_ms);

// Stall detection from a 1 Hz player poll. Maximal runs of kStalled become
// events; the onset is the media position, i.e. the number of playing
// samples seen before the run.
StallReport detect_stalls_poller(const std::vector<PlayerState>& trace);

// Dataset encoding: "<start> - <duration>" clauses joined by " | ",
// sentinel "0 - 0" for the empty list.
std::vector<StallEvent> parse_stalling_string(const std::string& s);
std::string format_stalling_string(const std::vector<StallEvent>& events);

}  // namespace qoe

#endif  // QOE_CORE_STALL_ENGINE_HPP
