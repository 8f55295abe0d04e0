#ifndef QOE_CORE_SEGMENT_TIMELINE_HPP
#define QOE_CORE_SEGMENT_TIMELINE_HPP

#include <cstdint>
#include <vector>

namespace qoe {

// Timing decomposition of one media-segment request. All times are integer
// milliseconds since the session epoch (first request of the capture).
struct SegmentTiming {
  static constexpr int64_t kDurationUnset = -1;

  int index = 0;         // 1-based ordinal in arrival-schedule order
  int64_t t_start_ms = 0;  // request dispatch
  int64_t t_s_ms = 0;      // request send time
  int64_t t_w_ms = 0;      // wait for first response byte
  int64_t t_r_ms = 0;      // body transfer time
  int64_t t_seg_ms = 0;    // arrival at player: t_start + t_s + t_w + t_r
  int64_t duration_ms = kDurationUnset;  // playback length d_n
  int64_t size_bytes = 0;

  bool has_duration() const { return duration_ms > 0; }
};

inline int64_t arrival_of(const SegmentTiming& s) {
  return s.t_start_ms + s.t_s_ms + s.t_w_ms + s.t_r_ms;
}

}  // namespace qoe

#endif  // QOE_CORE_SEGMENT_TIMELINE_HPP
