#ifndef QOE_CORE_HAR_INGEST_HPP
#define QOE_CORE_HAR_INGEST_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "core/segment_timeline.hpp"

namespace qoe {

inline constexpr const char* kDefaultSegmentPattern = R"(\.ts(\?.*)?$)";
inline constexpr int64_t kDefaultSegmentDurationMs = 10000;

// One HTTP request from a HAR capture, times in ms since the session epoch
// (the earliest request in the file).
struct HarEntry {
  std::string url;
  int64_t started_at_ms = 0;
  int64_t send_ms = 0;
  int64_t wait_ms = 0;
  int64_t receive_ms = 0;
  int64_t body_size = 0;
};

struct ParsedHar {
  std::vector<HarEntry> entries;  // ordered by started_at
  int64_t epoch_unix_ms = 0;      // absolute time of the session epoch
  int64_t page_load_ms = 0;       // pageTimings.onLoad of the first page, 0 if absent
  std::vector<std::string> warnings;
};

struct SessionCapture {
  std::vector<SegmentTiming> segments;
  int64_t page_load_ms = 0;
  int64_t startup_ms = 0;  // first segment arrival relative to the epoch
  std::string source_path;
  int64_t epoch_unix_ms = 0;
};

// Parses a HAR 1.2 document. send/wait/receive map onto t_s/t_w/t_r; the
// HAR convention of -1 for "not applicable" coerces to 0 with a warning,
// any other negative timing is an error.
ParsedHar parse_har(const std::string& har_text);
ParsedHar parse_har_file(const std::string& path);

// Keeps only entries whose URL matches the segment pattern, indexed 1..N in
// started_at order, with t_seg = t_start + t_s + t_w + t_r. Durations are
// left unset; fill them from a manifest or a uniform default.
std::vector<SegmentTiming> extract_segments(
    const std::vector<HarEntry>& entries,
    const std::string& pattern = kDefaultSegmentPattern);

void fill_uniform_durations(std::vector<SegmentTiming>& segments,
                            int64_t duration_ms);
void fill_manifest_durations(std::vector<SegmentTiming>& segments,
                             const std::vector<int64_t>& durations_ms);

SessionCapture make_capture(const ParsedHar& har,
                            std::vector<SegmentTiming> segments,
                            const std::string& source_path);

// The capture interchange document ("qoe-capture/1").
std::string capture_to_json(const SessionCapture& capture);
SessionCapture capture_from_json(const std::string& json_text);
void save_capture_json(const SessionCapture& capture, const std::string& path);
SessionCapture load_capture_json(const std::string& path);

// ISO 8601 with optional fractional seconds and Z / +-HH:MM offsets, to
// unix milliseconds.
int64_t parse_iso8601_ms(const std::string& timestamp);

// Small file helpers shared across modules.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace qoe

#endif  // QOE_CORE_HAR_INGEST_HPP
