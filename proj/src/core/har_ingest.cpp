#include "core/har_ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "core/errors.hpp"

namespace qoe {

using nlohmann::json;

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    fail(ErrorCode::Io, "cannot open " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    fail(ErrorCode::Io, "cannot open " + path + " for writing");
  }
  out << content;
  if (!out) {
    fail(ErrorCode::Io, "write failed for " + path);
  }
}

namespace {

int64_t days_from_civil(int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

bool read_digits(const std::string& s, size_t* pos, int width, int64_t* out) {
  int64_t value = 0;
  for (int i = 0; i < width; ++i) {
    if (*pos >= s.size() || s[*pos] < '0' || s[*pos] > '9') return false;
    value = value * 10 + (s[*pos] - '0');
    ++*pos;
  }
  *out = value;
  return true;
}

}  // namespace

int64_t parse_iso8601_ms(const std::string& ts) {
  size_t pos = 0;
  int64_t year, month, day, hour, minute, second;
  auto bad = [&]() -> int64_t {
    fail(ErrorCode::MalformedHar, "bad ISO 8601 timestamp: \"" + ts + "\"");
  };

  if (!read_digits(ts, &pos, 4, &year)) return bad();
  if (pos >= ts.size() || ts[pos++] != '-') return bad();
  if (!read_digits(ts, &pos, 2, &month)) return bad();
  if (pos >= ts.size() || ts[pos++] != '-') return bad();
  if (!read_digits(ts, &pos, 2, &day)) return bad();
  if (pos >= ts.size() || (ts[pos] != 'T' && ts[pos] != 't' && ts[pos] != ' '))
    return bad();
  ++pos;
  if (!read_digits(ts, &pos, 2, &hour)) return bad();
  if (pos >= ts.size() || ts[pos++] != ':') return bad();
  if (!read_digits(ts, &pos, 2, &minute)) return bad();
  if (pos >= ts.size() || ts[pos++] != ':') return bad();
  if (!read_digits(ts, &pos, 2, &second)) return bad();
  if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 ||
      minute > 59 || second > 60) {
    return bad();
  }

  int64_t frac_ms = 0;
  if (pos < ts.size() && ts[pos] == '.') {
    ++pos;
    int digits = 0;
    while (pos < ts.size() && ts[pos] >= '0' && ts[pos] <= '9') {
      if (digits < 3) frac_ms = frac_ms * 10 + (ts[pos] - '0');
      ++digits;
      ++pos;
    }
    if (digits == 0) return bad();
    while (digits < 3) {
      frac_ms *= 10;
      ++digits;
    }
  }

  int64_t offset_min = 0;
  if (pos < ts.size()) {
    const char c = ts[pos];
    if (c == 'Z' || c == 'z') {
      ++pos;
    } else if (c == '+' || c == '-') {
      ++pos;
      int64_t oh, om = 0;
      if (!read_digits(ts, &pos, 2, &oh)) return bad();
      if (pos < ts.size() && ts[pos] == ':') ++pos;
      if (pos < ts.size() && !read_digits(ts, &pos, 2, &om)) return bad();
      offset_min = oh * 60 + om;
      if (c == '-') offset_min = -offset_min;
    }
  }
  if (pos != ts.size()) return bad();

  const int64_t days = days_from_civil(year, static_cast<unsigned>(month),
                                       static_cast<unsigned>(day));
  return ((days * 24 + hour) * 60 + minute - offset_min) * 60000 +
         second * 1000 + frac_ms;
}

namespace {

// send/wait/receive: -1 means "not applicable" and coerces to 0 so the
// arrival sum stays well defined; anything below -1 is rejected.
int64_t read_timing(const json& timings, const char* key, size_t entry_index,
                    std::vector<std::string>* warnings) {
  if (!timings.contains(key) || !timings[key].is_number()) {
    fail(ErrorCode::MalformedHar,
         "entry " + std::to_string(entry_index) + ": timings." + key +
             " missing or not a number");
  }
  const double raw = timings[key].get<double>();
  if (raw == -1.0) {
    warnings->push_back("entry " + std::to_string(entry_index) + ": timings." +
                        key + " = -1, coerced to 0");
    return 0;
  }
  if (raw < 0) {
    fail(ErrorCode::NegativeTiming,
         "entry " + std::to_string(entry_index) + ": timings." + key + " = " +
             std::to_string(raw));
  }
  return static_cast<int64_t>(llround(raw));
}

}  // namespace

ParsedHar parse_har(const std::string& har_text) {
  json doc;
  try {
    doc = json::parse(har_text);
  } catch (const json::exception& e) {
    fail(ErrorCode::MalformedHar, std::string("HAR is not valid JSON: ") +
                                      e.what());
  }
  if (!doc.is_object() || !doc.contains("log") || !doc["log"].is_object() ||
      !doc["log"].contains("entries") || !doc["log"]["entries"].is_array()) {
    fail(ErrorCode::MalformedHar, "HAR document has no log.entries array");
  }

  const json& log = doc["log"];
  ParsedHar out;

  struct RawEntry {
    HarEntry entry;
    int64_t abs_ms;
  };
  std::vector<RawEntry> raw;
  raw.reserve(log["entries"].size());

  size_t index = 0;
  for (const json& je : log["entries"]) {
    if (!je.is_object() || !je.contains("startedDateTime") ||
        !je["startedDateTime"].is_string() || !je.contains("timings") ||
        !je["timings"].is_object()) {
      fail(ErrorCode::MalformedHar,
           "entry " + std::to_string(index) +
               ": startedDateTime or timings missing");
    }
    RawEntry re;
    re.abs_ms = parse_iso8601_ms(je["startedDateTime"].get<std::string>());
    re.entry.url = je.contains("request") && je["request"].contains("url")
                       ? je["request"]["url"].get<std::string>()
                       : "";
    const json& timings = je["timings"];
    re.entry.send_ms = read_timing(timings, "send", index, &out.warnings);
    re.entry.wait_ms = read_timing(timings, "wait", index, &out.warnings);
    re.entry.receive_ms =
        read_timing(timings, "receive", index, &out.warnings);

    int64_t body = 0;
    if (je.contains("response") && je["response"].is_object()) {
      const json& resp = je["response"];
      if (resp.contains("bodySize") && resp["bodySize"].is_number() &&
          resp["bodySize"].get<double>() >= 0) {
        body = resp["bodySize"].get<int64_t>();
      } else if (resp.contains("content") && resp["content"].is_object() &&
                 resp["content"].contains("size") &&
                 resp["content"]["size"].is_number() &&
                 resp["content"]["size"].get<double>() >= 0) {
        body = resp["content"]["size"].get<int64_t>();
      }
    }
    re.entry.body_size = body;
    raw.push_back(std::move(re));
    ++index;
  }

  if (!raw.empty()) {
    int64_t epoch = raw.front().abs_ms;
    for (const auto& re : raw) epoch = std::min(epoch, re.abs_ms);
    out.epoch_unix_ms = epoch;
    for (auto& re : raw) re.entry.started_at_ms = re.abs_ms - epoch;
    std::stable_sort(raw.begin(), raw.end(),
                     [](const RawEntry& a, const RawEntry& b) {
                       return a.entry.started_at_ms < b.entry.started_at_ms;
                     });
    out.entries.reserve(raw.size());
    for (auto& re : raw) out.entries.push_back(std::move(re.entry));
  }

  if (log.contains("pages") && log["pages"].is_array() &&
      !log["pages"].empty()) {
    const json& page = log["pages"][0];
    if (page.is_object() && page.contains("pageTimings") &&
        page["pageTimings"].is_object() &&
        page["pageTimings"].contains("onLoad") &&
        page["pageTimings"]["onLoad"].is_number()) {
      const double on_load = page["pageTimings"]["onLoad"].get<double>();
      if (on_load >= 0) out.page_load_ms = static_cast<int64_t>(llround(on_load));
    }
  }

  return out;
}

ParsedHar parse_har_file(const std::string& path) {
  return parse_har(read_text_file(path));
}

std::vector<SegmentTiming> extract_segments(
    const std::vector<HarEntry>& entries, const std::string& pattern) {
  std::regex re;
  try {
    re = std::regex(pattern);
  } catch (const std::regex_error& e) {
    fail(ErrorCode::InvalidArgument,
         "invalid segment pattern \"" + pattern + "\": " + e.what());
  }

  std::vector<const HarEntry*> matched;
  for (const HarEntry& entry : entries) {
    if (std::regex_search(entry.url, re)) matched.push_back(&entry);
  }
  if (matched.empty()) {
    fail(ErrorCode::NoSegmentsFound,
         "no entries match segment pattern \"" + pattern + "\"");
  }
  std::stable_sort(matched.begin(), matched.end(),
                   [](const HarEntry* a, const HarEntry* b) {
                     return a->started_at_ms < b->started_at_ms;
                   });

  std::vector<SegmentTiming> segments;
  segments.reserve(matched.size());
  int index = 1;
  for (const HarEntry* entry : matched) {
    SegmentTiming seg;
    seg.index = index++;
    seg.t_start_ms = entry->started_at_ms;
    seg.t_s_ms = entry->send_ms;
    seg.t_w_ms = entry->wait_ms;
    seg.t_r_ms = entry->receive_ms;
    seg.t_seg_ms = arrival_of(seg);
    seg.size_bytes = entry->body_size;
    segments.push_back(seg);
  }
  return segments;
}

void fill_uniform_durations(std::vector<SegmentTiming>& segments,
                            int64_t duration_ms) {
  if (duration_ms <= 0) {
    fail(ErrorCode::InvalidArgument, "segment duration must be positive");
  }
  for (auto& seg : segments) seg.duration_ms = duration_ms;
}

void fill_manifest_durations(std::vector<SegmentTiming>& segments,
                             const std::vector<int64_t>& durations_ms) {
  if (durations_ms.size() != segments.size()) {
    fail(ErrorCode::InvalidArgument,
         "manifest lists " + std::to_string(durations_ms.size()) +
             " durations for " + std::to_string(segments.size()) +
             " segments");
  }
  for (size_t i = 0; i < segments.size(); ++i) {
    if (durations_ms[i] <= 0) {
      fail(ErrorCode::InvalidArgument,
           "manifest duration " + std::to_string(i + 1) + " is not positive");
    }
    segments[i].duration_ms = durations_ms[i];
  }
}

SessionCapture make_capture(const ParsedHar& har,
                            std::vector<SegmentTiming> segments,
                            const std::string& source_path) {
  SessionCapture capture;
  capture.segments = std::move(segments);
  capture.page_load_ms = har.page_load_ms;
  capture.startup_ms =
      capture.segments.empty() ? 0 : capture.segments.front().t_seg_ms;
  capture.source_path = source_path;
  capture.epoch_unix_ms = har.epoch_unix_ms;
  return capture;
}

std::string capture_to_json(const SessionCapture& capture) {
  json doc;
  doc["schema"] = "qoe-capture/1";
  doc["source"] = capture.source_path;
  doc["epoch_unix_ms"] = capture.epoch_unix_ms;
  doc["page_load_ms"] = capture.page_load_ms;
  doc["startup_ms"] = capture.startup_ms;
  json segs = json::array();
  for (const auto& seg : capture.segments) {
    segs.push_back({{"index", seg.index},
                    {"t_start_ms", seg.t_start_ms},
                    {"t_s_ms", seg.t_s_ms},
                    {"t_w_ms", seg.t_w_ms},
                    {"t_r_ms", seg.t_r_ms},
                    {"t_seg_ms", seg.t_seg_ms},
                    {"duration_ms", seg.duration_ms},
                    {"size_bytes", seg.size_bytes}});
  }
  doc["segments"] = std::move(segs);
  return doc.dump(2) + "\n";
}

SessionCapture capture_from_json(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(ErrorCode::SchemaMismatch,
         std::string("capture is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("schema", "") != "qoe-capture/1" ||
      !doc.contains("segments") || !doc["segments"].is_array()) {
    fail(ErrorCode::SchemaMismatch, "not a qoe-capture/1 document");
  }
  SessionCapture capture;
  capture.source_path = doc.value("source", "");
  capture.epoch_unix_ms = doc.value("epoch_unix_ms", int64_t{0});
  capture.page_load_ms = doc.value("page_load_ms", int64_t{0});
  capture.startup_ms = doc.value("startup_ms", int64_t{0});
  for (const json& js : doc["segments"]) {
    SegmentTiming seg;
    seg.index = js.value("index", 0);
    seg.t_start_ms = js.value("t_start_ms", int64_t{0});
    seg.t_s_ms = js.value("t_s_ms", int64_t{0});
    seg.t_w_ms = js.value("t_w_ms", int64_t{0});
    seg.t_r_ms = js.value("t_r_ms", int64_t{0});
    seg.t_seg_ms = js.value("t_seg_ms", int64_t{0});
    seg.duration_ms = js.value("duration_ms", SegmentTiming::kDurationUnset);
    seg.size_bytes = js.value("size_bytes", int64_t{0});
    capture.segments.push_back(seg);
  }
  return capture;
}

void save_capture_json(const SessionCapture& capture, const std::string& path) {
  write_text_file(path, capture_to_json(capture));
}

SessionCapture load_capture_json(const std::string& path) {
  return capture_from_json(read_text_file(path));
}

}  // namespace qoe
