#include "core/quality_model.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <csignal>
#include <cstring>

#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "core/errors.hpp"

namespace qoe {

using nlohmann::ordered_json;

const char* video_codec_name(VideoCodec codec) {
  switch (codec) {
    case VideoCodec::kH264: return "h264";
  }
  return "unknown";
}

const char* audio_codec_name(AudioCodec codec) {
  switch (codec) {
    case AudioCodec::kAacLc: return "aac_lc";
    case AudioCodec::kHeAac: return "he_aac";
    case AudioCodec::kMp2: return "mp2";
    case AudioCodec::kAc3: return "ac3";
  }
  return "unknown";
}

AudioCodec audio_codec_from_name(const std::string& name) {
  if (name == "aac_lc") return AudioCodec::kAacLc;
  if (name == "he_aac") return AudioCodec::kHeAac;
  if (name == "mp2") return AudioCodec::kMp2;
  if (name == "ac3") return AudioCodec::kAc3;
  fail(ErrorCode::InvalidArgument, "unknown audio codec \"" + name + "\"");
}

namespace {

// Surrogate constants. Knees put 360p at mid-scale and let the bitrate term
// saturate around typical HLS ladder rates.
constexpr double kBitrateKneeKbps = 400.0;
constexpr double kAreaKneePx = 180000.0;
constexpr double kFramerateKneeFps = 3.0;
constexpr double kStallTotalScaleS = 18.0;
constexpr double kStallEventScale = 4.0;
constexpr double kAudioWeight = 0.25;

double audio_score(AudioCodec codec) {
  switch (codec) {
    case AudioCodec::kAacLc: return 4.40;
    case AudioCodec::kHeAac: return 4.30;
    case AudioCodec::kMp2: return 4.10;
    case AudioCodec::kAc3: return 4.20;
  }
  return 4.0;
}

double clamp_score(double v) { return std::clamp(v, 1.0, 5.0); }

double segment_video_score(const SegmentMedia& m) {
  const double bitrate_term =
      1.0 + 4.0 * (1.0 - std::exp(-m.bitrate_kbps / kBitrateKneeKbps));
  const double area = static_cast<double>(m.width) * m.height;
  const double resolution_cap = 1.0 + 4.0 * area / (area + kAreaKneePx);
  const double framerate_cap =
      1.0 + 4.0 * m.framerate_fps / (m.framerate_fps + kFramerateKneeFps);
  return clamp_score(
      std::min({bitrate_term, resolution_cap, framerate_cap}));
}

void check_media(const SegmentMedia& m, size_t index) {
  if (m.bitrate_kbps <= 0 || m.width <= 0 || m.height <= 0 ||
      m.framerate_fps <= 0 || m.duration_s <= 0) {
    fail(ErrorCode::InvalidArgument,
         "segment media " + std::to_string(index + 1) +
             " has a non-positive field");
  }
  if (m.codec != VideoCodec::kH264) {
    fail(ErrorCode::InvalidArgument, "unsupported video codec");
  }
}

}  // namespace

QualityScores score_surrogate(const std::vector<SegmentMedia>& segments,
                              const StallReport& stalls, int mode) {
  if (mode != 0) {
    fail(ErrorCode::UnsupportedMode,
         "surrogate backend implements mode 0 only, got mode " +
             std::to_string(mode));
  }
  if (segments.empty()) {
    fail(ErrorCode::InvalidArgument, "no segments to score");
  }

  double total_s = 0;
  for (size_t i = 0; i < segments.size(); ++i) {
    check_media(segments[i], i);
    total_s += segments[i].duration_s;
  }
  const size_t seconds = static_cast<size_t>(std::ceil(total_s));

  QualityScores scores;
  scores.mode = mode;
  scores.o21.reserve(seconds);
  scores.o22.reserve(seconds);
  scores.o34.reserve(seconds);

  // Each whole second takes the score of the segment active at its start.
  size_t seg = 0;
  double seg_end = segments[0].duration_s;
  double video = segment_video_score(segments[0]);
  double audio = audio_score(segments[0].audio_codec);
  for (size_t second = 0; second < seconds; ++second) {
    while (static_cast<double>(second) >= seg_end &&
           seg + 1 < segments.size()) {
      ++seg;
      seg_end += segments[seg].duration_s;
      video = segment_video_score(segments[seg]);
      audio = audio_score(segments[seg].audio_codec);
    }
    scores.o21.push_back(audio);
    scores.o22.push_back(video);
    scores.o34.push_back(
        clamp_score((1.0 - kAudioWeight) * video + kAudioWeight * audio));
  }

  double sum = 0;
  for (double v : scores.o34) sum += v;
  scores.o35 = clamp_score(sum / static_cast<double>(scores.o34.size()));

  if (stalls.events.empty()) {
    scores.o23 = 5.0;
  } else {
    const double penalty =
        stalls.total_s / kStallTotalScaleS +
        static_cast<double>(stalls.events.size()) / kStallEventScale;
    scores.o23 = clamp_score(1.0 + 4.0 * std::exp(-penalty));
  }

  scores.o46 = clamp_score(1.0 + (scores.o35 - 1.0) * (scores.o23 - 1.0) / 4.0);
  return scores;
}

namespace {

double require_score(const ordered_json& doc, const char* key) {
  if (!doc.contains(key) || !doc[key].is_number()) {
    fail(ErrorCode::SchemaMismatch,
         std::string("scorer output missing numeric \"") + key + "\"");
  }
  const double v = doc[key].get<double>();
  if (v < 1.0 || v > 5.0) {
    fail(ErrorCode::SchemaMismatch, std::string("scorer output \"") + key +
                                        "\" = " + std::to_string(v) +
                                        " out of [1,5]");
  }
  return v;
}

std::vector<double> optional_score_list(const ordered_json& doc,
                                        const char* key) {
  std::vector<double> out;
  if (!doc.contains(key)) return out;
  if (!doc[key].is_array()) {
    fail(ErrorCode::SchemaMismatch,
         std::string("scorer output \"") + key + "\" is not a list");
  }
  for (const auto& v : doc[key]) {
    if (!v.is_number()) {
      fail(ErrorCode::SchemaMismatch,
           std::string("scorer output \"") + key + "\" has a non-number");
    }
    const double s = v.get<double>();
    if (s < 1.0 || s > 5.0) {
      fail(ErrorCode::SchemaMismatch, std::string("scorer output \"") + key +
                                          "\" value out of [1,5]");
    }
    out.push_back(s);
  }
  return out;
}

struct CommandResult {
  int exit_code = -1;
  std::string stdout_text;
  bool timed_out = false;
};

// Runs `/bin/sh -c cmd` with a deadline, capturing stdout. The child gets
// its own process group so a timeout kill reaps the whole pipeline.
CommandResult run_command(const std::string& cmd, int64_t timeout_ms) {
  int fds[2];
  if (pipe(fds) != 0) {
    fail(ErrorCode::ExternalToolFailure,
         std::string("pipe failed: ") + std::strerror(errno));
  }

  const pid_t pid = fork();
  if (pid < 0) {
    close(fds[0]);
    close(fds[1]);
    fail(ErrorCode::ExternalToolFailure,
         std::string("fork failed: ") + std::strerror(errno));
  }
  if (pid == 0) {
    setpgid(0, 0);
    dup2(fds[1], STDOUT_FILENO);
    close(fds[0]);
    close(fds[1]);
    execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }

  close(fds[1]);
  CommandResult result;
  const int64_t slice_ms = 50;
  int64_t waited_ms = 0;
  char buf[4096];
  bool open = true;
  while (open) {
    struct pollfd pfd = {fds[0], POLLIN, 0};
    const int rc = poll(&pfd, 1, static_cast<int>(slice_ms));
    if (rc > 0) {
      const ssize_t n = read(fds[0], buf, sizeof(buf));
      if (n > 0) {
        result.stdout_text.append(buf, static_cast<size_t>(n));
      } else {
        open = false;
      }
    } else {
      waited_ms += slice_ms;
      if (waited_ms >= timeout_ms) {
        result.timed_out = true;
        kill(-pid, SIGKILL);
        open = false;
      }
    }
  }
  close(fds[0]);

  int status = 0;
  waitpid(pid, &status, 0);
  if (WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
  return result;
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  out += "'";
  return out;
}

}  // namespace

QualityScores parse_scorer_output(const std::string& json_text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(json_text);
  } catch (const ordered_json::exception& e) {
    fail(ErrorCode::SchemaMismatch,
         std::string("scorer output is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.empty()) {
    fail(ErrorCode::SchemaMismatch, "scorer output is not a JSON object");
  }

  // The tool keys results by input file; score the first one. A document
  // that is itself a score block (no nesting) is accepted too.
  const ordered_json* block = &doc;
  if (!doc.contains("O46")) {
    block = &doc.begin().value();
    if (!block->is_object()) {
      fail(ErrorCode::SchemaMismatch, "scorer output has no score block");
    }
  }

  QualityScores scores;
  scores.o21 = optional_score_list(*block, "O21");
  scores.o22 = optional_score_list(*block, "O22");
  scores.o23 = require_score(*block, "O23");
  scores.o34 = optional_score_list(*block, "O34");
  scores.o35 = require_score(*block, "O35");
  scores.o46 = require_score(*block, "O46");
  scores.mode = block->value("mode", 0);
  scores.stream_id = block->value("streamId", int64_t{0});
  return scores;
}

QualityScores score_external(const std::vector<std::string>& inputs,
                             const ScorerConfig& config) {
  if (config.external_command.empty()) {
    fail(ErrorCode::InvalidArgument, "external scorer command not configured");
  }
  if (inputs.empty()) {
    fail(ErrorCode::InvalidArgument, "no inputs for external scorer");
  }

  std::string cmd = config.external_command;
  if (config.use_average) cmd += " --use-average";
  cmd += " -m " + std::to_string(config.mode);
  for (const auto& input : inputs) cmd += " " + shell_quote(input);

  const CommandResult result = run_command(cmd, config.timeout_ms);
  if (result.timed_out) {
    fail(ErrorCode::ExternalToolFailure,
         "external scorer timed out after " +
             std::to_string(config.timeout_ms) + " ms: " + cmd);
  }
  if (result.exit_code != 0) {
    fail(ErrorCode::ExternalToolFailure,
         "external scorer exited with status " +
             std::to_string(result.exit_code) + ": " + cmd);
  }
  return parse_scorer_output(result.stdout_text);
}

std::string mode0_spec_to_json(const std::vector<SegmentMedia>& segments,
                               const StallReport& stalls) {
  ordered_json doc;
  doc["schema"] = "qoe-mode0-spec/1";
  doc["mode"] = 0;
  ordered_json segs = ordered_json::array();
  for (const auto& m : segments) {
    segs.push_back({{"bitrate_kbps", m.bitrate_kbps},
                    {"width", m.width},
                    {"height", m.height},
                    {"framerate_fps", m.framerate_fps},
                    {"duration_s", m.duration_s},
                    {"codec", video_codec_name(m.codec)},
                    {"audio_codec", audio_codec_name(m.audio_codec)}});
  }
  doc["segments"] = std::move(segs);
  ordered_json ev = ordered_json::array();
  for (const auto& e : stalls.events) {
    ev.push_back({e.start_s, e.duration_s});
  }
  doc["stalling"] = std::move(ev);
  return doc.dump(2) + "\n";
}

}  // namespace qoe
