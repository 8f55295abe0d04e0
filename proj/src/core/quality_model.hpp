#ifndef QOE_CORE_QUALITY_MODEL_HPP
#define QOE_CORE_QUALITY_MODEL_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/stall_engine.hpp"

namespace qoe {

enum class VideoCodec { kH264 };
enum class AudioCodec { kAacLc, kHeAac, kMp2, kAc3 };

const char* video_codec_name(VideoCodec codec);
const char* audio_codec_name(AudioCodec codec);
AudioCodec audio_codec_from_name(const std::string& name);

struct SegmentMedia {
  double bitrate_kbps = 0;
  int width = 0;
  int height = 0;
  double framerate_fps = 0;
  double duration_s = 0;
  VideoCodec codec = VideoCodec::kH264;
  AudioCodec audio_codec = AudioCodec::kAacLc;
};

// The score bundle of the reference tool's output schema. All values live in
// [1, 5]; per-second lists cover ceil(total playback seconds).
struct QualityScores {
  std::vector<double> o21;  // per-second audio
  std::vector<double> o22;  // per-second video
  double o23 = 5.0;         // stalling quality
  std::vector<double> o34;  // per-second audiovisual
  double o35 = 0.0;         // audiovisual aggregate
  double o46 = 0.0;         // overall quality
  int mode = 0;
  int64_t stream_id = 0;  // carried, unused
};

enum class ScorerBackend { kSurrogate, kExternal };

struct ScorerConfig {
  int mode = 0;
  ScorerBackend backend = ScorerBackend::kSurrogate;
  std::string external_command;  // e.g. "python3 -m itu_p1203.extractor"
  bool use_average = false;
  int64_t timeout_ms = 120000;
};

// Built-in metadata-only scorer. The mapping is deliberately simple and
// fixed so outputs are reproducible:
//
//   o22(segment) = min(bitrate term, resolution cap, framerate cap), each a
//                  saturating curve into [1, 5]
//   o21(second)  = constant per audio codec
//   o34(second)  = 0.75 * o22 + 0.25 * o21
//   o35          = mean(o34)
//   o23          = 5 with no stalls, else 1 + 4 * exp(-(total/18 + events/4))
//   o46          = 1 + (o35 - 1) * (o23 - 1) / 4, so it can exceed neither.
QualityScores score_surrogate(const std::vector<SegmentMedia>& segments,
                              const StallReport& stalls, int mode = 0);

// Runs the external reference tool on media files or a prepared JSON spec
// and parses its output document (keys O21..O46, mode, streamId).
QualityScores score_external(const std::vector<std::string>& inputs,
                             const ScorerConfig& config);

// Parses the external tool's output schema directly.
QualityScores parse_scorer_output(const std::string& json_text);

// Mode-0 JSON spec consumed by external tools in place of media files.
std::string mode0_spec_to_json(const std::vector<SegmentMedia>& segments,
                               const StallReport& stalls);

inline double mos_from_scores(const QualityScores& scores) {
  return scores.o46;
}

}  // namespace qoe

#endif  // QOE_CORE_QUALITY_MODEL_HPP
