#ifndef QOE_CORE_NET_EMULATOR_HPP
#define QOE_CORE_NET_EMULATOR_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "core/quality_model.hpp"
#include "core/segment_timeline.hpp"

namespace qoe {

// One direction of a network profile, units normalized at parse time
// (Mbps -> bps etc).
struct DirectionSpec {
  double delay_ms = 0;
  double delay_distro_ms = 0;  // jitter spread, half-width of a uniform draw
  double loss_pct = 0;
  int64_t rate_bps = 0;

  bool operator==(const DirectionSpec&) const = default;
};

struct NetworkProfile {
  std::string name;
  DirectionSpec incoming;
  DirectionSpec outgoing;

  bool operator==(const NetworkProfile&) const = default;
};

// Session-level KPIs as measured by the emulator.
struct KpiSample {
  double delay_ms = 0;        // mean request round-trip (t_w)
  double jitter_ms = 0;       // mean |successive t_w difference|
  double packet_loss_pct = 0; // from the profile (incoming)
  double throughput_bps = 0;  // total payload bits / wall time
  double bitrate_kbps = 0;    // mean media bitrate
};

// Parses config text in the profile grammar:
//
//   // <name> Network Profile:
//   -incoming
//   delay 20ms
//   delay-distro 5ms
//   loss 0%
//   rate 10Mbps
//   -outgoing
//   ...
//
// Errors carry 1-based line numbers. Unnamed blocks are named
// custom-<ordinal>.
std::vector<NetworkProfile> parse_profiles(const std::string& config_text);
std::vector<NetworkProfile> parse_profiles_file(const std::string& path);

// Inverse of parse_profiles on normalized profiles (parse(render(p)) == p).
std::string render_profiles(const std::vector<NetworkProfile>& profiles);

// Deterministically simulates downloading `media` over `profile`.
//
// Per segment: size = bitrate*duration*125 bytes; t_s is the request
// upload time, t_w the two-way propagation delay plus a uniform jitter
// draw bounded by the delay-distro spreads, t_r the transfer time at
// the loss-degraded effective rate. Requests pipeline at most 2
// segments ahead of playback. Same (profile, media, seed) gives
// bit-identical results.
std::pair<std::vector<SegmentTiming>, KpiSample> simulate_session(
    const NetworkProfile& profile, const std::vector<SegmentMedia>& media,
    uint64_t seed);

}  // namespace qoe
#endif  // QOE_CORE_NET_EMULATOR_HPP
