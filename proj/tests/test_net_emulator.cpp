#include <doctest.h>

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "core/errors.hpp"
#include "core/net_emulator.hpp"
#include "core/stall_engine.hpp"
#include "support/test_util.hpp"

using namespace qoe;
using qoe::testing::data_path;

namespace {

bool error_mentions(ErrorCode code, const std::string& needle,
                    const std::function<void()>& fn) {
  try {
    fn();
  } catch (const QoeError& e) {
    return e.code() == code &&
           std::string(e.what()).find(needle) != std::string::npos;
  }
  return false;
}

SegmentMedia media(double kbps, double dur_s) {
  SegmentMedia m;
  m.bitrate_kbps = kbps;
  m.width = 640;
  m.height = 360;
  m.framerate_fps = 30;
  m.duration_s = dur_s;
  return m;
}

NetworkProfile wired_profile() {
  NetworkProfile p;
  p.name = "wired";
  p.incoming = {30, 0, 0, 8000000};
  p.outgoing = {40, 0, 0, 2000000};
  return p;
}

}  // namespace

TEST_CASE("the Good 4G listing parses exactly") {
  const auto profiles = parse_profiles_file(data_path("profiles.txt"));
  REQUIRE(profiles.size() == 6);

  const NetworkProfile& good = profiles[0];
  CHECK(good.name == "Good 4G");
  CHECK(good.incoming == DirectionSpec{20, 5, 0, 10000000});
  CHECK(good.outgoing == DirectionSpec{20, 5, 0, 5000000});

  CHECK(profiles[1].name == "Modest WiFi");
  CHECK(profiles[1].incoming.loss_pct == 0.5);
  CHECK(profiles[2].name == "Congested LTE");
  CHECK(profiles[2].incoming.rate_bps == 1500000);
  CHECK(profiles[3].name == "Satellite Link");
  CHECK(profiles[4].name == "Poor 3G");
  CHECK(profiles[4].outgoing.rate_bps == 400000);
  CHECK(profiles[5].name == "Crowded EDGE");
}

TEST_CASE("profile grammar units and shapes") {
  const auto p = parse_profiles(
      "-incoming\ndelay 1.5ms\ndelay-distro 0ms\nloss 2.5%\nrate 750bps\n"
      "-outgoing\ndelay 2ms\ndelay-distro 0ms\nloss 0%\nrate 1500Kbps\n");
  REQUIRE(p.size() == 1);
  CHECK(p[0].name == "custom-1");  // unnamed blocks get ordinals
  CHECK(p[0].incoming.delay_ms == 1.5);
  CHECK(p[0].incoming.loss_pct == 2.5);
  CHECK(p[0].incoming.rate_bps == 750);
  CHECK(p[0].outgoing.rate_bps == 1500000);
}

TEST_CASE("profile syntax errors carry line numbers") {
  CHECK(error_mentions(ErrorCode::ProfileSyntax, "line 1", [] {
    parse_profiles("delay 20ms\n");
  }));
  CHECK(error_mentions(ErrorCode::ProfileSyntax, "line 3", [] {
    parse_profiles("-incoming\ndelay 20ms\ndelay 30ms\n");
  }));
  CHECK(error_mentions(ErrorCode::ProfileSyntax, "line 2", [] {
    parse_profiles("-incoming\ndelay 20s\n");
  }));
  CHECK(error_mentions(ErrorCode::ProfileSyntax, "line 2", [] {
    parse_profiles("-incoming\nloss 150%\n");
  }));
  CHECK(error_mentions(ErrorCode::ProfileSyntax, "line 2", [] {
    parse_profiles("-incoming\nrate 0Mbps\n");
  }));
  CHECK(error_mentions(ErrorCode::ProfileSyntax, "line 2", [] {
    parse_profiles("-incoming\nrate 10Gbps\n");
  }));
  CHECK(error_mentions(ErrorCode::ProfileSyntax, "line 4", [] {
    parse_profiles("-incoming\ndelay 1ms\ndelay-distro 1ms\nbananas 3\n");
  }));
  CHECK(error_mentions(ErrorCode::ProfileSyntax, "line 3", [] {
    parse_profiles("-incoming\ndelay 1ms\n-incoming\n");
  }));

  // A complete -incoming section but no -outgoing at all.
  CHECK(error_mentions(ErrorCode::MissingDirection, "-outgoing", [] {
    parse_profiles(
        "// A Network Profile:\n-incoming\ndelay 1ms\ndelay-distro 0ms\n"
        "loss 0%\nrate 1Mbps\n");
  }));
  // Directions present but a directive missing.
  CHECK(error_mentions(ErrorCode::ProfileSyntax, "rate", [] {
    parse_profiles(
        "-incoming\ndelay 1ms\ndelay-distro 0ms\nloss 0%\n"
        "-outgoing\ndelay 1ms\ndelay-distro 0ms\nloss 0%\nrate 1Mbps\n");
  }));
  CHECK(error_mentions(ErrorCode::Io, "no/such", [] {
    parse_profiles_file("/no/such/profiles.txt");
  }));
}

TEST_CASE("plain comments are ignored, headers separate profiles") {
  const auto p = parse_profiles(
      "// just a note\n"
      "// First Network Profile:\n"
      "-incoming\ndelay 1ms\ndelay-distro 0ms\nloss 0%\nrate 1Mbps\n"
      "// another note\n"
      "-outgoing\ndelay 1ms\ndelay-distro 0ms\nloss 0%\nrate 1Mbps\n"
      "// Second Network Profile:\n"
      "-incoming\ndelay 2ms\ndelay-distro 0ms\nloss 0%\nrate 2Mbps\n"
      "-outgoing\ndelay 2ms\ndelay-distro 0ms\nloss 0%\nrate 2Mbps\n");
  REQUIRE(p.size() == 2);
  CHECK(p[0].name == "First");
  CHECK(p[1].name == "Second");
}

TEST_CASE("render o parse is the identity on normalized profiles") {
  const auto profiles = parse_profiles_file(data_path("profiles.txt"));
  const std::string rendered = render_profiles(profiles);
  const auto reparsed = parse_profiles(rendered);
  REQUIRE(reparsed.size() == profiles.size());
  for (size_t i = 0; i < profiles.size(); ++i) {
    CHECK(reparsed[i] == profiles[i]);
  }

  // Spot-check the exact text for the first stock profile.
  CHECK(rendered.find("// Good 4G Network Profile:\n-incoming\ndelay 20ms\n"
                      "delay-distro 5ms\nloss 0%\nrate 10Mbps\n-outgoing\n"
                      "delay 20ms\ndelay-distro 5ms\nloss 0%\nrate 5Mbps\n") !=
        std::string::npos);
}

TEST_CASE("deterministic transfer arithmetic without jitter") {
  // 400 kbps x 10 s = 500000 bytes; t_s = 400 B at 2 Mbps -> 1.6 -> 2 ms;
  // t_w = 30 + 40 = 70 ms; t_r = 500000 B at 8 Mbps -> 500 ms.
  const auto [segments, kpi] =
      simulate_session(wired_profile(), std::vector<SegmentMedia>(5, media(400, 10)), 1);
  REQUIRE(segments.size() == 5);
  for (const auto& s : segments) {
    CHECK(s.t_s_ms == 2);
    CHECK(s.t_w_ms == 70);
    CHECK(s.t_r_ms == 500);
    CHECK(s.size_bytes == 500000);
    CHECK(s.duration_ms == 10000);
    CHECK(s.t_seg_ms == arrival_of(s));
  }

  // Fetch policy: segment 2 waits on segment 1's arrival; segments 4 and 5
  // gate on playback reaching two segments back.
  CHECK(segments[0].t_start_ms == 0);
  CHECK(segments[0].t_seg_ms == 572);
  CHECK(segments[1].t_start_ms == 572);
  CHECK(segments[1].t_seg_ms == 1144);
  CHECK(segments[2].t_start_ms == 1144);
  CHECK(segments[3].t_start_ms == 10572);
  CHECK(segments[4].t_start_ms == 20572);
  CHECK(segments[4].t_seg_ms == 21144);

  CHECK(kpi.delay_ms == 70.0);
  CHECK(kpi.jitter_ms == 0.0);
  CHECK(kpi.bitrate_kbps == 400.0);
  CHECK(kpi.packet_loss_pct == 0.0);
  CHECK(kpi.throughput_bps == doctest::Approx(945894.816496).epsilon(1e-9));

  // The 2-ahead buffer alone never causes stalls.
  CHECK(detect_stalls_timeline(segments, 0).events.empty());
}

TEST_CASE("loss inflates transfer time") {
  NetworkProfile p = wired_profile();
  p.incoming.loss_pct = 20;
  const auto [segments, kpi] = simulate_session(p, {media(400, 10)}, 1);
  CHECK(segments[0].t_r_ms == 625);  // 500 / 0.8
  CHECK(kpi.packet_loss_pct == 20.0);
}

TEST_CASE("emulation is bit-deterministic in the seed") {
  const auto profiles = parse_profiles_file(data_path("profiles.txt"));
  const std::vector<SegmentMedia> session(5, media(550, 10));
  const auto [seg_a, kpi_a] = simulate_session(profiles[1], session, 42);
  const auto [seg_b, kpi_b] = simulate_session(profiles[1], session, 42);
  const auto [seg_c, kpi_c] = simulate_session(profiles[1], session, 43);

  REQUIRE(seg_a.size() == seg_b.size());
  bool identical = true;
  for (size_t i = 0; i < seg_a.size(); ++i) {
    identical = identical && seg_a[i].t_w_ms == seg_b[i].t_w_ms &&
                seg_a[i].t_seg_ms == seg_b[i].t_seg_ms;
  }
  CHECK(identical);
  CHECK(kpi_a.delay_ms == kpi_b.delay_ms);
  CHECK(kpi_a.jitter_ms == kpi_b.jitter_ms);

  bool differs = false;
  for (size_t i = 0; i < seg_a.size(); ++i) {
    differs = differs || seg_a[i].t_w_ms != seg_c[i].t_w_ms;
  }
  CHECK(differs);
}

TEST_CASE("jitter draws stay inside the configured spread") {
  NetworkProfile p;
  p.name = "jittery";
  p.incoming = {100, 30, 0, 8000000};
  p.outgoing = {50, 20, 0, 2000000};
  const std::vector<SegmentMedia> session(40, media(400, 10));
  for (uint64_t seed : {1, 2, 3, 4, 5}) {
    const auto [segments, kpi] = simulate_session(p, session, seed);
    for (const auto& s : segments) {
      // t_w = 150 +- (30 + 20), plus 0.5 for rounding.
      CHECK(s.t_w_ms >= 100);
      CHECK(s.t_w_ms <= 200);
    }
    CHECK(kpi.delay_ms >= 100);
    CHECK(kpi.delay_ms <= 200);
    CHECK(kpi.jitter_ms >= 0);
    CHECK(kpi.jitter_ms <= 100);
  }
}

TEST_CASE("degenerate profiles and bad media are rejected") {
  NetworkProfile p = wired_profile();
  p.incoming.loss_pct = 100;
  CHECK(error_mentions(ErrorCode::DegenerateProfile, "100%", [&] {
    simulate_session(p, {media(400, 10)}, 1);
  }));
  CHECK(error_mentions(ErrorCode::InvalidArgument, "no media", [] {
    simulate_session(wired_profile(), {}, 1);
  }));
}

TEST_CASE("chronic undersupply stalls every later segment") {
  // 680 kbps media over an effective 582 kbps link: each 10 s segment
  // takes ~11.7 s to fetch.
  NetworkProfile p;
  p.name = "thin";
  p.incoming = {150, 0, 3, 600000};
  p.outgoing = {150, 0, 3, 400000};
  const auto [segments, kpi] =
      simulate_session(p, std::vector<SegmentMedia>(4, media(680, 10)), 9);
  const StallReport stalls = detect_stalls_timeline(segments, 0);
  CHECK(stalls.events.size() == 3);  // segments 2..4 all arrive late
  CHECK(stalls.total_s > 3.0);
}
