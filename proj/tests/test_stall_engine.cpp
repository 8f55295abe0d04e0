#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "core/errors.hpp"
#include "core/rng.hpp"
#include "core/stall_engine.hpp"
#include "support/playback_oracle.hpp"

using namespace qoe;
using qoe::testing::playback_oracle;

namespace {

bool fails_with(ErrorCode code, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const QoeError& e) {
    return e.code() == code;
  }
  return false;
}

// Timeline where segment i lands at arrivals[i] and plays for durations[i].
std::vector<SegmentTiming> make_timeline(const std::vector<int64_t>& arrivals,
                                         const std::vector<int64_t>& durations) {
  std::vector<SegmentTiming> segments(arrivals.size());
  for (size_t i = 0; i < arrivals.size(); ++i) {
    segments[i].index = static_cast<int>(i) + 1;
    segments[i].t_start_ms = arrivals[i];
    segments[i].t_seg_ms = arrivals[i];
    segments[i].duration_ms = durations[i];
  }
  return segments;
}

}  // namespace

TEST_CASE("hand-worked recurrence example") {
  // Arrivals 2000, 11000, 25000, 35000 with uniform 10 s segments:
  // relative arrivals 0, 9000, 23000, 33000.
  //   S2 = max(0, 9000 - 10000) = 0
  //   S3 = max(0, 23000 - 20000) = 3000 at media position 20 s
  //   S4 = max(0, 33000 - 33000) = 0
  const auto segments =
      make_timeline({2000, 11000, 25000, 35000}, {10000, 10000, 10000, 10000});
  const StallReport report = detect_stalls_timeline(segments, 0);
  REQUIRE(report.events.size() == 1);
  CHECK(report.events[0].start_s == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(report.events[0].duration_s == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(report.total_s == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(report.method == StallMethod::kTimeline);
}

TEST_CASE("startup spin-up shifts the first deadline") {
  const auto segments =
      make_timeline({2000, 11000, 25000, 35000}, {10000, 10000, 10000, 10000});
  // With a 500 ms spin-up the segment-3 overshoot shrinks to 2.5 s.
  const StallReport report = detect_stalls_timeline(segments, 500);
  REQUIRE(report.events.size() == 1);
  CHECK(report.total_s == doctest::Approx(2.5).epsilon(1e-12));

  // A huge spin-up absorbs every stall.
  CHECK(detect_stalls_timeline(segments, 60000).events.empty());
  CHECK(fails_with(ErrorCode::InvalidArgument,
                   [&] { detect_stalls_timeline(segments, -1); }));
}

TEST_CASE("fast delivery has no stalls and startup wait is not a stall") {
  // First arrival late (5 s startup) but everything pipelined after.
  const auto segments =
      make_timeline({5000, 6000, 7000}, {10000, 10000, 10000});
  const StallReport report = detect_stalls_timeline(segments, 0);
  CHECK(report.events.empty());
  CHECK(report.total_s == 0.0);
}

TEST_CASE("every late segment stalls and stalls push later deadlines") {
  // Each arrival overshoots by exactly 1 s beyond the accumulated delay.
  const auto segments = make_timeline({0, 11000, 23000, 36000},
                                      {10000, 10000, 10000, 10000});
  const StallReport report = detect_stalls_timeline(segments, 0);
  REQUIRE(report.events.size() == 3);
  CHECK(report.events[0].start_s == doctest::Approx(10.0));
  CHECK(report.events[0].duration_s == doctest::Approx(1.0));
  CHECK(report.events[1].start_s == doctest::Approx(20.0));
  CHECK(report.events[1].duration_s == doctest::Approx(2.0));
  CHECK(report.events[2].start_s == doctest::Approx(30.0));
  CHECK(report.events[2].duration_s == doctest::Approx(3.0));
  CHECK(report.total_s == doctest::Approx(6.0));
}

TEST_CASE("validation: indices, durations, monotone arrivals") {
  auto segments = make_timeline({0, 1000}, {10000, 10000});
  segments[1].index = 3;
  CHECK(fails_with(ErrorCode::InvalidArgument,
                   [&] { detect_stalls_timeline(segments, 0); }));

  segments = make_timeline({0, 1000}, {10000, 10000});
  segments[1].duration_ms = SegmentTiming::kDurationUnset;
  CHECK(fails_with(ErrorCode::MissingDurations,
                   [&] { detect_stalls_timeline(segments, 0); }));

  segments = make_timeline({5000, 1000}, {10000, 10000});
  CHECK(fails_with(ErrorCode::NonMonotoneArrivals,
                   [&] { detect_stalls_timeline(segments, 0); }));

  CHECK(detect_stalls_timeline({}, 0).events.empty());
}

TEST_CASE("timeline detector agrees with the 1 ms playback oracle") {
  Rng rng(20240301);
  for (int trial = 0; trial < 250; ++trial) {
    const int n = static_cast<int>(rng.uniform_int(1, 20));
    std::vector<int64_t> arrivals(n), durations(n);
    int64_t t = rng.uniform_int(0, 3000);
    for (int i = 0; i < n; ++i) {
      arrivals[i] = t;
      t += rng.uniform_int(0, 15000);
      durations[i] = rng.uniform_int(2000, 12000);
    }
    const auto segments = make_timeline(arrivals, durations);
    const int64_t startup = rng.uniform_int(0, 2) == 0
                                ? rng.uniform_int(0, 2000)
                                : 0;

    const StallReport fast = detect_stalls_timeline(segments, startup);
    const StallReport slow = playback_oracle(segments, startup);
    REQUIRE(fast.events.size() == slow.events.size());
    for (size_t i = 0; i < fast.events.size(); ++i) {
      CHECK(fast.events[i].start_s ==
            doctest::Approx(slow.events[i].start_s).epsilon(1e-9));
      CHECK(fast.events[i].duration_s ==
            doctest::Approx(slow.events[i].duration_s).epsilon(1e-9));
    }
    CHECK(fast.total_s == doctest::Approx(slow.total_s).epsilon(1e-9));
  }
}

TEST_CASE("poller turns stalled runs into events") {
  using S = PlayerState;
  // play play stall stall stall play stall play play
  const std::vector<S> trace = {S::kPlaying, S::kPlaying, S::kStalled,
                                S::kStalled, S::kStalled, S::kPlaying,
                                S::kStalled, S::kPlaying, S::kPlaying};
  const StallReport report = detect_stalls_poller(trace);
  REQUIRE(report.events.size() == 2);
  CHECK(report.events[0].start_s == 2.0);  // after 2 playing samples
  CHECK(report.events[0].duration_s == 3.0);
  CHECK(report.events[1].start_s == 3.0);
  CHECK(report.events[1].duration_s == 1.0);
  CHECK(report.total_s == 4.0);
  CHECK(report.method == StallMethod::kPoller);

  // Trailing stall run still closes.
  const StallReport tail =
      detect_stalls_poller({S::kPlaying, S::kStalled, S::kStalled});
  REQUIRE(tail.events.size() == 1);
  CHECK(tail.events[0].start_s == 1.0);
  CHECK(tail.events[0].duration_s == 2.0);

  CHECK(detect_stalls_poller({S::kPlaying, S::kPlaying}).events.empty());
  CHECK(fails_with(ErrorCode::EmptyTrace, [] { detect_stalls_poller({}); }));
}

TEST_CASE("poller and timeline agree on equivalent sessions") {
  // 2 s segments delivered so that playback holds 3 s at media 4 s.
  const auto segments =
      make_timeline({0, 1000, 2000, 9000}, {2000, 2000, 2000, 2000});
  const StallReport timeline = detect_stalls_timeline(segments, 0);
  REQUIRE(timeline.events.size() == 1);
  CHECK(timeline.events[0].start_s == doctest::Approx(6.0));
  CHECK(timeline.events[0].duration_s == doctest::Approx(3.0));

  using S = PlayerState;
  std::vector<S> trace;
  for (int i = 0; i < 6; ++i) trace.push_back(S::kPlaying);
  for (int i = 0; i < 3; ++i) trace.push_back(S::kStalled);
  for (int i = 0; i < 2; ++i) trace.push_back(S::kPlaying);
  const StallReport polled = detect_stalls_poller(trace);
  REQUIRE(polled.events.size() == 1);
  CHECK(polled.events[0].start_s == timeline.events[0].start_s);
  CHECK(polled.events[0].duration_s == timeline.events[0].duration_s);
}

TEST_CASE("stalling string parse/format round trips") {
  const char* cases[] = {"3 - 20 | 7 - 10", "6 - 10", "0 - 0",
                         "1 - 20 | 9 - 10", "8 - 10 | 15 - 20"};
  for (const char* s : cases) {
    CHECK(format_stalling_string(parse_stalling_string(s)) == s);
  }

  // Onsets must stay strictly increasing once quantized.
  CHECK(fails_with(ErrorCode::InvalidArgument, [] {
    format_stalling_string(parse_stalling_string("15 - 20 | 8 - 10"));
  }));

  const auto events = parse_stalling_string("3 - 20 | 7 - 10");
  REQUIRE(events.size() == 2);
  CHECK(events[0].start_s == 3.0);
  CHECK(events[0].duration_s == 20.0);
  CHECK(events[1].start_s == 7.0);
  CHECK(events[1].duration_s == 10.0);

  CHECK(parse_stalling_string("0 - 0").empty());
  CHECK(format_stalling_string({}) == "0 - 0");
}

TEST_CASE("stalling string syntax errors") {
  for (const char* bad :
       {"", "5", "5 - ", "5-3", "a - b", "5 - 3 |", "| 5 - 3", "5  -  3",
        "5 - 3 | 0 - 0", "0 - 0 | 5 - 3", "5 - 0", "-5 - 3", "5 - 3.5"}) {
    CAPTURE(bad);
    CHECK(fails_with(ErrorCode::BadStallSyntax,
                     [&] { parse_stalling_string(bad); }));
  }
}

TEST_CASE("formatting quantizes and validates") {
  // Sub-second durations round up to the 1 s encoding floor.
  CHECK(format_stalling_string({{10.2, 0.3}}) == "10 - 1");
  CHECK(format_stalling_string({{10.6, 2.5}}) == "11 - 3");  // llround
  CHECK(format_stalling_string({{0.0, 4.0}, {20.0, 1.49}}) == "0 - 4 | 20 - 1");

  CHECK(fails_with(ErrorCode::InvalidArgument,
                   [] { format_stalling_string({{-1.0, 2.0}}); }));
  CHECK(fails_with(ErrorCode::InvalidArgument,
                   [] { format_stalling_string({{1.0, 0.0}}); }));
  // Two events that quantize onto the same start second collide.
  CHECK(fails_with(ErrorCode::InvalidArgument, [] {
    format_stalling_string({{10.1, 1.0}, {10.3, 1.0}});
  }));
}
