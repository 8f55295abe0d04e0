#include "core/net_emulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>

#include "core/errors.hpp"
#include "core/har_ingest.hpp"
#include "core/rng.hpp"

namespace qoe {

namespace {

constexpr int64_t kRequestBytes = 400;  // HTTP GET incl. headers

[[noreturn]] void syntax_error(int line, const std::string& what) {
  fail(ErrorCode::ProfileSyntax, "line " + std::to_string(line) + ": " + what);
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// "delay 20ms" -> ("delay", "20ms")
std::pair<std::string, std::string> split_directive(const std::string& line) {
  size_t sp = line.find_first_of(" \t");
  if (sp == std::string::npos) return {line, ""};
  return {line.substr(0, sp), trim(line.substr(sp + 1))};
}

double parse_number(const std::string& text, size_t* consumed, int line) {
  try {
    double v = std::stod(text, consumed);
    return v;
  } catch (const std::exception&) {
    syntax_error(line, "expected a number in \"" + text + "\"");
  }
}

double parse_ms(const std::string& value, int line) {
  size_t used = 0;
  double v = parse_number(value, &used, line);
  if (value.substr(used) != "ms") {
    syntax_error(line, "expected <N>ms, got \"" + value + "\"");
  }
  if (v < 0) syntax_error(line, "negative time \"" + value + "\"");
  return v;
}

double parse_loss(const std::string& value, int line) {
  size_t used = 0;
  double v = parse_number(value, &used, line);
  if (value.substr(used) != "%") {
    syntax_error(line, "expected <N>%, got \"" + value + "\"");
  }
  if (v < 0 || v > 100) {
    syntax_error(line, "loss out of [0,100]: \"" + value + "\"");
  }
  return v;
}

int64_t parse_rate(const std::string& value, int line) {
  size_t used = 0;
  double v = parse_number(value, &used, line);
  const std::string unit = value.substr(used);
  double scale = 0;
  if (unit == "Mbps") {
    scale = 1e6;
  } else if (unit == "Kbps") {
    scale = 1e3;
  } else if (unit == "bps") {
    scale = 1;
  } else {
    syntax_error(line, "expected rate unit Mbps|Kbps|bps, got \"" + value + "\"");
  }
  const double bps = v * scale;
  if (!(bps > 0)) syntax_error(line, "rate must be positive: \"" + value + "\"");
  return static_cast<int64_t>(std::llround(bps));
}

struct DirectionDraft {
  std::optional<double> delay, distro, loss;
  std::optional<int64_t> rate;
  int start_line = 0;

  DirectionSpec finish(const char* marker) const {
    auto missing = [&](const char* field) {
      syntax_error(start_line, std::string(marker) + " section missing '" +
                                   field + "' directive");
    };
    if (!delay) missing("delay");
    if (!distro) missing("delay-distro");
    if (!loss) missing("loss");
    if (!rate) missing("rate");
    return {*delay, *distro, *loss, *rate};
  }
};

struct ProfileDraft {
  std::string name;
  int start_line = 0;
  std::optional<DirectionDraft> incoming, outgoing;
  DirectionDraft* current = nullptr;
};

// Matches "// <name> Network Profile:" and extracts the name.
std::optional<std::string> profile_header_name(const std::string& comment) {
  static const std::string kSuffix = "Network Profile:";
  std::string body = trim(comment.substr(2));
  if (body.size() < kSuffix.size()) return std::nullopt;
  if (body.compare(body.size() - kSuffix.size(), kSuffix.size(), kSuffix) != 0) {
    return std::nullopt;
  }
  return trim(body.substr(0, body.size() - kSuffix.size()));
}

std::string format_ms(double v) {
  char buf[64];
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    std::snprintf(buf, sizeof(buf), "%lldms", static_cast<long long>(v));
  } else {
    std::snprintf(buf, sizeof(buf), "%gms", v);
  }
  return buf;
}

std::string format_rate(int64_t bps) {
  char buf[64];
  if (bps % 1000000 == 0) {
    std::snprintf(buf, sizeof(buf), "%lldMbps",
                  static_cast<long long>(bps / 1000000));
  } else if (bps % 1000 == 0) {
    std::snprintf(buf, sizeof(buf), "%lldKbps",
                  static_cast<long long>(bps / 1000));
  } else {
    std::snprintf(buf, sizeof(buf), "%lldbps", static_cast<long long>(bps));
  }
  return buf;
}

}  // namespace

std::vector<NetworkProfile> parse_profiles(const std::string& config_text) {
  std::vector<NetworkProfile> profiles;
  std::optional<ProfileDraft> draft;

  auto finish_draft = [&](int line) {
    if (!draft) return;
    if (!draft->incoming || !draft->outgoing) {
      const char* which = !draft->incoming ? "-incoming" : "-outgoing";
      fail(ErrorCode::MissingDirection,
           "line " + std::to_string(draft->start_line) + ": profile \"" +
               draft->name + "\" has no " + which + " section (ended at line " +
               std::to_string(line) + ")");
    }
    NetworkProfile p;
    p.name = draft->name.empty()
                 ? "custom-" + std::to_string(profiles.size() + 1)
                 : draft->name;
    p.incoming = draft->incoming->finish("-incoming");
    p.outgoing = draft->outgoing->finish("-outgoing");
    profiles.push_back(std::move(p));
    draft.reset();
  };

  int line_no = 0;
  size_t pos = 0;
  while (pos <= config_text.size()) {
    size_t eol = config_text.find('\n', pos);
    if (eol == std::string::npos) eol = config_text.size();
    std::string line = trim(config_text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;

    if (line.empty()) continue;

    if (line.rfind("//", 0) == 0) {
      auto name = profile_header_name(line);
      if (name) {
        finish_draft(line_no - 1);
        draft = ProfileDraft{};
        draft->name = *name;
        draft->start_line = line_no;
      }
      continue;  // plain comments are skipped
    }

    if (line == "-incoming" || line == "-outgoing") {
      if (!draft) {  // unnamed block starts at its first marker
        draft = ProfileDraft{};
        draft->start_line = line_no;
      }
      const bool incoming = line == "-incoming";
      auto& slot = incoming ? draft->incoming : draft->outgoing;
      if (slot) {
        syntax_error(line_no, "duplicate " + line + " section");
      }
      slot = DirectionDraft{};
      slot->start_line = line_no;
      draft->current = &*slot;
      continue;
    }

    auto [key, value] = split_directive(line);
    if (key != "delay" && key != "delay-distro" && key != "loss" &&
        key != "rate") {
      syntax_error(line_no, "unknown directive \"" + key + "\"");
    }
    if (!draft || !draft->current) {
      syntax_error(line_no,
                   "\"" + key + "\" outside -incoming/-outgoing section");
    }
    DirectionDraft& d = *draft->current;
    if (key == "delay") {
      if (d.delay) syntax_error(line_no, "duplicate delay");
      d.delay = parse_ms(value, line_no);
    } else if (key == "delay-distro") {
      if (d.distro) syntax_error(line_no, "duplicate delay-distro");
      d.distro = parse_ms(value, line_no);
    } else if (key == "loss") {
      if (d.loss) syntax_error(line_no, "duplicate loss");
      d.loss = parse_loss(value, line_no);
    } else {
      if (d.rate) syntax_error(line_no, "duplicate rate");
      d.rate = parse_rate(value, line_no);
    }
  }
  finish_draft(line_no);
  return profiles;
}

std::vector<NetworkProfile> parse_profiles_file(const std::string& path) {
  return parse_profiles(read_text_file(path));
}

std::string render_profiles(const std::vector<NetworkProfile>& profiles) {
  std::string out;
  bool first = true;
  for (const auto& p : profiles) {
    if (!first) out += "\n";
    first = false;
    out += "// " + p.name + " Network Profile:\n";
    const std::pair<const char*, const DirectionSpec*> sections[] = {
        {"-incoming", &p.incoming}, {"-outgoing", &p.outgoing}};
    for (const auto& section : sections) {
      out += std::string(section.first) + "\n";
      const DirectionSpec& d = *section.second;
      out += "delay " + format_ms(d.delay_ms) + "\n";
      out += "delay-distro " + format_ms(d.delay_distro_ms) + "\n";
      out += "loss " + (d.loss_pct == std::floor(d.loss_pct)
                            ? std::to_string(static_cast<long long>(d.loss_pct))
                            : std::to_string(d.loss_pct)) +
             "%\n";
      out += "rate " + format_rate(d.rate_bps) + "\n";
    }
  }
  return out;
}

namespace {

// Transfer time in ms for `bytes` at `rate_bps` with loss modeled as a
// retransmission-inflated effective rate.
int64_t transfer_ms(int64_t bytes, int64_t rate_bps, double loss_pct) {
  const double effective = static_cast<double>(rate_bps) * (1.0 - loss_pct / 100.0);
  return std::llround(static_cast<double>(bytes) * 8.0 * 1000.0 / effective);
}

}  // namespace

std::pair<std::vector<SegmentTiming>, KpiSample> simulate_session(
    const NetworkProfile& profile, const std::vector<SegmentMedia>& media,
    uint64_t seed) {
  if (media.empty()) {
    fail(ErrorCode::InvalidArgument, "simulate_session: no media segments");
  }
  if (profile.incoming.loss_pct >= 100.0 ||
      profile.outgoing.loss_pct >= 100.0) {
    fail(ErrorCode::DegenerateProfile,
         "profile \"" + profile.name + "\" has 100% loss; nothing can arrive");
  }

  Rng rng(seed);
  const DirectionSpec& in = profile.incoming;
  const DirectionSpec& out = profile.outgoing;
  const int n = static_cast<int>(media.size());

  std::vector<SegmentTiming> segments(n);
  std::vector<int64_t> t_w_draws(n);
  std::vector<int64_t> play_start(n);

  int64_t total_bytes = 0;
  for (int i = 0; i < n; ++i) {
    const SegmentMedia& m = media[i];
    const int64_t size_bytes =
        std::llround(m.bitrate_kbps * m.duration_s * 125.0);
    const int64_t t_s = transfer_ms(kRequestBytes, out.rate_bps, out.loss_pct);
    const double jitter_out =
        out.delay_distro_ms > 0
            ? rng.uniform(-out.delay_distro_ms, out.delay_distro_ms)
            : 0.0;
    const double jitter_in =
        in.delay_distro_ms > 0
            ? rng.uniform(-in.delay_distro_ms, in.delay_distro_ms)
            : 0.0;
    const int64_t t_w = std::max<int64_t>(
        0, std::llround(out.delay_ms + in.delay_ms + jitter_out + jitter_in));
    const int64_t t_r = transfer_ms(size_bytes, in.rate_bps, in.loss_pct);
    t_w_draws[i] = t_w;
    total_bytes += size_bytes;

    SegmentTiming& s = segments[i];
    s.index = i + 1;
    s.t_s_ms = t_s;
    s.t_w_ms = t_w;
    s.t_r_ms = t_r;
    s.duration_ms = std::llround(m.duration_s * 1000.0);
    s.size_bytes = size_bytes;

    // Request policy: fetch sequentially, at most 2 segments ahead of
    // playback — segment i may start once segment i-2 starts playing.
    if (i == 0) {
      s.t_start_ms = 0;
    } else if (i == 1) {
      s.t_start_ms = segments[0].t_seg_ms;
    } else {
      s.t_start_ms = std::max(segments[i - 1].t_seg_ms, play_start[i - 2]);
    }
    s.t_seg_ms = s.t_start_ms + s.t_s_ms + s.t_w_ms + s.t_r_ms;

    if (i == 0) {
      play_start[0] = s.t_seg_ms;  // playback clock starts at first arrival
    } else {
      play_start[i] = std::max(play_start[i - 1] + segments[i - 1].duration_ms,
                               s.t_seg_ms);
    }
  }

  KpiSample kpi;
  kpi.packet_loss_pct = in.loss_pct;
  double w_sum = 0, w_abs_diff = 0, br_sum = 0;
  for (int i = 0; i < n; ++i) {
    w_sum += static_cast<double>(t_w_draws[i]);
    if (i > 0) {
      w_abs_diff += std::abs(static_cast<double>(t_w_draws[i] - t_w_draws[i - 1]));
    }
    br_sum += media[i].bitrate_kbps;
  }
  kpi.delay_ms = w_sum / n;
  kpi.jitter_ms = n > 1 ? w_abs_diff / (n - 1) : 0.0;
  kpi.bitrate_kbps = br_sum / n;
  const int64_t wall_ms = segments.back().t_seg_ms;
  kpi.throughput_bps = wall_ms > 0 ? static_cast<double>(total_bytes) * 8.0 *
                                         1000.0 / static_cast<double>(wall_ms)
                                   : 0.0;
  return {std::move(segments), kpi};
}

}  // namespace qoe
