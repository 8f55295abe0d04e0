#include "core/dataset_store.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "core/errors.hpp"
#include "core/har_ingest.hpp"
#include "core/stall_engine.hpp"

namespace qoe {

const std::vector<std::string>& canonical_columns() {
  static const std::vector<std::string> kColumns = {
      "mos",       "loss",      "jitter",   "delay",    "bitrate",
      "throughput", "rebuffering", "buffering", "framerate", "duration",
      "stalling",  "vheight",   "vwidth",   "startup"};
  return kColumns;
}

int64_t encode_mos(double mos) {
  if (!(mos >= 1.0 && mos <= 5.0)) {
    fail(ErrorCode::OutOfRange,
         "mos " + std::to_string(mos) + " outside [1,5]");
  }
  return std::llround(mos * 100.0);
}

double decode_mos(int64_t x100) {
  if (x100 < 100 || x100 > 500) {
    fail(ErrorCode::OutOfRange,
         "scaled mos " + std::to_string(x100) + " outside [100,500]");
  }
  return static_cast<double>(x100) / 100.0;
}

std::string csv_escape(const std::string& field) {
  const bool needs_quotes =
      field.find_first_of(",\"\n|") != std::string::npos;
  if (!needs_quotes) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> csv_split_line(const std::string& line, int line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  size_t i = 0;
  while (i < line.size()) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      if (!cur.empty()) {
        fail(ErrorCode::RowParse, "line " + std::to_string(line_no) +
                                      ": quote inside unquoted field");
      }
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
    ++i;
  }
  if (quoted) {
    fail(ErrorCode::RowParse,
         "line " + std::to_string(line_no) + ": unterminated quote");
  }
  fields.push_back(std::move(cur));
  return fields;
}

namespace {

int64_t parse_int_field(const std::string& text, const std::string& column,
                        int line_no) {
  if (text.empty()) {
    fail(ErrorCode::RowParse, "line " + std::to_string(line_no) +
                                  ": empty \"" + column + "\"");
  }
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(text.c_str(), &end, 10);
  if (errno != 0 || end != text.c_str() + text.size()) {
    fail(ErrorCode::RowParse, "line " + std::to_string(line_no) + ": \"" +
                                  column + "\" value \"" + text +
                                  "\" is not an integer");
  }
  return v;
}

SessionRecord record_from_fields(const std::vector<std::string>& fields,
                                 size_t extra_count, int line_no) {
  const auto& cols = canonical_columns();
  if (fields.size() != cols.size() + extra_count) {
    fail(ErrorCode::RowParse,
         "line " + std::to_string(line_no) + ": expected " +
             std::to_string(cols.size() + extra_count) + " fields, got " +
             std::to_string(fields.size()));
  }
  SessionRecord r;
  size_t i = 0;
  r.mos_x100 = parse_int_field(fields[i], cols[i], line_no); ++i;
  r.loss_x100 = parse_int_field(fields[i], cols[i], line_no); ++i;
  r.jitter_ms = parse_int_field(fields[i], cols[i], line_no); ++i;
  r.delay_ms = parse_int_field(fields[i], cols[i], line_no); ++i;
  r.bitrate_kbps = parse_int_field(fields[i], cols[i], line_no); ++i;
  r.throughput_bps = parse_int_field(fields[i], cols[i], line_no); ++i;
  r.rebuffering_ms = parse_int_field(fields[i], cols[i], line_no); ++i;
  r.buffering_ms = parse_int_field(fields[i], cols[i], line_no); ++i;
  r.framerate_x100 = parse_int_field(fields[i], cols[i], line_no); ++i;
  r.duration_ms = parse_int_field(fields[i], cols[i], line_no); ++i;
  r.stalling = fields[i]; ++i;
  r.vheight = parse_int_field(fields[i], cols[i], line_no); ++i;
  r.vwidth = parse_int_field(fields[i], cols[i], line_no); ++i;
  r.startup_ms = parse_int_field(fields[i], cols[i], line_no); ++i;
  try {
    parse_stalling_string(r.stalling);
  } catch (const QoeError& e) {
    fail(ErrorCode::RowParse, "line " + std::to_string(line_no) +
                                  ": bad stalling field: " + e.what());
  }
  r.extras.assign(fields.begin() + i, fields.end());
  return r;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string line = text.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    pos = eol + 1;
  }
  return lines;
}

}  // namespace

Dataset load_csv(const std::string& path, bool strict,
                 std::vector<std::string>* warnings) {
  const std::string text = read_text_file(path);
  const std::vector<std::string> lines = split_lines(text);
  if (lines.empty()) {
    fail(ErrorCode::HeaderMismatch, path + ": empty file, missing header");
  }

  const auto& cols = canonical_columns();
  const std::vector<std::string> header = csv_split_line(lines[0], 1);
  if (header.size() < cols.size()) {
    fail(ErrorCode::HeaderMismatch,
         path + ": header has " + std::to_string(header.size()) +
             " columns, need at least " + std::to_string(cols.size()));
  }
  for (size_t i = 0; i < cols.size(); ++i) {
    if (header[i] != cols[i]) {
      fail(ErrorCode::HeaderMismatch, path + ": column " +
                                          std::to_string(i + 1) + " is \"" +
                                          header[i] + "\", expected \"" +
                                          cols[i] + "\"");
    }
  }

  Dataset ds;
  ds.extra_columns.assign(header.begin() + cols.size(), header.end());
  for (size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const int line_no = static_cast<int>(li) + 1;
    try {
      auto fields = csv_split_line(lines[li], line_no);
      ds.records.push_back(
          record_from_fields(fields, ds.extra_columns.size(), line_no));
    } catch (const QoeError& e) {
      if (strict) throw;
      if (warnings) warnings->push_back(e.what());
    }
  }
  return ds;
}

void save_csv(const Dataset& dataset, const std::string& path) {
  std::string out;
  const auto& cols = canonical_columns();
  for (size_t i = 0; i < cols.size(); ++i) {
    if (i) out += ',';
    out += cols[i];
  }
  for (const auto& extra : dataset.extra_columns) {
    out += ',';
    out += csv_escape(extra);
  }
  out += '\n';

  for (const auto& r : dataset.records) {
    if (r.extras.size() != dataset.extra_columns.size()) {
      fail(ErrorCode::InvalidArgument,
           "record extras do not match dataset extra_columns");
    }
    std::ostringstream row;
    row << r.mos_x100 << ',' << r.loss_x100 << ',' << r.jitter_ms << ','
        << r.delay_ms << ',' << r.bitrate_kbps << ',' << r.throughput_bps
        << ',' << r.rebuffering_ms << ',' << r.buffering_ms << ','
        << r.framerate_x100 << ',' << r.duration_ms << ','
        << csv_escape(r.stalling) << ',' << r.vheight << ',' << r.vwidth << ','
        << r.startup_ms;
    for (const auto& extra : r.extras) {
      row << ',' << csv_escape(extra);
    }
    out += row.str();
    out += '\n';
  }
  write_text_file(path, out);
}

CleanDataset clean(const std::vector<SessionRecord>& records) {
  CleanDataset out;
  out.provenance.loaded = static_cast<int64_t>(records.size());
  for (const auto& r : records) {
    if (r.delay_ms == -1000 || r.delay_ms == 0) {
      ++out.provenance.dropped_delay;
      continue;
    }
    if (r.bitrate_kbps == 0) {
      ++out.provenance.dropped_bitrate;
      continue;
    }
    SessionRecord kept = r;
    if (kept.jitter_ms == 0 || kept.jitter_ms == -1000) {
      kept.jitter_ms = 1;
      ++out.provenance.jitter_adjusted;
    }
    out.records.push_back(std::move(kept));
  }
  return out;
}

}  // namespace qoe
