#ifndef QOE_CORE_DATASET_STORE_HPP
#define QOE_CORE_DATASET_STORE_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace qoe {

// One dataset row. Scaled fields keep the store integer-only: mos,
// loss and framerate are the real value times 100 (2.42 <-> 242).
struct SessionRecord {
  int64_t mos_x100 = 0;
  int64_t loss_x100 = 0;
  int64_t jitter_ms = 0;
  int64_t delay_ms = 0;
  int64_t bitrate_kbps = 0;
  int64_t throughput_bps = 0;
  int64_t rebuffering_ms = 0;
  int64_t buffering_ms = 0;
  int64_t framerate_x100 = 0;
  int64_t duration_ms = 0;
  std::string stalling;  // stall encoding, "0 - 0" when none
  int64_t vheight = 0;
  int64_t vwidth = 0;
  int64_t startup_ms = 0;
  // Values for Dataset::extra_columns, carried opaquely.
  std::vector<std::string> extras;

  bool operator==(const SessionRecord&) const = default;
};

struct Dataset {
  std::vector<std::string> extra_columns;  // names beyond the canonical 14
  std::vector<SessionRecord> records;
};

struct CleanCounts {
  int64_t loaded = 0;
  int64_t dropped_delay = 0;
  int64_t dropped_bitrate = 0;
  int64_t jitter_adjusted = 0;
};

struct CleanDataset {
  std::vector<SessionRecord> records;
  CleanCounts provenance;
};

// Canonical column names in table order.
const std::vector<std::string>& canonical_columns();

int64_t encode_mos(double mos);   // [1,5] -> [100,500], else OutOfRange
double decode_mos(int64_t x100);  // [100,500] -> [1,5], else OutOfRange

// CSV persistence. The header must start with the canonical columns;
// any further columns are preserved verbatim as extras. In lenient
// mode malformed rows are skipped and reported through `warnings`;
// in strict mode they raise RowParse with the line number.
Dataset load_csv(const std::string& path, bool strict = true,
                 std::vector<std::string>* warnings = nullptr);
void save_csv(const Dataset& dataset, const std::string& path);

// Drops rows with delay in {-1000, 0} or bitrate 0; maps jitter in
// {0, -1000} to 1. Total: never fails.
CleanDataset clean(const std::vector<SessionRecord>& records);

// Low-level CSV helpers shared with other emitters.
std::string csv_escape(const std::string& field);
std::vector<std::string> csv_split_line(const std::string& line, int line_no);

}  // namespace qoe
#endif  // QOE_CORE_DATASET_STORE_HPP
