#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "helios/timeseries.hpp"

namespace helios::data {

/// Maps CSV headers to canonical channel names. Canonical features are
/// ghi, dni, dhi, temp, pressure, rh, dew_point, wind_dir, wind_speed,
/// albedo; the generation channel is power_kw.
struct CsvSchema {
  std::string timestamp_column;
  std::map<std::string, std::string> columns;  // CSV header -> channel name
  std::map<std::string, std::string> units;    // channel name -> unit

  static CsvSchema load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
  /// Header == channel name for the given channels.
  static CsvSchema identity(const std::vector<std::string>& channels,
                            const std::string& timestamp_column = "timestamp");
};

/// Parses a CSV time series file through a schema. Rows are sorted by
/// timestamp; duplicate timestamps, unparseable cells, and missing
/// mapped columns are errors naming the offending line.
TimeSeriesFrame ingest_csv(const std::filesystem::path& path, const CsvSchema& schema);

/// Inverse of ingest_csv for an identity schema: header row of
/// timestamp + channel names, "YYYY-MM-DD HH:MM" timestamps.
void write_frame_csv(const TimeSeriesFrame& frame, const std::filesystem::path& path);

}  // namespace helios::data
