#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace helios::data {

/// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

Timestamp parse_timestamp(const std::string& text);
std::string format_timestamp(Timestamp t);

/// Uniformly spaced, strictly increasing multichannel time series.
struct TimeSeriesFrame {
  std::vector<Timestamp> timestamps;
  std::map<std::string, std::vector<double>> channels;
  std::map<std::string, std::string> units;

  std::size_t size() const { return timestamps.size(); }

  /// Common spacing between consecutive timestamps, in seconds.
  std::int64_t step_seconds() const;

  /// Enforces the frame invariants: strictly increasing uniform
  /// timestamps and per-channel lengths matching the grid.
  void validate() const;
};

/// Mean-pools each channel over windows of target_step/native_step
/// samples; output timestamps are window starts. A trailing partial
/// window is dropped. Any NaN inside a window is an error.
TimeSeriesFrame resample_mean(const TimeSeriesFrame& frame, std::int64_t target_step_seconds);

struct JoinResult {
  TimeSeriesFrame frame;
  std::size_t dropped_rows = 0;  // rows present in only one input
};

/// Inner join on timestamps; the output carries all channels of both
/// inputs. Fails if the step sizes differ or nothing overlaps.
JoinResult align_join(const TimeSeriesFrame& weather, const TimeSeriesFrame& solar);

}  // namespace helios::data
