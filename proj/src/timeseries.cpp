#include "helios/timeseries.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace helios::data {

namespace {

// Days since 1970-01-01 for a civil date (Howard Hinnant's algorithm).
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                       static_cast<unsigned>(d) - 1u;
  const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yy + (m <= 2));
}

}  // namespace

Timestamp parse_timestamp(const std::string& text) {
  // Accepts "YYYY-MM-DD HH:MM", "YYYY-MM-DDTHH:MM", optional ":SS",
  // optional trailing "Z". Anything else is an error.
  int y, mo, d, h, mi;
  int s = 0;
  char sep;
  int consumed = 0;
  int n = std::sscanf(text.c_str(), "%4d-%2d-%2d%c%2d:%2d%n", &y, &mo, &d, &sep, &h,
                      &mi, &consumed);
  if (n < 6 || (sep != ' ' && sep != 'T'))
    throw std::invalid_argument("unparseable timestamp '" + text + "'");
  const char* rest = text.c_str() + consumed;
  if (*rest == ':') {
    int consumed2 = 0;
    if (std::sscanf(rest, ":%2d%n", &s, &consumed2) != 1)
      throw std::invalid_argument("unparseable timestamp '" + text + "'");
    rest += consumed2;
  }
  if (*rest == 'Z') ++rest;
  if (*rest != '\0')
    throw std::invalid_argument("unparseable timestamp '" + text + "'");
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || s > 60)
    throw std::invalid_argument("timestamp field out of range in '" + text + "'");
  return days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + s;
}

std::string format_timestamp(Timestamp t) {
  std::int64_t days = t / 86400;
  std::int64_t sod = t % 86400;
  if (sod < 0) {
    sod += 86400;
    --days;
  }
  int y, m, d;
  civil_from_days(days, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d %02d:%02d", y, m, d,
                static_cast<int>(sod / 3600), static_cast<int>((sod % 3600) / 60));
  return buf;
}

std::int64_t TimeSeriesFrame::step_seconds() const {
  if (timestamps.size() < 2)
    throw std::logic_error("frame step undefined with fewer than 2 rows");
  return timestamps[1] - timestamps[0];
}

void TimeSeriesFrame::validate() const {
  if (timestamps.size() >= 2) {
    const std::int64_t step = timestamps[1] - timestamps[0];
    if (step <= 0) throw std::invalid_argument("frame timestamps not increasing");
    for (std::size_t i = 1; i < timestamps.size(); ++i)
      if (timestamps[i] - timestamps[i - 1] != step)
        throw std::invalid_argument("frame timestamps not uniformly spaced at row " +
                                    std::to_string(i));
  }
  for (const auto& [name, vals] : channels)
    if (vals.size() != timestamps.size())
      throw std::invalid_argument("channel '" + name + "' has " +
                                  std::to_string(vals.size()) + " values for " +
                                  std::to_string(timestamps.size()) + " timestamps");
}

TimeSeriesFrame resample_mean(const TimeSeriesFrame& frame, std::int64_t target_step) {
  frame.validate();
  if (frame.size() < 2) throw std::invalid_argument("resample: frame too short");
  const std::int64_t native = frame.step_seconds();
  if (target_step <= 0 || target_step % native != 0)
    throw std::invalid_argument("resample: target step " + std::to_string(target_step) +
                                "s is not an integer multiple of native step " +
                                std::to_string(native) + "s");
  const std::size_t k = static_cast<std::size_t>(target_step / native);
  const std::size_t n_out = frame.size() / k;
  if (n_out == 0) throw std::invalid_argument("resample: no complete window");

  TimeSeriesFrame out;
  out.units = frame.units;
  out.timestamps.resize(n_out);
  for (std::size_t w = 0; w < n_out; ++w) out.timestamps[w] = frame.timestamps[w * k];
  for (const auto& [name, vals] : frame.channels) {
    std::vector<double> pooled(n_out);
    for (std::size_t w = 0; w < n_out; ++w) {
      double sum = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        const double v = vals[w * k + j];
        if (std::isnan(v))
          throw std::runtime_error("resample: NaN in channel '" + name +
                                   "' window starting at row " + std::to_string(w * k));
        sum += v;
      }
      pooled[w] = sum / static_cast<double>(k);
    }
    out.channels[name] = std::move(pooled);
  }
  return out;
}

JoinResult align_join(const TimeSeriesFrame& weather, const TimeSeriesFrame& solar) {
  weather.validate();
  solar.validate();
  if (weather.size() >= 2 && solar.size() >= 2 &&
      weather.step_seconds() != solar.step_seconds())
    throw std::invalid_argument("join: step mismatch, " +
                                std::to_string(weather.step_seconds()) + "s vs " +
                                std::to_string(solar.step_seconds()) + "s");

  JoinResult res;
  std::size_t i = 0, j = 0;
  std::vector<std::size_t> wi, si;
  while (i < weather.size() && j < solar.size()) {
    if (weather.timestamps[i] == solar.timestamps[j]) {
      wi.push_back(i++);
      si.push_back(j++);
    } else if (weather.timestamps[i] < solar.timestamps[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  if (wi.empty()) throw std::runtime_error("join: no overlapping timestamps");
  res.dropped_rows = (weather.size() - wi.size()) + (solar.size() - si.size());

  TimeSeriesFrame& out = res.frame;
  out.timestamps.reserve(wi.size());
  for (std::size_t r : wi) out.timestamps.push_back(weather.timestamps[r]);
  for (const auto& [name, vals] : weather.channels) {
    std::vector<double> joined(wi.size());
    for (std::size_t r = 0; r < wi.size(); ++r) joined[r] = vals[wi[r]];
    out.channels[name] = std::move(joined);
  }
  for (const auto& [name, vals] : solar.channels) {
    if (out.channels.count(name))
      throw std::invalid_argument("join: channel '" + name + "' present in both inputs");
    std::vector<double> joined(si.size());
    for (std::size_t r = 0; r < si.size(); ++r) joined[r] = vals[si[r]];
    out.channels[name] = std::move(joined);
  }
  out.units = weather.units;
  for (const auto& [name, u] : solar.units) out.units[name] = u;
  return res;
}

}  // namespace helios::data
