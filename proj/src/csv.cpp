#include "helios/csv.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "helios/core.hpp"

namespace helios::data {
namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') {
    cells.emplace_back();
  }
  for (auto& c : cells) {
    while (!c.empty() && (c.back() == '\r' || c.back() == ' ')) c.pop_back();
    while (!c.empty() && c.front() == ' ') c.erase(c.begin());
  }
  return cells;
}

double parse_cell(const std::string& cell, const std::string& column, std::size_t line_no) {
  if (cell.empty()) {
    throw ConfigError("csv: line " + std::to_string(line_no) + ": empty value in column '" +
                             column + "'");
  }
  const char* begin = cell.c_str();
  char* end = nullptr;
  double value = std::strtod(begin, &end);
  if (end == begin || *end != '\0') {
    throw ConfigError("csv: line " + std::to_string(line_no) + ": cannot parse '" + cell +
                             "' in column '" + column + "' as a number");
  }
  return value;
}

}  // namespace

CsvSchema CsvSchema::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("schema: cannot open " + path.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("schema: " + path.string() + " is not valid JSON: " + e.what());
  }
  CsvSchema schema;
  if (!j.contains("timestamp_column") || !j["timestamp_column"].is_string()) {
    throw ConfigError("schema: " + path.string() + " is missing string field 'timestamp_column'");
  }
  schema.timestamp_column = j["timestamp_column"].get<std::string>();
  if (!j.contains("columns") || !j["columns"].is_object() || j["columns"].empty()) {
    throw ConfigError("schema: " + path.string() + " is missing non-empty object field 'columns'");
  }
  std::set<std::string> seen_channels;
  for (const auto& [header, channel] : j["columns"].items()) {
    if (!channel.is_string()) {
      throw ConfigError("schema: column mapping for '" + header + "' must be a string");
    }
    const auto name = channel.get<std::string>();
    if (!seen_channels.insert(name).second) {
      throw ConfigError("schema: channel '" + name + "' is mapped from more than one column");
    }
    schema.columns[header] = name;
  }
  if (j.contains("units")) {
    for (const auto& [channel, unit] : j["units"].items()) {
      schema.units[channel] = unit.get<std::string>();
    }
  }
  return schema;
}

void CsvSchema::save(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["timestamp_column"] = timestamp_column;
  j["columns"] = columns;
  if (!units.empty()) {
    j["units"] = units;
  }
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("schema: cannot write " + path.string());
  }
  out << j.dump(2) << "\n";
}

CsvSchema CsvSchema::identity(const std::vector<std::string>& channels,
                              const std::string& timestamp_column) {
  CsvSchema schema;
  schema.timestamp_column = timestamp_column;
  for (const auto& channel : channels) {
    schema.columns[channel] = channel;
  }
  return schema;
}

TimeSeriesFrame ingest_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("csv: cannot open " + path.string());
  }
  std::string header_line;
  if (!std::getline(in, header_line)) {
    throw ConfigError("csv: " + path.string() + " is empty");
  }
  const auto headers = split_line(header_line);

  // Resolve the timestamp column and every mapped channel column.
  std::ptrdiff_t ts_index = -1;
  std::vector<std::pair<std::size_t, std::string>> channel_columns;  // CSV index -> channel
  for (std::size_t i = 0; i < headers.size(); ++i) {
    if (headers[i] == schema.timestamp_column) {
      if (ts_index >= 0) {
        throw ConfigError("csv: duplicate timestamp column '" + schema.timestamp_column +
                                 "'");
      }
      ts_index = static_cast<std::ptrdiff_t>(i);
    }
    auto it = schema.columns.find(headers[i]);
    if (it != schema.columns.end()) {
      channel_columns.emplace_back(i, it->second);
    }
  }
  if (ts_index < 0) {
    throw ConfigError("csv: " + path.string() + " has no column '" +
                             schema.timestamp_column + "'");
  }
  if (channel_columns.size() != schema.columns.size()) {
    std::set<std::string> present;
    for (const auto& h : headers) present.insert(h);
    for (const auto& [header, channel] : schema.columns) {
      if (!present.count(header)) {
        throw ConfigError("csv: " + path.string() + " has no column '" + header +
                                 "' (mapped to channel '" + channel + "')");
      }
    }
  }

  struct Row {
    Timestamp ts;
    std::vector<double> values;
    std::size_t line_no;
  };
  std::vector<Row> rows;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_line(line);
    if (cells.size() != headers.size()) {
      throw ConfigError("csv: line " + std::to_string(line_no) + ": expected " +
                               std::to_string(headers.size()) + " cells, found " +
                               std::to_string(cells.size()));
    }
    Row row;
    row.line_no = line_no;
    try {
      row.ts = parse_timestamp(cells[static_cast<std::size_t>(ts_index)]);
    } catch (const std::exception& e) {
      throw ConfigError("csv: line " + std::to_string(line_no) + ": " + e.what());
    }
    row.values.reserve(channel_columns.size());
    for (const auto& [col, channel] : channel_columns) {
      row.values.push_back(parse_cell(cells[col], headers[col], line_no));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    throw ConfigError("csv: " + path.string() + " has no data rows");
  }

  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return a.ts < b.ts; });
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].ts == rows[i - 1].ts) {
      throw ConfigError("csv: line " + std::to_string(rows[i].line_no) +
                               ": duplicate timestamp " + format_timestamp(rows[i].ts));
    }
  }

  TimeSeriesFrame frame;
  frame.timestamps.reserve(rows.size());
  for (const auto& row : rows) frame.timestamps.push_back(row.ts);
  for (std::size_t c = 0; c < channel_columns.size(); ++c) {
    std::vector<double> values;
    values.reserve(rows.size());
    for (const auto& row : rows) values.push_back(row.values[c]);
    frame.channels[channel_columns[c].second] = std::move(values);
  }
  frame.units = schema.units;
  frame.validate();
  return frame;
}

void write_frame_csv(const TimeSeriesFrame& frame, const std::filesystem::path& path) {
  frame.validate();
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("csv: cannot write " + path.string());
  }
  out << "timestamp";
  for (const auto& [name, values] : frame.channels) {
    out << "," << name;
  }
  out << "\n";
  for (std::size_t i = 0; i < frame.size(); ++i) {
    out << format_timestamp(frame.timestamps[i]);
    for (const auto& [name, values] : frame.channels) {
      out << "," << format_double(values[i]);
    }
    out << "\n";
  }
}

}  // namespace helios::data
