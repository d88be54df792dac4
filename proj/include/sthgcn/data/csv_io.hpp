#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sthgcn/data/dataset.hpp"
#include "sthgcn/data/series.hpp"
#include "sthgcn/data/time.hpp"
#include "sthgcn/error.hpp"

// Readers and writers for the traffic, station and holiday files.

namespace sthgcn::data {

namespace csv {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = line.find(sep, pos);
    out.push_back(trim(line.substr(pos, next == std::string_view::npos ? line.npos : next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

inline double parse_double(std::string_view s, const std::string& where) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end)
    throw InputError(where + ": cannot parse number '" + std::string(s) + "'");
  return v;
}

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return in;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  return out;
}

}  // namespace csv

/// Parses `timestamp,<id>,<id>,...` rows. Empty cells are missing. Rows may
/// skip whole grid steps (filled as missing); granularity is the smallest
/// gap between consecutive rows.
inline TrafficSeries read_traffic_csv(std::istream& in, const std::string& name = "traffic") {
  std::string line;
  if (!std::getline(in, line)) throw InputError(name + ": empty file");
  const auto header = csv::split(line);
  if (header.size() < 2 || header[0] != "timestamp")
    throw InputError(name + ": header must be 'timestamp,<station-id>,...'");
  std::vector<std::string> ids(header.begin() + 1, header.end());
  {
    std::map<std::string, int> seen;
    for (const auto& id : ids) {
      if (id.empty()) throw InputError(name + ": empty station id in header");
      if (seen[id]++) throw InputError(name + ": duplicate station id '" + id + "'");
    }
  }
  std::vector<Minutes> stamps;
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto cells = csv::split(line);
    const std::string where = name + ":" + std::to_string(line_no);
    if (cells.size() != header.size())
      throw InputError(where + ": expected " + std::to_string(header.size()) + " cells, got " +
                       std::to_string(cells.size()));
    Minutes ts = 0;
    try {
      ts = parse_timestamp(cells[0]);
    } catch (const InputError& e) {
      throw InputError(where + ": " + e.what());
    }
    if (!stamps.empty() && ts <= stamps.back())
      throw InputError(where + ": timestamps must be strictly increasing");
    std::vector<double> v(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i)
      v[i] = cells[i + 1].empty() ? kMissing : csv::parse_double(cells[i + 1], where);
    stamps.push_back(ts);
    rows.push_back(std::move(v));
  }
  if (stamps.size() < 2) throw InputError(name + ": need at least two rows");
  Minutes step = stamps[1] - stamps[0];
  for (std::size_t r = 1; r < stamps.size(); ++r) step = std::min(step, stamps[r] - stamps[r - 1]);
  for (std::size_t r = 1; r < stamps.size(); ++r) {
    if ((stamps[r] - stamps[0]) % step != 0)
      throw InputError(name + ": timestamp " + format_timestamp(stamps[r]) + " is off the " +
                       std::to_string(step) + "-minute grid");
  }
  if (step > kMinutesPerDay || kMinutesPerDay % step != 0)
    throw InputError(name + ": granularity of " + std::to_string(step) +
                     " minutes does not divide a day");
  const auto len = static_cast<std::size_t>((stamps.back() - stamps.front()) / step + 1);
  ad::Tensor values({ids.size(), len}, kMissing);
  for (std::size_t r = 0; r < stamps.size(); ++r) {
    const auto t = static_cast<std::size_t>((stamps[r] - stamps[0]) / step);
    for (std::size_t i = 0; i < ids.size(); ++i) values(i, t) = rows[r][i];
  }
  return TrafficSeries(std::move(ids), stamps.front(), static_cast<int>(step), std::move(values));
}

inline TrafficSeries read_traffic_csv(const std::string& path) {
  auto in = csv::open_in(path);
  return read_traffic_csv(in, path);
}

inline void write_traffic_csv(std::ostream& out, const TrafficSeries& s) {
  out << "timestamp";
  for (const auto& id : s.station_ids()) out << ',' << id;
  out << '\n';
  for (std::size_t t = 0; t < s.length(); ++t) {
    out << format_timestamp(s.timestamp(t));
    for (std::size_t i = 0; i < s.stations(); ++i) {
      out << ',';
      if (!is_missing(s(i, t))) out << csv::format_double(s(i, t));
    }
    out << '\n';
  }
}

inline void write_traffic_csv(const std::string& path, const TrafficSeries& s) {
  auto out = csv::open_out(path);
  write_traffic_csv(out, s);
}

/// `station_id,latitude,longitude` rows.
inline std::vector<Station> read_stations_csv(std::istream& in, const std::string& name = "stations") {
  std::string line;
  if (!std::getline(in, line)) throw InputError(name + ": empty file");
  const auto header = csv::split(line);
  if (header.size() != 3 || header[0] != "station_id" || header[1] != "latitude" ||
      header[2] != "longitude")
    throw InputError(name + ": header must be 'station_id,latitude,longitude'");
  std::vector<Station> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto cells = csv::split(line);
    const std::string where = name + ":" + std::to_string(line_no);
    if (cells.size() != 3) throw InputError(where + ": expected 3 cells");
    Station st{std::string(cells[0]), csv::parse_double(cells[1], where),
               csv::parse_double(cells[2], where)};
    if (st.latitude < -90.0 || st.latitude > 90.0 || st.longitude < -180.0 ||
        st.longitude > 180.0)
      throw InputError(where + ": coordinates out of range");
    out.push_back(std::move(st));
  }
  return out;
}

inline std::vector<Station> read_stations_csv(const std::string& path) {
  auto in = csv::open_in(path);
  return read_stations_csv(in, path);
}

inline void write_stations_csv(const std::string& path, const std::vector<Station>& stations) {
  auto out = csv::open_out(path);
  out << "station_id,latitude,longitude\n";
  for (const auto& s : stations)
    out << s.id << ',' << csv::format_double(s.latitude) << ',' << csv::format_double(s.longitude)
        << '\n';
}

/// Reorders `stations` to follow `ids`; every id must be present.
inline std::vector<Station> align_stations(const std::vector<Station>& stations,
                                           const std::vector<std::string>& ids) {
  std::unordered_map<std::string, const Station*> by_id;
  for (const auto& s : stations) by_id[s.id] = &s;
  std::vector<Station> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw InputError("stations: no coordinates for station '" + id + "'");
    out.push_back(*it->second);
  }
  return out;
}

/// One `YYYY-MM-DD` per line; blank lines and `#` comments are ignored.
inline HolidayCalendar read_holidays(std::istream& in, const std::string& name = "holidays") {
  HolidayCalendar cal;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto s = csv::trim(line);
    if (s.empty() || s.front() == '#') continue;
    try {
      cal.add(parse_date(s));
    } catch (const InputError& e) {
      throw InputError(name + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cal;
}

inline HolidayCalendar read_holidays(const std::string& path) {
  auto in = csv::open_in(path);
  return read_holidays(in, path);
}

}  // namespace sthgcn::data
