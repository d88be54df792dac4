#pragma once

#include <cstddef>
#include <ostream>
#include <vector>

#include "sthgcn/ad/tensor.hpp"
#include "sthgcn/data/csv_io.hpp"
#include "sthgcn/data/series.hpp"
#include "sthgcn/data/time.hpp"
#include "sthgcn/error.hpp"
#include "sthgcn/graph/correlation.hpp"

namespace sthgcn::graph {

/// PCC between the focus station and every station (itself included) over
/// the H points ending at each anchor. One row per anchor.
inline ad::Tensor pcc_timeline(const data::TrafficSeries& series, std::size_t focus,
                               const std::vector<std::size_t>& anchors, std::size_t history) {
  if (focus >= series.stations()) throw InputError("pcc timeline: focus station out of range");
  if (anchors.empty()) throw InputError("pcc timeline: no anchors");
  if (history < 2) throw InputError("pcc timeline: history must be >= 2");
  const std::size_t n = series.stations();
  ad::Tensor out({anchors.size(), n});
  std::vector<double> a(history), b(history);
  for (std::size_t r = 0; r < anchors.size(); ++r) {
    const std::size_t t = anchors[r];
    if (t >= series.length() || t + 1 < history)
      throw OutOfRangeError("pcc timeline: anchor " + std::to_string(t) + " needs " +
                            std::to_string(history) + " points of history");
    for (std::size_t h = 0; h < history; ++h) a[h] = series(focus, t + 1 - history + h);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t h = 0; h < history; ++h) b[h] = series(j, t + 1 - history + h);
      out(r, j) = pcc(a, b);
    }
  }
  return out;
}

/// `timestamp,<station-id>,...` CSV of a pcc_timeline result.
inline void write_pcc_timeline(std::ostream& out, const data::TrafficSeries& series,
                               const std::vector<std::size_t>& anchors, const ad::Tensor& rows) {
  out << "timestamp";
  for (const auto& id : series.station_ids()) out << ',' << id;
  out << '\n';
  for (std::size_t r = 0; r < anchors.size(); ++r) {
    out << data::format_timestamp(series.timestamp(anchors[r]));
    for (std::size_t j = 0; j < rows.cols(); ++j) out << ',' << data::csv::format_double(rows(r, j));
    out << '\n';
  }
}

}  // namespace sthgcn::graph
